//! Separable bound `M_d` of the amplitude correlation and the two
//! Fourier-based uncertainty relations it rests on.
//!
//! `M_d = max_φ (|<Z>|² + |<X>|²)`. Writing `sqrt(|α|² + |β|²)` as
//! `max_θ (|α| cos θ + |β| sin θ)` turns this into `(max_θ ‖χ_θ‖)²` with
//! `χ_θ = ½[(Z+Z†) cos θ + (X+X†) sin θ]`, which is what
//! [`separable_bound_m`] maximizes. [`direct_state_oracle_m`] attacks the
//! state-space definition directly and shares no code with the θ route.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{QwError, Result};
use crate::linalg::{hermitian_eigs, ComplexMatrix, C64};
use crate::qudit::{check_d, pauli_x, pauli_z, root_of_unity, QuditState};

/// Number of points of the coarse θ grid on `[0, π/2]`.
pub const THETA_GRID: usize = 181;
/// Default θ tolerance for the golden-section refinement.
pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_GOLDEN_ITERS: usize = 200;
/// Grid values this close to the maximum count as ties.
const TIE_TOL: f64 = 1e-12;

/// Result of maximizing `‖χ_θ‖` over θ.
#[derive(Clone, Debug)]
pub struct BoundResult {
    pub d: usize,
    /// `None` for the balanced operator, `Some(p)` for the weighted one.
    pub weight: Option<f64>,
    pub m_value: f64,
    pub theta_star: f64,
    /// Pure single-qudit state attaining the bound.
    pub optimizer_state: QuditState,
    pub iterations: usize,
    /// Width of the final golden-section bracket (0 when a grid point won).
    pub residual: f64,
}

impl BoundResult {
    /// Z- and X-basis distributions of the optimizer state.
    pub fn optimal_distributions(&self) -> Result<FourierDistributionPair> {
        FourierDistributionPair::from_state(&self.optimizer_state)
    }
}

/// Outcome distributions `P(j) = <j|ρ|j>` and `P̄(j) = <j̄|ρ|j̄>`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierDistributionPair {
    pub p: Vec<f64>,
    pub p_bar: Vec<f64>,
}

impl FourierDistributionPair {
    pub fn from_state(state: &QuditState) -> Result<Self> {
        single_party(state)?;
        Ok(Self {
            p: state.z_probabilities(),
            p_bar: state.x_probabilities()?,
        })
    }
}

fn single_party(state: &QuditState) -> Result<()> {
    if state.parties() != 1 {
        return Err(QwError::Domain(format!(
            "expected a single-qudit state, got {} parties",
            state.parties()
        )));
    }
    Ok(())
}

fn check_weight(weight: Option<f64>) -> Result<()> {
    match weight {
        Some(p) if !(0.0..=1.0).contains(&p) => {
            Err(QwError::Domain(format!("weight must lie in [0,1], got {p}")))
        }
        _ => Ok(()),
    }
}

/// `½[(Z+Z†) cos θ + (X+X†) sin θ]`, or with weight `p` the convex-sum form
/// `½[√p (Z+Z†) cos θ + √(1−p) (X+X†) sin θ]`.
pub fn chi_theta(d: usize, theta: f64, weight: Option<f64>) -> Result<ComplexMatrix> {
    check_d(d)?;
    check_weight(weight)?;
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(QwError::Domain(format!("theta must lie in [0, π/2], got {theta}")));
    }
    let z = pauli_z(d)?;
    let x = pauli_x(d)?;
    let (wz, wx) = match weight {
        None => (1.0, 1.0),
        Some(p) => (p.sqrt(), (1.0 - p).sqrt()),
    };
    let zs = (&z + &z.adjoint()).scale_real(0.5 * wz * theta.cos());
    let xs = (&x + &x.adjoint()).scale_real(0.5 * wx * theta.sin());
    Ok(&zs + &xs)
}

/// `‖χ_θ‖` without forming the dense operator.
///
/// `χ_θ = a·diag(cos ωj) + b·(X + X†)` is a real periodic tridiagonal matrix
/// that commutes with the reflection `|j> → |−j>`. In the symmetric basis
/// `|0>, (|j>+|−j>)/√2, …` and the antisymmetric basis `(|j>−|−j>)/√2, …` it
/// splits into two ordinary tridiagonal blocks, whose extreme eigenvalues
/// Sturm-sequence bisection finds in `O(d)` per probe.
pub(crate) fn chi_theta_norm(d: usize, theta: f64, weight: Option<f64>) -> f64 {
    let (wz, wx) = match weight {
        None => (1.0, 1.0),
        Some(p) => (p.sqrt(), (1.0 - p).sqrt()),
    };
    let a = wz * theta.cos();
    let b = 0.5 * wx * theta.sin();
    let diag = |j: usize| a * (std::f64::consts::TAU * j as f64 / d as f64).cos();
    let r2 = std::f64::consts::SQRT_2;

    if d == 2 {
        // both shifts land on the same neighbour
        return extreme_abs_eigenvalue(&[diag(0), diag(1)], &[2.0 * b]);
    }
    let half = (d - 1) / 2;
    let mut even_diag = vec![diag(0)];
    let mut even_off = Vec::new();
    let mut odd_diag = Vec::new();
    let mut odd_off = Vec::new();
    for j in 1..=half {
        even_diag.push(diag(j));
        even_off.push(if j == 1 { r2 * b } else { b });
        odd_diag.push(diag(j));
        if j > 1 {
            odd_off.push(b);
        }
    }
    if d % 2 == 1 {
        // |half> and |half+1> = |−half> are neighbours
        *even_diag.last_mut().expect("d ≥ 3") += b;
        *odd_diag.last_mut().expect("d ≥ 3") -= b;
    } else {
        even_diag.push(diag(d / 2));
        even_off.push(r2 * b);
    }
    let even = extreme_abs_eigenvalue(&even_diag, &even_off);
    if odd_diag.is_empty() {
        even
    } else {
        even.max(extreme_abs_eigenvalue(&odd_diag, &odd_off))
    }
}

/// Largest `|λ|` of the symmetric tridiagonal matrix with the given diagonal
/// and off-diagonal.
fn extreme_abs_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let radius = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        left + right
    };
    let lo = (0..n).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let hi = (0..n).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    let top = kth_eigenvalue(diag, off, n - 1, lo, hi);
    let bottom = kth_eigenvalue(diag, off, 0, lo, hi);
    top.abs().max(bottom.abs())
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    for i in 0..diag.len() {
        if i > 0 {
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        }
        if q == 0.0 {
            q = -f64::EPSILON * (1.0 + x.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue, bisected inside `[lo, hi]` to machine precision.
fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn theta_at(i: usize) -> f64 {
    FRAC_PI_2 * i as f64 / (THETA_GRID - 1) as f64
}

/// `M_d` for the balanced amplitude correlation.
pub fn separable_bound_m(d: usize, tol: f64) -> Result<BoundResult> {
    separable_bound_weighted(d, None, tol)
}

/// Maximizes `‖χ_θ‖` on a 181-point grid, refines the best point by golden
/// section and squares the result.
///
/// The weighted variant bounds `p<Z Z† + Z† Z> + (1−p)<X X + X† X†>` the same
/// way: with `α = √p<Z>` and `β = √(1−p)<X>` the Schwarz step and the θ
/// rewriting go through unchanged, so only the operator being scanned differs.
///
/// Among maximizers within `1e-12`, the grid point closest to `π/4` is kept,
/// smaller θ first on ties.
pub fn separable_bound_weighted(d: usize, weight: Option<f64>, tol: f64) -> Result<BoundResult> {
    check_d(d)?;
    check_weight(weight)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(QwError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let norm_at = |theta: f64| -> Result<f64> { Ok(chi_theta_norm(d, theta, weight)) };

    let grid: Vec<f64> = (0..THETA_GRID)
        .into_par_iter()
        .map(|i| norm_at(theta_at(i)))
        .collect::<Result<_>>()?;
    let best = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let center = (THETA_GRID - 1) / 2;
    let idx = (0..THETA_GRID)
        .filter(|&i| grid[i] >= best - TIE_TOL)
        .min_by_key(|&i| (i.abs_diff(center), i))
        .expect("non-empty grid");

    let lo = theta_at(idx.saturating_sub(1));
    let hi = theta_at((idx + 1).min(THETA_GRID - 1));
    let (theta_g, norm_g, iterations, width) = golden_section_max(norm_at, lo, hi, tol)?;

    // Keep the grid point unless refinement strictly improves on it.
    let (theta_star, norm_star, residual) = if norm_g > grid[idx] + TIE_TOL {
        (theta_g, norm_g, width)
    } else {
        (theta_at(idx), grid[idx], 0.0)
    };
    let theta_star = if (theta_star - FRAC_PI_4).abs() <= tol { FRAC_PI_4 } else { theta_star };

    let chi = chi_theta(d, theta_star, weight)?;
    let eig = hermitian_eigs(&chi)?;
    let k = if eig.values[0].abs() >= eig.values[d - 1].abs() { 0 } else { d - 1 };
    let state = canonical_phase(eig.vector(k));

    Ok(BoundResult {
        d,
        weight,
        m_value: norm_star * norm_star,
        theta_star,
        optimizer_state: QuditState::pure_normalized(d, 1, state)?,
        iterations,
        residual,
    })
}

/// Rotates the global phase so the largest-magnitude entry is real positive.
fn canonical_phase(v: Vec<C64>) -> Vec<C64> {
    let pivot = v
        .iter()
        .copied()
        .fold(C64::new(0.0, 0.0), |m, x| if x.norm() > m.norm() + 1e-12 { x } else { m });
    if pivot.norm() == 0.0 {
        return v;
    }
    let phase = pivot.conj() / pivot.norm();
    v.into_iter().map(|x| x * phase).collect()
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
/// Returns `(argmax, max, iterations, final bracket width)`.
fn golden_section_max(
    f: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64, usize, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations >= MAX_GOLDEN_ITERS {
            return Err(QwError::Convergence {
                iterations,
                residual: hi - lo,
            });
        }
        iterations += 1;
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (x, fx) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Ok((x, fx, iterations, hi - lo))
}

/// `|<Z>|² + |<X>|²` of the normalized vector `x[..d] + i x[d..]`, evaluated
/// from the amplitudes alone.
fn total_amplitude(x: &[f64], d: usize) -> f64 {
    let n2: f64 = x.iter().map(|v| v * v).sum();
    let amp = |j: usize| C64::new(x[j % d], x[d + j % d]);
    let mut z = C64::new(0.0, 0.0);
    let mut xx = C64::new(0.0, 0.0);
    for j in 0..d {
        z += amp(j).norm_sqr() * root_of_unity(d, j as i64);
        // X|j> = |j+1>, so <ψ|X|ψ> = Σ_j conj(ψ_{j+1}) ψ_j
        xx += amp(j + 1).conj() * amp(j);
    }
    (z.norm_sqr() + xx.norm_sqr()) / (n2 * n2)
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

fn fd_gradient(x: &mut [f64], d: usize, grad: &mut [f64]) {
    const H: f64 = 1e-6;
    for k in 0..2 * d {
        let orig = x[k];
        x[k] = orig + H;
        let up = total_amplitude(x, d);
        x[k] = orig - H;
        let down = total_amplitude(x, d);
        x[k] = orig;
        grad[k] = (up - down) / (2.0 * H);
    }
}

/// Gradient ascent on the unit sphere. The trial step is the Barzilai-Borwein
/// length from the last two iterates, halved until the objective improves.
fn local_ascent(mut x: Vec<f64>, d: usize) -> f64 {
    const MAX_ITERS: usize = 20_000;
    // Near the optimum the objective is flat along directions that only move
    // the far tails of the amplitude profile; stop once a whole window of
    // iterations gains less than this.
    const WINDOW: usize = 50;
    const WINDOW_GAIN: f64 = 1e-9;
    normalize(&mut x);
    let mut fx = total_amplitude(&x, d);
    let mut grad = vec![0.0; 2 * d];
    fd_gradient(&mut x, d, &mut grad);
    let mut step = 0.1;
    let mut checkpoint = fx;
    for it in 1..=MAX_ITERS {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        if it % WINDOW == 0 {
            if fx - checkpoint < WINDOW_GAIN {
                break;
            }
            checkpoint = fx;
        }
        let (trial, ft) = loop {
            let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            normalize(&mut trial);
            let ft = total_amplitude(&trial, d);
            if ft > fx {
                break (trial, ft);
            }
            step *= 0.5;
            if step < 1e-14 {
                return fx;
            }
        };
        let mut trial = trial;
        let mut new_grad = vec![0.0; 2 * d];
        fd_gradient(&mut trial, d, &mut new_grad);
        let (mut ss, mut sy) = (0.0, 0.0);
        for k in 0..2 * d {
            let s_k = trial[k] - x[k];
            ss += s_k * s_k;
            sy += s_k * (new_grad[k] - grad[k]);
        }
        step = if sy.abs() > 1e-300 { (ss / sy.abs()).clamp(1e-8, 1e3) } else { step * 2.0 };
        x = trial;
        fx = ft;
        grad = new_grad;
    }
    fx
}

/// Best `|<Z>|² + |<X>|²` found by multi-start finite-difference ascent over
/// unit vectors of `C^d`. A lower bound on `M_d`, independent of `χ_θ`.
pub fn direct_state_oracle_m(d: usize, restarts: usize, seed: u64) -> Result<f64> {
    check_d(d)?;
    if restarts == 0 {
        return Err(QwError::Domain("need at least one restart".into()));
    }
    let starts: Vec<Vec<f64>> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..restarts)
            .map(|_| (0..2 * d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let values: Vec<f64> = starts.into_par_iter().map(|x0| local_ascent(x0, d)).collect();
    Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `Σ_j (P(j)² + P̄(j)²)`, bounded by `1 + 1/d` for the Z/X pair.
pub fn mub_uncertainty_lhs(state: &QuditState) -> Result<f64> {
    let pair = FourierDistributionPair::from_state(state)?;
    Ok(pair.p.iter().chain(&pair.p_bar).map(|x| x * x).sum())
}

/// `(<Z>, <X>)`; each lies in the regular d-gon spanned by the d-th roots of unity.
pub fn unitary_amplitude_pair(state: &QuditState) -> Result<(C64, C64)> {
    single_party(state)?;
    let d = state.d();
    Ok((state.expectation(&pauli_z(d)?), state.expectation(&pauli_x(d)?)))
}

//! The two correlation witnesses on a qudit pair.
//!
//! * `C_d = Σ_j (|jj><jj| + |j̄,−j̄><j̄,−j̄|)`, separable bound `1 + 1/d`.
//! * `R_d = ½(Z_A Z_B† + Z_A† Z_B) + ½(X_A X_B + X_A† X_B†)`, separable bound `M_d`.
//!
//! Both are Bell-diagonal, which yields MES-fraction lower bounds
//! `F ≥ <C_d> − 1` and `F ≥ (<R_d> − (1 + cos ω)) / (1 − cos ω)`, and a
//! Schmidt number of at least `k` whenever `F > (k − 1)/d`.

use serde::Serialize;

use crate::bounds::BoundResult;
use crate::error::{QwError, Result};
use crate::linalg::{min_eigenvalue, tensor, ComplexMatrix, C64};
use crate::qudit::{bell_vector, check_d, cos_omega, pauli_x, pauli_z, x_basis_vector, QuditState};
use crate::EPS_DECIDE;

/// Largest tolerated off-diagonal element in the Bell basis.
pub const BELL_DIAG_TOL: f64 = 1e-9;
const IMAG_TOL: f64 = 1e-9;

fn projector_pair(a: &[C64], b: &[C64]) -> Result<ComplexMatrix> {
    tensor(&ComplexMatrix::outer(a), &ComplexMatrix::outer(b))
}

/// `C_d`, built from its `2d` rank-one projectors.
pub fn correlation_operator_c(d: usize) -> Result<ComplexMatrix> {
    check_d(d)?;
    let mut acc = ComplexMatrix::zeros(d * d);
    for j in 0..d {
        let mut zj = vec![C64::new(0.0, 0.0); d];
        zj[j] = C64::new(1.0, 0.0);
        acc = &acc + &projector_pair(&zj, &zj)?;
        let xj = x_basis_vector(d, j)?;
        let xmj = x_basis_vector(d, (d - j) % d)?;
        acc = &acc + &projector_pair(&xj, &xmj)?;
    }
    Ok(acc)
}

/// `R_d` from the generalized Pauli operators.
pub fn amplitude_operator_r(d: usize) -> Result<ComplexMatrix> {
    check_d(d)?;
    let z = pauli_z(d)?;
    let x = pauli_x(d)?;
    let zd = z.adjoint();
    let xd = x.adjoint();
    let zz = &tensor(&z, &zd)? + &tensor(&zd, &z)?;
    let xx = &tensor(&x, &x)? + &tensor(&xd, &xd)?;
    Ok((&zz + &xx).scale_real(0.5))
}

/// `R_d` from the joint-basis projectors a two-setting experiment measures:
/// `Σ_{j,k} cos[ω(j−k)] |j><j|⊗|k><k| + cos[ω(j+k)] |j̄><j̄|⊗|k̄><k̄|`.
pub fn amplitude_operator_r_projector(d: usize) -> Result<ComplexMatrix> {
    check_d(d)?;
    let n = d * d;
    let mut acc = ComplexMatrix::from_real_diagonal(
        &(0..n)
            .map(|idx| cos_omega(d, idx as i64 / d as i64 - (idx % d) as i64))
            .collect::<Vec<_>>(),
    );
    let xs: Vec<Vec<C64>> = (0..d).map(|k| x_basis_vector(d, k)).collect::<Result<_>>()?;
    for j in 0..d {
        for k in 0..d {
            let w = cos_omega(d, (j + k) as i64);
            acc = &acc + &projector_pair(&xs[j], &xs[k])?.scale_real(w);
        }
    }
    Ok(acc)
}

/// Diagonal of an operator in the Bell basis, indexed `(l, m)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellCoefficients {
    pub d: usize,
    /// Row-major `d × d`, entry `l*d + m`.
    pub coeffs: Vec<f64>,
}

impl BellCoefficients {
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.coeffs[l * self.d + m]
    }

    /// `Σ_{l,m} c_{l,m} |Φ_{l,m}><Φ_{l,m}|`.
    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        let d = self.d;
        let mut acc = ComplexMatrix::zeros(d * d);
        for l in 0..d {
            for m in 0..d {
                let c = self.get(l, m);
                if c != 0.0 {
                    acc = &acc + &ComplexMatrix::outer(&bell_vector(d, l, m)?).scale_real(c);
                }
            }
        }
        Ok(acc)
    }

    /// `tr(W ρ)` for a Bell-diagonal `ρ` with the given weights.
    pub fn expectation(&self, weights: &BellCoefficients) -> f64 {
        self.coeffs.iter().zip(&weights.coeffs).map(|(a, b)| a * b).sum()
    }
}

/// `c_{l,m} = <Φ_{l,m}|op|Φ_{l,m}>`, after checking `op` has no Bell
/// off-diagonal elements above [`BELL_DIAG_TOL`].
pub fn bell_coefficients(op: &ComplexMatrix, d: usize) -> Result<BellCoefficients> {
    check_d(d)?;
    if op.dim() != d * d {
        return Err(QwError::Domain(format!(
            "operator dimension {} does not match d^2 = {}",
            op.dim(),
            d * d
        )));
    }
    let n = d * d;
    let basis: Vec<Vec<C64>> = (0..n).map(|i| bell_vector(d, i / d, i % d)).collect::<Result<_>>()?;
    let images: Vec<Vec<C64>> = basis.iter().map(|b| op.mat_vec(b)).collect();
    let mut coeffs = vec![0.0; n];
    let mut worst = 0.0f64;
    for (a, ba) in basis.iter().enumerate() {
        for (b, img) in images.iter().enumerate() {
            let e: C64 = ba.iter().zip(img).map(|(x, y)| x.conj() * y).sum();
            if a == b {
                coeffs[a] = e.re;
                worst = worst.max(e.im.abs());
            } else {
                worst = worst.max(e.norm());
            }
        }
    }
    if worst > BELL_DIAG_TOL {
        return Err(QwError::NotBellDiagonal { max_offdiag: worst });
    }
    Ok(BellCoefficients { d, coeffs })
}

/// Witness values and the certificates they imply for one two-qudit state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub d: usize,
    pub c_value: f64,
    pub r_value: f64,
    pub c_bound: f64,
    pub r_bound: f64,
    pub c_margin: f64,
    pub r_margin: f64,
    pub c_violated: bool,
    pub r_violated: bool,
    pub fraction_from_c: f64,
    pub fraction_from_r: f64,
    /// Raw maximum of the two fraction bounds; may be negative.
    pub mes_fraction_lb: f64,
    /// `mes_fraction_lb` clamped to `[0, 1]`.
    pub mes_fraction_lb_clamped: f64,
    pub schmidt_lb: usize,
}

impl WitnessReport {
    pub fn entangled(&self) -> bool {
        self.c_violated || self.r_violated
    }
}

/// `F ≥ <C_d> − 1`.
pub fn fraction_from_c(c_value: f64) -> f64 {
    c_value - 1.0
}

/// `F ≥ (<R_d> − (1 + cos ω)) / (1 − cos ω)`.
pub fn fraction_from_r(d: usize, r_value: f64) -> f64 {
    let c = cos_omega(d, 1);
    (r_value - (1.0 + c)) / (1.0 - c)
}

/// Largest `k ≤ d` with `fraction − (k−1)/d > EPS_DECIDE`, at least 1.
pub fn schmidt_from_fraction(d: usize, fraction: f64) -> usize {
    let k = (d as f64 * (fraction - EPS_DECIDE)).ceil();
    if k.is_nan() || k < 1.0 {
        1
    } else {
        (k as usize).min(d)
    }
}

/// Assembles a report from witness values; shared with the shot-based estimators.
pub fn report_from_values(d: usize, c_value: f64, r_value: f64, m_value: f64) -> WitnessReport {
    let c_bound = 1.0 + 1.0 / d as f64;
    let fc = fraction_from_c(c_value);
    let fr = fraction_from_r(d, r_value);
    let lb = fc.max(fr);
    WitnessReport {
        d,
        c_value,
        r_value,
        c_bound,
        r_bound: m_value,
        c_margin: c_value - c_bound,
        r_margin: r_value - m_value,
        c_violated: c_value - c_bound > EPS_DECIDE,
        r_violated: r_value - m_value > EPS_DECIDE,
        fraction_from_c: fc,
        fraction_from_r: fr,
        mes_fraction_lb: lb,
        mes_fraction_lb_clamped: lb.clamp(0.0, 1.0),
        schmidt_lb: schmidt_from_fraction(d, lb),
    }
}

/// Prebuilt `C_d` and `R_d` for repeated evaluation at one `d`.
#[derive(Clone, Debug)]
pub struct WitnessOperators {
    pub d: usize,
    pub c: ComplexMatrix,
    pub r: ComplexMatrix,
}

impl WitnessOperators {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self {
            d,
            c: correlation_operator_c(d)?,
            r: amplitude_operator_r(d)?,
        })
    }

    /// `(<C_d>, <R_d>)`, checked to be real.
    pub fn values(&self, rho: &QuditState) -> Result<(f64, f64)> {
        if rho.parties() != 2 || rho.d() != self.d {
            return Err(QwError::Domain(format!(
                "expected a two-qudit state with d={}, got d={} with {} parties",
                self.d,
                rho.d(),
                rho.parties()
            )));
        }
        let c = rho.expectation(&self.c);
        let r = rho.expectation(&self.r);
        if c.im.abs() > IMAG_TOL || r.im.abs() > IMAG_TOL {
            return Err(QwError::Contract(format!(
                "witness expectations not real: <C>={c}, <R>={r}"
            )));
        }
        Ok((c.re, r.re))
    }

    pub fn evaluate(&self, rho: &QuditState, m_value: f64) -> Result<WitnessReport> {
        let (c, r) = self.values(rho)?;
        Ok(report_from_values(self.d, c, r, m_value))
    }
}

/// Evaluates both witnesses on `rho` against `1 + 1/d` and `bound.m_value`.
pub fn evaluate_witnesses(rho: &QuditState, bound: &BoundResult) -> Result<WitnessReport> {
    if bound.d != rho.d() {
        return Err(QwError::Domain(format!(
            "bound computed for d={}, state has d={}",
            bound.d,
            rho.d()
        )));
    }
    WitnessOperators::new(rho.d())?.evaluate(rho, bound.m_value)
}

/// Minimum eigenvalues of `I + Φ_{0,0} − C_d` and
/// `(1 − cos ω) Φ_{0,0} + (1 + cos ω) I − R_d`; both are non-negative.
pub fn operator_upper_bound_check(d: usize) -> Result<(f64, f64)> {
    check_d(d)?;
    let id = ComplexMatrix::identity(d * d);
    let phi = ComplexMatrix::outer(&bell_vector(d, 0, 0)?);
    let c = cos_omega(d, 1);
    let gap_c = &(&id + &phi) - &correlation_operator_c(d)?;
    let gap_r = &(&phi.scale_real(1.0 - c) + &id.scale_real(1.0 + c)) - &amplitude_operator_r(d)?;
    Ok((min_eigenvalue(&gap_c)?, min_eigenvalue(&gap_r)?))
}

/// Witness thresholds certifying Schmidt number at least `k`, for `k = 1..=d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchmidtThresholds {
    pub d: usize,
    /// Separable bound of `R_d`, carried for context.
    pub m_value: f64,
    /// `1 + (k−1)/d`.
    pub c: Vec<f64>,
    /// `[(d−k+1) cos ω + (d+k−1)] / d`.
    pub r: Vec<f64>,
}

pub fn schmidt_number_thresholds(d: usize, m_value: f64) -> Result<SchmidtThresholds> {
    check_d(d)?;
    let df = d as f64;
    let cw = cos_omega(d, 1);
    let c = (1..=d).map(|k| 1.0 + (k as f64 - 1.0) / df).collect();
    let r = (1..=d)
        .map(|k| {
            let k = k as f64;
            ((df - k + 1.0) * cw + (df + k - 1.0)) / df
        })
        .collect();
    Ok(SchmidtThresholds { d, m_value, c, r })
}

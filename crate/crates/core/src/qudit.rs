//! Generalized Pauli operators, the Fourier (X) basis and the canonical
//! states: MES, Bell basis, GHZ and chain cluster states.
//!
//! Kets are column vectors indexed `0..d`; composite indices are party-1-major,
//! so party A is the left tensor factor.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{QwError, Result};
use crate::linalg::{hermitian_eigenvalues, norm, tensor_vec, ComplexMatrix, C64};

/// Default cap on the Hilbert-space dimension `d^n` of a state or operator.
pub const DEFAULT_MAX_DIM: usize = 4096;

const NORM_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

/// Effective size cap: `QWITNESS_MAX_DIM` if set and parseable, else the default.
pub fn max_dim() -> usize {
    std::env::var("QWITNESS_MAX_DIM")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_DIM)
}

/// `d^n`, checked against the size cap.
pub fn checked_dim(d: usize, n: usize, what: &str) -> Result<usize> {
    let cap = max_dim();
    let mut total: usize = 1;
    for _ in 0..n {
        total = total.checked_mul(d).ok_or_else(|| QwError::Resource {
            what: what.to_string(),
            needed: usize::MAX,
            cap,
        })?;
    }
    if total > cap {
        return Err(QwError::Resource {
            what: what.to_string(),
            needed: total,
            cap,
        });
    }
    Ok(total)
}

pub(crate) fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(QwError::Domain(format!("local dimension must be >= 2, got {d}")));
    }
    Ok(())
}

/// `e^{iωk}` with `ω = 2π/d`, reduced mod `d` first.
pub fn root_of_unity(d: usize, k: i64) -> C64 {
    let r = k.rem_euclid(d as i64) as f64;
    C64::from_polar(1.0, TAU * r / d as f64)
}

/// `cos(ωk)` with `ω = 2π/d`.
pub fn cos_omega(d: usize, k: i64) -> f64 {
    root_of_unity(d, k).re
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    #[serde(rename = "z")]
    ZBasis,
    #[serde(rename = "x")]
    XBasis,
}

/// Clock operator `Z = Σ_j e^{iωj}|j><j|`.
pub fn pauli_z(d: usize) -> Result<ComplexMatrix> {
    check_d(d)?;
    let diag: Vec<C64> = (0..d).map(|j| root_of_unity(d, j as i64)).collect();
    Ok(ComplexMatrix::from_diagonal(&diag))
}

/// Shift operator `X = Σ_j |j+1><j|`.
pub fn pauli_x(d: usize) -> Result<ComplexMatrix> {
    check_d(d)?;
    Ok(ComplexMatrix::from_fn(d, |i, j| {
        if i == (j + 1) % d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Amplitudes of `|k̄> = Z^k |0̄>`, i.e. `e^{iωkj}/√d`.
pub fn x_basis_vector(d: usize, k: usize) -> Result<Vec<C64>> {
    check_d(d)?;
    if k >= d {
        return Err(QwError::Domain(format!("basis index {k} out of range for d={d}")));
    }
    let s = 1.0 / (d as f64).sqrt();
    Ok((0..d).map(|j| root_of_unity(d, (k * j) as i64) * s).collect())
}

pub fn x_basis_state(d: usize, k: usize) -> Result<QuditState> {
    Ok(QuditState::from_pure_unchecked(d, 1, x_basis_vector(d, k)?))
}

/// Computational basis vector `|k>` of a single qudit.
pub fn z_basis_vector(d: usize, k: usize) -> Result<Vec<C64>> {
    check_d(d)?;
    if k >= d {
        return Err(QwError::Domain(format!("basis index {k} out of range for d={d}")));
    }
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[k] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Unitary whose `k`-th column is `|k̄>`.
pub fn fourier_matrix(d: usize) -> Result<ComplexMatrix> {
    check_d(d)?;
    let s = 1.0 / (d as f64).sqrt();
    Ok(ComplexMatrix::from_fn(d, |j, k| root_of_unity(d, (j * k) as i64) * s))
}

/// `|Φ_{0,0}> = Σ_j |j>|j> / √d`.
pub fn mes(d: usize) -> Result<QuditState> {
    bell_state(d, 0, 0)
}

/// `|Φ_{l,m}> = X_A^l Z_B^m |Φ_{0,0}> = Σ_j e^{iωmj} |j+l>|j> / √d`.
pub fn bell_state(d: usize, l: usize, m: usize) -> Result<QuditState> {
    Ok(QuditState::from_pure_unchecked(d, 2, bell_vector(d, l, m)?))
}

pub fn bell_vector(d: usize, l: usize, m: usize) -> Result<Vec<C64>> {
    check_d(d)?;
    if l >= d || m >= d {
        return Err(QwError::Domain(format!("Bell indices ({l},{m}) out of range for d={d}")));
    }
    let s = 1.0 / (d as f64).sqrt();
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for j in 0..d {
        v[((j + l) % d) * d + j] = root_of_unity(d, (m * j) as i64) * s;
    }
    Ok(v)
}

/// `|G> = Σ_k |k>^{⊗n} / √d`.
pub fn ghz_state(d: usize, n: usize) -> Result<QuditState> {
    check_d(d)?;
    if n < 2 {
        return Err(QwError::Domain(format!("GHZ state needs n >= 2 parties, got {n}")));
    }
    let dim = checked_dim(d, n, "GHZ state")?;
    let stride: usize = (0..n).map(|p| d.pow(p as u32)).sum();
    let s = 1.0 / (d as f64).sqrt();
    let mut v = vec![C64::new(0.0, 0.0); dim];
    for k in 0..d {
        v[k * stride] = C64::new(s, 0.0);
    }
    Ok(QuditState::from_pure_unchecked(d, n, v))
}

/// Chain cluster state `Π_m CZ†_{m,m+1} |0̄>^{⊗n}` with
/// `CZ = Σ_{j,k} e^{iωjk}|j,k><j,k|`.
///
/// The amplitude of `|j_1 ... j_n>` is `d^{-n/2} exp(-iω Σ_m j_m j_{m+1})`.
pub fn cluster_state(d: usize, n: usize) -> Result<QuditState> {
    check_d(d)?;
    if n < 2 {
        return Err(QwError::Domain(format!("cluster state needs n >= 2 parties, got {n}")));
    }
    let dim = checked_dim(d, n, "cluster state")?;
    let s = (dim as f64).sqrt().recip();
    let v = (0..dim)
        .map(|idx| {
            let digits = digits(idx, d, n);
            let phase: usize = digits.windows(2).map(|w| w[0] * w[1]).sum();
            root_of_unity(d, -((phase % d) as i64)) * s
        })
        .collect();
    Ok(QuditState::from_pure_unchecked(d, n, v))
}

/// Base-`d` digits of a composite index, party 1 first.
pub fn digits(mut idx: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % d;
        idx /= d;
    }
    out
}

/// Applies a single-qudit operator to party `site` (0-based) of an
/// `n`-party pure vector.
pub fn apply_local(v: &[C64], d: usize, n: usize, site: usize, op: &ComplexMatrix) -> Vec<C64> {
    assert!(site < n && op.dim() == d);
    let inner = d.pow((n - 1 - site) as u32);
    let outer = v.len() / (inner * d);
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    let mut buf = vec![C64::new(0.0, 0.0); d];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * d * inner + i;
            for (a, b) in buf.iter_mut().enumerate() {
                *b = v[base + a * inner];
            }
            for a in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for (b, x) in buf.iter().enumerate() {
                    acc += op.get(a, b) * x;
                }
                out[base + a * inner] = acc;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateKind {
    Pure(Vec<C64>),
    Density(ComplexMatrix),
}

/// A pure vector or density matrix on `(C^d)^{⊗parties}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditState {
    d: usize,
    parties: usize,
    kind: StateKind,
}

impl QuditState {
    /// Validated pure state; the vector must have unit norm within 1e-10.
    pub fn pure(d: usize, parties: usize, amplitudes: Vec<C64>) -> Result<Self> {
        Self::check_shape(d, parties, amplitudes.len())?;
        let nrm = norm(&amplitudes);
        if (nrm - 1.0).abs() > NORM_TOL {
            return Err(QwError::InvalidState(format!("pure state norm is {nrm}, expected 1")));
        }
        Ok(Self::from_pure_unchecked(d, parties, amplitudes))
    }

    /// Normalizes an arbitrary non-zero vector into a pure state.
    pub fn pure_normalized(d: usize, parties: usize, amplitudes: Vec<C64>) -> Result<Self> {
        Self::check_shape(d, parties, amplitudes.len())?;
        let nrm = norm(&amplitudes);
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(QwError::InvalidState("cannot normalize a zero vector".into()));
        }
        let v = amplitudes.into_iter().map(|x| x / nrm).collect();
        Ok(Self::from_pure_unchecked(d, parties, v))
    }

    /// Validated density matrix: Hermitian, unit trace, positive semidefinite.
    pub fn density(d: usize, parties: usize, rho: ComplexMatrix) -> Result<Self> {
        Self::check_shape(d, parties, rho.dim())?;
        let herm = rho.hermiticity_residual();
        if herm > NORM_TOL {
            return Err(QwError::InvalidState(format!("density matrix not Hermitian (residual {herm:.3e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(QwError::InvalidState(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = hermitian_eigenvalues(&rho)?.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(QwError::InvalidState(format!("density matrix has eigenvalue {min:.3e} < 0")));
        }
        Ok(Self {
            d,
            parties,
            kind: StateKind::Density(rho),
        })
    }

    /// Convex mixture `Σ w_i ρ_i`; weights must be non-negative and sum to 1.
    pub fn mixture(components: &[(f64, &QuditState)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| QwError::InvalidState("empty mixture".into()))?;
        let (d, parties) = (first.d, first.parties);
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > NORM_TOL {
            return Err(QwError::InvalidState(format!(
                "mixture weights must be non-negative and sum to 1 (sum {total})"
            )));
        }
        let dim = first.dim();
        let mut acc = vec![C64::new(0.0, 0.0); dim * dim];
        for (w, s) in components {
            if s.d != d || s.parties != parties {
                return Err(QwError::Domain("mixture components have different shapes".into()));
            }
            match &s.kind {
                StateKind::Pure(v) => {
                    for i in 0..dim {
                        let vi = v[i] * *w;
                        if vi == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for j in 0..dim {
                            acc[i * dim + j] += vi * v[j].conj();
                        }
                    }
                }
                StateKind::Density(m) => {
                    for (a, b) in acc.iter_mut().zip(m.data()) {
                        *a += b * *w;
                    }
                }
            }
        }
        let rho = ComplexMatrix::from_row_major(acc)?;
        Ok(Self {
            d,
            parties,
            kind: StateKind::Density(rho),
        })
    }

    /// Tensor product of single- or multi-party pure states with equal `d`.
    pub fn product(factors: &[QuditState]) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| QwError::InvalidState("empty product".into()))?;
        let d = first.d;
        let mut parties = 0;
        let mut v = vec![C64::new(1.0, 0.0)];
        for f in factors {
            if f.d != d {
                return Err(QwError::Domain("product factors have different d".into()));
            }
            let amp = f
                .amplitudes()
                .ok_or_else(|| QwError::Domain("product factors must be pure".into()))?;
            parties += f.parties;
            checked_dim(d, parties, "product state")?;
            v = tensor_vec(&v, amp);
        }
        Ok(Self::from_pure_unchecked(d, parties, v))
    }

    /// Maximally mixed state `I/d^n`.
    pub fn maximally_mixed(d: usize, parties: usize) -> Result<Self> {
        check_d(d)?;
        let dim = checked_dim(d, parties, "maximally mixed state")?;
        Ok(Self {
            d,
            parties,
            kind: StateKind::Density(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64)),
        })
    }

    pub(crate) fn from_pure_unchecked(d: usize, parties: usize, v: Vec<C64>) -> Self {
        Self {
            d,
            parties,
            kind: StateKind::Pure(v),
        }
    }

    pub(crate) fn from_density_unchecked(d: usize, parties: usize, rho: ComplexMatrix) -> Self {
        Self {
            d,
            parties,
            kind: StateKind::Density(rho),
        }
    }

    fn check_shape(d: usize, parties: usize, len: usize) -> Result<()> {
        check_d(d)?;
        if parties == 0 {
            return Err(QwError::Domain("a state needs at least one party".into()));
        }
        let dim = checked_dim(d, parties, "state")?;
        if dim != len {
            return Err(QwError::InvalidState(format!(
                "expected dimension {dim} for d={d}, parties={parties}, got {len}"
            )));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    /// Hilbert-space dimension `d^parties`.
    pub fn dim(&self) -> usize {
        match &self.kind {
            StateKind::Pure(v) => v.len(),
            StateKind::Density(m) => m.dim(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.kind, StateKind::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match &self.kind {
            StateKind::Pure(v) => Some(v),
            StateKind::Density(_) => None,
        }
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        match &self.kind {
            StateKind::Pure(v) => ComplexMatrix::outer(v),
            StateKind::Density(m) => m.clone(),
        }
    }

    /// `tr(ρ A)`; complex in general.
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        assert_eq!(op.dim(), self.dim(), "operator/state dimension mismatch");
        match &self.kind {
            StateKind::Pure(v) => op.expectation(v),
            StateKind::Density(m) => m.trace_product(op),
        }
    }

    /// `<ψ|ψ>` or `tr ρ`.
    pub fn trace(&self) -> f64 {
        match &self.kind {
            StateKind::Pure(v) => v.iter().map(|x| x.norm_sqr()).sum(),
            StateKind::Density(m) => m.trace().re,
        }
    }

    /// Diagonal of the state in the computational basis.
    pub fn z_probabilities(&self) -> Vec<f64> {
        match &self.kind {
            StateKind::Pure(v) => v.iter().map(|x| x.norm_sqr()).collect(),
            StateKind::Density(m) => (0..m.dim()).map(|i| m.get(i, i).re).collect(),
        }
    }

    /// Diagonal of the state in the product Fourier basis `|k̄_1 ... k̄_n>`.
    pub fn x_probabilities(&self) -> Result<Vec<f64>> {
        let f_dag = fourier_matrix(self.d)?.adjoint();
        let n = self.parties;
        match &self.kind {
            StateKind::Pure(v) => {
                let mut w = v.clone();
                for site in 0..n {
                    w = apply_local(&w, self.d, n, site, &f_dag);
                }
                Ok(w.iter().map(|x| x.norm_sqr()).collect())
            }
            StateKind::Density(m) => {
                // p_k = <u_k|ρ|u_k> with u_k the product Fourier basis vector.
                let cols: Vec<Vec<C64>> = (0..self.d)
                    .map(|k| x_basis_vector(self.d, k))
                    .collect::<Result<_>>()?;
                Ok((0..m.dim())
                    .map(|k| {
                        let u = digits(k, self.d, n)
                            .iter()
                            .fold(vec![C64::new(1.0, 0.0)], |acc, &j| tensor_vec(&acc, &cols[j]));
                        m.expectation(&u).re
                    })
                    .collect())
            }
        }
    }
}

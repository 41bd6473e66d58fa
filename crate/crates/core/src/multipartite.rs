//! GHZ and chain-cluster stabilizers on `n` qudits and the pairwise
//! inseparability tests built from them.
//!
//! For a fully separable state both tests are bounded by `M_d`, the same
//! separable bound as the two-qudit amplitude correlation.

use serde::Serialize;

use crate::error::{QwError, Result};
use crate::linalg::{tensor_all, tensor_vec, ComplexMatrix, C64};
use crate::qudit::{apply_local, check_d, checked_dim, digits, pauli_x, pauli_z, QuditState, StateKind};
use crate::EPS_DECIDE;

const UNITARY_TOL: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-9;

/// Tensor product of single-qudit operators, one per site.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorString {
    d: usize,
    sites: Vec<ComplexMatrix>,
}

impl OperatorString {
    fn identity(d: usize, n: usize) -> Self {
        Self {
            d,
            sites: vec![ComplexMatrix::identity(d); n],
        }
    }

    /// Replaces the operator at 1-based `site`.
    fn with(mut self, site: usize, op: ComplexMatrix) -> Self {
        self.sites[site - 1] = op;
        self
    }

    pub fn parties(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, site: usize) -> &ComplexMatrix {
        &self.sites[site - 1]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            d: self.d,
            sites: self.sites.iter().map(ComplexMatrix::adjoint).collect(),
        }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let id = ComplexMatrix::identity(self.d);
        self.sites.iter().all(|s| (s * &s.adjoint()).max_abs_diff(&id) <= tol)
    }

    /// Dense `d^n × d^n` matrix.
    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        checked_dim(self.d, self.parties(), "dense stabilizer")?;
        tensor_all(&self.sites)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.parties();
        let id = ComplexMatrix::identity(self.d);
        let mut out = v.to_vec();
        for (site, op) in self.sites.iter().enumerate() {
            if *op != id {
                out = apply_local(&out, self.d, n, site, op);
            }
        }
        out
    }

    /// `P|k>` for a computational basis index.
    fn column(&self, k: usize) -> Vec<C64> {
        digits(k, self.d, self.parties())
            .iter()
            .zip(&self.sites)
            .fold(vec![C64::new(1.0, 0.0)], |acc, (&j, op)| tensor_vec(&acc, &op.column(j)))
    }

    /// `tr(ρ P)`.
    pub fn expectation(&self, state: &QuditState) -> C64 {
        match state.kind() {
            StateKind::Pure(v) => {
                let pv = self.apply(v);
                v.iter().zip(&pv).map(|(a, b)| a.conj() * b).sum()
            }
            StateKind::Density(rho) => {
                let dim = rho.dim();
                (0..dim)
                    .map(|k| {
                        let col = self.column(k);
                        let row = &rho.data()[k * dim..(k + 1) * dim];
                        row.iter().zip(&col).map(|(a, b)| a * b).sum::<C64>()
                    })
                    .sum()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilizerKind {
    Ghz,
    Cluster,
}

impl StabilizerKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ghz" => Ok(StabilizerKind::Ghz),
            "cluster" => Ok(StabilizerKind::Cluster),
            other => Err(QwError::Parse(format!("unknown stabilizer kind '{other}' (ghz|cluster)"))),
        }
    }
}

/// The `n` stabilizers of a GHZ or chain cluster state; `ops[k-1]` is the
/// `k`-th generator in 1-based numbering.
#[derive(Clone, Debug)]
pub struct StabilizerSet {
    pub d: usize,
    pub n: usize,
    pub kind: StabilizerKind,
    pub ops: Vec<OperatorString>,
}

impl StabilizerSet {
    /// Generator `k` (1-based).
    pub fn op(&self, k: usize) -> &OperatorString {
        &self.ops[k - 1]
    }

    pub fn canonical_state(&self) -> Result<QuditState> {
        match self.kind {
            StabilizerKind::Ghz => crate::qudit::ghz_state(self.d, self.n),
            StabilizerKind::Cluster => crate::qudit::cluster_state(self.d, self.n),
        }
    }
}

fn check_parties(d: usize, n: usize, what: &str) -> Result<()> {
    check_d(d)?;
    if n < 2 {
        return Err(QwError::Domain(format!("{what} needs n >= 2 parties, got {n}")));
    }
    checked_dim(d, n, what)?;
    Ok(())
}

/// `S_1 = X^{⊗n}` and `S_m = Z_{m−1} Z_m†` for `m = 2..n`.
pub fn ghz_stabilizers(d: usize, n: usize) -> Result<StabilizerSet> {
    check_parties(d, n, "GHZ stabilizers")?;
    let z = pauli_z(d)?;
    let x = pauli_x(d)?;
    let mut ops = vec![OperatorString {
        d,
        sites: vec![x; n],
    }];
    for m in 2..=n {
        ops.push(OperatorString::identity(d, n).with(m - 1, z.clone()).with(m, z.adjoint()));
    }
    let set = StabilizerSet {
        d,
        n,
        kind: StabilizerKind::Ghz,
        ops,
    };
    debug_assert!(set.ops.iter().all(|o| o.is_unitary(UNITARY_TOL)));
    Ok(set)
}

/// `T_1 = X_1† Z_2`, `T_m = Z_{m−1} X_m† Z_{m+1}`, `T_n = Z_{n−1} X_n†`.
///
/// The last generator mirrors `T_1`; the variant `X_{n−1}† Z_n` does not
/// stabilize the chain cluster state.
pub fn cluster_stabilizers(d: usize, n: usize) -> Result<StabilizerSet> {
    check_parties(d, n, "cluster stabilizers")?;
    let z = pauli_z(d)?;
    let xd = pauli_x(d)?.adjoint();
    let ops = (1..=n)
        .map(|m| {
            let mut op = OperatorString::identity(d, n).with(m, xd.clone());
            if m > 1 {
                op = op.with(m - 1, z.clone());
            }
            if m < n {
                op = op.with(m + 1, z.clone());
            }
            op
        })
        .collect();
    Ok(StabilizerSet {
        d,
        n,
        kind: StabilizerKind::Cluster,
        ops,
    })
}

/// `<P + P†>`, checked to be real.
fn hermitian_part(op: &OperatorString, state: &QuditState) -> Result<f64> {
    let s = op.expectation(state) + op.adjoint().expectation(state);
    if s.im.abs() > IMAG_TOL {
        return Err(QwError::Contract(format!("<P + P†> has imaginary part {:.3e}", s.im)));
    }
    Ok(s.re)
}

fn check_state(set: &StabilizerSet, rho: &QuditState, site: usize, lowest: usize) -> Result<()> {
    if rho.d() != set.d || rho.parties() != set.n {
        return Err(QwError::Domain(format!(
            "state has d={} with {} parties, stabilizers need d={} with {}",
            rho.d(),
            rho.parties(),
            set.d,
            set.n
        )));
    }
    if site < lowest || site > set.n {
        return Err(QwError::Domain(format!("site {site} outside {lowest}..={}", set.n)));
    }
    Ok(())
}

/// `½|<S_1 + S_1†> + <S_m + S_m†>|` and whether it exceeds `M_d`.
pub fn ghz_pair_test(rho: &QuditState, m: usize, m_value: f64) -> Result<(f64, bool)> {
    let set = ghz_stabilizers(rho.d(), rho.parties().max(2))?;
    check_state(&set, rho, m, 2)?;
    let w = 0.5 * (hermitian_part(set.op(1), rho)? + hermitian_part(set.op(m), rho)?).abs();
    Ok((w, w > m_value + EPS_DECIDE))
}

/// `½|<T_{m−1} + T_{m−1}†> + <T_m + T_m†>|` and whether it exceeds `M_d`.
pub fn cluster_pair_test(rho: &QuditState, m: usize, m_value: f64) -> Result<(f64, bool)> {
    let set = cluster_stabilizers(rho.d(), rho.parties().max(2))?;
    check_state(&set, rho, m, 2)?;
    let w = 0.5 * (hermitian_part(set.op(m - 1), rho)? + hermitian_part(set.op(m), rho)?).abs();
    Ok((w, w > m_value + EPS_DECIDE))
}

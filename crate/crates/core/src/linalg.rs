//! Dense complex square matrices, Kronecker products and a cyclic Jacobi
//! eigensolver for Hermitian input.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{QwError, Result};

pub type C64 = Complex64;

/// Largest tolerated `|a_ij - conj(a_ji)|` for input declared Hermitian.
pub const HERM_TOL: f64 = 1e-10;
/// Per-component tolerance promised for eigenpairs and reconstruction.
pub const EIG_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;

/// Dense square complex matrix stored row-major. Values are never mutated
/// after construction; every operation returns a new matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; the length must be a perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim == 0 {
            return Err(QwError::Size(format!(
                "{} entries do not form a non-empty square matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// The rank-one projector `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut exp: usize) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length mismatch");
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `<u|A|u>` for a (not necessarily normalized) vector.
    pub fn expectation(&self, u: &[C64]) -> C64 {
        let au = self.mat_vec(u);
        u.iter().zip(&au).map(|(a, b)| a.conj() * b).sum()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.data[i * n + j] * other.data[j * n + i];
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |a_ij - conj(a_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    fn combine(&self, other: &ComplexMatrix, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let out = &mut data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { dim: n, data }
    }
}

/// Kronecker product: `(a⊗b)[i*nb + k, j*nb + l] = a[i,j] * b[k,l]`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a
        .dim
        .checked_mul(b.dim)
        .filter(|n| n.checked_mul(*n).is_some())
        .ok_or_else(|| QwError::Size(format!("tensor of {}x{} and {}x{} overflows", a.dim, a.dim, b.dim, b.dim)))?;
    let nb = b.dim;
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a.get(i, j);
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..nb {
                let row = (i * nb + k) * dim + j * nb;
                for l in 0..nb {
                    data[row + l] = aij * b.get(k, l);
                }
            }
        }
    }
    Ok(ComplexMatrix { dim, data })
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all(factors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| QwError::Size("empty tensor product".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| tensor(&acc, f))
}

/// Kronecker product of two vectors.
pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectrum of a Hermitian matrix, eigenvalues sorted descending and
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// `Σ λ_i v_i v_i†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v.get(i, k) * v.get(j, k).conj() * self.values[k])
                .sum()
        })
    }
}

fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    let r = a.hermiticity_residual();
    if r > HERM_TOL {
        return Err(QwError::Contract(format!(
            "matrix is not Hermitian (residual {r:.3e} > {HERM_TOL:e})"
        )));
    }
    Ok(())
}

/// Working state of the cyclic Jacobi iteration.
struct Jacobi {
    n: usize,
    a: Vec<C64>,
    v: Option<Vec<C64>>,
}

impl Jacobi {
    fn off_diagonal(&self) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += self.a[p * n + q].norm_sqr();
            }
        }
        s
    }

    fn rotate(&mut self, p: usize, q: usize) {
        let n = self.n;
        let apq = self.a[p * n + q];
        let r = apq.norm();
        if r == 0.0 {
            return;
        }
        let app = self.a[p * n + p].re;
        let aqq = self.a[q * n + q].re;
        // Below resolution of the diagonal: the rotation would be the identity.
        if r < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
            self.a[p * n + q] = C64::new(0.0, 0.0);
            self.a[q * n + p] = C64::new(0.0, 0.0);
            return;
        }
        // A = P B P† with P = diag(1, conj(u)) and B real symmetric; rotate B.
        let u = apq / r;
        let tau = (aqq - app) / (2.0 * r);
        let t = if tau >= 0.0 {
            1.0 / (tau + (1.0 + tau * tau).sqrt())
        } else {
            -1.0 / (-tau + (1.0 + tau * tau).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        let vpp = C64::new(c, 0.0);
        let vpq = C64::new(s, 0.0);
        let vqp = -u.conj() * s;
        let vqq = u.conj() * c;

        // A <- A V
        for k in 0..n {
            let akp = self.a[k * n + p];
            let akq = self.a[k * n + q];
            self.a[k * n + p] = akp * vpp + akq * vqp;
            self.a[k * n + q] = akp * vpq + akq * vqq;
        }
        // A <- V† A
        for k in 0..n {
            let apk = self.a[p * n + k];
            let aqk = self.a[q * n + k];
            self.a[p * n + k] = vpp.conj() * apk + vqp.conj() * aqk;
            self.a[q * n + k] = vpq.conj() * apk + vqq.conj() * aqk;
        }
        self.a[p * n + q] = C64::new(0.0, 0.0);
        self.a[q * n + p] = C64::new(0.0, 0.0);
        self.a[p * n + p].im = 0.0;
        self.a[q * n + q].im = 0.0;

        if let Some(v) = self.v.as_mut() {
            for k in 0..n {
                let wkp = v[k * n + p];
                let wkq = v[k * n + q];
                v[k * n + p] = wkp * vpp + wkq * vqp;
                v[k * n + q] = wkp * vpq + wkq * vqq;
            }
        }
    }

    fn run(&mut self) -> Result<()> {
        let n = self.n;
        let scale: f64 = self.a.iter().map(|x| x.norm_sqr()).sum();
        let target = (f64::EPSILON * f64::EPSILON) * scale;
        for _ in 0..MAX_SWEEPS {
            let off = self.off_diagonal();
            if off <= target || off == 0.0 {
                return Ok(());
            }
            for p in 0..n {
                for q in p + 1..n {
                    self.rotate(p, q);
                }
            }
        }
        let off = self.off_diagonal();
        if off <= target * 1e4 {
            return Ok(());
        }
        Err(QwError::Convergence {
            iterations: MAX_SWEEPS,
            residual: off.sqrt(),
        })
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn hermitian_eigs(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    check_hermitian(a)?;
    let n = a.dim;
    let mut vecs = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        vecs[i * n + i] = C64::new(1.0, 0.0);
    }
    let mut jac = Jacobi {
        n,
        a: a.data.clone(),
        v: Some(vecs),
    };
    jac.run()?;
    let diag: Vec<f64> = (0..n).map(|i| jac.a[i * n + i].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let v = jac.v.expect("eigenvectors requested");
    let values = order.iter().map(|&k| diag[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[i * n + order[j]]);
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(a)?;
    let n = a.dim;
    let mut jac = Jacobi {
        n,
        a: a.data.clone(),
        v: None,
    };
    jac.run()?;
    let mut diag: Vec<f64> = (0..n).map(|i| jac.a[i * n + i].re).collect();
    diag.sort_by(|x, y| y.total_cmp(x));
    Ok(diag)
}

/// Operator norm of a Hermitian matrix, `max_i |λ_i|`.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    let vals = hermitian_eigenvalues(a)?;
    Ok(vals.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    let vals = hermitian_eigenvalues(a)?;
    Ok(*vals.last().expect("non-empty matrix"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let a = random_matrix(n, rng);
        (&a + &a.adjoint()).scale_real(0.5)
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2).unwrap(), ComplexMatrix::identity(4));
    }

    #[test]
    fn diagonal_tensor() {
        let z = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let zz = tensor(&z, &z).unwrap();
        assert_eq!(zz, ComplexMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn tensor_index_layout_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(3, &mut rng);
        let b = random_matrix(3, &mut rng);
        let ab = tensor(&a, &b).unwrap();
        // elementwise oracle
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        assert_eq!(ab.get(i * 3 + k, j * 3 + l), a.get(i, j) * b.get(k, l));
                    }
                }
            }
        }
        let lhs = ab.trace();
        let rhs = a.trace() * b.trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn tensor_size_overflow() {
        let big = ComplexMatrix { dim: usize::MAX / 2, data: vec![] };
        assert!(matches!(tensor(&big, &big), Err(QwError::Size(_))));
    }

    #[test]
    fn diagonal_eigs_sorted() {
        let a = ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let e = hermitian_eigs(&a).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_fn(2, |i, j| if i != j { c(1.0) } else { c(0.0) });
        let e = hermitian_eigs(&x).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_eigenpairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(10, &mut rng);
        let e = hermitian_eigs(&a).unwrap();
        let sum: f64 = e.values.iter().sum();
        assert!((sum - a.trace().re).abs() < 1e-9);
        for (k, &lam) in e.values.iter().enumerate() {
            let v = e.vector(k);
            let av = a.mat_vec(&v);
            for (x, y) in av.iter().zip(&v) {
                assert!((x - y * lam).norm() < EIG_TOL);
            }
        }
        let vh = &e.vectors.adjoint() * &e.vectors;
        assert!(vh.max_abs_diff(&ComplexMatrix::identity(10)) < EIG_TOL);
        assert!(e.reconstruct().max_abs_diff(&a) < EIG_TOL);
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = ComplexMatrix::from_fn(2, |i, j| if i < j { c(1.0) } else { c(0.0) });
        assert!(matches!(hermitian_eigs(&a), Err(QwError::Contract(_))));
        assert!(matches!(operator_norm(&a), Err(QwError::Contract(_))));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&ComplexMatrix::identity(6)).unwrap() - 1.0).abs() < 1e-15);
        let a = ComplexMatrix::from_real_diagonal(&[2.0, 0.0, -2.0, 0.0]);
        assert!((operator_norm(&a).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_spectrum() {
        // projector onto a random 3-dimensional subspace of C^6
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(6, &mut rng);
        let e = hermitian_eigs(&h).unwrap();
        let mut p = ComplexMatrix::zeros(6);
        for k in 0..3 {
            p = &p + &ComplexMatrix::outer(&e.vector(k));
        }
        let ep = hermitian_eigs(&p).unwrap();
        for (k, v) in ep.values.iter().enumerate() {
            let want = if k < 3 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-9);
        }
        assert!(ep.reconstruct().max_abs_diff(&p) < EIG_TOL);
    }

    #[test]
    fn pow_matches_repeated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(4, &mut rng).scale_real(0.5);
        let a3 = &(&a * &a) * &a;
        assert!(a.pow(3).max_abs_diff(&a3) < 1e-12);
        assert_eq!(a.pow(0), ComplexMatrix::identity(4));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        fn seeded_hermitian(seed: u64, n: usize) -> ComplexMatrix {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_hermitian(n, &mut rng)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn norm_is_unitarily_invariant(seed in any::<u64>(), n in 2usize..8) {
                let a = seeded_hermitian(seed, n);
                let u = hermitian_eigs(&seeded_hermitian(seed ^ 0x9e37, n)).unwrap().vectors;
                let rotated = &(&u * &a) * &u.adjoint();
                let lhs = operator_norm(&a).unwrap();
                let rhs = operator_norm(&rotated).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }

            #[test]
            fn tensor_is_associative(seed in any::<u64>()) {
                // small-integer entries keep every product exact
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut int_matrix = |n| ComplexMatrix::from_fn(n, |_, _| {
                    C64::new(rng.random_range(-4i32..5) as f64, rng.random_range(-4i32..5) as f64)
                });
                let a = int_matrix(2);
                let b = int_matrix(3);
                let c = int_matrix(2);
                let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
                let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
                prop_assert_eq!(left, right);
            }

            #[test]
            fn reconstruction(seed in any::<u64>(), n in 1usize..9) {
                let a = seeded_hermitian(seed, n);
                let e = hermitian_eigs(&a).unwrap();
                prop_assert!(e.reconstruct().max_abs_diff(&a) < EIG_TOL);
            }

            #[test]
            fn double_adjoint(seed in any::<u64>(), n in 1usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_matrix(n, &mut rng);
                prop_assert_eq!(a.adjoint().adjoint(), a);
            }
        }
    }
}

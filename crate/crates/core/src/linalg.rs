//! Dense symmetric matrices and the spectral primitives built on them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance used when validating symmetry of an input matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A dense real symmetric `n x n` matrix.
///
/// Construction through [`DenseSymmetric::new`] validates symmetry to
/// `1e-12 * max(1, max|M|)` and rejects asymmetric input instead of averaging it.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    m: DMatrix<f64>,
}

impl DenseSymmetric {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("symmetric matrix"));
        }
        let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let tol = SYMMETRY_TOL * scale;
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > tol {
                    return Err(Error::NotSymmetric { i, j, gap, tol });
                }
            }
        }
        Ok(Self { m })
    }

    /// Builds `M[i,j] = f(i,j)` evaluating `f` only on the lower triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    /// Wraps `m` after forcing exact symmetry, `(m + m^T) / 2`.
    ///
    /// Only for matrices that are symmetric up to roundoff by construction.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self { m: (m + t) * 0.5 }
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self { m: DMatrix::from_diagonal(&DVector::from_column_slice(d)) }
    }

    /// `u u^T`.
    pub fn outer(u: &[f64]) -> Self {
        let v = DVector::from_column_slice(u);
        Self { m: &v * v.transpose() }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &DenseSymmetric) -> f64 {
        self.m.dot(&other.m)
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn add(&self, other: &DenseSymmetric) -> Self {
        Self { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &DenseSymmetric) -> Self {
        Self { m: &self.m - &other.m }
    }

    /// Quadratic form `x^T M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for j in 0..n {
            let mut col = 0.0;
            for i in 0..n {
                col += self.m[(i, j)] * x[i];
            }
            acc += col * x[j];
        }
        acc
    }
}

/// Eigendecomposition `M = V diag(values) V^T` of a symmetric matrix.
///
/// Eigenvalues are in nonincreasing order; every eigenvector has its first
/// nonzero component positive.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    /// Reassembles `V f(Λ) V^T`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> DenseSymmetric {
        let n = self.values.len();
        // Columns mapped to zero are skipped, so low-rank results cost O(n² k).
        let kept: Vec<(usize, f64)> =
            self.values.iter().enumerate().map(|(k, &lam)| (k, f(lam))).filter(|&(_, s)| s != 0.0).collect();
        let basis = DMatrix::from_fn(n, kept.len(), |i, j| self.vectors[(i, kept[j].0)]);
        let mut scaled = basis.clone();
        for (j, &(_, s)) in kept.iter().enumerate() {
            scaled.column_mut(j).scale_mut(s);
        }
        DenseSymmetric::symmetrized(&scaled * basis.transpose())
    }

    pub fn reconstruct(&self) -> DenseSymmetric {
        self.reconstruct_with(|l| l)
    }
}

/// Symmetric eigendecomposition backed by nalgebra's tridiagonal QR solver.
pub fn sym_eig(m: &DenseSymmetric) -> Result<SymEig> {
    if m.m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sym_eig input"));
    }
    let n = m.n();
    if n == 0 {
        return Ok(SymEig { values: Vec::new(), vectors: DMatrix::zeros(0, 0) });
    }
    let eig = m.m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let lead = col.iter().copied().find(|v| v.abs() > 1e-14).unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    Ok(SymEig { values, vectors })
}

/// Sum of absolute eigenvalues.
pub fn nuclear_norm(m: &DenseSymmetric) -> f64 {
    eigenvalues(m).iter().map(|l| l.abs()).sum()
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(m: &DenseSymmetric) -> f64 {
    eigenvalues(m).iter().fold(0.0, |acc, l| acc.max(l.abs()))
}

/// Eigenvalues only, unordered. Cheaper than [`sym_eig`].
pub fn eigenvalues(m: &DenseSymmetric) -> Vec<f64> {
    if m.n() == 0 {
        return Vec::new();
    }
    m.m.symmetric_eigenvalues().iter().copied().collect()
}

/// Number of eigenvalues with `|λ| > rel_tol * max|λ|`.
pub fn numerical_rank(m: &DenseSymmetric, rel_tol: f64) -> usize {
    let ev = eigenvalues(m);
    let top = ev.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
    if top == 0.0 {
        return 0;
    }
    ev.iter().filter(|l| l.abs() > rel_tol * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DenseSymmetric {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseSymmetric::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-9, 1.0]);
        assert!(matches!(DenseSymmetric::new(m), Err(Error::NotSymmetric { .. })));
        let ok = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-13, 1.0]);
        assert!(DenseSymmetric::new(ok).is_ok());
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(matches!(DenseSymmetric::new(m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn identity_and_diagonal_spectra() {
        let e = sym_eig(&DenseSymmetric::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let e = sym_eig(&DenseSymmetric::diagonal(&[1.0, -2.0, 3.0])).unwrap();
        for (got, want) in e.values.iter().zip([3.0, 1.0, -2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for seed in 0..5 {
            let m = random_symmetric(24, seed);
            let e = sym_eig(&m).unwrap();
            let lam = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
            let resid = m.as_matrix() * &e.vectors - &e.vectors * lam;
            assert!(resid.norm() <= 1e-9 * m.frobenius_norm());
            let gram = e.vectors.transpose() * &e.vectors;
            assert!((gram - DMatrix::identity(24, 24)).amax() <= 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            for k in 0..24 {
                let lead = e.vectors.column(k).iter().copied().find(|v| v.abs() > 1e-14).unwrap();
                assert!(lead > 0.0);
            }
        }
    }

    #[test]
    fn nuclear_norm_cases() {
        assert!((nuclear_norm(&DenseSymmetric::identity(5)) - 5.0).abs() < 1e-12);
        assert!((nuclear_norm(&DenseSymmetric::diagonal(&[3.0, 1.0, -2.0])) - 6.0).abs() < 1e-12);
        let u = [1.0, -2.0, 0.5, 3.0];
        let norm2: f64 = u.iter().map(|x| x * x).sum();
        assert!((nuclear_norm(&DenseSymmetric::outer(&u)) - norm2).abs() < 1e-10);
    }
}

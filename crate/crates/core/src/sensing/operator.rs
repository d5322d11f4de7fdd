//! Rank-one measurement operator restricted to Toeplitz arguments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::toeplitz::ToeplitzVector;

use super::law::SubgaussianLaw;

/// `m x n` matrix of i.i.d. draws from `law`, filled row by row from `stream(seed)`.
pub fn sample_vectors(law: &SubgaussianLaw, n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream(seed);
    let mut buf = vec![0.0; n * m];
    law.fill(&mut rng, &mut buf);
    DMatrix::from_row_slice(m, n, &buf)
}

/// Coefficients of `z ↦ ξ^T Toep(z) ξ`: `row_0 = Σ ξ_i²`, `row_l = 2 Σ_i ξ_i ξ_{i+l}`.
pub fn effective_row(xi: &[f64]) -> Vec<f64> {
    let n = xi.len();
    let mut row = vec![0.0; n];
    effective_row_into(xi, &mut row);
    row
}

pub(crate) fn effective_row_into(xi: &[f64], row: &mut [f64]) {
    let n = xi.len();
    for l in 0..n {
        let acc: f64 = xi[..n - l].iter().zip(&xi[l..]).map(|(a, b)| a * b).sum();
        row[l] = if l == 0 { acc } else { 2.0 * acc };
    }
}

/// The measurement operator in Toeplitz coordinates: `(A z)_k = <ξ_k ξ_k^T, Toep(z)>`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveMatrix {
    a: DMatrix<f64>,
}

impl EffectiveMatrix {
    /// Builds `A` from sensing vectors stored as rows of `xi`.
    pub fn from_vectors(xi: &DMatrix<f64>) -> Self {
        let (m, n) = xi.shape();
        let mut a = DMatrix::zeros(m, n);
        let mut xk = vec![0.0; n];
        let mut row = vec![0.0; n];
        for k in 0..m {
            for (i, v) in xk.iter_mut().enumerate() {
                *v = xi[(k, i)];
            }
            effective_row_into(&xk, &mut row);
            for (l, v) in row.iter().enumerate() {
                a[(k, l)] = *v;
            }
        }
        Self { a }
    }

    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("effective matrix"));
        }
        Ok(Self { a })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn apply(&self, t: &ToeplitzVector) -> Result<Vec<f64>> {
        if t.n() != self.n() {
            return Err(Error::Dimension(format!(
                "operator acts on n = {}, got a toeplitz vector with n = {}",
                self.n(),
                t.n()
            )));
        }
        Ok(self.apply_slice(t.values()))
    }

    pub(crate) fn apply_slice(&self, z: &[f64]) -> Vec<f64> {
        (&self.a * DVector::from_column_slice(z)).as_slice().to_vec()
    }
}

/// `result_k = effective_row(ξ_k) · z`.
pub fn apply_operator(xi: &DMatrix<f64>, t: &ToeplitzVector) -> Result<Vec<f64>> {
    if xi.ncols() != t.n() {
        return Err(Error::Dimension(format!(
            "sensing vectors have length {}, toeplitz vector has n = {}",
            xi.ncols(),
            t.n()
        )));
    }
    EffectiveMatrix::from_vectors(xi).apply(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn effective_row_examples() {
        assert_eq!(effective_row(&[1.0, 2.0]), vec![5.0, 4.0]);
        assert_eq!(effective_row(&[1.0, 1.0, -1.0]), vec![3.0, 0.0, -2.0]);
    }

    #[test]
    fn operator_matches_dense_quadratic_form() {
        let mut rng = stream(17);
        for _ in 0..50 {
            let n = rng.random_range(1..20);
            let m = rng.random_range(1..10);
            let xi = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
            let t = ToeplitzVector::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let got = apply_operator(&xi, &t).unwrap();
            let dense = t.to_dense();
            for k in 0..m {
                let x: Vec<f64> = xi.row(k).iter().copied().collect();
                let want = dense.quadratic_form(&x);
                assert!((got[k] - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn identity_and_zero_arguments() {
        let xi = sample_vectors(&SubgaussianLaw::gaussian(), 6, 4, 3);
        let got = apply_operator(&xi, &ToeplitzVector::identity(6)).unwrap();
        for k in 0..4 {
            assert!((got[k] - xi.row(k).norm_squared()).abs() < 1e-12);
        }
        let zero = apply_operator(&xi, &ToeplitzVector::zeros(6)).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(apply_operator(&xi, &ToeplitzVector::zeros(5)).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let law = SubgaussianLaw::rademacher();
        assert_eq!(sample_vectors(&law, 8, 5, 9), sample_vectors(&law, 8, 5, 9));
        assert_ne!(sample_vectors(&law, 8, 5, 9), sample_vectors(&law, 8, 5, 10));
        assert!(sample_vectors(&law, 8, 5, 9).iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn gaussian_sample_moments() {
        let n = 1_000_000;
        let xi = sample_vectors(&SubgaussianLaw::gaussian(), 1000, 1000, 4);
        let mean: f64 = xi.iter().sum::<f64>() / n as f64;
        let var: f64 = xi.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // se(mean) = 1/√N, se(var) = √(2/N)
        assert!(mean.abs() < 5.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt());
    }
}

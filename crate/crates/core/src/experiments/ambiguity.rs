//! Distinct rank-one matrices that only collide after the Toeplitz projection.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::DenseSymmetric;
use crate::sensing::{sample_vectors, EffectiveMatrix, SubgaussianLaw};
use crate::toeplitz::project_toeplitz;

#[derive(Debug, Clone, Serialize)]
pub struct AmbiguityReport {
    pub n: usize,
    /// `T(e_i e_iᵀ) = (1/n, 0, …, 0)` exactly for every `i`.
    pub projections_equal: bool,
    /// `<ξξᵀ, e_1e_1ᵀ> = <ξξᵀ, e_2e_2ᵀ> = 1` for every Rademacher `ξ`.
    pub raw_measurements_equal: bool,
    /// `A(T(e_1e_1ᵀ)) = A(T(e_2e_2ᵀ))`.
    pub projected_measurements_equal: bool,
}

impl AmbiguityReport {
    pub fn passed(&self) -> bool {
        self.projections_equal && self.raw_measurements_equal && self.projected_measurements_equal
    }
}

fn basis_outer(n: usize, i: usize) -> DenseSymmetric {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    DenseSymmetric::outer(&e)
}

pub fn toeplitz_ambiguity_demo(n: usize, m: usize, seed: u64) -> Result<AmbiguityReport> {
    if n < 2 || m == 0 {
        return Err(invalid("the demo needs n >= 2 and m >= 1"));
    }
    let mut want = vec![0.0; n];
    want[0] = 1.0 / n as f64;
    let projections_equal = (0..n).all(|i| project_toeplitz(&basis_outer(n, i)).values() == want.as_slice());

    let xi = sample_vectors(&SubgaussianLaw::rademacher(), n, m, seed);
    let (e1, e2) = (basis_outer(n, 0), basis_outer(n, 1));
    let raw_measurements_equal = (0..m).all(|k| {
        let x: Vec<f64> = xi.row(k).iter().copied().collect();
        let (a, b) = (e1.quadratic_form(&x), e2.quadratic_form(&x));
        a == 1.0 && b == 1.0
    });

    let a = EffectiveMatrix::from_vectors(&xi);
    let projected_measurements_equal = a.apply(&project_toeplitz(&e1))? == a.apply(&project_toeplitz(&e2))?;
    Ok(AmbiguityReport { n, projections_equal, raw_measurements_equal, projected_measurements_equal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_of_basis_outer_products() {
        assert_eq!(project_toeplitz(&basis_outer(4, 0)).values(), &[0.25, 0.0, 0.0, 0.0]);
        assert_eq!(project_toeplitz(&basis_outer(4, 2)).values(), &[0.25, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn demo_passes() {
        for n in [2, 4, 16] {
            assert!(toeplitz_ambiguity_demo(n, 20, 3).unwrap().passed());
        }
        assert!(toeplitz_ambiguity_demo(1, 20, 3).is_err());
    }
}

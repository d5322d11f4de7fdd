//! Sensing laws, rank-one sensing vectors, the measurement operator and noise.

pub mod audit;
pub mod law;
pub mod measurement;
pub mod noise;
pub mod operator;

pub use audit::{moment_audit, MomentAudit};
pub use law::{builtin_law, LawRegistry, ScalarLaw, SubgaussianLaw};
pub use measurement::MeasurementSet;
pub use noise::{draw_noise, draw_noise_scaled, NormKind};
pub use operator::{apply_operator, effective_row, sample_vectors, EffectiveMatrix};

use crate::toeplitz::{frobenius_weights, ToeplitzVector};

/// `T(ξ ξ^T)`: the Toeplitz projection of a rank-one sensing matrix.
pub fn projected_outer(xi: &[f64]) -> ToeplitzVector {
    let c = frobenius_weights(xi.len());
    let z = effective_row(xi).iter().zip(&c).map(|(r, w)| r / w).collect();
    ToeplitzVector::new(z).expect("finite sensing vector")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseSymmetric;
    use crate::rng::stream;
    use crate::toeplitz::project_toeplitz;

    #[test]
    fn projected_outer_matches_dense_projection() {
        let x = [0.5, -1.0, 2.0, 0.25, 1.5];
        let want = project_toeplitz(&DenseSymmetric::outer(&x));
        for (a, b) in projected_outer(&x).values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn projected_outer_is_unbiased() {
        let n = 6;
        let trials = 100_000;
        for law in [SubgaussianLaw::gaussian(), SubgaussianLaw::rademacher(), SubgaussianLaw::uniform()] {
            let mut rng = stream(99);
            let mut sum = vec![0.0; n];
            let mut sum_sq = vec![0.0; n];
            let mut x = vec![0.0; n];
            for _ in 0..trials {
                law.fill(&mut rng, &mut x);
                for (l, v) in projected_outer(&x).values().iter().enumerate() {
                    sum[l] += v;
                    sum_sq[l] += v * v;
                }
            }
            for l in 0..n {
                let mean = sum[l] / trials as f64;
                let var = sum_sq[l] / trials as f64 - mean * mean;
                let se = (var / trials as f64).sqrt();
                let want = if l == 0 { 1.0 } else { 0.0 };
                assert!((mean - want).abs() <= 5.0 * se + 1e-12, "{} l={l}: {mean} ± {se}", law.name());
            }
        }
    }
}

//! Small-ball probabilities `P(|ξᵀZξ| ≥ α‖Z‖_F)` over unit-Frobenius Toeplitz directions.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::{derive_seed, stream};
use crate::sensing::operator::effective_row_into;
use crate::sensing::SubgaussianLaw;
use crate::toeplitz::{frobenius_weights, ToeplitzVector};

/// Every estimated probability must clear this floor.
pub const SMALL_BALL_FLOOR: f64 = 0.01;

/// `(1 - α)² min{4/K⁸, (μ/(1 + K⁴))², 1}`.
pub fn small_ball_bound_shape(law: &SubgaussianLaw, alpha: f64) -> f64 {
    let k4 = law.k_bound().powi(4);
    let inner = (4.0 / (k4 * k4)).min((law.mu() / (1.0 + k4)).powi(2)).min(1.0);
    (1.0 - alpha).powi(2) * inner
}

/// `points` evenly spaced values covering `[-1/√n, 1/√n]`.
pub fn z0_grid(n: usize, points: usize) -> Vec<f64> {
    let edge = 1.0 / (n as f64).sqrt();
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| -edge + 2.0 * edge * k as f64 / (points - 1) as f64).collect(),
    }
}

/// A unit-Frobenius Toeplitz matrix with diagonal value `z0`; the other diagonals are
/// isotropic gaussian in the weighted metric, rescaled to the remaining norm.
pub fn direction_with_z0<R: Rng + ?Sized>(n: usize, z0: f64, rng: &mut R) -> Result<ToeplitzVector> {
    let c = frobenius_weights(n);
    let rest_sq = 1.0 - c[0] * z0 * z0;
    if rest_sq < -1e-12 {
        return Err(invalid(format!("z0 = {z0} is outside [-1/√n, 1/√n] for n = {n}")));
    }
    let mut z = vec![0.0; n];
    z[0] = z0;
    if rest_sq > 0.0 && n > 1 {
        let mut norm_sq = 0.0;
        while norm_sq == 0.0 {
            for l in 1..n {
                z[l] = rng.sample::<f64, _>(StandardNormal) / c[l].sqrt();
            }
            norm_sq = (1..n).map(|l| c[l] * z[l] * z[l]).sum();
        }
        let s = (rest_sq / norm_sq).sqrt();
        for v in &mut z[1..] {
            *v *= s;
        }
    }
    ToeplitzVector::new(z)
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallBallPoint {
    pub z0: f64,
    pub directions: usize,
    /// Smallest estimated probability over the directions.
    pub min_prob: f64,
    pub mean_prob: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallBallCurve {
    pub law: String,
    pub n: usize,
    pub alpha: f64,
    pub trials: usize,
    pub points: Vec<SmallBallPoint>,
    pub bound_shape: f64,
    /// `min_prob / bound_shape` minimized over the grid.
    pub fitted_constant: f64,
}

impl SmallBallCurve {
    pub fn min_prob(&self) -> f64 {
        self.points.iter().map(|p| p.min_prob).fold(f64::INFINITY, f64::min)
    }

    pub fn above_floor(&self) -> bool {
        self.min_prob() >= SMALL_BALL_FLOOR
    }
}

/// One proportionality constant for several curves of the same law.
pub fn fit_small_ball_constant(curves: &[SmallBallCurve]) -> f64 {
    curves.iter().map(|c| c.fitted_constant).fold(f64::INFINITY, f64::min)
}

/// Estimates the small-ball probability for `per_z0_directions` random directions at
/// each `z0`. All directions share the same `trials` sensing vectors.
pub fn small_ball_estimate(
    law: &SubgaussianLaw,
    alpha: f64,
    n: usize,
    z0_grid: &[f64],
    per_z0_directions: usize,
    trials: usize,
    seed: u64,
) -> Result<SmallBallCurve> {
    if z0_grid.is_empty() {
        return Err(invalid("z0 grid is empty"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n == 0 || per_z0_directions == 0 || trials == 0 {
        return Err(invalid("n, directions and trials must be positive"));
    }
    let mut dir_rng = stream(derive_seed(seed, 1));
    let mut dirs = Vec::with_capacity(z0_grid.len() * per_z0_directions);
    for &z0 in z0_grid {
        for _ in 0..per_z0_directions {
            dirs.push(direction_with_z0(n, z0, &mut dir_rng)?);
        }
    }

    // Directions have unit Frobenius norm, so the event is |q| ≥ α.
    let mut hits = vec![0usize; dirs.len()];
    let mut rng = stream(derive_seed(seed, 0));
    let mut xi = vec![0.0; n];
    let mut row = vec![0.0; n];
    for _ in 0..trials {
        law.fill(&mut rng, &mut xi);
        effective_row_into(&xi, &mut row);
        for (h, z) in hits.iter_mut().zip(&dirs) {
            let q: f64 = row.iter().zip(z.values()).map(|(a, b)| a * b).sum();
            if q.abs() >= alpha {
                *h += 1;
            }
        }
    }

    let points: Vec<SmallBallPoint> = z0_grid
        .iter()
        .zip(hits.chunks(per_z0_directions))
        .map(|(&z0, chunk)| {
            let probs = chunk.iter().map(|&h| h as f64 / trials as f64);
            SmallBallPoint {
                z0,
                directions: per_z0_directions,
                min_prob: probs.clone().fold(f64::INFINITY, f64::min),
                mean_prob: probs.sum::<f64>() / per_z0_directions as f64,
            }
        })
        .collect();
    let bound_shape = small_ball_bound_shape(law, alpha);
    let fitted_constant = points.iter().map(|p| p.min_prob / bound_shape).fold(f64::INFINITY, f64::min);
    Ok(SmallBallCurve {
        law: law.name().to_owned(),
        n,
        alpha,
        trials,
        points,
        bound_shape,
        fitted_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_shape_values() {
        // Rademacher: K⁴ = 1/ln²2, the μ branch is the smaller one.
        let k4 = 1.0 / std::f64::consts::LN_2.powi(2);
        let want = 0.75f64.powi(2) * (1.0 / (1.0 + k4)).powi(2);
        assert!((small_ball_bound_shape(&SubgaussianLaw::rademacher(), 0.25) - want).abs() < 1e-15);
        // Gaussian: 4/K⁸ = 4·(3/8)⁴ is the smaller branch.
        let want = 0.75f64.powi(2) * 4.0 * (3.0f64 / 8.0).powi(4);
        assert!((small_ball_bound_shape(&SubgaussianLaw::gaussian(), 0.25) - want).abs() < 1e-15);
    }

    #[test]
    fn grid_and_directions() {
        let g = z0_grid(16, 9);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], -0.25);
        assert_eq!(g[8], 0.25);
        assert!(g[4].abs() < 1e-16);
        let mut rng = stream(3);
        for &z0 in &g {
            let d = direction_with_z0(16, z0, &mut rng).unwrap();
            assert_eq!(d.values()[0], z0);
            assert!((d.frobenius_norm() - 1.0).abs() < 1e-12);
        }
        assert!(direction_with_z0(16, 0.3, &mut rng).is_err());
    }

    #[test]
    fn scaled_identity_is_deterministic_for_rademacher() {
        let n = 16;
        let edge = 0.25;
        let c = small_ball_estimate(&SubgaussianLaw::rademacher(), 0.5, n, &[edge], 3, 2000, 1).unwrap();
        assert_eq!(c.points[0].min_prob, 1.0);
    }

    #[test]
    fn gaussian_scaled_identity_concentrates() {
        let edge = |n: usize| 1.0 / (n as f64).sqrt();
        let small = small_ball_estimate(&SubgaussianLaw::gaussian(), 0.9, 4, &[edge(4)], 1, 20_000, 2).unwrap();
        let large = small_ball_estimate(&SubgaussianLaw::gaussian(), 0.9, 64, &[edge(64)], 1, 20_000, 2).unwrap();
        assert!(large.points[0].min_prob > small.points[0].min_prob);
        assert!(large.points[0].min_prob > 0.99);
    }

    #[test]
    fn rejects_bad_arguments() {
        let law = SubgaussianLaw::gaussian();
        assert!(small_ball_estimate(&law, 0.25, 8, &[], 1, 10, 1).is_err());
        assert!(small_ball_estimate(&law, 1.0, 8, &[0.0], 1, 10, 1).is_err());
        assert!(small_ball_estimate(&law, 0.25, 8, &[0.0], 0, 10, 1).is_err());
    }
}

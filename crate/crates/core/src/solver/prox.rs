//! Proximal maps used by the splitting solver.

use crate::error::{invalid, Result};
use crate::linalg::{sym_eig, DenseSymmetric};
use crate::sensing::NormKind;

/// `sign(λ) max(|λ| - τ, 0)`.
pub fn soft_shrink(lambda: f64, tau: f64) -> f64 {
    if lambda > tau {
        lambda - tau
    } else if lambda < -tau {
        lambda + tau
    } else {
        0.0
    }
}

/// Proximal map of `τ‖·‖_*` on symmetric matrices: soft-thresholds the eigenvalues.
pub fn svt(m: &DenseSymmetric, tau: f64) -> Result<DenseSymmetric> {
    if !(tau >= 0.0) {
        return Err(invalid(format!("threshold must be nonnegative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(m.clone());
    }
    Ok(sym_eig(m)?.reconstruct_with(|l| soft_shrink(l, tau)))
}

/// Euclidean projection onto a centered `ℓp` ball.
pub trait BallProjection: Send + Sync {
    fn norm(&self) -> NormKind;

    /// Projects `v` in place onto `{w : ‖w‖_p ≤ radius}`.
    fn project_centered(&self, v: &mut [f64], radius: f64);
}

#[derive(Debug, Clone, Copy)]
pub struct L1Ball;

#[derive(Debug, Clone, Copy)]
pub struct L2Ball;

#[derive(Debug, Clone, Copy)]
pub struct LinfBall;

impl BallProjection for L1Ball {
    fn norm(&self) -> NormKind {
        NormKind::L1
    }

    // Sort-based simplex projection of |v|, then restore signs.
    fn project_centered(&self, v: &mut [f64], radius: f64) {
        if NormKind::L1.norm(v) <= radius {
            return;
        }
        if radius == 0.0 {
            v.fill(0.0);
            return;
        }
        let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        let mut cumsum = 0.0;
        let mut theta = 0.0;
        for (j, u) in mags.iter().enumerate() {
            cumsum += u;
            let candidate = (cumsum - radius) / (j + 1) as f64;
            if u - candidate > 0.0 {
                theta = candidate;
            } else {
                break;
            }
        }
        for x in v.iter_mut() {
            *x = soft_shrink(*x, theta);
        }
    }
}

impl BallProjection for L2Ball {
    fn norm(&self) -> NormKind {
        NormKind::L2
    }

    fn project_centered(&self, v: &mut [f64], radius: f64) {
        let norm = NormKind::L2.norm(v);
        if norm <= radius {
            return;
        }
        let s = radius / norm;
        for x in v.iter_mut() {
            *x *= s;
        }
    }
}

impl BallProjection for LinfBall {
    fn norm(&self) -> NormKind {
        NormKind::Inf
    }

    fn project_centered(&self, v: &mut [f64], radius: f64) {
        for x in v.iter_mut() {
            *x = x.clamp(-radius, radius);
        }
    }
}

/// The projection registered for `p`.
pub fn ball_projection(p: NormKind) -> &'static dyn BallProjection {
    match p {
        NormKind::L1 => &L1Ball,
        NormKind::L2 => &L2Ball,
        NormKind::Inf => &LinfBall,
    }
}

/// Projection of `v` onto `{w : ‖w - center‖_p ≤ radius}`.
pub fn project_lp_ball(v: &[f64], center: &[f64], radius: f64, p: NormKind) -> Result<Vec<f64>> {
    if !(radius >= 0.0) {
        return Err(invalid(format!("ball radius must be nonnegative, got {radius}")));
    }
    if v.len() != center.len() {
        return Err(invalid("vector and center lengths differ"));
    }
    let mut out = v.to_vec();
    project_into(&mut out, center, radius, p);
    Ok(out)
}

pub(crate) fn project_into(v: &mut [f64], center: &[f64], radius: f64, p: NormKind) {
    for (x, c) in v.iter_mut().zip(center) {
        *x -= c;
    }
    ball_projection(p).project_centered(v, radius);
    for (x, c) in v.iter_mut().zip(center) {
        *x += c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::nuclear_norm;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn svt_diagonal() {
        let m = DenseSymmetric::diagonal(&[3.0, 1.0, -2.0]);
        let out = svt(&m, 1.5).unwrap();
        let want = DenseSymmetric::diagonal(&[1.5, 0.0, -0.5]);
        assert!(out.sub(&want).frobenius_norm() < 1e-12);
        assert_eq!(svt(&m, 0.0).unwrap(), m);
        assert!(svt(&m, -1.0).is_err());
    }

    fn random_symmetric(n: usize, rng: &mut impl Rng, scale: f64) -> DenseSymmetric {
        DenseSymmetric::from_fn(n, |_, _| scale * rng.random_range(-1.0..1.0))
    }

    #[test]
    fn svt_minimizes_prox_objective() {
        let mut rng = stream(21);
        for _ in 0..10 {
            let m = random_symmetric(8, &mut rng, 2.0);
            let tau = rng.random_range(0.1..1.5);
            let y = svt(&m, tau).unwrap();
            let obj = |y: &DenseSymmetric| tau * nuclear_norm(y) + 0.5 * y.sub(&m).frobenius_norm().powi(2);
            let best = obj(&y);
            for scale in [1e-1, 1e-2, 1e-3] {
                for _ in 0..20 {
                    let probe = y.add(&random_symmetric(8, &mut rng, scale));
                    assert!(obj(&probe) >= best - 1e-12);
                }
            }
        }
    }

    #[test]
    fn svt_is_nonexpansive() {
        let mut rng = stream(22);
        for _ in 0..50 {
            let a = random_symmetric(6, &mut rng, 3.0);
            let b = random_symmetric(6, &mut rng, 3.0);
            let d = svt(&a, 0.7).unwrap().sub(&svt(&b, 0.7).unwrap()).frobenius_norm();
            assert!(d <= a.sub(&b).frobenius_norm() + 1e-12);
        }
    }

    #[test]
    fn ball_examples() {
        let out = project_lp_ball(&[2.0, -0.5], &[0.0, 0.0], 1.0, NormKind::Inf).unwrap();
        assert_eq!(out, vec![1.0, -0.5]);
        let out = project_lp_ball(&[3.0, 0.0], &[0.0, 0.0], 1.0, NormKind::L1).unwrap();
        assert_eq!(out, vec![1.0, 0.0]);
        let out = project_lp_ball(&[3.0, 4.0], &[0.0, 0.0], 1.0, NormKind::L2).unwrap();
        assert!((out[0] - 0.6).abs() < 1e-15 && (out[1] - 0.8).abs() < 1e-15);
        let out = project_lp_ball(&[3.0, 4.0], &[1.0, 1.0], 0.0, NormKind::L1).unwrap();
        assert_eq!(out, vec![1.0, 1.0]);
        assert!(project_lp_ball(&[1.0], &[0.0], -1.0, NormKind::L2).is_err());
    }

    #[test]
    fn l1_projection_is_nearest_point() {
        // Compare against a brute-force search over the boundary along random directions.
        let mut rng = stream(23);
        for _ in 0..20 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let c = vec![0.0; 4];
            let w = project_lp_ball(&v, &c, 1.0, NormKind::L1).unwrap();
            let dist = NormKind::L2.distance(&v, &w);
            for _ in 0..2000 {
                let mut q: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = NormKind::L1.norm(&q);
                if s > 1.0 {
                    q.iter_mut().for_each(|x| *x /= s);
                }
                assert!(NormKind::L2.distance(&v, &q) >= dist - 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn projections_feasible_and_idempotent(
            v in proptest::collection::vec(-10.0f64..10.0, 1..30),
            shift in -5.0f64..5.0,
            radius in 0.0f64..8.0,
        ) {
            let center: Vec<f64> = v.iter().map(|x| x * 0.3 + shift).collect();
            for p in NormKind::ALL {
                let once = project_lp_ball(&v, &center, radius, p).unwrap();
                prop_assert!(p.distance(&once, &center) <= radius * (1.0 + 1e-12) + 1e-12);
                let twice = project_lp_ball(&once, &center, radius, p).unwrap();
                prop_assert!(NormKind::Inf.distance(&once, &twice) <= 1e-12);
            }
        }
    }
}

//! Spectral-norm deviation of `Σ_k T(ξ_k ξ_kᵀ)` from its mean `m I`.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::spectral_norm;
use crate::rng::{derive_seed, stream};
use crate::sensing::operator::effective_row_into;
use crate::sensing::SubgaussianLaw;
use crate::toeplitz::{frobenius_weights, opnorm_upper, ToeplitzVector};

use super::stats::{Accumulator, Estimate};

pub const MIN_SPECNORM_TRIALS: usize = 30;

/// `Σ_k T(ξ_k ξ_kᵀ) - m e_0` for `m` vectors drawn from `rng`, optionally signed by `signs`.
fn summed_projection(law: &SubgaussianLaw, n: usize, m: usize, rng: &mut dyn RngCore, signs: Option<&[f64]>) -> Vec<f64> {
    let mut sum = vec![0.0; n];
    let mut xi = vec![0.0; n];
    let mut row = vec![0.0; n];
    for k in 0..m {
        law.fill(rng, &mut xi);
        effective_row_into(&xi, &mut row);
        let s = signs.map_or(1.0, |e| e[k]);
        for (acc, r) in sum.iter_mut().zip(&row) {
            *acc += s * r;
        }
    }
    let c = frobenius_weights(n);
    for (v, w) in sum.iter_mut().zip(&c) {
        *v /= w;
    }
    sum
}

/// The deviation vector `Σ_k T(ξ_k ξ_kᵀ) - m I` for one draw.
pub fn deviation_vector(law: &SubgaussianLaw, n: usize, m: usize, seed: u64) -> ToeplitzVector {
    let mut rng = stream(seed);
    let mut z = summed_projection(law, n, m, &mut rng, None);
    if n > 0 {
        z[0] -= m as f64;
    }
    ToeplitzVector::new(z).expect("finite sensing draws")
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecNormEstimate {
    pub n: usize,
    pub m: usize,
    pub law: String,
    pub k_bound: f64,
    pub trials: usize,
    /// Mean exact spectral norm of the deviation.
    pub mean_dev: f64,
    pub std_err: f64,
    /// Mean circulant upper bound of the deviation.
    pub mean_upper: f64,
    pub std_err_upper: f64,
    /// Trials where the circulant bound fell below the exact norm.
    pub dominance_failures: usize,
}

fn check_shape(n: usize, trials: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if trials < MIN_SPECNORM_TRIALS {
        return Err(invalid(format!("need at least {MIN_SPECNORM_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// Trial `t` uses the stream `derive_seed(seed, t)`; results are reduced in trial order.
pub fn specnorm_deviation(law: &SubgaussianLaw, n: usize, m: usize, trials: usize, seed: u64) -> Result<SpecNormEstimate> {
    check_shape(n, trials)?;
    let per_trial: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let dev = deviation_vector(law, n, m, derive_seed(seed, t));
            (spectral_norm(&dev.to_dense()), opnorm_upper(&dev))
        })
        .collect();
    let exact: Accumulator = per_trial.iter().map(|p| p.0).collect();
    let upper: Accumulator = per_trial.iter().map(|p| p.1).collect();
    let dominance_failures = per_trial.iter().filter(|(e, u)| *u < *e * (1.0 - 1e-10) - 1e-12).count();
    Ok(SpecNormEstimate {
        n,
        m,
        law: law.name().to_owned(),
        k_bound: law.k_bound(),
        trials,
        mean_dev: exact.mean(),
        std_err: exact.std_err(),
        mean_upper: upper.mean(),
        std_err_upper: upper.std_err(),
        dominance_failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusEstimate {
    pub n: usize,
    pub m: usize,
    pub law: String,
    pub trials: usize,
    pub estimate: Estimate,
}

/// `E‖(1/m) Σ_k ε_k T(ξ_k ξ_kᵀ)‖_op` with independent Rademacher signs `ε_k`.
pub fn symmetrized_radius(law: &SubgaussianLaw, n: usize, m: usize, trials: usize, seed: u64) -> Result<RadiusEstimate> {
    check_shape(n, trials)?;
    if m == 0 {
        return Err(invalid("the symmetrized radius needs m >= 1"));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, t);
            let mut sign_rng = stream(derive_seed(trial_seed, 1));
            let signs: Vec<f64> = (0..m).map(|_| if sign_rng.next_u32() & 1 == 0 { -1.0 } else { 1.0 }).collect();
            let mut rng = stream(trial_seed);
            let z = summed_projection(law, n, m, &mut rng, Some(&signs));
            let t = ToeplitzVector::new(z.into_iter().map(|v| v / m as f64).collect()).expect("finite");
            spectral_norm(&t.to_dense())
        })
        .collect();
    let acc: Accumulator = values.into_iter().collect();
    Ok(RadiusEstimate { n, m, law: law.name().to_owned(), trials, estimate: acc.estimate() })
}

/// `radius ≤ 2·mean_dev/m` up to `k` combined standard errors.
pub fn within_symmetrization_bound(radius: &RadiusEstimate, dev: &SpecNormEstimate, k: f64) -> bool {
    let m = dev.m as f64;
    let se = (radius.estimate.std_err.powi(2) + (2.0 * dev.std_err / m).powi(2)).sqrt();
    radius.estimate.mean <= 2.0 * dev.mean_dev / m + k * se
}

/// `K²(√m ln n + (ln n)^{3/2})`.
pub fn scaling_model(n: usize, m: usize, k_bound: f64) -> f64 {
    let ln = (n as f64).ln();
    k_bound * k_bound * ((m as f64).sqrt() * ln + ln.powf(1.5))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    /// Least-squares `C` in `mean_dev ≈ C·model` (through the origin).
    pub c: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ratio_max / ratio_min`.
    pub spread: f64,
    /// `(n, m, observed / model)` per estimate.
    pub ratios: Vec<(usize, usize, f64)>,
}

pub fn scaling_fit(estimates: &[SpecNormEstimate]) -> Result<ScalingFit> {
    let distinct = |f: fn(&SpecNormEstimate) -> usize| {
        let mut v: Vec<usize> = estimates.iter().map(f).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    if distinct(|e| e.n) < 3 || distinct(|e| e.m) < 3 {
        return Err(invalid("scaling fit needs at least 3 distinct values of both n and m"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut ratios = Vec::with_capacity(estimates.len());
    for e in estimates {
        let x = scaling_model(e.n, e.m, e.k_bound);
        if !(x > 0.0) {
            return Err(invalid(format!("model vanishes at n = {}, m = {}", e.n, e.m)));
        }
        num += x * e.mean_dev;
        den += x * x;
        ratios.push((e.n, e.m, e.mean_dev / x));
    }
    let ratio_min = ratios.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let ratio_max = ratios.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(ScalingFit { c: num / den, ratio_min, ratio_max, spread: ratio_max / ratio_min, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseSymmetric;
    use crate::sensing::{projected_outer, sample_vectors};

    #[test]
    fn zero_measurements_give_zero() {
        let e = specnorm_deviation(&SubgaussianLaw::gaussian(), 8, 0, 30, 1).unwrap();
        assert_eq!(e.mean_dev, 0.0);
        assert_eq!(e.mean_upper, 0.0);
    }

    #[test]
    fn deviation_matches_dense_sum() {
        let (n, m) = (7, 5);
        let law = SubgaussianLaw::uniform();
        let dev = deviation_vector(&law, n, m, 42);
        let xi = sample_vectors(&law, n, m, 42);
        let mut want = DenseSymmetric::identity(n).scaled(-(m as f64));
        for k in 0..m {
            let row: Vec<f64> = xi.row(k).iter().copied().collect();
            want = want.add(&projected_outer(&row).to_dense());
        }
        assert!(dev.to_dense().sub(&want).frobenius_norm() < 1e-12);
    }

    #[test]
    fn circulant_bound_dominates() {
        for law in [SubgaussianLaw::gaussian(), SubgaussianLaw::rademacher()] {
            let e = specnorm_deviation(&law, 24, 6, 40, 3).unwrap();
            assert_eq!(e.dominance_failures, 0);
            assert!(e.mean_upper >= e.mean_dev);
        }
    }

    #[test]
    fn single_sign_radius_is_projection_norm() {
        let law = SubgaussianLaw::gaussian();
        let n = 10;
        let r = symmetrized_radius(&law, n, 1, 30, 9).unwrap();
        let direct: Accumulator = (0..30u64)
            .map(|t| {
                let mut rng = stream(derive_seed(9, t));
                let mut xi = vec![0.0; n];
                law.fill(&mut rng, &mut xi);
                spectral_norm(&projected_outer(&xi).to_dense())
            })
            .collect();
        assert!((r.estimate.mean - direct.mean()).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_synthetic_model() {
        let mut est = Vec::new();
        for n in [16, 32, 64] {
            for m in [1, 4, 16] {
                est.push(SpecNormEstimate {
                    n,
                    m,
                    law: "gaussian".into(),
                    k_bound: 1.5,
                    trials: 30,
                    mean_dev: 2.5 * scaling_model(n, m, 1.5),
                    std_err: 0.0,
                    mean_upper: 0.0,
                    std_err_upper: 0.0,
                    dominance_failures: 0,
                });
            }
        }
        let fit = scaling_fit(&est).unwrap();
        assert!((fit.c - 2.5).abs() < 1e-12);
        assert!((fit.spread - 1.0).abs() < 1e-12);
        assert!(scaling_fit(&est[..3]).is_err());
    }

    #[test]
    fn rejects_few_trials() {
        assert!(specnorm_deviation(&SubgaussianLaw::gaussian(), 8, 2, 10, 1).is_err());
    }
}

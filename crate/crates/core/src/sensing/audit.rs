use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::stream;

use super::law::SubgaussianLaw;

/// Multiplicative slack allowed on the subgaussian tail bound.
pub const TAIL_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
}

/// Empirical moments of a law with standard errors and a tail check.
#[derive(Debug, Clone, Serialize)]
pub struct MomentAudit {
    pub law: String,
    pub samples: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub var: f64,
    pub var_se: f64,
    pub mu_hat: f64,
    pub mu_se: f64,
    pub tail_ok: bool,
    pub tail: Vec<TailRow>,
}

impl MomentAudit {
    /// `|mean| ≤ k·se`, `|var - 1| ≤ k·se` and `|mu_hat - μ| ≤ k·se` (exact match when se = 0).
    pub fn within(&self, law: &SubgaussianLaw, k: f64) -> bool {
        let close = |est: f64, want: f64, se: f64| (est - want).abs() <= k * se + 1e-12;
        close(self.mean, 0.0, self.mean_se) && close(self.var, 1.0, self.var_se) && close(self.mu_hat, law.mu(), self.mu_se)
    }
}

/// Empirical mean, variance and fourth moment from `sample_count` draws, plus
/// `P(|ξ| > t) ≤ 2 exp(-t²/K²)` on `t = 0.5, 1.0, .., 4.0`.
pub fn moment_audit(law: &SubgaussianLaw, sample_count: usize, seed: u64) -> Result<MomentAudit> {
    if sample_count < 10_000 {
        return Err(invalid("moment audit needs at least 1e4 samples"));
    }
    let mut rng = stream(seed);
    let mut xs = vec![0.0; sample_count];
    law.fill(&mut rng, &mut xs);
    let nf = sample_count as f64;
    let avg = |f: &dyn Fn(f64) -> f64| xs.iter().map(|&x| f(x)).sum::<f64>() / nf;
    let m1 = avg(&|x| x);
    let m2 = avg(&|x| x * x);
    let m4 = avg(&|x| x.powi(4));
    let m8 = avg(&|x| x.powi(8));
    // The target mean is 0, so the second moment about it is the variance estimate.
    let var = m2;
    let tails = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
    let k2 = law.k_bound().powi(2);
    let tail: Vec<TailRow> = tails
        .iter()
        .map(|&t| TailRow {
            t,
            empirical: xs.iter().filter(|x| x.abs() > t).count() as f64 / nf,
            bound: 2.0 * (-t * t / k2).exp(),
        })
        .collect();
    let tail_ok = tail.iter().all(|r| {
        let b = r.bound.min(1.0);
        r.empirical <= b * (1.0 + TAIL_SLACK) + 5.0 * (b * (1.0 - b) / nf).sqrt()
    });
    Ok(MomentAudit {
        law: law.name().to_string(),
        samples: sample_count,
        mean: m1,
        mean_se: ((m2 - m1 * m1).max(0.0) / nf).sqrt(),
        var,
        var_se: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
        mu_hat: m4,
        mu_se: ((m8 - m4 * m4).max(0.0) / nf).sqrt(),
        tail_ok,
        tail,
    })
}

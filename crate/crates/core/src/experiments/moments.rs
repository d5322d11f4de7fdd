//! Moments and tails of the quadratic form `ξᵀ Z ξ`.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{spectral_norm, DenseSymmetric};
use crate::rng::stream;
use crate::sensing::operator::effective_row_into;
use crate::sensing::SubgaussianLaw;
use crate::toeplitz::{frobenius_weights, ToeplitzVector};

use super::stats::{deviation_in_se, Accumulator};

pub const MIN_IDENTITY_TRIALS: usize = 10_000;
pub const MIN_FOURTH_MOMENT_TRIALS: usize = 100_000;

/// Ratio cap for `E|ξᵀZξ|⁴ / ((Tr Z)⁴ + K⁸‖Z‖_F⁴)`.
///
/// For gaussian entries `E(q - Tr Z)⁴ = 12‖Z‖_F⁴ + 48 Σλ⁴ ≤ 60‖Z‖_F⁴`, and
/// `(a + b)⁴ ≤ 8(a⁴ + b⁴)` gives a ratio of at most `8·max(1, 60/K⁸) < 10`.
pub const FOURTH_MOMENT_CAP: f64 = 10.0;

/// Tail probabilities estimated from fewer exceedances are left out of the regime fits.
pub const MIN_TAIL_COUNT: usize = 20;

/// `(Tr Z)² + (μ - 1) Σ Z_ii² + 2 Σ_{i≠j} Z_ij²`.
pub fn second_moment_closed_form(mu: f64, z: &DenseSymmetric) -> f64 {
    let n = z.n();
    let mut diag_sq = 0.0;
    let mut off_sq = 0.0;
    for j in 0..n {
        for i in 0..n {
            let v = z.get(i, j);
            if i == j {
                diag_sq += v * v;
            } else {
                off_sq += v * v;
            }
        }
    }
    let tr = z.trace();
    tr * tr + (mu - 1.0) * diag_sq + 2.0 * off_sq
}

/// Empirical `E|ξᵀZξ|²` against its closed form.
#[derive(Debug, Clone, Serialize)]
pub struct MomentIdentityReport {
    pub law: String,
    pub trials: usize,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub deviation_se: f64,
}

impl MomentIdentityReport {
    pub fn within(&self, k: f64) -> bool {
        self.deviation_se <= k
    }
}

/// Draws `trials` sensing vectors and hands `ξᵀ Toep(z) ξ` for every `z` to `visit`.
fn for_each_form(
    law: &SubgaussianLaw,
    zs: &[ToeplitzVector],
    trials: usize,
    seed: u64,
    mut visit: impl FnMut(usize, f64),
) -> Result<()> {
    let n = match zs.first() {
        Some(z) => z.n(),
        None => return Err(invalid("need at least one matrix")),
    };
    if zs.iter().any(|z| z.n() != n) {
        return Err(invalid("all matrices must share one dimension"));
    }
    let mut rng = stream(seed);
    let mut xi = vec![0.0; n];
    let mut row = vec![0.0; n];
    for _ in 0..trials {
        law.fill(&mut rng, &mut xi);
        effective_row_into(&xi, &mut row);
        for (idx, z) in zs.iter().enumerate() {
            let q: f64 = row.iter().zip(z.values()).map(|(a, b)| a * b).sum();
            visit(idx, q);
        }
    }
    Ok(())
}

/// The second-moment identity for every matrix in `zs`, sharing one sample.
pub fn moment_identity_batch(
    law: &SubgaussianLaw,
    zs: &[ToeplitzVector],
    trials: usize,
    seed: u64,
) -> Result<Vec<MomentIdentityReport>> {
    if trials < MIN_IDENTITY_TRIALS {
        return Err(invalid(format!("need at least {MIN_IDENTITY_TRIALS} trials, got {trials}")));
    }
    let mut acc = vec![Accumulator::default(); zs.len()];
    for_each_form(law, zs, trials, seed, |idx, q| acc[idx].push(q * q))?;
    Ok(zs
        .iter()
        .zip(acc)
        .map(|(z, a)| {
            let closed_form = second_moment_closed_form(law.mu(), &z.to_dense());
            MomentIdentityReport {
                law: law.name().to_owned(),
                trials,
                closed_form,
                empirical: a.mean(),
                std_err: a.std_err(),
                deviation_se: deviation_in_se(a.mean(), closed_form, a.std_err()),
            }
        })
        .collect())
}

pub fn moment_identity_check(
    law: &SubgaussianLaw,
    t: &ToeplitzVector,
    trials: usize,
    seed: u64,
) -> Result<MomentIdentityReport> {
    let mut out = moment_identity_batch(law, std::slice::from_ref(t), trials, seed)?;
    Ok(out.remove(0))
}

/// A unit-Frobenius Toeplitz matrix with isotropic gaussian coordinates in the weighted metric.
pub fn random_unit_toeplitz<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ToeplitzVector {
    let c = frobenius_weights(n);
    loop {
        let z: Vec<f64> = c.iter().map(|w| rng.sample::<f64, _>(rand_distr::StandardNormal) / w.sqrt()).collect();
        let t = ToeplitzVector::new(z).expect("finite draw");
        let norm = t.frobenius_norm();
        if norm > 0.0 {
            return t.scaled(1.0 / norm);
        }
    }
}

/// `I/√n` followed by `count - 1` random unit-Frobenius Toeplitz matrices.
pub fn fourth_moment_family(n: usize, count: usize, seed: u64) -> Vec<ToeplitzVector> {
    let mut rng = stream(seed);
    let mut out = Vec::with_capacity(count);
    if count > 0 {
        out.push(ToeplitzVector::identity(n).scaled(1.0 / (n as f64).sqrt()));
    }
    while out.len() < count {
        out.push(random_unit_toeplitz(n, &mut rng));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FourthMomentReport {
    pub law: String,
    pub trials: usize,
    /// Empirical `E|ξᵀZξ|⁴ / ((Tr Z)⁴ + K⁸‖Z‖_F⁴)` per matrix; 0 for `Z = 0`.
    pub ratios: Vec<f64>,
    /// Largest ratio over the family.
    pub fitted_c: f64,
    pub bounded: bool,
}

pub fn fourth_moment_bound_check(
    law: &SubgaussianLaw,
    zs: &[ToeplitzVector],
    trials: usize,
    seed: u64,
) -> Result<FourthMomentReport> {
    if trials < MIN_FOURTH_MOMENT_TRIALS {
        return Err(invalid(format!("need at least {MIN_FOURTH_MOMENT_TRIALS} trials, got {trials}")));
    }
    let mut acc = vec![Accumulator::default(); zs.len()];
    for_each_form(law, zs, trials, seed, |idx, q| acc[idx].push(q.powi(4)))?;
    let k8 = law.k_bound().powi(8);
    let ratios: Vec<f64> = zs
        .iter()
        .zip(&acc)
        .map(|(z, a)| {
            let tr = z.n() as f64 * z.values()[0];
            let rhs = tr.powi(4) + k8 * z.frobenius_norm_sq().powi(2);
            if rhs == 0.0 {
                0.0
            } else {
                a.mean() / rhs
            }
        })
        .collect();
    let fitted_c = ratios.iter().copied().fold(0.0, f64::max);
    Ok(FourthMomentReport {
        law: law.name().to_owned(),
        trials,
        bounded: fitted_c <= FOURTH_MOMENT_CAP,
        ratios,
        fitted_c,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailPoint {
    pub t: f64,
    /// Empirical `P(|ξᵀZξ - Tr Z| > t)`.
    pub empirical: f64,
    pub exceedances: usize,
    /// `min(t²/(K⁴‖Z‖_F²), t/(K²‖Z‖_op))`.
    pub shape: f64,
    /// `2 exp(-c·shape)` with the fitted `c`.
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HansonWrightAudit {
    pub law: String,
    pub trials: usize,
    pub frobenius: f64,
    pub opnorm: f64,
    pub rows: Vec<TailPoint>,
    /// Largest `c` with `2 exp(-c·shape(t)) ≥ P̂(t)` on the grid; infinite when no exceedance occurs.
    pub fitted_c: f64,
    pub monotone: bool,
    /// `t` where the two branches of `shape` cross.
    pub switch_t: f64,
    /// Least-squares `a` in `-ln(P̂/2) ≈ a t²` below the switch.
    pub quadratic_coef: Option<f64>,
    /// Least-squares `b` in `-ln(P̂/2) ≈ b t` above the switch.
    pub linear_coef: Option<f64>,
    pub regimes_ok: bool,
}

/// Empirical tails of `ξᵀZξ` around its mean against the two-regime concentration shape.
pub fn hanson_wright_audit(
    law: &SubgaussianLaw,
    z: &DenseSymmetric,
    trials: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<HansonWrightAudit> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(invalid("t grid must be nonempty with positive finite entries"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t grid must be increasing"));
    }
    let n = z.n();
    let mean = z.trace();
    let mut rng = stream(seed);
    let mut xi = vec![0.0; n];
    let mut dev: Vec<f64> = (0..trials)
        .map(|_| {
            law.fill(&mut rng, &mut xi);
            (z.quadratic_form(&xi) - mean).abs()
        })
        .collect();
    dev.sort_by(f64::total_cmp);

    let k2 = law.k_bound().powi(2);
    let frob = z.frobenius_norm();
    let op = spectral_norm(z);
    let shape = |t: f64| {
        let quad = if frob > 0.0 { t * t / (k2 * k2 * frob * frob) } else { f64::INFINITY };
        let lin = if op > 0.0 { t / (k2 * op) } else { f64::INFINITY };
        quad.min(lin)
    };

    let mut rows: Vec<TailPoint> = t_grid
        .iter()
        .map(|&t| {
            let exceedances = trials - dev.partition_point(|d| *d <= t);
            TailPoint { t, empirical: exceedances as f64 / trials as f64, exceedances, shape: shape(t), bound: 0.0 }
        })
        .collect();
    let fitted_c = rows
        .iter()
        .filter(|r| r.exceedances > 0)
        .map(|r| -(r.empirical / 2.0).ln() / r.shape)
        .fold(f64::INFINITY, f64::min);
    for r in &mut rows {
        r.bound = if fitted_c.is_finite() { 2.0 * (-fitted_c * r.shape).exp() } else { 0.0 };
    }
    let monotone = rows.windows(2).all(|w| w[1].empirical <= w[0].empirical);

    let switch_t = if op > 0.0 { k2 * frob * frob / op } else { f64::INFINITY };
    let fit = |below: bool, power: i32| {
        let (mut num, mut den, mut used) = (0.0, 0.0, 0);
        for r in rows.iter().filter(|r| r.exceedances >= MIN_TAIL_COUNT && (r.t <= switch_t) == below) {
            let x = r.t.powi(power);
            num += x * -(r.empirical / 2.0).ln();
            den += x * x;
            used += 1;
        }
        (used >= 2).then(|| num / den)
    };
    let quadratic_coef = fit(true, 2);
    let linear_coef = fit(false, 1);
    let regimes_ok = monotone
        && fitted_c > 0.0
        && quadratic_coef.is_none_or(|a| a > 0.0)
        && linear_coef.is_none_or(|b| b > 0.0);

    Ok(HansonWrightAudit {
        law: law.name().to_owned(),
        trials,
        frobenius: frob,
        opnorm: op,
        rows,
        fitted_c,
        monotone,
        switch_t,
        quadratic_coef,
        linear_coef,
        regimes_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(second_moment_closed_form(3.0, &DenseSymmetric::identity(2)), 8.0);
        let n = 5;
        assert_eq!(second_moment_closed_form(1.0, &DenseSymmetric::identity(n)), 25.0);
        // Off-diagonal mass counts twice for every law.
        let z = ToeplitzVector::new(vec![0.0, 1.0]).unwrap().to_dense();
        assert_eq!(second_moment_closed_form(1.0, &z), 4.0);
    }

    #[test]
    fn rademacher_identity_is_exact() {
        let law = SubgaussianLaw::rademacher();
        let r = moment_identity_check(&law, &ToeplitzVector::identity(6), MIN_IDENTITY_TRIALS, 1).unwrap();
        assert_eq!(r.empirical, 36.0);
        assert_eq!(r.std_err, 0.0);
        assert_eq!(r.deviation_se, 0.0);
    }

    #[test]
    fn gaussian_chi_square_moment() {
        let law = SubgaussianLaw::gaussian();
        let r = moment_identity_check(&law, &ToeplitzVector::identity(2), 200_000, 2).unwrap();
        assert_eq!(r.closed_form, 8.0);
        assert!(r.within(5.0), "{r:?}");
    }

    #[test]
    fn identity_rejects_small_samples() {
        let law = SubgaussianLaw::gaussian();
        assert!(moment_identity_check(&law, &ToeplitzVector::identity(2), 100, 1).is_err());
    }

    #[test]
    fn unit_toeplitz_draws() {
        let fam = fourth_moment_family(9, 5, 3);
        assert_eq!(fam.len(), 5);
        for z in &fam {
            assert!((z.frobenius_norm() - 1.0).abs() < 1e-12);
        }
        assert!((fam[0].values()[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fourth_moment_zero_and_identity() {
        let law = SubgaussianLaw::gaussian();
        let zs = vec![ToeplitzVector::zeros(4), ToeplitzVector::identity(4)];
        let r = fourth_moment_bound_check(&law, &zs, MIN_FOURTH_MOMENT_TRIALS, 4).unwrap();
        assert_eq!(r.ratios[0], 0.0);
        // E(χ²_4)^4 = 4·6·8·10 = 1920; denominator 4⁴ + (8/3)⁴·16.
        let want = 1920.0 / (256.0 + (8.0f64 / 3.0).powi(4) * 16.0);
        assert!((r.ratios[1] / want - 1.0).abs() < 0.05, "{} vs {want}", r.ratios[1]);
        assert!(r.bounded);
    }

    #[test]
    fn tails_of_degenerate_forms_vanish() {
        let grid = [0.5, 1.0, 2.0];
        let zero = hanson_wright_audit(&SubgaussianLaw::gaussian(), &DenseSymmetric::zeros(4), 1000, &grid, 1).unwrap();
        assert!(zero.rows.iter().all(|r| r.empirical == 0.0));
        let ident =
            hanson_wright_audit(&SubgaussianLaw::rademacher(), &DenseSymmetric::identity(4), 1000, &grid, 1).unwrap();
        assert!(ident.rows.iter().all(|r| r.empirical == 0.0));
        assert!(ident.fitted_c.is_infinite());
    }

    #[test]
    fn gaussian_tail_is_monotone_with_positive_constant() {
        let mut rng = stream(8);
        let z = random_unit_toeplitz(12, &mut rng).to_dense();
        let grid: Vec<f64> = (1..=16).map(|k| 0.5 * k as f64).collect();
        let a = hanson_wright_audit(&SubgaussianLaw::gaussian(), &z, 100_000, &grid, 9).unwrap();
        assert!(a.monotone);
        assert!(a.fitted_c > 0.0 && a.fitted_c.is_finite());
        assert!(a.regimes_ok);
        for r in &a.rows {
            assert!(r.empirical <= r.bound + 1e-15);
        }
    }

    #[test]
    fn bad_grids_rejected() {
        let z = DenseSymmetric::identity(2);
        let law = SubgaussianLaw::gaussian();
        assert!(hanson_wright_audit(&law, &z, 10, &[], 1).is_err());
        assert!(hanson_wright_audit(&law, &z, 10, &[2.0, 1.0], 1).is_err());
        assert!(hanson_wright_audit(&law, &z, 10, &[-1.0], 1).is_err());
    }
}

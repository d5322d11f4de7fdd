//! Invariant checks run by `verify`, registered by name.

use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{spectral_norm, sym_eig, DenseSymmetric};
use crate::rng::{derive_seed, stream};
use crate::sensing::{moment_audit, projected_outer, NormKind, SubgaussianLaw};
use crate::solver::{project_lp_ball, svt};
use crate::toeplitz::{
    circulant_embed, diagonal_sums, opnorm_upper, project_toeplitz, spike_toeplitz, Spike, SpikeModel,
    ToeplitzVector,
};

use super::ambiguity::toeplitz_ambiguity_demo;
use super::descent::{descent_bound_check, descent_cone_sampler};
use super::moments::{fourth_moment_family, moment_identity_batch};
use super::stats::{deviation_in_se, Accumulator};

/// Seed for every check; `verify` is deterministic.
pub const VERIFY_SEED: u64 = 0x7E57_5EED;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;

    /// `quick` shrinks sample sizes; tolerances stay the same.
    fn run(&self, quick: bool) -> Result<(bool, String)>;
}

pub struct CheckRegistry {
    checks: Vec<Box<dyn Check>>,
}

impl CheckRegistry {
    pub fn empty() -> Self {
        Self { checks: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ProjectionIdentity));
        r.register(Box::new(AdjointIdentity));
        r.register(Box::new(CirculantDominance));
        r.register(Box::new(LawMoments));
        r.register(Box::new(ProjectionUnbiased));
        r.register(Box::new(MomentIdentity));
        r.register(Box::new(ProxIdentities));
        r.register(Box::new(BallProjections));
        r.register(Box::new(DescentCertificates));
        r.register(Box::new(ToeplitzAmbiguity));
        r
    }

    /// Replaces any check with the same name.
    pub fn register(&mut self, check: Box<dyn Check>) {
        self.checks.retain(|c| c.name() != check.name());
        self.checks.push(check);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.checks.iter().map(|c| c.name())
    }

    /// Runs every check in registration order. A check that errors counts as failed.
    pub fn run_all(&self, quick: bool) -> Vec<CheckOutcome> {
        self.checks
            .iter()
            .map(|c| {
                let (passed, detail) = match c.run(quick) {
                    Ok(r) => r,
                    Err(e) => (false, format!("error: {e}")),
                };
                CheckOutcome { name: c.name().to_owned(), passed, detail }
            })
            .collect()
    }
}

fn builtin_laws() -> [SubgaussianLaw; 3] {
    [SubgaussianLaw::gaussian(), SubgaussianLaw::rademacher(), SubgaussianLaw::uniform()]
}

fn random_symmetric(n: usize, rng: &mut impl Rng) -> DenseSymmetric {
    DenseSymmetric::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_toeplitz(n: usize, rng: &mut impl Rng) -> ToeplitzVector {
    ToeplitzVector::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite")
}

struct ProjectionIdentity;

impl Check for ProjectionIdentity {
    fn name(&self) -> &'static str {
        "projection-identity"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let sizes: &[usize] = if quick { &[2, 4, 16] } else { &[2, 4, 16, 256] };
        let mut exact = true;
        for &n in sizes {
            let mut want = vec![0.0; n];
            want[0] = 1.0 / n as f64;
            for i in 0..n {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                exact &= project_toeplitz(&DenseSymmetric::outer(&e)).values() == want.as_slice();
            }
        }
        let mut rng = stream(derive_seed(VERIFY_SEED, 1));
        let mut worst_orth = 0.0f64;
        let mut idempotent = true;
        for _ in 0..if quick { 20 } else { 100 } {
            let n = rng.random_range(2..24);
            let m = random_symmetric(n, &mut rng);
            let resid = m.sub(&project_toeplitz(&m).to_dense());
            let t = random_toeplitz(n, &mut rng);
            worst_orth = worst_orth.max(resid.dot(&t.to_dense()).abs());
            idempotent &= project_toeplitz(&t.to_dense()) == t;
        }
        let passed = exact && idempotent && worst_orth <= 1e-9;
        Ok((passed, format!("basis exact={exact} idempotent={idempotent} max|<M-T(M),T>|={worst_orth:.2e}")))
    }
}

struct AdjointIdentity;

impl Check for AdjointIdentity {
    fn name(&self) -> &'static str {
        "adjoint-identity"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let mut rng = stream(derive_seed(VERIFY_SEED, 2));
        let mut worst = 0.0f64;
        for _ in 0..if quick { 20 } else { 100 } {
            let n = rng.random_range(1..20);
            let m = random_symmetric(n, &mut rng);
            let t = random_toeplitz(n, &mut rng);
            let lhs = m.dot(&t.to_dense());
            let rhs: f64 = diagonal_sums(&m).iter().zip(t.values()).map(|(a, b)| a * b).sum();
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
        Ok((worst <= 1e-12, format!("max relative gap {worst:.2e}")))
    }
}

struct CirculantDominance;

impl Check for CirculantDominance {
    fn name(&self) -> &'static str {
        "circulant-dominance"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let mut rng = stream(derive_seed(VERIFY_SEED, 3));
        let (count, max_n) = if quick { (30, 64) } else { (200, 256) };
        let mut violations = 0;
        let mut worst_trace = 0.0f64;
        for _ in 0..count {
            let n = rng.random_range(1..=max_n);
            let t = random_toeplitz(n, &mut rng);
            if opnorm_upper(&t) < spectral_norm(&t.to_dense()) * (1.0 - 1e-12) {
                violations += 1;
            }
            let spec = circulant_embed(&t);
            let want = (2 * n - 1) as f64 * t.values()[0];
            let sum: f64 = spec.lambda.iter().sum();
            worst_trace = worst_trace.max((sum - want).abs() / spec.max_abs().max(1.0) / (2 * n - 1) as f64);
        }
        Ok((
            violations == 0 && worst_trace <= 1e-10,
            format!("{count} vectors, {violations} violations, trace gap {worst_trace:.2e}"),
        ))
    }
}

struct LawMoments;

impl Check for LawMoments {
    fn name(&self) -> &'static str {
        "law-moments"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let samples = if quick { 100_000 } else { 1_000_000 };
        let mut passed = true;
        let mut detail = String::new();
        for (i, law) in builtin_laws().iter().enumerate() {
            let a = moment_audit(law, samples, derive_seed(VERIFY_SEED, 10 + i as u64))?;
            let ok = a.within(law, 5.0) && a.tail_ok;
            passed &= ok;
            let _ = write!(detail, "{}: mu_hat={:.4} tail_ok={} ", law.name(), a.mu_hat, a.tail_ok);
        }
        Ok((passed, detail.trim_end().to_owned()))
    }
}

struct ProjectionUnbiased;

impl Check for ProjectionUnbiased {
    fn name(&self) -> &'static str {
        "projection-unbiased"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let n = 8;
        let trials = if quick { 20_000 } else { 100_000 };
        let mut worst = 0.0f64;
        for (i, law) in builtin_laws().iter().enumerate() {
            let mut rng = stream(derive_seed(VERIFY_SEED, 20 + i as u64));
            let mut acc = vec![Accumulator::default(); n];
            let mut x = vec![0.0; n];
            for _ in 0..trials {
                law.fill(&mut rng, &mut x);
                for (a, v) in acc.iter_mut().zip(projected_outer(&x).values()) {
                    a.push(*v);
                }
            }
            for (l, a) in acc.iter().enumerate() {
                let want = if l == 0 { 1.0 } else { 0.0 };
                worst = worst.max(deviation_in_se(a.mean(), want, a.std_err()));
            }
        }
        Ok((worst <= 5.0, format!("largest deviation {worst:.2} se")))
    }
}

struct MomentIdentity;

impl Check for MomentIdentity {
    fn name(&self) -> &'static str {
        "moment-identity"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let (n, count, trials) = if quick { (8, 5, 100_000) } else { (16, 20, 1_000_000) };
        let zs = fourth_moment_family(n, count, derive_seed(VERIFY_SEED, 30));
        let mut worst = 0.0f64;
        for (i, law) in builtin_laws().iter().enumerate() {
            for r in moment_identity_batch(law, &zs, trials, derive_seed(VERIFY_SEED, 31 + i as u64))? {
                worst = worst.max(r.deviation_se);
            }
        }
        Ok((worst <= 5.0, format!("{} matrices x 3 laws, largest deviation {worst:.2} se", zs.len())))
    }
}

struct ProxIdentities;

impl Check for ProxIdentities {
    fn name(&self) -> &'static str {
        "prox-identities"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let diag = svt(&DenseSymmetric::diagonal(&[3.0, 1.0, -2.0]), 1.5)?;
        let want = DenseSymmetric::diagonal(&[1.5, 0.0, -0.5]);
        let diag_gap = diag.sub(&want).frobenius_norm();
        let mut rng = stream(derive_seed(VERIFY_SEED, 40));
        let mut expansions = 0;
        let mut worst_eig = 0.0f64;
        for _ in 0..if quick { 50 } else { 500 } {
            let n = rng.random_range(2..12);
            let a = random_symmetric(n, &mut rng).scaled(3.0);
            let b = random_symmetric(n, &mut rng).scaled(3.0);
            let tau = rng.random_range(0.0..2.0);
            let d = svt(&a, tau)?.sub(&svt(&b, tau)?).frobenius_norm();
            if d > a.sub(&b).frobenius_norm() + 1e-12 {
                expansions += 1;
            }
            let eig = sym_eig(&a)?;
            worst_eig = worst_eig.max(eig.reconstruct().sub(&a).frobenius_norm() / a.frobenius_norm());
        }
        let passed = diag_gap <= 1e-12 && expansions == 0 && worst_eig <= 1e-9;
        Ok((passed, format!("diag gap {diag_gap:.1e}, {expansions} expansions, eig residual {worst_eig:.1e}")))
    }
}

struct BallProjections;

impl Check for BallProjections {
    fn name(&self) -> &'static str {
        "ball-projections"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let mut rng = stream(derive_seed(VERIFY_SEED, 50));
        let mut failures = 0;
        let count = if quick { 100 } else { 1000 };
        for _ in 0..count {
            let len = rng.random_range(1..30);
            let v: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
            let c: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
            let radius = rng.random_range(0.0..8.0);
            for p in NormKind::ALL {
                let once = project_lp_ball(&v, &c, radius, p)?;
                let twice = project_lp_ball(&once, &c, radius, p)?;
                let feasible = p.distance(&once, &c) <= radius * (1.0 + 1e-12) + 1e-12;
                if !feasible || NormKind::Inf.distance(&once, &twice) > 1e-12 {
                    failures += 1;
                }
            }
        }
        Ok((failures == 0, format!("{} projections, {failures} failures", 3 * count)))
    }
}

struct DescentCertificates;

impl Check for DescentCertificates {
    fn name(&self) -> &'static str {
        "descent-certificates"
    }

    fn run(&self, quick: bool) -> Result<(bool, String)> {
        let n = if quick { 16 } else { 32 };
        let count = if quick { 100 } else { 1000 };
        let models = [vec![(0.0, 1.0)], vec![(0.2, 1.0)], vec![(0.1, 1.0), (0.3, 2.0)]];
        let mut passed = true;
        let mut detail = String::new();
        for (i, spikes) in models.iter().enumerate() {
            let model = SpikeModel::new(spikes.iter().map(|&(frequency, amplitude)| Spike { frequency, amplitude }).collect())?;
            let x0 = spike_toeplitz(&model, n)?;
            let samples = descent_cone_sampler(&x0, count, derive_seed(VERIFY_SEED, 60 + i as u64))?;
            let certified = samples.iter().all(|s| s.certified());
            let report = descent_bound_check(&samples);
            passed &= certified && report.violations == 0;
            let _ = write!(detail, "r={}: max ratio {:.3} ", model.rank(), report.max_ratio);
        }
        Ok((passed, detail.trim_end().to_owned()))
    }
}

struct ToeplitzAmbiguity;

impl Check for ToeplitzAmbiguity {
    fn name(&self) -> &'static str {
        "toeplitz-ambiguity"
    }

    fn run(&self, _quick: bool) -> Result<(bool, String)> {
        let mut passed = true;
        for n in [2, 4, 16] {
            passed &= toeplitz_ambiguity_demo(n, 32, derive_seed(VERIFY_SEED, 70))?.passed();
        }
        Ok((passed, "T(e_i e_i^T) = I/n for n in {2, 4, 16}".to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let reg = CheckRegistry::builtin();
        for outcome in reg.run_all(true) {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }

    struct Broken;

    impl Check for Broken {
        fn name(&self) -> &'static str {
            "broken"
        }
        fn run(&self, _quick: bool) -> Result<(bool, String)> {
            Err(crate::Error::AllRejected(3))
        }
    }

    #[test]
    fn errors_count_as_failures_and_names_are_unique() {
        let mut reg = CheckRegistry::empty();
        reg.register(Box::new(Broken));
        reg.register(Box::new(Broken));
        assert_eq!(reg.names().count(), 1);
        let out = reg.run_all(true);
        assert!(!out[0].passed);
        assert!(out[0].detail.contains("rejected"));
    }
}

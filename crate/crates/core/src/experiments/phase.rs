//! Recovery trials over grids of `(n, spikes, m, law)` and noise levels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{derive_seed, stream};
use crate::sensing::{MeasurementSet, NormKind, SubgaussianLaw};
use crate::solver::{certify, recover_measurements, SolverConfig};
use crate::toeplitz::{spike_toeplitz, SpikeModel, ToeplitzVector};

use super::stats::{binomial_se, Accumulator};

pub const DEFAULT_SUCCESS_TOL: f64 = 1e-3;

/// Stream of the base seed reserved for ground truths.
const TRUTH_STREAM: u64 = u64::MAX;

/// A recovery grid. Every trial draws a fresh spike model with `spikes` interior
/// frequencies (rank `2·spikes`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_list: Vec<usize>,
    pub spikes_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub laws: Vec<SubgaussianLaw>,
    pub trials: usize,
    pub base_seed: u64,
    pub eta: f64,
    pub p: NormKind,
    pub success_tol: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.spikes_list.is_empty() || self.m_list.is_empty() || self.laws.is_empty() {
            return Err(invalid("grid lists must be nonempty"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.n_list.contains(&0) || self.m_list.contains(&0) || self.spikes_list.contains(&0) {
            return Err(invalid("n, m and spike counts must be positive"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("eta must be finite and nonnegative, got {}", self.eta)));
        }
        if !(self.success_tol > 0.0) {
            return Err(invalid("success_tol must be positive"));
        }
        self.solver.validate()
    }

    /// Number of trials in the grid.
    pub fn len(&self) -> usize {
        self.n_list.len() * self.spikes_list.len() * self.m_list.len() * self.laws.len() * self.trials
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid coordinates of a flat index, ordered `(n, spikes, m, law, trial)` with `trial` fastest.
    fn coords(&self, flat: usize) -> (usize, usize, usize, usize, usize) {
        let mut rest = flat;
        let trial = rest % self.trials;
        rest /= self.trials;
        let law = rest % self.laws.len();
        rest /= self.laws.len();
        let m = rest % self.m_list.len();
        rest /= self.m_list.len();
        let s = rest % self.spikes_list.len();
        (rest / self.spikes_list.len(), s, m, law, trial)
    }

    /// Seed of the ground truth shared by every `m` and law at `(n, spikes, trial)`.
    fn truth_seed(&self, n_idx: usize, s_idx: usize, trial: usize) -> u64 {
        let idx = (n_idx * self.spikes_list.len() + s_idx) * self.trials + trial;
        derive_seed(derive_seed(self.base_seed, TRUTH_STREAM), idx as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub n: usize,
    pub r: usize,
    pub spikes: usize,
    pub m: usize,
    pub law: String,
    pub trial: usize,
    pub success: bool,
    pub rel_error: f64,
    /// `(‖X̂‖_* - ‖X_0‖_*) / ‖X_0‖_*`.
    pub objective_excess: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Draws the ground truth for one trial.
pub fn random_truth(n: usize, spikes: usize, seed: u64) -> Result<(SpikeModel, ToeplitzVector)> {
    let model = SpikeModel::random(spikes, n, &mut stream(seed))?;
    let z = spike_toeplitz(&model, n)?;
    Ok((model, z))
}

fn run_trial(grid: &GridSpec, flat: usize) -> Result<TrialOutcome> {
    let (ni, si, mi, li, trial) = grid.coords(flat);
    let (n, spikes, m, law) = (grid.n_list[ni], grid.spikes_list[si], grid.m_list[mi], &grid.laws[li]);
    let (model, truth) = random_truth(n, spikes, grid.truth_seed(ni, si, trial))?;
    let seed = derive_seed(grid.base_seed, flat as u64);
    let set = MeasurementSet::sense(&truth, law, m, grid.eta, grid.p, seed)?;
    let (z_hat, report) = recover_measurements(&set, &grid.solver)?;
    let cert = certify(&z_hat, &set.operator(), &set.b, set.eta, set.p, Some(&truth))?;
    let rel_error = cert.rel_error.unwrap_or(f64::INFINITY);
    let truth_nuclear = cert.objective - cert.objective_vs_truth.unwrap_or(0.0);
    Ok(TrialOutcome {
        n,
        r: model.rank(),
        spikes,
        m,
        law: law.name().to_owned(),
        trial,
        success: report.converged && rel_error <= grid.success_tol,
        rel_error,
        objective_excess: cert.objective_vs_truth.unwrap_or(0.0) / truth_nuclear,
        iterations: report.iterations,
        converged: report.converged,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRate {
    pub n: usize,
    pub r: usize,
    pub spikes: usize,
    pub m: usize,
    pub law: String,
    pub trials: usize,
    pub successes: usize,
    pub nonconverged: usize,
    pub rate: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseResult {
    pub outcomes: Vec<TrialOutcome>,
    pub summary: Vec<SuccessRate>,
}

impl PhaseResult {
    pub fn rate(&self, n: usize, spikes: usize, m: usize, law: &str) -> Option<&SuccessRate> {
        self.summary.iter().find(|s| s.n == n && s.spikes == spikes && s.m == m && s.law == law)
    }

    /// Pairs of neighbouring `m` values (per `(n, spikes, law)` slice) where the rate
    /// drops by more than `k` combined standard errors.
    pub fn monotonicity_violations(&self, k: f64) -> Vec<(SuccessRate, SuccessRate)> {
        let mut out = Vec::new();
        for a in &self.summary {
            let next = self
                .summary
                .iter()
                .filter(|b| b.n == a.n && b.spikes == a.spikes && b.law == a.law && b.m > a.m)
                .min_by_key(|b| b.m);
            if let Some(b) = next {
                let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
                if b.rate < a.rate - k * se - 1e-12 {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }
}

/// Runs every trial of `grid`. Trial `i` (flat index) senses with `derive_seed(base_seed, i)`;
/// all `m` and laws at one `(n, spikes, trial)` share the ground truth.
pub fn phase_grid(grid: &GridSpec) -> Result<PhaseResult> {
    grid.validate()?;
    let outcomes: Vec<TrialOutcome> =
        (0..grid.len()).into_par_iter().map(|i| run_trial(grid, i)).collect::<Result<_>>()?;
    let mut summary = Vec::new();
    for chunk in outcomes.chunks(grid.trials) {
        let first = &chunk[0];
        let successes = chunk.iter().filter(|o| o.success).count();
        summary.push(SuccessRate {
            n: first.n,
            r: first.r,
            spikes: first.spikes,
            m: first.m,
            law: first.law.clone(),
            trials: chunk.len(),
            successes,
            nonconverged: chunk.iter().filter(|o| !o.converged).count(),
            rate: successes as f64 / chunk.len() as f64,
            std_err: binomial_se(successes, chunk.len()),
        });
    }
    Ok(PhaseResult { outcomes, summary })
}

/// Error-versus-noise sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub n: usize,
    pub spikes: usize,
    pub m_list: Vec<usize>,
    pub law: SubgaussianLaw,
    pub eta_grid: Vec<f64>,
    pub p: NormKind,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl NoiseSpec {
    /// Tolerances tight enough that the solver error sits well below the noise-induced error.
    /// With an active data ball the splitting converges sublinearly, so runs usually
    /// stop at the iteration cap; by then the error has settled to within a few percent.
    pub fn tight_solver() -> SolverConfig {
        SolverConfig { max_iter: 8_000, tol_abs: 1e-11, tol_rel: 1e-9, ..SolverConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub m: usize,
    pub eta: f64,
    pub trials: usize,
    /// Mean `‖X̂ - X_0‖_F`.
    pub mean_error: f64,
    pub std_err: f64,
    pub mean_rel_error: f64,
    pub converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseFit {
    pub m: usize,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseTable {
    pub rows: Vec<NoiseRow>,
    pub fits: Vec<NoiseFit>,
}

impl NoiseTable {
    pub fn row(&self, m: usize, eta: f64) -> Option<&NoiseRow> {
        self.rows.iter().find(|r| r.m == m && r.eta == eta)
    }

    /// `error(η_{k+1}) / error(η_k)` over the positive noise levels at `m`.
    pub fn eta_ratios(&self, m: usize) -> Vec<f64> {
        let rows: Vec<&NoiseRow> = self.rows.iter().filter(|r| r.m == m && r.eta > 0.0).collect();
        rows.windows(2).map(|w| w[1].mean_error / w[0].mean_error).collect()
    }

    pub fn fit(&self, m: usize) -> Option<&NoiseFit> {
        self.fits.iter().find(|f| f.m == m)
    }
}

/// Mean recovery error per `(m, η)`. Trial `t` fixes the ground truth, the sensing
/// vectors and the noise direction through `derive_seed(seed, t)`, so rows differ only
/// in `m` and the noise radius.
pub fn error_vs_noise(spec: &NoiseSpec) -> Result<NoiseTable> {
    if spec.m_list.is_empty() || spec.eta_grid.is_empty() || spec.trials == 0 {
        return Err(invalid("noise sweep needs m values, noise levels and trials"));
    }
    if spec.eta_grid.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
        return Err(invalid("noise levels must be finite and nonnegative"));
    }
    spec.solver.validate()?;
    let cells: Vec<(usize, f64)> =
        spec.m_list.iter().flat_map(|&m| spec.eta_grid.iter().map(move |&eta| (m, eta))).collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..spec.trials).map(move |t| (c, t))).collect();
    let results: Vec<(f64, f64, bool)> = jobs
        .into_par_iter()
        .map(|(c, t)| {
            let (m, eta) = cells[c];
            let seed = derive_seed(spec.seed, t as u64);
            let (_, truth) = random_truth(spec.n, spec.spikes, derive_seed(seed, 2))?;
            let set = MeasurementSet::sense(&truth, &spec.law, m, eta, spec.p, seed)?;
            let (z_hat, report) = recover_measurements(&set, &spec.solver)?;
            let err = z_hat.sub(&truth).frobenius_norm();
            Ok((err, err / truth.frobenius_norm(), report.converged))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cells.len());
    for (&(m, eta), chunk) in cells.iter().zip(results.chunks(spec.trials)) {
        let err: Accumulator = chunk.iter().map(|r| r.0).collect();
        let rel: Accumulator = chunk.iter().map(|r| r.1).collect();
        rows.push(NoiseRow {
            m,
            eta,
            trials: chunk.len(),
            mean_error: err.mean(),
            std_err: err.std_err(),
            mean_rel_error: rel.mean(),
            converged: chunk.iter().filter(|r| r.2).count(),
        });
    }
    let fits = spec
        .m_list
        .iter()
        .map(|&m| {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.m == m).map(|r| (r.eta, r.mean_error)).collect();
            let (slope, intercept) = least_squares_line(&pts);
            NoiseFit { m, slope, intercept }
        })
        .collect();
    Ok(NoiseTable { rows, fits })
}

/// Ordinary least squares `y ≈ slope·x + intercept`; a single point or constant `x`
/// gives slope 0 through the mean.
fn least_squares_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec {
            n_list: vec![16],
            spikes_list: vec![1],
            m_list: vec![1, 16],
            laws: vec![SubgaussianLaw::gaussian()],
            trials: 3,
            base_seed: 11,
            eta: 0.0,
            p: NormKind::L2,
            success_tol: DEFAULT_SUCCESS_TOL,
            solver: SolverConfig::default(),
        }
    }

    #[test]
    fn flat_index_order() {
        let mut g = grid();
        g.laws.push(SubgaussianLaw::rademacher());
        assert_eq!(g.len(), 12);
        assert_eq!(g.coords(0), (0, 0, 0, 0, 0));
        assert_eq!(g.coords(2), (0, 0, 0, 0, 2));
        assert_eq!(g.coords(3), (0, 0, 0, 1, 0));
        assert_eq!(g.coords(6), (0, 0, 1, 0, 0));
    }

    #[test]
    fn singleton_feasible_set_always_succeeds() {
        let res = phase_grid(&grid()).unwrap();
        assert_eq!(res.outcomes.len(), 6);
        let full = res.rate(16, 1, 16, "gaussian").unwrap();
        assert_eq!(full.rate, 1.0);
        assert_eq!(full.r, 2);
        let one = res.rate(16, 1, 1, "gaussian").unwrap();
        assert_eq!(one.rate, 0.0);
        for o in &res.outcomes {
            assert_eq!(o.success, o.converged && o.rel_error <= DEFAULT_SUCCESS_TOL);
        }
        assert!(res.monotonicity_violations(2.0).is_empty());
    }

    #[test]
    fn grid_is_reproducible() {
        let a = phase_grid(&grid()).unwrap();
        let b = phase_grid(&grid()).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn rejects_bad_grids() {
        let mut g = grid();
        g.m_list.clear();
        assert!(phase_grid(&g).is_err());
        let mut g = grid();
        g.trials = 0;
        assert!(phase_grid(&g).is_err());
    }

    #[test]
    fn monotonicity_flags_drops() {
        let rate = |m: usize, successes: usize| SuccessRate {
            n: 8,
            r: 2,
            spikes: 1,
            m,
            law: "gaussian".into(),
            trials: 10,
            successes,
            nonconverged: 0,
            rate: successes as f64 / 10.0,
            std_err: binomial_se(successes, 10),
        };
        let res = PhaseResult { outcomes: vec![], summary: vec![rate(4, 10), rate(8, 0), rate(12, 10)] };
        let v = res.monotonicity_violations(2.0);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].0.m, v[0].1.m), (4, 8));
    }

    #[test]
    fn line_fit() {
        let (s, c) = least_squares_line(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
        assert_eq!(least_squares_line(&[(1.0, 4.0)]), (0.0, 4.0));
    }

    #[test]
    fn noise_free_error_is_small_and_noise_grows_it() {
        let spec = NoiseSpec {
            n: 16,
            spikes: 1,
            m_list: vec![16],
            law: SubgaussianLaw::gaussian(),
            eta_grid: vec![0.0, 1e-3, 2e-3],
            p: NormKind::L2,
            trials: 2,
            seed: 5,
            solver: NoiseSpec::tight_solver(),
        };
        let t = error_vs_noise(&spec).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.row(16, 0.0).unwrap().mean_rel_error <= 1e-3);
        let r = t.eta_ratios(16);
        assert_eq!(r.len(), 1);
        assert!(r[0] > 1.5 && r[0] < 2.5, "{r:?}");
    }
}

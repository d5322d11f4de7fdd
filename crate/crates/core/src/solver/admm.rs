//! Splitting solver for
//!
//! ```text
//! minimize ‖X‖_*  subject to  ‖A(X) - b‖_p ≤ η,  X symmetric Toeplitz
//! ```
//!
//! over the Toeplitz parameters `z`, with splitting copies `X = Toep(z)` and
//! `w = A z`. Each iteration
//!
//! 1. solves `(D + AᵀA) z = s(X - Λ) + Aᵀ(w - u)` with a cached Cholesky factor,
//! 2. sets `X = svt(Toep(z) + Λ, 1/ρ)` and `w = Π_ball(A z + u)`,
//! 3. updates the scaled duals `Λ += Toep(z) - X`, `u += A z - w`.
//!
//! `D = diag(c)` holds the diagonal counts and `s` is the diagonal-sum adjoint of `Toep`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{nuclear_norm, DenseSymmetric};
use crate::sensing::{EffectiveMatrix, MeasurementSet, NormKind};
use crate::toeplitz::{frobenius_weights, ToeplitzVector};

use super::config::SolverConfig;
use super::prox::{project_into, svt};

/// Residual ratio that triggers a penalty update.
const BALANCE_RATIO: f64 = 10.0;
/// Iterations between penalty updates.
const BALANCE_EVERY: usize = 10;
/// Penalty updates stop after this many iterations so the fixed-penalty
/// convergence guarantee applies to the tail of the run.
const BALANCE_UNTIL: usize = 1000;
const POLISH_ROUNDS: usize = 50;

/// Outcome of a solve. `converged = false` is reported, never hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `‖Toep(ẑ)‖_*`.
    pub objective: f64,
    /// `max(‖A ẑ - b‖_p - η, 0)`.
    pub feasibility_gap: f64,
    pub converged: bool,
    pub rho: f64,
    /// Largest relative residual of the z-update normal equations over all iterations.
    pub normal_equation_residual: f64,
    pub z_hat: ToeplitzVector,
}

/// Solves the program for the operator `a`, observations `b`, budget `eta` and norm `p`.
pub fn recover(
    a: &EffectiveMatrix,
    b: &[f64],
    eta: f64,
    p: NormKind,
    cfg: &SolverConfig,
) -> Result<(ToeplitzVector, RecoveryReport)> {
    cfg.validate()?;
    let (m, n) = (a.m(), a.n());
    if m == 0 || n == 0 {
        return Err(invalid("recovery needs m, n >= 1"));
    }
    if b.len() != m {
        return Err(Error::Dimension(format!("operator has {m} rows, got {} observations", b.len())));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid(format!("noise budget must be finite and nonnegative, got {eta}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observations"));
    }

    // Zero is feasible, hence optimal.
    if p.norm(b) <= eta {
        let z = ToeplitzVector::zeros(n);
        let report = RecoveryReport {
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            objective: 0.0,
            feasibility_gap: 0.0,
            converged: true,
            rho: cfg.rho,
            normal_equation_residual: 0.0,
            z_hat: z.clone(),
        };
        return Ok((z, report));
    }

    let mut state = Admm::new(a, b, eta, p, cfg)?;
    let outcome = state.run();
    let z = state.polish()?;
    let z_hat = ToeplitzVector::new(z.as_slice().to_vec())?;

    let az = a.apply_slice(z_hat.values());
    let feasibility_gap = (p.distance(&az, b) - eta).max(0.0);
    let report = RecoveryReport {
        iterations: outcome.iterations,
        primal_residual: outcome.primal,
        dual_residual: outcome.dual,
        objective: nuclear_norm(&z_hat.to_dense()),
        feasibility_gap,
        converged: outcome.converged,
        rho: state.rho,
        normal_equation_residual: state.max_normal_residual,
        z_hat: z_hat.clone(),
    };
    Ok((z_hat, report))
}

/// [`recover`] on a measurement set with its own budget and norm.
pub fn recover_measurements(set: &MeasurementSet, cfg: &SolverConfig) -> Result<(ToeplitzVector, RecoveryReport)> {
    recover(&set.operator(), &set.b, set.eta, set.p, cfg)
}

struct Outcome {
    iterations: usize,
    primal: f64,
    dual: f64,
    converged: bool,
}

struct Admm<'a> {
    n: usize,
    m: usize,
    cfg: &'a SolverConfig,
    p: NormKind,
    /// Data constraint scale; the solver works with `σA`, `σb`, `ση`.
    sigma: f64,
    a: DMatrix<f64>,
    b: Vec<f64>,
    eta: f64,
    weights: Vec<f64>,
    normal: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    rho: f64,
    z: DVector<f64>,
    x: DMatrix<f64>,
    w: DVector<f64>,
    lam: DMatrix<f64>,
    u: DVector<f64>,
    max_normal_residual: f64,
}

fn toeplitz_matrix(z: &[f64]) -> DMatrix<f64> {
    let n = z.len();
    DMatrix::from_fn(n, n, |i, j| z[i.abs_diff(j)])
}

fn diagonal_sums_of(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut s = DVector::zeros(n);
    for j in 0..n {
        for i in 0..n {
            s[i.abs_diff(j)] += m[(i, j)];
        }
    }
    s
}

impl<'a> Admm<'a> {
    fn new(op: &EffectiveMatrix, b: &[f64], eta: f64, p: NormKind, cfg: &'a SolverConfig) -> Result<Self> {
        let (m, n) = (op.m(), op.n());
        let weights = frobenius_weights(n);
        // Balance the two constraint blocks: ‖σA‖_F² = ‖Toep‖_F² = Σ c_l = n².
        let fro = op.as_matrix().norm();
        let sigma = if fro > 0.0 { n as f64 / fro } else { 1.0 };
        let a = op.as_matrix() * sigma;
        let mut normal = a.transpose() * &a;
        for (l, c) in weights.iter().enumerate() {
            normal[(l, l)] += c;
        }
        let chol = Cholesky::new(normal.clone())
            .ok_or_else(|| invalid("normal equations are not positive definite"))?;
        Ok(Self {
            n,
            m,
            cfg,
            p,
            sigma,
            b: b.iter().map(|v| v * sigma).collect(),
            eta: eta * sigma,
            a,
            weights,
            normal,
            chol,
            rho: cfg.rho,
            z: DVector::zeros(n),
            x: DMatrix::zeros(n, n),
            w: DVector::zeros(m),
            lam: DMatrix::zeros(n, n),
            u: DVector::zeros(m),
            max_normal_residual: 0.0,
        })
    }

    fn run(&mut self) -> Outcome {
        let (n, m) = (self.n, self.m);
        let cfg = *self.cfg;
        let mut outcome = Outcome { iterations: 0, primal: f64::INFINITY, dual: f64::INFINITY, converged: false };
        for it in 1..=cfg.max_iter {
            // z-update
            let rhs = diagonal_sums_of(&(&self.x - &self.lam)) + self.a.transpose() * (&self.w - &self.u);
            self.z = self.chol.solve(&rhs);
            let resid = (&self.normal * &self.z - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
            self.max_normal_residual = self.max_normal_residual.max(resid);

            // X- and w-updates
            let t = toeplitz_matrix(self.z.as_slice());
            let az = &self.a * &self.z;
            let x_old = std::mem::replace(
                &mut self.x,
                svt(&DenseSymmetric::symmetrized(&t + &self.lam), 1.0 / self.rho)
                    .expect("finite iterate")
                    .into_matrix(),
            );
            let mut w = &az + &self.u;
            project_into(w.as_mut_slice(), &self.b, self.eta, self.p);
            let w_old = std::mem::replace(&mut self.w, w);

            // dual updates
            let r_x = &t - &self.x;
            let r_w = &az - &self.w;
            self.lam += &r_x;
            self.u += &r_w;

            let primal = (r_x.norm_squared() + r_w.norm_squared()).sqrt();
            let dual = self.rho
                * (diagonal_sums_of(&(&self.x - &x_old)) + self.a.transpose() * (&self.w - &w_old)).norm();
            let eps_pri = ((n * n + m) as f64).sqrt() * cfg.tol_abs
                + cfg.tol_rel
                    * (t.norm_squared() + az.norm_squared())
                        .sqrt()
                        .max((self.x.norm_squared() + self.w.norm_squared()).sqrt());
            let eps_dual = (n as f64).sqrt() * cfg.tol_abs
                + cfg.tol_rel * self.rho * (diagonal_sums_of(&self.lam) + self.a.transpose() * &self.u).norm();

            outcome = Outcome { iterations: it, primal, dual, converged: primal <= eps_pri && dual <= eps_dual };
            if outcome.converged {
                break;
            }

            if cfg.adapt && it <= BALANCE_UNTIL && it % BALANCE_EVERY == 0 {
                if primal > BALANCE_RATIO * dual {
                    self.rescale(2.0);
                } else if dual > BALANCE_RATIO * primal {
                    self.rescale(0.5);
                }
            }
        }
        outcome
    }

    fn rescale(&mut self, factor: f64) {
        self.rho *= factor;
        self.lam /= factor;
        self.u /= factor;
    }

    /// Moves `z` by the smallest `c`-weighted correction so that `A z` lands in
    /// the data ball, alternating with the ball projection when `A` has more
    /// rows than columns. A round is kept only if it reduces the data distance and
    /// raises the objective by at most `tol_rel` relative; an ill-conditioned `A`
    /// can otherwise trade a tiny residual for a large move away from the optimum.
    fn polish(&self) -> Result<DVector<f64>> {
        let n = self.n;
        let objective = |z: &DVector<f64>| nuclear_norm(&DenseSymmetric::symmetrized(toeplitz_matrix(z.as_slice())));
        let start = objective(&self.z);
        let allowed = start + self.cfg.tol_rel * start.max(1.0);
        let inv_sqrt_w = DVector::from_iterator(n, self.weights.iter().map(|c| 1.0 / c.sqrt()));
        let mut scaled = self.a.clone();
        for (j, s) in inv_sqrt_w.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        let svd = scaled.svd(true, true);
        let eps = svd.singular_values.max() * 1e-12;

        let mut z = self.z.clone();
        let distance = |z: &DVector<f64>| -> f64 {
            let az = &self.a * z;
            self.p.distance(az.as_slice(), &self.b)
        };
        let mut best = distance(&z);
        for _ in 0..POLISH_ROUNDS {
            if best <= self.eta {
                break;
            }
            let az = &self.a * &z;
            let mut target = az.clone();
            project_into(target.as_mut_slice(), &self.b, self.eta, self.p);
            let step = match svd.solve(&(target - az), eps) {
                Ok(s) => s.component_mul(&inv_sqrt_w),
                Err(_) => break,
            };
            let candidate = &z + step;
            let d = distance(&candidate);
            if !(d < best) || objective(&candidate) > allowed {
                break;
            }
            z = candidate;
            best = d;
        }
        Ok(z)
    }
}

impl std::fmt::Debug for Admm<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Admm").field("n", &self.n).field("m", &self.m).field("sigma", &self.sigma).finish()
    }
}

//! Descent-cone geometry at a low-rank symmetric `X_0`.
//!
//! With `X_0 = U Σ Vᵀ` (for symmetric `X_0`, `V = U sign(Λ)`) a direction `Z` lies in
//! the descent cone of the nuclear norm when `-<UVᵀ, Z> ≥ ‖Z_T⊥‖_*`, where
//! `Z_T⊥ = (I - P) Z (I - P)` and `P = UUᵀ`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{nuclear_norm, sym_eig, DenseSymmetric};
use crate::rng::stream;
use crate::sensing::{EffectiveMatrix, NormKind};
use crate::toeplitz::{project_toeplitz, ToeplitzVector, RANK_TOL};

/// Slack on the membership inequality.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// `√2 + 1`.
pub const DESCENT_BOUND: f64 = std::f64::consts::SQRT_2 + 1.0;

/// Factors of `X_0` and the projections onto its tangent space.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    /// `P = UUᵀ`.
    p: DMatrix<f64>,
    /// `UVᵀ`.
    sign: DenseSymmetric,
    x0: DenseSymmetric,
    x0_nuclear: f64,
}

impl TangentFrame {
    pub fn new(x0: &DenseSymmetric) -> Result<Self> {
        let n = x0.n();
        let eig = sym_eig(x0)?;
        let top = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if top == 0.0 {
            return Err(invalid("X_0 must be nonzero"));
        }
        let keep: Vec<usize> = (0..n).filter(|&k| eig.values[k].abs() > RANK_TOL * top).collect();
        let r = keep.len();
        if r >= n {
            return Err(invalid(format!("X_0 must have rank below n = {n}, got {r}")));
        }
        let u = DMatrix::from_fn(n, r, |i, j| eig.vectors[(i, keep[j])]);
        let v = DMatrix::from_fn(n, r, |i, j| eig.vectors[(i, keep[j])] * eig.values[keep[j]].signum());
        let p = &u * u.transpose();
        let sign = DenseSymmetric::symmetrized(&u * v.transpose());
        Ok(Self { u, v, p, sign, x0: x0.clone(), x0_nuclear: nuclear_norm(x0) })
    }

    pub fn from_toeplitz(x0: &ToeplitzVector) -> Result<Self> {
        Self::new(&x0.to_dense())
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// `UVᵀ`.
    pub fn sign_matrix(&self) -> &DenseSymmetric {
        &self.sign
    }

    /// `(I - P) Z (I - P)`.
    pub fn complement(&self, z: &DenseSymmetric) -> DenseSymmetric {
        let q = DMatrix::identity(self.n(), self.n()) - &self.p;
        DenseSymmetric::symmetrized(&q * z.as_matrix() * &q)
    }

    /// `PZ + ZP - PZP`.
    pub fn tangent(&self, z: &DenseSymmetric) -> DenseSymmetric {
        z.sub(&self.complement(z))
    }

    /// Left and right sides of `-<UVᵀ, Z> ≥ ‖Z_T⊥‖_*`.
    pub fn membership(&self, z: &DenseSymmetric) -> (f64, f64) {
        (-self.sign.dot(z), nuclear_norm(&self.complement(z)))
    }
}

/// A certified member of the descent cone, normalized to `‖Z‖_F = 1`.
#[derive(Debug, Clone)]
pub struct DescentConeSample {
    pub frame: Arc<TangentFrame>,
    pub z: DenseSymmetric,
    /// `-<UVᵀ, Z>`.
    pub lhs: f64,
    /// `‖Z_T⊥‖_*`.
    pub rhs: f64,
}

impl DescentConeSample {
    pub fn u(&self) -> &DMatrix<f64> {
        self.frame.u()
    }

    pub fn v(&self) -> &DMatrix<f64> {
        self.frame.v()
    }

    pub fn certified(&self) -> bool {
        self.lhs >= self.rhs - CERTIFICATE_TOL
    }

    /// `‖Z‖_* / (√r ‖Z‖_F)`.
    pub fn ratio(&self) -> f64 {
        nuclear_norm(&self.z) / ((self.frame.rank() as f64).sqrt() * self.z.frobenius_norm())
    }
}

fn gaussian_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseSymmetric {
    DenseSymmetric::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Draws one candidate `Z_T + β W` with `β` maximal, unnormalized.
fn draw_candidate<R: Rng + ?Sized>(frame: &TangentFrame, rng: &mut R) -> DenseSymmetric {
    let n = frame.n();
    loop {
        let mut zt = frame.tangent(&gaussian_symmetric(n, rng));
        let mut inner = frame.sign.dot(&zt);
        if inner > 0.0 {
            zt = zt.scaled(-1.0);
            inner = -inner;
        }
        if inner == 0.0 {
            continue;
        }
        let w = frame.complement(&gaussian_symmetric(n, rng));
        let w_nuc = nuclear_norm(&w);
        if w_nuc == 0.0 {
            return zt;
        }
        let beta = -inner / w_nuc;
        return zt.add(&w.scaled(beta));
    }
}

fn certify_sample(frame: &Arc<TangentFrame>, z: DenseSymmetric) -> Option<DescentConeSample> {
    let norm = z.frobenius_norm();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let z = z.scaled(1.0 / norm);
    let (lhs, rhs) = frame.membership(&z);
    let sample = DescentConeSample { frame: Arc::clone(frame), z, lhs, rhs };
    sample.certified().then_some(sample)
}

/// Samples `count` certified descent directions at `x0`, each on the cone boundary.
pub fn descent_cone_sampler(x0: &ToeplitzVector, count: usize, seed: u64) -> Result<Vec<DescentConeSample>> {
    let frame = Arc::new(TangentFrame::from_toeplitz(x0)?);
    sample_with_frame(&frame, count, seed)
}

pub fn sample_with_frame(frame: &Arc<TangentFrame>, count: usize, seed: u64) -> Result<Vec<DescentConeSample>> {
    let mut rng = stream(seed);
    let mut out = Vec::with_capacity(count);
    let mut failures = 0usize;
    while out.len() < count {
        match certify_sample(frame, draw_candidate(frame, &mut rng)) {
            Some(s) => out.push(s),
            None => {
                failures += 1;
                if failures > 10 * count.max(10) {
                    return Err(Error::AllRejected(failures));
                }
            }
        }
    }
    Ok(out)
}

/// `-X_0/‖X_0‖_F` as a certified sample.
pub fn toward_zero(frame: &Arc<TangentFrame>) -> Option<DescentConeSample> {
    certify_sample(frame, frame.x0.scaled(-1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentBoundReport {
    pub samples: usize,
    pub max_ratio: f64,
    pub violations: usize,
    pub bound: f64,
}

/// Checks `‖Z‖_* ≤ (√2 + 1)√r ‖Z‖_F` on every sample.
pub fn descent_bound_check(samples: &[DescentConeSample]) -> DescentBoundReport {
    let mut max_ratio = 0.0f64;
    let mut violations = 0;
    for s in samples {
        let ratio = s.ratio();
        max_ratio = max_ratio.max(ratio);
        if ratio > DESCENT_BOUND * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    DescentBoundReport { samples: samples.len(), max_ratio, violations, bound: DESCENT_BOUND }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConicProbe {
    /// Smallest `‖A z‖_p / ‖Toep(z)‖_F` over accepted directions.
    pub value: f64,
    pub accepted: usize,
    /// Candidates whose Toeplitz projection left the cone and were moved back along `-X_0`.
    pub repaired: usize,
    pub rejected: usize,
}

fn unit(t: ToeplitzVector) -> Option<ToeplitzVector> {
    let norm = t.frobenius_norm();
    (norm > 0.0 && norm.is_finite()).then(|| t.scaled(1.0 / norm))
}

/// Evaluates `‖A(Z)‖_p / ‖Z‖_F` over Toeplitz descent directions at `x0` and returns the minimum.
///
/// Each cone sample is projected onto the Toeplitz matrices and re-certified. With
/// `repair`, a projection that leaves the cone is shifted along `-X_0` (which lies in
/// the tangent space and leaves `Z_T⊥` unchanged) to the cone boundary and certified
/// again; without it, such candidates are discarded. The value is a sampled upper
/// envelope of the minimum conic singular value, not a bound on it.
pub fn min_conic_probe(
    a: &EffectiveMatrix,
    x0: &ToeplitzVector,
    samples: usize,
    p: NormKind,
    repair: bool,
    seed: u64,
) -> Result<ConicProbe> {
    if a.n() != x0.n() {
        return Err(Error::Dimension("operator and X_0 sizes differ".into()));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    if a.m() == 0 {
        return Ok(ConicProbe { value: 0.0, accepted: samples, repaired: 0, rejected: 0 });
    }
    let frame = Arc::new(TangentFrame::from_toeplitz(x0)?);
    let x0_frob = x0.frobenius_norm();
    // -<UVᵀ, -X_0/‖X_0‖_F> = ‖X_0‖_*/‖X_0‖_F.
    let gain = frame.x0_nuclear / x0_frob;
    let mut rng = stream(seed);
    let mut probe = ConicProbe { value: f64::INFINITY, accepted: 0, repaired: 0, rejected: 0 };
    for _ in 0..samples {
        let z = draw_candidate(&frame, &mut rng);
        let Some(mut t) = unit(project_toeplitz(&z)) else {
            probe.rejected += 1;
            continue;
        };
        let (lhs, rhs) = frame.membership(&t.to_dense());
        if lhs < rhs - CERTIFICATE_TOL {
            if !repair {
                probe.rejected += 1;
                continue;
            }
            let shifted = t.sub(&x0.scaled((rhs - lhs) / gain / x0_frob));
            let (lhs, rhs) = frame.membership(&shifted.to_dense());
            match unit(shifted) {
                Some(s) if lhs >= rhs - CERTIFICATE_TOL => t = s,
                _ => {
                    probe.rejected += 1;
                    continue;
                }
            }
            probe.repaired += 1;
        }
        probe.accepted += 1;
        probe.value = probe.value.min(p.norm(&a.apply(&t)?));
    }
    if probe.accepted == 0 {
        return Err(Error::AllRejected(samples));
    }
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{sample_vectors, SubgaussianLaw};
    use crate::toeplitz::{spike_toeplitz, Spike, SpikeModel};

    fn spikes(list: &[(f64, f64)], n: usize) -> ToeplitzVector {
        let model =
            SpikeModel::new(list.iter().map(|&(frequency, amplitude)| Spike { frequency, amplitude }).collect())
                .unwrap();
        spike_toeplitz(&model, n).unwrap()
    }

    #[test]
    fn frame_projections_are_complementary() {
        let x0 = spikes(&[(0.2, 1.0)], 10);
        let frame = TangentFrame::from_toeplitz(&x0).unwrap();
        assert_eq!(frame.rank(), 2);
        let mut rng = stream(4);
        let z = gaussian_symmetric(10, &mut rng);
        let zt = frame.tangent(&z);
        let zc = frame.complement(&z);
        assert!(zt.dot(&zc).abs() < 1e-10);
        assert!(zt.add(&zc).sub(&z).frobenius_norm() < 1e-12);
        // X_0 lies in its own tangent space.
        assert!(frame.complement(&x0.to_dense()).frobenius_norm() < 1e-10);
        // <UVᵀ, X_0> = ‖X_0‖_*.
        assert!((frame.sign_matrix().dot(&x0.to_dense()) - frame.x0_nuclear).abs() < 1e-9);
    }

    #[test]
    fn toward_zero_is_a_member_within_the_bound() {
        let x0 = spikes(&[(0.1, 1.0), (0.3, 2.0)], 16);
        let frame = Arc::new(TangentFrame::from_toeplitz(&x0).unwrap());
        let s = toward_zero(&frame).unwrap();
        assert!(s.certified());
        assert!(s.ratio() <= 1.0 + 1e-12);
    }

    #[test]
    fn sampled_certificates_hold() {
        let x0 = spikes(&[(0.25, 1.0)], 12);
        let samples = descent_cone_sampler(&x0, 200, 5).unwrap();
        assert_eq!(samples.len(), 200);
        for s in &samples {
            assert!(s.lhs >= s.rhs - CERTIFICATE_TOL);
            assert!((s.z.frobenius_norm() - 1.0).abs() < 1e-12);
        }
        let report = descent_bound_check(&samples);
        assert_eq!(report.violations, 0);
        assert!(report.max_ratio <= DESCENT_BOUND);
    }

    #[test]
    fn tangent_only_directions_are_members() {
        let x0 = spikes(&[(0.0, 1.0)], 8);
        let frame = Arc::new(TangentFrame::from_toeplitz(&x0).unwrap());
        assert_eq!(frame.rank(), 1);
        let mut rng = stream(6);
        let mut zt = frame.tangent(&gaussian_symmetric(8, &mut rng));
        if frame.sign_matrix().dot(&zt) > 0.0 {
            zt = zt.scaled(-1.0);
        }
        let (lhs, rhs) = frame.membership(&zt);
        assert!(rhs < 1e-10 && lhs > 0.0);
    }

    #[test]
    fn rejects_zero_and_full_rank() {
        assert!(descent_cone_sampler(&ToeplitzVector::zeros(5), 3, 1).is_err());
        assert!(descent_cone_sampler(&ToeplitzVector::identity(5), 3, 1).is_err());
    }

    #[test]
    fn probe_edge_cases() {
        let n = 12;
        let x0 = spikes(&[(0.2, 1.0)], n);
        let empty = EffectiveMatrix::from_matrix(DMatrix::zeros(0, n)).unwrap();
        assert_eq!(min_conic_probe(&empty, &x0, 100, NormKind::L2, true, 1).unwrap().value, 0.0);
        let xi = sample_vectors(&SubgaussianLaw::gaussian(), n, n, 3);
        let a = EffectiveMatrix::from_vectors(&xi);
        let probe = min_conic_probe(&a, &x0, 100, NormKind::L2, true, 2).unwrap();
        assert!(probe.value > 0.0 && probe.value.is_finite());
        assert_eq!(probe.accepted + probe.rejected, 100);
    }
}

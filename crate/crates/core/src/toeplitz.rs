//! Symmetric Toeplitz algebra: the diagonal parameterization, the orthogonal
//! projection onto Toeplitz matrices, circulant embedding and spike models.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::DenseSymmetric;

/// Relative eigenvalue threshold below which a spike-model eigenvalue counts as zero.
pub const RANK_TOL: f64 = 1e-8;

/// Diagonal values `z_0..z_{n-1}` of a symmetric Toeplitz matrix, `X[i,j] = z[|i-j|]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawToeplitz", into = "RawToeplitz")]
pub struct ToeplitzVector {
    z: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawToeplitz {
    n: usize,
    z: Vec<f64>,
}

impl TryFrom<RawToeplitz> for ToeplitzVector {
    type Error = Error;

    fn try_from(raw: RawToeplitz) -> Result<Self> {
        if raw.n != raw.z.len() {
            return Err(Error::Dimension(format!(
                "toeplitz vector declares n = {} but carries {} values",
                raw.n,
                raw.z.len()
            )));
        }
        ToeplitzVector::new(raw.z)
    }
}

impl From<ToeplitzVector> for RawToeplitz {
    fn from(t: ToeplitzVector) -> Self {
        RawToeplitz { n: t.z.len(), z: t.z }
    }
}

impl ToeplitzVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(invalid("toeplitz vector needs n >= 1"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("toeplitz vector"));
        }
        Ok(Self { z })
    }

    pub fn zeros(n: usize) -> Self {
        Self { z: vec![0.0; n.max(1)] }
    }

    /// `z = (1, 0, ..., 0)`, the identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut z = vec![0.0; n.max(1)];
        z[0] = 1.0;
        Self { z }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    pub fn into_values(self) -> Vec<f64> {
        self.z
    }

    /// Dense matrix with `M[i,j] = z[|i-j|]`.
    pub fn to_dense(&self) -> DenseSymmetric {
        DenseSymmetric::from_fn(self.n(), |i, j| self.z[i.abs_diff(j)])
    }

    /// `||Toep(z)||_F^2 = sum_l c_l z_l^2`.
    pub fn frobenius_norm_sq(&self) -> f64 {
        let n = self.n();
        self.z.iter().enumerate().map(|(l, v)| diagonal_weight(n, l) * v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Frobenius inner product of the two induced matrices.
    pub fn frobenius_dot(&self, other: &ToeplitzVector) -> f64 {
        let n = self.n();
        self.z
            .iter()
            .zip(&other.z)
            .enumerate()
            .map(|(l, (a, b))| diagonal_weight(n, l) * a * b)
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { z: self.z.iter().map(|v| v * s).collect() }
    }

    pub fn sub(&self, other: &ToeplitzVector) -> Self {
        Self { z: self.z.iter().zip(&other.z).map(|(a, b)| a - b).collect() }
    }
}

fn diagonal_weight(n: usize, l: usize) -> f64 {
    if l == 0 {
        n as f64
    } else {
        2.0 * (n - l) as f64
    }
}

/// `toeplitz_to_dense`.
pub fn toeplitz_to_dense(t: &ToeplitzVector) -> DenseSymmetric {
    t.to_dense()
}

/// Number of entries on each diagonal pair: `c_0 = n`, `c_l = 2(n - l)`.
pub fn frobenius_weights(n: usize) -> Vec<f64> {
    (0..n).map(|l| diagonal_weight(n, l)).collect()
}

/// Adjoint of `z -> Toep(z)`: `s_0 = sum_i M_ii`, `s_l = sum_i (M_{i,i+l} + M_{i+l,i})`.
pub fn diagonal_sums(m: &DenseSymmetric) -> Vec<f64> {
    let n = m.n();
    let a = m.as_matrix();
    let mut s = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            s[i.abs_diff(j)] += a[(i, j)];
        }
    }
    s
}

/// Orthogonal projection onto symmetric Toeplitz matrices: each diagonal is
/// replaced by its average.
pub fn project_toeplitz(m: &DenseSymmetric) -> ToeplitzVector {
    let n = m.n();
    let a = m.as_matrix();
    let z = (0..n)
        .map(|l| {
            let first = a[(0, l)];
            let mut sum = 0.0;
            let mut constant = true;
            for i in 0..n - l {
                let (upper, lower) = (a[(i, i + l)], a[(i + l, i)]);
                constant &= upper == first && lower == first;
                sum += if l == 0 { upper } else { upper + lower };
            }
            // constant diagonals are returned verbatim so the projection fixes Toeplitz input exactly
            if constant {
                first
            } else {
                sum / diagonal_weight(n, l)
            }
        })
        .collect();
    ToeplitzVector { z }
}

/// Eigenvalues of the `(2n-1) x (2n-1)` circulant matrix whose leading
/// `n x n` block is `Toep(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirculantSpectrum {
    pub n: usize,
    pub lambda: Vec<f64>,
}

impl CirculantSpectrum {
    pub fn max_abs(&self) -> f64 {
        self.lambda.iter().fold(0.0, |acc, l| acc.max(l.abs()))
    }
}

/// `λ_j = z_0 + 2 Σ_{l≥1} z_l cos(2π j l / (2n-1))` for `j = 0..2n-2`.
pub fn circulant_embed(t: &ToeplitzVector) -> CirculantSpectrum {
    let n = t.n();
    let size = 2 * n - 1;
    let cos_table: Vec<f64> = (0..size)
        .map(|k| (2.0 * PI * k as f64 / size as f64).cos())
        .collect();
    let z = t.values();
    let lambda = (0..size)
        .map(|j| {
            let mut acc = 0.0;
            for (l, zl) in z.iter().enumerate().skip(1) {
                acc += zl * cos_table[(j * l) % size];
            }
            z[0] + 2.0 * acc
        })
        .collect();
    CirculantSpectrum { n, lambda }
}

/// Upper bound on `||Toep(z)||_op` from the circulant embedding.
pub fn opnorm_upper(t: &ToeplitzVector) -> f64 {
    circulant_embed(t).max_abs()
}

/// A spectral line at `frequency ∈ [0, 1/2]` with positive `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub frequency: f64,
    pub amplitude: f64,
}

/// A sum of spectral lines generating a low-rank Toeplitz matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Spike>", into = "Vec<Spike>")]
pub struct SpikeModel {
    spikes: Vec<Spike>,
}

impl TryFrom<Vec<Spike>> for SpikeModel {
    type Error = Error;

    fn try_from(spikes: Vec<Spike>) -> Result<Self> {
        SpikeModel::new(spikes)
    }
}

impl From<SpikeModel> for Vec<Spike> {
    fn from(m: SpikeModel) -> Self {
        m.spikes
    }
}

impl SpikeModel {
    pub fn new(spikes: Vec<Spike>) -> Result<Self> {
        if spikes.is_empty() {
            return Err(invalid("spike model needs at least one spike"));
        }
        for s in &spikes {
            if !(0.0..=0.5).contains(&s.frequency) {
                return Err(invalid(format!("spike frequency {} outside [0, 1/2]", s.frequency)));
            }
            if !(s.amplitude > 0.0 && s.amplitude.is_finite()) {
                return Err(invalid(format!("spike amplitude {} must be positive", s.amplitude)));
            }
        }
        for (i, a) in spikes.iter().enumerate() {
            if spikes[i + 1..].iter().any(|b| b.frequency == a.frequency) {
                return Err(invalid(format!("duplicate spike frequency {}", a.frequency)));
            }
        }
        Ok(Self { spikes })
    }

    /// `count` interior spikes with frequencies in `[1/n, 1/2 - 1/n]`, pairwise
    /// separated by at least `1/n`, and amplitudes uniform on `[1, 2]`.
    pub fn random<R: Rng + ?Sized>(count: usize, n: usize, rng: &mut R) -> Result<Self> {
        let sep = 1.0 / n as f64;
        let (lo, hi) = (sep, 0.5 - sep);
        if count == 0 || hi <= lo || (count - 1) as f64 * sep > hi - lo {
            return Err(invalid(format!("cannot place {count} separated spikes at n = {n}")));
        }
        let mut spikes: Vec<Spike> = Vec::with_capacity(count);
        let mut attempts = 0;
        while spikes.len() < count {
            attempts += 1;
            if attempts > 10_000 {
                return Err(invalid(format!("failed to place {count} separated spikes at n = {n}")));
            }
            let f = rng.random_range(lo..=hi);
            if spikes.iter().all(|s| (s.frequency - f).abs() >= sep) {
                spikes.push(Spike { frequency: f, amplitude: rng.random_range(1.0..=2.0) });
            }
        }
        Ok(Self { spikes })
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    /// `2 #{f ∈ (0, 1/2)} + #{f ∈ {0, 1/2}}`.
    pub fn rank(&self) -> usize {
        self.spikes
            .iter()
            .map(|s| if s.frequency == 0.0 || s.frequency == 0.5 { 1 } else { 2 })
            .sum()
    }
}

/// `z_l = Σ_i d_i cos(2π f_i l)`.
pub fn spike_toeplitz(model: &SpikeModel, n: usize) -> Result<ToeplitzVector> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let z = (0..n)
        .map(|l| {
            model
                .spikes
                .iter()
                .map(|s| s.amplitude * (2.0 * PI * s.frequency * l as f64).cos())
                .sum()
        })
        .collect();
    ToeplitzVector::new(z)
}

//! `ℓp` norms and noise on the `ℓp` sphere.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::stream;

/// The supported noise norms, `p ∈ {1, 2, ∞}`. Serialized as `"1"`, `"2"`, `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NormKind {
    L1,
    L2,
    Inf,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L1, NormKind::L2, NormKind::Inf];

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
            NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Inf => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
        }
    }

    /// `‖a - b‖_p`.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&d)
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn inverse_exponent(self) -> f64 {
        match self {
            NormKind::L1 => 1.0,
            NormKind::L2 => 0.5,
            NormKind::Inf => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L1 => "1",
            NormKind::L2 => "2",
            NormKind::Inf => "inf",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(NormKind::L1),
            "2" => Ok(NormKind::L2),
            "inf" | "Inf" | "INF" => Ok(NormKind::Inf),
            other => Err(invalid(format!("unsupported norm `{other}`, expected 1|2|inf"))),
        }
    }
}

impl TryFrom<String> for NormKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NormKind> for String {
    fn from(p: NormKind) -> Self {
        p.as_str().to_string()
    }
}

/// Noise of `ℓp` norm exactly `eta`: a standard normal vector normalized in `ℓp`.
pub fn draw_noise(m: usize, eta: f64, p: NormKind, seed: u64) -> Result<Vec<f64>> {
    draw_noise_scaled(m, eta, p, 1.0, seed)
}

/// As [`draw_noise`] with radius `gamma * eta`, `gamma ∈ [0, 1]`.
pub fn draw_noise_scaled(m: usize, eta: f64, p: NormKind, gamma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid(format!("noise budget must be finite and nonnegative, got {eta}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("noise radius scale must lie in [0, 1], got {gamma}")));
    }
    let radius = gamma * eta;
    if radius == 0.0 || m == 0 {
        return Ok(vec![0.0; m]);
    }
    let mut rng = stream(seed);
    let g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = p.norm(&g);
    Ok(g.into_iter().map(|v| v * radius / norm).collect())
}

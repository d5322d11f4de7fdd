use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::derive_seed;
use crate::toeplitz::ToeplitzVector;

use super::law::SubgaussianLaw;
use super::noise::{draw_noise_scaled, NormKind};
use super::operator::{sample_vectors, EffectiveMatrix};

/// Observations `b = A(X_0) + e` with `‖e‖_p ≤ η`.
///
/// Sensing vectors come from `derive_seed(seed, 0)` and noise from
/// `derive_seed(seed, 1)`, so the whole set replays from `(seed, law, X_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub n: usize,
    pub m: usize,
    pub law: SubgaussianLaw,
    pub xi: DMatrix<f64>,
    pub b: Vec<f64>,
    pub e: Vec<f64>,
    pub eta: f64,
    pub p: NormKind,
    pub seed: u64,
    /// Radius scale of the noise relative to the budget.
    pub noise_scale: f64,
    /// Whether `xi` is written out when serialized.
    pub materialized: bool,
}

impl MeasurementSet {
    /// Senses `truth` with `m` vectors from `law` and noise on the `ℓp` sphere of radius `eta`.
    pub fn sense(
        truth: &ToeplitzVector,
        law: &SubgaussianLaw,
        m: usize,
        eta: f64,
        p: NormKind,
        seed: u64,
    ) -> Result<Self> {
        Self::sense_scaled(truth, law, m, eta, p, 1.0, seed)
    }

    pub fn sense_scaled(
        truth: &ToeplitzVector,
        law: &SubgaussianLaw,
        m: usize,
        eta: f64,
        p: NormKind,
        noise_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(invalid("measurement count m must be positive"));
        }
        let n = truth.n();
        let xi = sample_vectors(law, n, m, derive_seed(seed, 0));
        let e = draw_noise_scaled(m, eta, p, noise_scale, derive_seed(seed, 1))?;
        let clean = EffectiveMatrix::from_vectors(&xi).apply(truth)?;
        let b = clean.iter().zip(&e).map(|(a, b)| a + b).collect();
        Ok(Self { n, m, law: law.clone(), xi, b, e, eta, p, seed, noise_scale, materialized: true })
    }

    pub fn operator(&self) -> EffectiveMatrix {
        EffectiveMatrix::from_vectors(&self.xi)
    }

    pub fn with_materialized(mut self, materialized: bool) -> Self {
        self.materialized = materialized;
        self
    }
}

#[derive(Serialize, Deserialize)]
struct MeasurementJson {
    n: usize,
    m: usize,
    p: NormKind,
    eta: f64,
    seed: u64,
    law: SubgaussianLaw,
    #[serde(default = "one")]
    noise_scale: f64,
    materialized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xi: Option<Vec<f64>>,
    b: Vec<f64>,
    e: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl Serialize for MeasurementSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let xi = self.materialized.then(|| {
            let mut flat = Vec::with_capacity(self.n * self.m);
            for k in 0..self.m {
                flat.extend(self.xi.row(k).iter());
            }
            flat
        });
        MeasurementJson {
            n: self.n,
            m: self.m,
            p: self.p,
            eta: self.eta,
            seed: self.seed,
            law: self.law.clone(),
            noise_scale: self.noise_scale,
            materialized: self.materialized,
            xi,
            b: self.b.clone(),
            e: self.e.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasurementSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MeasurementJson::deserialize(d)?;
        MeasurementSet::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<MeasurementJson> for MeasurementSet {
    type Error = Error;

    fn try_from(raw: MeasurementJson) -> Result<Self> {
        let MeasurementJson { n, m, p, eta, seed, law, noise_scale, materialized, xi, b, e } = raw;
        if n == 0 || m == 0 {
            return Err(invalid("measurement set needs n, m >= 1"));
        }
        if b.len() != m || e.len() != m {
            return Err(Error::Dimension(format!("expected {m} observations and noise entries")));
        }
        if !(eta >= 0.0) {
            return Err(invalid(format!("noise budget must be nonnegative, got {eta}")));
        }
        let xi = match xi {
            Some(flat) if flat.len() == n * m => DMatrix::from_row_slice(m, n, &flat),
            Some(flat) => {
                return Err(Error::Dimension(format!("xi has {} entries, expected {}", flat.len(), n * m)))
            }
            None => sample_vectors(&law, n, m, derive_seed(seed, 0)),
        };
        Ok(Self { n, m, law, xi, b, e, eta, p, seed, noise_scale, materialized })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> ToeplitzVector {
        ToeplitzVector::new(vec![1.0, 0.3, -0.2, 0.1]).unwrap()
    }

    #[test]
    fn sensing_is_reproducible() {
        let law = SubgaussianLaw::gaussian();
        let a = MeasurementSet::sense(&truth(), &law, 7, 0.1, NormKind::L1, 5).unwrap();
        let b = MeasurementSet::sense(&truth(), &law, 7, 0.1, NormKind::L1, 5).unwrap();
        assert_eq!(a, b);
        assert!(NormKind::L1.norm(&a.e) <= 0.1 * (1.0 + 1e-12));
        let clean = a.operator().apply(&truth()).unwrap();
        for k in 0..7 {
            assert!((a.b[k] - clean[k] - a.e[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn json_materialized_and_lazy() {
        let law = SubgaussianLaw::uniform();
        let set = MeasurementSet::sense(&truth(), &law, 5, 0.0, NormKind::Inf, 8).unwrap();
        let text = serde_json::to_string(&set).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["p"], "inf");
        assert_eq!(v["xi"].as_array().unwrap().len(), 20);
        assert_eq!(serde_json::from_str::<MeasurementSet>(&text).unwrap(), set);

        let lazy = set.clone().with_materialized(false);
        let text = serde_json::to_string(&lazy).unwrap();
        assert!(!text.contains("\"xi\""));
        let back: MeasurementSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back.xi, set.xi);
    }

    #[test]
    fn rejects_empty() {
        assert!(MeasurementSet::sense(&truth(), &SubgaussianLaw::gaussian(), 0, 0.0, NormKind::L2, 1).is_err());
    }
}

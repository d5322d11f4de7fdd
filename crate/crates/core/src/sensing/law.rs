//! Zero-mean, unit-variance subgaussian scalar laws.
//!
//! Each law is a [`ScalarLaw`] trait object. Built-in laws are registered by
//! name in a [`LawRegistry`]; a finite discrete law is built from explicit
//! values and probabilities.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on mean and variance when validating a discrete law.
pub const DISCRETE_MOMENT_TOL: f64 = 1e-12;

/// A scalar sensing law with `E ξ = 0`, `E ξ² = 1`, `E ξ⁴ = μ ≥ 1` and
/// subgaussian norm at most `k_bound`.
pub trait ScalarLaw: Send + Sync + fmt::Debug {
    /// Registry name, also used as the `kind` field of the JSON form.
    fn name(&self) -> &str;

    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    /// `μ = E ξ⁴`.
    fn fourth_moment(&self) -> f64;

    /// Upper bound `K` on the subgaussian norm `||ξ||_ψ2`.
    fn k_bound(&self) -> f64;

    /// Extra parameters for the JSON form; only parametric laws carry any.
    fn parameters(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    fn fill(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        for v in out {
            *v = self.sample(rng);
        }
    }
}

/// Standard normal. `μ = 3`, `K = √(8/3)` (the exact ψ2 norm: `E exp(ξ²/t²) = (1 - 2/t²)^{-1/2}`).
#[derive(Debug, Clone, Copy)]
pub struct Gaussian;

impl ScalarLaw for Gaussian {
    fn name(&self) -> &str {
        "gaussian"
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        rng.sample(StandardNormal)
    }
    fn fourth_moment(&self) -> f64 {
        3.0
    }
    fn k_bound(&self) -> f64 {
        (8.0_f64 / 3.0).sqrt()
    }
    fn fill(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        for v in out {
            *v = rng.sample(StandardNormal);
        }
    }
}

/// Symmetric ±1. `μ = 1`, `K = 1/√(ln 2)` (exact).
#[derive(Debug, Clone, Copy)]
pub struct Rademacher;

impl ScalarLaw for Rademacher {
    fn name(&self) -> &str {
        "rademacher"
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        if rng.next_u32() & 1 == 0 {
            -1.0
        } else {
            1.0
        }
    }
    fn fourth_moment(&self) -> f64 {
        1.0
    }
    fn k_bound(&self) -> f64 {
        1.0 / std::f64::consts::LN_2.sqrt()
    }
}

/// Uniform on `[-√3, √3]`. `μ = 9/5`, `K = √3/√(ln 2)` (bound for `|ξ| ≤ √3`).
#[derive(Debug, Clone, Copy)]
pub struct Uniform;

impl ScalarLaw for Uniform {
    fn name(&self) -> &str {
        "uniform"
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let s = 3.0_f64.sqrt();
        rng.random_range(-s..s)
    }
    fn fourth_moment(&self) -> f64 {
        9.0 / 5.0
    }
    fn k_bound(&self) -> f64 {
        3.0_f64.sqrt() / std::f64::consts::LN_2.sqrt()
    }
}

/// Finite law on `values` with probabilities `probs`.
#[derive(Debug, Clone)]
pub struct Discrete {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    mu: f64,
    k: f64,
}

impl Discrete {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(invalid("discrete law needs matching, nonempty values and probs"));
        }
        if values.iter().chain(&probs).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("discrete law"));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(invalid("discrete law probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DISCRETE_MOMENT_TOL {
            return Err(invalid(format!("discrete law probabilities sum to {total}")));
        }
        let moment = |k: i32| -> f64 { values.iter().zip(&probs).map(|(v, p)| p * v.powi(k)).sum() };
        let (mean, var) = (moment(1), moment(2));
        if mean.abs() > DISCRETE_MOMENT_TOL || (var - 1.0).abs() > DISCRETE_MOMENT_TOL {
            return Err(invalid(format!(
                "discrete law must have mean 0 and variance 1, got mean {mean:e}, variance {var}"
            )));
        }
        let mu = moment(4);
        let k = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())) / std::f64::consts::LN_2.sqrt();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { values, probs, cumulative, mu, k })
    }
}

impl ScalarLaw for Discrete {
    fn name(&self) -> &str {
        "discrete"
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.values.len() - 1);
        self.values[idx]
    }
    fn fourth_moment(&self) -> f64 {
        self.mu
    }
    fn k_bound(&self) -> f64 {
        self.k
    }
    fn parameters(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((self.values.clone(), self.probs.clone()))
    }
}

/// Shared handle to a law; serializes as `{"kind", "mu", "k_bound"[, "values", "probs"]}`.
#[derive(Clone)]
pub struct SubgaussianLaw(Arc<dyn ScalarLaw>);

impl SubgaussianLaw {
    pub fn new(law: impl ScalarLaw + 'static) -> Self {
        Self(Arc::new(law))
    }

    pub fn gaussian() -> Self {
        Self::new(Gaussian)
    }

    pub fn rademacher() -> Self {
        Self::new(Rademacher)
    }

    pub fn uniform() -> Self {
        Self::new(Uniform)
    }

    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Ok(Self::new(Discrete::new(values, probs)?))
    }

    pub fn name(&self) -> &str {
        self.0.name()
    }

    pub fn mu(&self) -> f64 {
        self.0.fourth_moment()
    }

    pub fn k_bound(&self) -> f64 {
        self.0.k_bound()
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.0.sample(rng)
    }

    pub fn fill(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        self.0.fill(rng, out)
    }

    pub fn as_dyn(&self) -> &dyn ScalarLaw {
        self.0.as_ref()
    }
}

impl fmt::Debug for SubgaussianLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl PartialEq for SubgaussianLaw {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name() && self.0.parameters() == other.0.parameters()
    }
}

#[derive(Serialize, Deserialize)]
struct LawJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
}

impl Serialize for SubgaussianLaw {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (values, probs) = match self.0.parameters() {
            Some((v, p)) => (Some(v), Some(p)),
            None => (None, None),
        };
        LawJson {
            kind: self.name().to_string(),
            mu: Some(self.mu()),
            k_bound: Some(self.k_bound()),
            values,
            probs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubgaussianLaw {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = LawJson::deserialize(d)?;
        let law = match (raw.values, raw.probs) {
            (Some(values), Some(probs)) if raw.kind == "discrete" => SubgaussianLaw::discrete(values, probs),
            _ => LawRegistry::builtin().create(&raw.kind),
        };
        law.map_err(serde::de::Error::custom)
    }
}

type LawFactory = fn() -> SubgaussianLaw;

/// Name-indexed table of parameter-free laws.
#[derive(Clone)]
pub struct LawRegistry {
    factories: BTreeMap<String, LawFactory>,
}

impl LawRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// `gaussian`, `rademacher` (alias `bernoulli`) and `uniform`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("gaussian", SubgaussianLaw::gaussian);
        r.register("rademacher", SubgaussianLaw::rademacher);
        r.register("bernoulli", SubgaussianLaw::rademacher);
        r.register("uniform", SubgaussianLaw::uniform);
        r
    }

    pub fn register(&mut self, name: &str, factory: LawFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn create(&self, name: &str) -> Result<SubgaussianLaw> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| Error::Unknown { kind: "law", name: name.to_string() })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}

/// Looks up a built-in law by name.
pub fn builtin_law(kind: &str) -> Result<SubgaussianLaw> {
    LawRegistry::builtin().create(kind)
}

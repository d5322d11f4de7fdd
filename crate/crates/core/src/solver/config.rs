use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Parameters of the splitting solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Penalty parameter.
    pub rho: f64,
    pub max_iter: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// Residual balancing: double or halve `rho` when the residual ratio exceeds 10.
    pub adapt: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { rho: 1.0, max_iter: 5000, tol_abs: 1e-8, tol_rel: 1e-6, adapt: true }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be positive"));
        }
        if !(self.tol_abs > 0.0 && self.tol_rel > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        Ok(())
    }

    /// Parses either a JSON object or flat `key = value` lines (`#` starts a comment).
    /// Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            let mut cfg = Self::default();
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| invalid(format!("line {}: expected key=value", lineno + 1)))?;
                let (key, value) = (key.trim(), value.trim());
                let bad = || invalid(format!("line {}: bad value `{value}` for `{key}`", lineno + 1));
                match key {
                    "rho" => cfg.rho = value.parse().map_err(|_| bad())?,
                    "max_iter" => cfg.max_iter = value.parse().map_err(|_| bad())?,
                    "tol_abs" => cfg.tol_abs = value.parse().map_err(|_| bad())?,
                    "tol_rel" => cfg.tol_rel = value.parse().map_err(|_| bad())?,
                    "adapt" => cfg.adapt = value.parse().map_err(|_| bad())?,
                    other => return Err(invalid(format!("line {}: unknown key `{other}`", lineno + 1))),
                }
            }
            cfg
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json() {
        let kv = SolverConfig::parse("# solver\nrho = 2.5\nmax_iter=100\nadapt = false\n").unwrap();
        assert_eq!(kv.rho, 2.5);
        assert_eq!(kv.max_iter, 100);
        assert!(!kv.adapt);
        assert_eq!(kv.tol_rel, 1e-6);
        let js = SolverConfig::parse(r#"{"rho": 2.5, "max_iter": 100, "adapt": false}"#).unwrap();
        assert_eq!(js, kv);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SolverConfig::parse("rho = -1").is_err());
        assert!(SolverConfig::parse("speed = 3").is_err());
        assert!(SolverConfig::parse("rho").is_err());
        assert!(SolverConfig::parse(r#"{"tol_abs": 0}"#).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::nuclear_norm;
use crate::sensing::{EffectiveMatrix, NormKind};
use crate::toeplitz::ToeplitzVector;

/// Relative slack on the noise budget when judging feasibility.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

/// Feasibility and, given the ground truth, accuracy of a recovered matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub feasible: bool,
    /// `‖A ẑ - b‖_p`.
    pub residual_norm: f64,
    pub objective: f64,
    /// `‖X̂‖_* - ‖X_0‖_*`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_vs_truth: Option<f64>,
    /// `‖X̂ - X_0‖_F`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    /// `‖X̂ - X_0‖_F / ‖X_0‖_F`, or the absolute error when `X_0 = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_error: Option<f64>,
}

pub fn certify(
    z_hat: &ToeplitzVector,
    a: &EffectiveMatrix,
    b: &[f64],
    eta: f64,
    p: NormKind,
    truth: Option<&ToeplitzVector>,
) -> Result<Certificate> {
    if z_hat.n() != a.n() || b.len() != a.m() {
        return Err(Error::Dimension("certificate shapes disagree".into()));
    }
    let residual_norm = p.distance(&a.apply(z_hat)?, b);
    let objective = nuclear_norm(&z_hat.to_dense());
    let mut cert = Certificate {
        feasible: residual_norm <= eta * (1.0 + FEASIBILITY_SLACK),
        residual_norm,
        objective,
        objective_vs_truth: None,
        abs_error: None,
        rel_error: None,
    };
    if let Some(truth) = truth {
        if truth.n() != z_hat.n() {
            return Err(Error::Dimension("truth and estimate sizes differ".into()));
        }
        let abs = z_hat.sub(truth).frobenius_norm();
        let scale = truth.frobenius_norm();
        cert.objective_vs_truth = Some(objective - nuclear_norm(&truth.to_dense()));
        cert.abs_error = Some(abs);
        cert.rel_error = Some(if scale > 0.0 { abs / scale } else { abs });
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{MeasurementSet, SubgaussianLaw};

    #[test]
    fn truth_is_feasible_and_exact() {
        let truth = ToeplitzVector::new(vec![1.0, -0.4, 0.2, 0.0, 0.1]).unwrap();
        for p in NormKind::ALL {
            let set = MeasurementSet::sense(&truth, &SubgaussianLaw::gaussian(), 9, 0.05, p, 4).unwrap();
            let cert = certify(&truth, &set.operator(), &set.b, set.eta, p, Some(&truth)).unwrap();
            assert!(cert.feasible);
            assert_eq!(cert.rel_error, Some(0.0));
            assert_eq!(cert.objective_vs_truth, Some(0.0));
        }
    }

    #[test]
    fn infeasible_point() {
        let truth = ToeplitzVector::identity(4);
        let set = MeasurementSet::sense(&truth, &SubgaussianLaw::gaussian(), 6, 0.0, NormKind::L2, 4).unwrap();
        let cert = certify(&ToeplitzVector::zeros(4), &set.operator(), &set.b, 0.0, NormKind::L2, None).unwrap();
        assert!(!cert.feasible);
        assert!(cert.rel_error.is_none());
    }
}

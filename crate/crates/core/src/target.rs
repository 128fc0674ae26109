//! Target distributions the generator learns to imitate: a named density
//! family evaluated at the integer grid points 0..2^n-1 and normalized.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TargetError {
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("custom target has {got} entries, expected 2^{n_qubits} = {expected}")]
    LengthMismatch {
        n_qubits: usize,
        expected: usize,
        got: usize,
    },
    #[error("target density carries no mass on the grid")]
    DegenerateTarget,
    #[error("custom target entry {0} is negative or not finite")]
    InvalidMass(usize),
}

/// Density family, evaluated pointwise on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TargetFamily {
    Lognormal { mu: f64, sigma: f64 },
    Normal { mu: f64, sigma: f64 },
    Uniform,
    Custom { probs: Vec<f64> },
}

/// Normalized probabilities over the 2^n grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    n_qubits: usize,
    probs: Vec<f64>,
    family: TargetFamily,
}

impl TargetDistribution {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn family(&self) -> &TargetFamily {
        &self.family
    }
}

/// Evaluates the family's density at grid points 0..2^n-1 and normalizes the
/// result to sum 1.
pub fn discretize_target(
    family: &TargetFamily,
    n_qubits: usize,
) -> Result<TargetDistribution, TargetError> {
    let bins = 1usize << n_qubits;
    let raw: Vec<f64> = match family {
        TargetFamily::Lognormal { mu, sigma } => {
            if *sigma <= 0.0 {
                return Err(TargetError::InvalidSigma(*sigma));
            }
            (0..bins).map(|k| lognormal_pdf(k as f64, *mu, *sigma)).collect()
        }
        TargetFamily::Normal { mu, sigma } => {
            if *sigma <= 0.0 {
                return Err(TargetError::InvalidSigma(*sigma));
            }
            (0..bins).map(|k| normal_pdf(k as f64, *mu, *sigma)).collect()
        }
        TargetFamily::Uniform => vec![1.0; bins],
        TargetFamily::Custom { probs } => {
            if probs.len() != bins {
                return Err(TargetError::LengthMismatch {
                    n_qubits,
                    expected: bins,
                    got: probs.len(),
                });
            }
            if let Some(bad) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
                return Err(TargetError::InvalidMass(bad));
            }
            probs.clone()
        }
    };
    let total: f64 = raw.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(TargetError::DegenerateTarget);
    }
    Ok(TargetDistribution {
        n_qubits,
        probs: raw.into_iter().map(|v| v / total).collect(),
        family: family.clone(),
    })
}

fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn lognormal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let z = (x.ln() - mu) / sigma;
    (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_example() {
        let target = discretize_target(&TargetFamily::Uniform, 2).unwrap();
        assert_eq!(target.probs(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn custom_point_mass() {
        let mut probs = vec![0.0; 8];
        probs[0] = 1.0;
        let target =
            discretize_target(&TargetFamily::Custom { probs: probs.clone() }, 3).unwrap();
        assert_eq!(target.probs(), &probs[..]);
    }

    #[test]
    fn lognormal_example_matches_frozen_density_values() {
        let target =
            discretize_target(&TargetFamily::Lognormal { mu: 1.0, sigma: 1.0 }, 3).unwrap();
        // Normalized pointwise density of Lognormal(1,1) at 0..7, computed
        // externally from the closed-form pdf.
        let expected = [
            0.0,
            0.299294754908,
            0.235380271573,
            0.163686728624,
            0.114494050659,
            0.0819642923422,
            0.0601131062848,
            0.0450667956086,
        ];
        let sum: f64 = target.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
        for (k, (got, want)) in target.probs().iter().zip(expected).enumerate() {
            assert!((got - want).abs() < 1e-10, "bin {k}: {got} vs {want}");
        }
        // Mode sits at an interior grid point.
        let mode = target
            .probs()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(mode, 1);
    }

    #[test]
    fn normal_is_symmetric_around_its_center() {
        let target =
            discretize_target(&TargetFamily::Normal { mu: 3.5, sigma: 1.0 }, 3).unwrap();
        let probs = target.probs();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for k in 0..4 {
            assert!((probs[k] - probs[7 - k]).abs() < 1e-12);
        }
        assert!((probs[3] - 0.352076659676).abs() < 1e-10);
    }

    #[test]
    fn error_cases() {
        assert_eq!(
            discretize_target(&TargetFamily::Lognormal { mu: 0.0, sigma: 0.0 }, 3),
            Err(TargetError::InvalidSigma(0.0))
        );
        assert_eq!(
            discretize_target(&TargetFamily::Custom { probs: vec![0.5; 3] }, 2),
            Err(TargetError::LengthMismatch {
                n_qubits: 2,
                expected: 4,
                got: 3
            })
        );
        assert_eq!(
            discretize_target(&TargetFamily::Custom { probs: vec![0.0; 4] }, 2),
            Err(TargetError::DegenerateTarget)
        );
        assert_eq!(
            discretize_target(&TargetFamily::Custom { probs: vec![0.1, -0.2, 0.3, 0.1] }, 2),
            Err(TargetError::InvalidMass(1))
        );
        // A lognormal squeezed between grid points underflows everywhere.
        assert_eq!(
            discretize_target(
                &TargetFamily::Lognormal { mu: -400.0, sigma: 1e-3 },
                2
            ),
            Err(TargetError::DegenerateTarget)
        );
    }
}

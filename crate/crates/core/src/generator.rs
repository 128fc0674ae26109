//! Quantum generator: a Hadamard preparation layer followed by the built
//! ansatz. Works with exact basis-state probabilities rather than samples,
//! so expectations and gradients are free of sampling noise.

use ndarray::Array2;

use crate::sim::{Circuit, SimError, StateVector};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("theta has {got} entries, ansatz expects {expected}")]
    ThetaLengthMismatch { expected: usize, got: usize },
    #[error("theta[{0}] is not finite")]
    NonFiniteTheta(usize),
    #[error("discriminator output {value} at bin {index} outside (0, 1]")]
    InvalidDiscriminatorOutput { index: usize, value: f64 },
    #[error("expected {expected} discriminator outputs, got {got}")]
    OutputLengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Generator state: the ansatz circuit and its current rotation angles.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorModel {
    n_qubits: usize,
    ansatz: Circuit,
    theta: Vec<f64>,
}

impl GeneratorModel {
    pub fn new(ansatz: Circuit, theta: Vec<f64>) -> Result<Self, GeneratorError> {
        if theta.len() != ansatz.param_count() {
            return Err(GeneratorError::ThetaLengthMismatch {
                expected: ansatz.param_count(),
                got: theta.len(),
            });
        }
        if let Some(bad) = theta.iter().position(|t| !t.is_finite()) {
            return Err(GeneratorError::NonFiniteTheta(bad));
        }
        Ok(Self {
            n_qubits: ansatz.n_qubits(),
            ansatz,
            theta,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ansatz(&self) -> &Circuit {
        &self.ansatz
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<(), GeneratorError> {
        if theta.len() != self.ansatz.param_count() {
            return Err(GeneratorError::ThetaLengthMismatch {
                expected: self.ansatz.param_count(),
                got: theta.len(),
            });
        }
        if let Some(bad) = theta.iter().position(|t| !t.is_finite()) {
            return Err(GeneratorError::NonFiniteTheta(bad));
        }
        self.theta = theta;
        Ok(())
    }

    /// Number of basis states, i.e. output bins.
    pub fn n_bins(&self) -> usize {
        1 << self.n_qubits
    }

    fn distribution_at(&self, theta: &[f64]) -> Result<Vec<f64>, SimError> {
        let state = StateVector::plus(self.n_qubits)?.apply_circuit(&self.ansatz, theta)?;
        Ok(state.probabilities())
    }
}

/// Exact output distribution p_theta over the 2^n basis states.
pub fn generator_distribution(model: &GeneratorModel) -> Result<Vec<f64>, GeneratorError> {
    Ok(model.distribution_at(model.theta())?)
}

/// Parameter-shift Jacobian of a distribution-valued function: entry (k, j)
/// is [p_k(theta + (pi/2) e_j) - p_k(theta - (pi/2) e_j)] / 2, exact for
/// single-qubit rotation parameters.
///
/// Generic over the evaluation so circuits without the preparation layer can
/// be differentiated in tests.
pub fn parameter_shift_jacobian<F, E>(
    theta: &[f64],
    n_bins: usize,
    eval: F,
) -> Result<Array2<f64>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    let mut jacobian = Array2::zeros((n_bins, theta.len()));
    let mut shifted = theta.to_vec();
    for j in 0..theta.len() {
        shifted[j] = theta[j] + std::f64::consts::FRAC_PI_2;
        let plus = eval(&shifted)?;
        shifted[j] = theta[j] - std::f64::consts::FRAC_PI_2;
        let minus = eval(&shifted)?;
        shifted[j] = theta[j];
        for k in 0..n_bins {
            jacobian[(k, j)] = (plus[k] - minus[k]) / 2.0;
        }
    }
    Ok(jacobian)
}

/// Jacobian of the generator distribution with respect to theta; each column
/// sums to zero because probabilities are conserved.
pub fn distribution_jacobian(model: &GeneratorModel) -> Result<Array2<f64>, GeneratorError> {
    let jacobian = parameter_shift_jacobian(model.theta(), model.n_bins(), |theta| {
        model.distribution_at(theta)
    })?;
    Ok(jacobian)
}

/// Non-saturating generator loss and its exact gradient.
///
/// `disc_outputs_per_bin[k]` is the discriminator's inference-mode output
/// D(x_k) for grid point k, required to lie in (0, 1]. Returns
/// loss = -sum_k p_theta(k) ln D(x_k) and
/// grad_j = -sum_k (dp_k/dtheta_j) ln D(x_k).
pub fn generator_loss_and_grad(
    model: &GeneratorModel,
    disc_outputs_per_bin: &[f64],
) -> Result<(f64, Vec<f64>), GeneratorError> {
    if disc_outputs_per_bin.len() != model.n_bins() {
        return Err(GeneratorError::OutputLengthMismatch {
            expected: model.n_bins(),
            got: disc_outputs_per_bin.len(),
        });
    }
    for (index, &value) in disc_outputs_per_bin.iter().enumerate() {
        if !(value > 0.0 && value <= 1.0) {
            return Err(GeneratorError::InvalidDiscriminatorOutput { index, value });
        }
    }
    let log_d: Vec<f64> = disc_outputs_per_bin.iter().map(|d| d.ln()).collect();
    let probs = generator_distribution(model)?;
    let loss = -probs.iter().zip(&log_d).map(|(p, l)| p * l).sum::<f64>();
    let jacobian = distribution_jacobian(model)?;
    let grad = (0..model.theta().len())
        .map(|j| -(0..model.n_bins()).map(|k| jacobian[(k, j)] * log_d[k]).sum::<f64>())
        .collect();
    Ok((loss, grad))
}

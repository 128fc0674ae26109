//! AMSGRAD in its reference form: exponential moving averages m and v, a
//! running elementwise maximum v-hat, and no bias correction.

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum OptimError {
    #[error("gradient {0} is not finite")]
    NonFiniteGradient(usize),
    #[error("optimizer tracks {expected} parameters, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Per-parameter optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Amsgrad {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    v_hat: Vec<f64>,
    steps: u64,
}

impl Amsgrad {
    pub fn new(n_params: usize) -> Self {
        Self {
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            v_hat: vec![0.0; n_params],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// In-place update:
    /// m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2; vhat <- max(vhat, v);
    /// param -= lr * m / (sqrt(vhat) + eps).
    pub fn step(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        lr: f64,
    ) -> Result<(), OptimError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(OptimError::ShapeMismatch {
                expected: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        if let Some(bad) = grads.iter().position(|g| !g.is_finite()) {
            return Err(OptimError::NonFiniteGradient(bad));
        }
        for j in 0..params.len() {
            let g = grads[j];
            self.m[j] = self.beta1 * self.m[j] + (1.0 - self.beta1) * g;
            self.v[j] = self.beta2 * self.v[j] + (1.0 - self.beta2) * g * g;
            self.v_hat[j] = self.v_hat[j].max(self.v[j]);
            params[j] -= lr * self.m[j] / (self.v_hat[j].sqrt() + self.epsilon);
        }
        self.steps += 1;
        Ok(())
    }
}

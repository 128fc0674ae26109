//! From-scratch discriminator MLP: widths 1-256-128-64-32-16-1, each hidden
//! layer running linear -> LeakyReLU(0.2) -> BatchNorm -> dropout(0.3), then
//! a linear output squashed by a sigmoid. Forward, analytic backprop through
//! the batch-statistics BatchNorm path, and binary cross-entropy live here;
//! the optimizer is separate.

use ndarray::{Array1, Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const HIDDEN_WIDTHS: [usize; 5] = [256, 128, 64, 32, 16];
pub const LEAKY_SLOPE: f64 = 0.2;
pub const DROPOUT_RATE: f64 = 0.3;
pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPSILON: f64 = 1e-5;

/// Clamp bound applied to probabilities before logarithms.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum DiscError {
    #[error("train-mode batch needs at least 2 rows, got {0}")]
    BatchTooSmall(usize),
    #[error("train-mode forward needs an rng seed for the dropout masks")]
    MissingSeed,
    #[error("parameter vector has {got} entries, net expects {expected}")]
    ParamLengthMismatch { expected: usize, got: usize },
    #[error("parameter {0} is not finite")]
    NonFiniteParam(usize),
    #[error("label at row {0} is not 0 or 1")]
    InvalidLabel(usize),
    #[error("batch field lengths differ")]
    LengthMismatch,
    #[error("weight at row {0} is negative or not finite")]
    InvalidWeight(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
struct HiddenLayer {
    weight: Array2<f64>, // (out, in)
    bias: Array1<f64>,
    gamma: Array1<f64>,
    beta: Array1<f64>,
    running_mean: Array1<f64>,
    running_var: Array1<f64>,
}

impl HiddenLayer {
    #[cfg(test)]
    fn width(&self) -> usize {
        self.weight.nrows()
    }
}

/// One labelled batch for the discriminator: scalar inputs, 0/1 labels, and
/// optional per-row weights (intended to sum to 1 within each class so the
/// loss is a sum of two class expectations).
#[derive(Debug, Clone, PartialEq)]
pub struct BceBatch {
    pub inputs: Vec<f64>,
    pub labels: Vec<f64>,
    pub weights: Option<Vec<f64>>,
}

impl BceBatch {
    pub fn new(
        inputs: Vec<f64>,
        labels: Vec<f64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, DiscError> {
        if labels.len() != inputs.len()
            || weights.as_ref().is_some_and(|w| w.len() != inputs.len())
        {
            return Err(DiscError::LengthMismatch);
        }
        if let Some(row) = labels.iter().position(|l| *l != 0.0 && *l != 1.0) {
            return Err(DiscError::InvalidLabel(row));
        }
        if let Some(weights) = &weights {
            if let Some(row) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
                return Err(DiscError::InvalidWeight(row));
            }
        }
        Ok(Self {
            inputs,
            labels,
            weights,
        })
    }
}

/// Everything the backward pass needs from a train-mode forward.
struct TrainCache {
    layer_inputs: Vec<Array2<f64>>, // input to each linear, hidden layers then output layer
    preactivations: Vec<Array2<f64>>,
    normalized: Vec<Array2<f64>>, // pre-gamma BatchNorm outputs
    inv_std: Vec<Array1<f64>>,
    masks: Vec<Array2<f64>>,
    outputs: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorNet {
    hidden: Vec<HiddenLayer>,
    out_weight: Array2<f64>, // (1, last hidden width)
    out_bias: Array1<f64>,
    dropout: f64,
    mode: Mode,
}

impl DiscriminatorNet {
    /// The full-width net with the standard dropout rate.
    pub fn standard(init_seed: u64) -> Self {
        let widths = [
            &[1][..],
            &HIDDEN_WIDTHS[..],
            &[1][..],
        ]
        .concat();
        Self::with_geometry(&widths, DROPOUT_RATE, init_seed)
    }

    /// Arbitrary geometry for tests and experiments. `widths` runs from the
    /// input dimension to the scalar output, e.g. `[1, 4, 1]` for one hidden
    /// layer of width 4. Weights start uniform in +-1/sqrt(fan_in), biases
    /// and BatchNorm shifts at 0, scales at 1.
    pub fn with_geometry(widths: &[usize], dropout: f64, init_seed: u64) -> Self {
        assert!(
            widths.len() >= 2 && *widths.last().unwrap() == 1,
            "widths must run from input dim to a scalar output"
        );
        assert!(widths.iter().all(|w| *w >= 1));
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let mut draw = |rows: usize, cols: usize| {
            let bound = 1.0 / (cols as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
        };
        let hidden = widths
            .windows(2)
            .take(widths.len() - 2)
            .map(|pair| HiddenLayer {
                weight: draw(pair[1], pair[0]),
                bias: Array1::zeros(pair[1]),
                gamma: Array1::ones(pair[1]),
                beta: Array1::zeros(pair[1]),
                running_mean: Array1::zeros(pair[1]),
                running_var: Array1::ones(pair[1]),
            })
            .collect();
        let last = widths[widths.len() - 2];
        DiscriminatorNet {
            hidden,
            out_weight: draw(1, last),
            out_bias: Array1::zeros(1),
            dropout,
            mode: Mode::Train,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Forward pass honoring the current mode. Train mode draws dropout
    /// masks from `rng_seed`, normalizes with batch statistics, and updates
    /// the running statistics; Infer mode is deterministic.
    pub fn forward(
        &mut self,
        inputs: &[f64],
        rng_seed: Option<u64>,
    ) -> Result<Vec<f64>, DiscError> {
        match self.mode {
            Mode::Infer => Ok(self.infer(inputs)),
            Mode::Train => {
                let seed = rng_seed.ok_or(DiscError::MissingSeed)?;
                let cache = self.forward_train(inputs, seed)?;
                Ok(cache.outputs.to_vec())
            }
        }
    }

    /// Inference-mode forward: running statistics, no dropout, no mutation.
    pub fn infer(&self, inputs: &[f64]) -> Vec<f64> {
        let mut x = Array2::from_shape_vec((inputs.len(), 1), inputs.to_vec()).unwrap();
        for layer in &self.hidden {
            let z = x.dot(&layer.weight.t()) + &layer.bias;
            let a = z.mapv(leaky_relu);
            let inv_std = layer.running_var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
            let normalized = (&a - &layer.running_mean) * &inv_std;
            x = normalized * &layer.gamma + &layer.beta;
        }
        let z = x.dot(&self.out_weight.t()) + &self.out_bias;
        z.column(0).mapv(sigmoid).to_vec()
    }

    /// Train-mode forward with cached intermediates; updates running stats.
    fn forward_train(&mut self, inputs: &[f64], seed: u64) -> Result<TrainCache, DiscError> {
        let rows = inputs.len();
        if rows < 2 {
            return Err(DiscError::BatchTooSmall(rows));
        }
        let m = rows as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::from_shape_vec((rows, 1), inputs.to_vec()).unwrap();
        let mut cache = TrainCache {
            layer_inputs: Vec::with_capacity(self.hidden.len() + 1),
            preactivations: Vec::with_capacity(self.hidden.len()),
            normalized: Vec::with_capacity(self.hidden.len()),
            inv_std: Vec::with_capacity(self.hidden.len()),
            masks: Vec::with_capacity(self.hidden.len()),
            outputs: Array1::zeros(0),
        };
        for layer in &mut self.hidden {
            cache.layer_inputs.push(x.clone());
            let z = x.dot(&layer.weight.t()) + &layer.bias;
            let a = z.mapv(leaky_relu);
            let mean = a.mean_axis(Axis(0)).unwrap();
            let centered = &a - &mean;
            let var = centered.mapv(|c| c * c).mean_axis(Axis(0)).unwrap();
            let inv_std = var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
            let normalized = &centered * &inv_std;
            let y = &normalized * &layer.gamma + &layer.beta;
            // Running stats follow the usual convention: biased variance for
            // normalization, unbiased for the running estimate.
            let unbiased = var.mapv(|v| v * m / (m - 1.0));
            layer.running_mean =
                &layer.running_mean * (1.0 - BN_MOMENTUM) + &mean * BN_MOMENTUM;
            layer.running_var =
                &layer.running_var * (1.0 - BN_MOMENTUM) + &unbiased * BN_MOMENTUM;
            let (mask, dropped) = if self.dropout >= 1.0 {
                (Array2::zeros(y.dim()), Array2::zeros(y.dim()))
            } else if self.dropout > 0.0 {
                let keep = 1.0 - self.dropout;
                let mask = Array2::from_shape_fn(y.dim(), |_| {
                    if rng.gen::<f64>() < self.dropout {
                        0.0
                    } else {
                        1.0
                    }
                });
                let dropped = &y * &mask / keep;
                (mask, dropped)
            } else {
                (Array2::ones(y.dim()), y.clone())
            };
            cache.preactivations.push(z);
            cache.normalized.push(normalized);
            cache.inv_std.push(inv_std);
            cache.masks.push(mask);
            x = dropped;
        }
        cache.layer_inputs.push(x.clone());
        let z = x.dot(&self.out_weight.t()) + &self.out_bias;
        cache.outputs = z.column(0).mapv(sigmoid);
        Ok(cache)
    }

    /// One train-mode forward (updating running stats once) plus an exact
    /// analytic backward pass. Returns the batch BCE loss and the gradient
    /// laid out like [`param_vector`](Self::param_vector).
    pub fn backward(&mut self, batch: &BceBatch, rng_seed: u64) -> Result<(f64, Vec<f64>), DiscError> {
        let cache = self.forward_train(&batch.inputs, rng_seed)?;
        let outputs = cache.outputs.to_vec();
        let loss = bce_loss(&outputs, &batch.labels, batch.weights.as_deref());

        let rows = batch.inputs.len();
        let uniform = 1.0 / rows as f64;
        // d(loss)/d(output preactivation) = w * (sigmoid(z) - y); the clamp
        // only matters where this factor already vanishes.
        let dz_out = Array2::from_shape_fn((rows, 1), |(i, _)| {
            let w = batch.weights.as_ref().map_or(uniform, |w| w[i]);
            w * (cache.outputs[i] - batch.labels[i])
        });

        let mut grads_reversed: Vec<(Array2<f64>, Array1<f64>, Array1<f64>, Array1<f64>)> =
            Vec::with_capacity(self.hidden.len());
        let x_last = &cache.layer_inputs[self.hidden.len()];
        let d_out_weight = dz_out.t().dot(x_last);
        let d_out_bias = dz_out.sum_axis(Axis(0));
        let mut dx = dz_out.dot(&self.out_weight);

        for (i, layer) in self.hidden.iter().enumerate().rev() {
            let dy = if self.dropout >= 1.0 {
                Array2::zeros(dx.dim())
            } else if self.dropout > 0.0 {
                &dx * &cache.masks[i] / (1.0 - self.dropout)
            } else {
                dx
            };
            let normalized = &cache.normalized[i];
            let d_gamma = (&dy * normalized).sum_axis(Axis(0));
            let d_beta = dy.sum_axis(Axis(0));
            let d_normalized = dy * &layer.gamma;
            // Batch-statistics BatchNorm backward:
            // da = inv_std/m * (m*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat))
            let m = batch.inputs.len() as f64;
            let sum_dn = d_normalized.sum_axis(Axis(0));
            let sum_dn_n = (&d_normalized * normalized).sum_axis(Axis(0));
            let da =
                ((d_normalized * m - &sum_dn) - normalized * &sum_dn_n) * &cache.inv_std[i] / m;
            let dz = da * cache.preactivations[i].mapv(|z| if z > 0.0 { 1.0 } else { LEAKY_SLOPE });
            let d_weight = dz.t().dot(&cache.layer_inputs[i]);
            let d_bias = dz.sum_axis(Axis(0));
            dx = dz.dot(&layer.weight);
            grads_reversed.push((d_weight, d_bias, d_gamma, d_beta));
        }

        let mut grad = Vec::with_capacity(self.param_len());
        for (d_weight, d_bias, d_gamma, d_beta) in grads_reversed.into_iter().rev() {
            grad.extend(d_weight.iter());
            grad.extend(d_bias.iter());
            grad.extend(d_gamma.iter());
            grad.extend(d_beta.iter());
        }
        grad.extend(d_out_weight.iter());
        grad.extend(d_out_bias.iter());
        Ok((loss, grad))
    }

    /// Number of trainable parameters (running stats are not trained).
    pub fn param_len(&self) -> usize {
        let hidden: usize = self
            .hidden
            .iter()
            .map(|l| l.weight.len() + l.bias.len() + l.gamma.len() + l.beta.len())
            .sum();
        hidden + self.out_weight.len() + self.out_bias.len()
    }

    /// Trainable parameters flattened in a fixed order: per hidden layer
    /// weight (row-major), bias, gamma, beta; then output weight and bias.
    pub fn param_vector(&self) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_len());
        for layer in &self.hidden {
            params.extend(layer.weight.iter());
            params.extend(layer.bias.iter());
            params.extend(layer.gamma.iter());
            params.extend(layer.beta.iter());
        }
        params.extend(self.out_weight.iter());
        params.extend(self.out_bias.iter());
        params
    }

    pub fn set_param_vector(&mut self, params: &[f64]) -> Result<(), DiscError> {
        if params.len() != self.param_len() {
            return Err(DiscError::ParamLengthMismatch {
                expected: self.param_len(),
                got: params.len(),
            });
        }
        if let Some(bad) = params.iter().position(|p| !p.is_finite()) {
            return Err(DiscError::NonFiniteParam(bad));
        }
        let mut cursor = params.iter().copied();
        let mut take = |dst: &mut [f64]| {
            for value in dst {
                *value = cursor.next().unwrap();
            }
        };
        for layer in &mut self.hidden {
            take(layer.weight.as_slice_mut().unwrap());
            take(layer.bias.as_slice_mut().unwrap());
            take(layer.gamma.as_slice_mut().unwrap());
            take(layer.beta.as_slice_mut().unwrap());
        }
        take(self.out_weight.as_slice_mut().unwrap());
        take(self.out_bias.as_slice_mut().unwrap());
        Ok(())
    }
}

fn leaky_relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Binary cross-entropy -sum_i w_i [y_i ln o_i + (1-y_i) ln(1-o_i)] with
/// w_i = 1/N when no weights are given; outputs are clamped to
/// [1e-12, 1-1e-12] before the logarithms.
pub fn bce_loss(outputs: &[f64], labels: &[f64], weights: Option<&[f64]>) -> f64 {
    assert_eq!(outputs.len(), labels.len(), "outputs/labels length mismatch");
    if let Some(w) = weights {
        assert_eq!(outputs.len(), w.len(), "outputs/weights length mismatch");
    }
    let uniform = 1.0 / outputs.len() as f64;
    outputs
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (o, y))| {
            let o = o.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            let w = weights.map_or(uniform, |w| w[i]);
            -w * (y * o.ln() + (1.0 - y) * (1.0 - o).ln())
        })
        .sum()
}

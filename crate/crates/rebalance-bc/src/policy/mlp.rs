//! Small multilayer perceptron with tanh hidden layers and a linear output
//! that parameterizes the mean of a fixed-variance Gaussian. Gradients are
//! exact analytic backpropagation over a flat parameter vector.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::core::types::StateActionPair;
use crate::error::{Error, Result};

/// Parameters are stored layer by layer: the weight matrix of layer `l`
/// row-major with shape `(sizes[l+1], sizes[l])`, then its bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub sigma: f64,
}

/// Reusable per-sample buffers for forward and backward passes.
#[derive(Debug, Default)]
pub(crate) struct MlpWorkspace {
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

pub(crate) fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpPolicy {
    /// Hidden weights are drawn uniformly from
    /// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]` with zero
    /// biases; the output layer starts at zero so every group sees the same
    /// loss before training begins.
    pub fn init(sizes: Vec<usize>, sigma: f64, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        if !(sigma > 0.0) {
            return Err(Error::NonPositiveSigma(sigma));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(&sizes));
        let last = sizes.len() - 2;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            if l == last {
                params.extend(std::iter::repeat(0.0).take(fan_in * fan_out + fan_out));
            } else {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for _ in 0..fan_in * fan_out {
                    params.push(rng.random_range(-bound..bound));
                }
                params.extend(std::iter::repeat(0.0).take(fan_out));
            }
        }
        Ok(Self { sizes, params, sigma })
    }

    pub fn state_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn action_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layer_offsets(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (offset of W_l, fan_in, fan_out); bias follows the weights.
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let here = (offset, w[0], w[1]);
            offset += w[0] * w[1] + w[1];
            here
        })
    }

    pub fn mean(&self, state: &[f64]) -> Vec<f64> {
        let mut x = state.to_vec();
        let layers = self.sizes.len() - 1;
        for (l, (off, fan_in, fan_out)) in self.layer_offsets().enumerate() {
            let mut z = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &self.params[off + o * fan_in..off + (o + 1) * fan_in];
                let bias = self.params[off + fan_in * fan_out + o];
                let mut acc = bias;
                for (w, xi) in row.iter().zip(&x) {
                    acc += w * xi;
                }
                z[o] = if l + 1 == layers { acc } else { acc.tanh() };
            }
            x = z;
        }
        x
    }

    fn ensure_workspace(&self, ws: &mut MlpWorkspace) {
        if ws.activations.len() != self.sizes.len() {
            ws.activations = self.sizes.iter().map(|&s| vec![0.0; s]).collect();
            ws.deltas = self.sizes.iter().map(|&s| vec![0.0; s]).collect();
        }
    }

    /// Adds the gradient of this pair's negative log likelihood to `grad` and
    /// returns the loss.
    pub(crate) fn backprop_into(
        &self,
        pair: &StateActionPair,
        grad: &mut [f64],
        ws: &mut MlpWorkspace,
    ) -> f64 {
        self.ensure_workspace(ws);
        let layers = self.sizes.len() - 1;
        ws.activations[0].copy_from_slice(&pair.state);

        // Forward pass caching every activation; hidden layers apply tanh.
        for (l, (off, fan_in, fan_out)) in self.layer_offsets().enumerate() {
            let (before, after) = ws.activations.split_at_mut(l + 1);
            let x = &before[l];
            let out = &mut after[0];
            for o in 0..fan_out {
                let row = &self.params[off + o * fan_in..off + (o + 1) * fan_in];
                let mut acc = self.params[off + fan_in * fan_out + o];
                for (w, xi) in row.iter().zip(x.iter()) {
                    acc += w * xi;
                }
                out[o] = if l + 1 == layers { acc } else { acc.tanh() };
            }
        }

        let inv_var = 1.0 / (self.sigma * self.sigma);
        let mean = &ws.activations[layers];
        let mut sq = 0.0;
        for d in 0..self.action_dim() {
            let residual = pair.action[d] - mean[d];
            sq += residual * residual;
            ws.deltas[layers][d] = -residual * inv_var;
        }
        let loss = 0.5 * sq * inv_var + crate::policy::nll_offset(self.action_dim(), self.sigma);

        // Backward pass: delta_l is d(loss)/d(pre-activation) of layer l+1.
        let offsets: Vec<(usize, usize, usize)> = self.layer_offsets().collect();
        for l in (0..layers).rev() {
            let (off, fan_in, fan_out) = offsets[l];
            // Gradients for W_l and b_l.
            for o in 0..fan_out {
                let delta = ws.deltas[l + 1][o];
                let row = &mut grad[off + o * fan_in..off + (o + 1) * fan_in];
                for (g, &xi) in row.iter_mut().zip(&ws.activations[l]) {
                    *g += delta * xi;
                }
                grad[off + fan_in * fan_out + o] += delta;
            }
            if l == 0 {
                break;
            }
            // Propagate through W_l and the tanh of layer l.
            for i in 0..fan_in {
                let mut acc = 0.0;
                for o in 0..fan_out {
                    acc += self.params[off + o * fan_in + i] * ws.deltas[l + 1][o];
                }
                let a = ws.activations[l][i];
                ws.deltas[l][i] = acc * (1.0 - a * a);
            }
        }
        loss
    }
}

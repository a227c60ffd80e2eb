//! Linear-Gaussian policy: action mean `theta * s` with a fixed noise level.

use crate::core::types::StateActionPair;
use crate::error::{Error, Result};

/// `theta` is stored row-major with shape `(action_dim, state_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianPolicy {
    pub theta: Vec<f64>,
    pub state_dim: usize,
    pub action_dim: usize,
    pub sigma: f64,
}

impl LinearGaussianPolicy {
    pub fn zeros(state_dim: usize, action_dim: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::NonPositiveSigma(sigma));
        }
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::InvalidConfig("policy dimensions must be positive".into()));
        }
        Ok(Self { theta: vec![0.0; state_dim * action_dim], state_dim, action_dim, sigma })
    }

    /// Scalar convenience constructor for the one-dimensional case.
    pub fn scalar(theta: f64, sigma: f64) -> Result<Self> {
        let mut p = Self::zeros(1, 1, sigma)?;
        p.theta[0] = theta;
        Ok(p)
    }

    pub fn mean_into(&self, state: &[f64], out: &mut [f64]) {
        for d in 0..self.action_dim {
            let row = &self.theta[d * self.state_dim..(d + 1) * self.state_dim];
            out[d] = row.iter().zip(state).map(|(w, s)| w * s).sum();
        }
    }

    /// Adds the gradient of this pair's negative log likelihood to `grad` and
    /// returns the loss. `scratch` must have length `action_dim`.
    pub(crate) fn backprop_into(
        &self,
        pair: &StateActionPair,
        grad: &mut [f64],
        scratch: &mut [f64],
    ) -> f64 {
        self.mean_into(&pair.state, scratch);
        let inv_var = 1.0 / (self.sigma * self.sigma);
        let mut sq = 0.0;
        for d in 0..self.action_dim {
            let residual = pair.action[d] - scratch[d];
            sq += residual * residual;
            let coeff = -residual * inv_var;
            let row = &mut grad[d * self.state_dim..(d + 1) * self.state_dim];
            for (g, &s) in row.iter_mut().zip(&pair.state) {
                *g += coeff * s;
            }
        }
        0.5 * sq * inv_var + crate::policy::nll_offset(self.action_dim, self.sigma)
    }
}

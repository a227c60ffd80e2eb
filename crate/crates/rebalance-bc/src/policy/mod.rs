//! Trainable policies with exact analytic gradients and a flat parameter
//! view.
//!
//! Both policy types model the action as a Gaussian with a state-dependent
//! mean and a fixed standard deviation `sigma`. With `sigma` fixed, the
//! negative log likelihood of a pair is squared error over `2 sigma^2` plus a
//! constant offset, so minimizing it is ordinary regression on the
//! demonstrated actions.

mod linear;
mod mlp;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use linear::LinearGaussianPolicy;
pub use mlp::MlpPolicy;
use mlp::MlpWorkspace;

use crate::core::types::{LabeledDataset, StateActionPair};
use crate::error::{Error, Result};

/// Loss of a zero-residual pair: `action_dim * (ln sigma + ln(2 pi) / 2)`.
/// Group-mean losses sit this far above the KL-equivalent loss.
pub fn nll_offset(action_dim: usize, sigma: f64) -> f64 {
    action_dim as f64 * (sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
}

/// Flat view of a policy's parameters; round-trips losslessly through
/// `params` / `set_params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-group mean losses and mean loss gradients from one pass over a
/// dataset.
#[derive(Debug, Clone)]
pub struct GroupStats {
    pub losses: Vec<f64>,
    pub grads: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
}

/// Anything that can pick an action for a state; rollouts use the mean
/// action, never a noisy sample.
pub trait Controller {
    fn act(&self, state: &[f64]) -> Vec<f64>;
}

/// A concrete trainable policy.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyModel {
    Linear(LinearGaussianPolicy),
    Mlp(MlpPolicy),
}

/// Recipe for constructing a fresh policy; training runs start from
/// `template.init(seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PolicyTemplate {
    Linear { state_dim: usize, action_dim: usize, sigma: f64 },
    Mlp { layers: Vec<usize>, sigma: f64 },
}

impl PolicyTemplate {
    /// MLP with two hidden layers of the given width.
    pub fn mlp(state_dim: usize, action_dim: usize, width: usize, sigma: f64) -> Self {
        PolicyTemplate::Mlp { layers: vec![state_dim, width, width, action_dim], sigma }
    }

    pub fn init(&self, seed: u64) -> Result<PolicyModel> {
        match self {
            PolicyTemplate::Linear { state_dim, action_dim, sigma } => Ok(PolicyModel::Linear(
                LinearGaussianPolicy::zeros(*state_dim, *action_dim, *sigma)?,
            )),
            PolicyTemplate::Mlp { layers, sigma } => {
                Ok(PolicyModel::Mlp(MlpPolicy::init(layers.clone(), *sigma, seed)?))
            }
        }
    }
}

impl PolicyModel {
    pub fn state_dim(&self) -> usize {
        match self {
            PolicyModel::Linear(p) => p.state_dim,
            PolicyModel::Mlp(p) => p.state_dim(),
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            PolicyModel::Linear(p) => p.action_dim,
            PolicyModel::Mlp(p) => p.action_dim(),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            PolicyModel::Linear(p) => p.sigma,
            PolicyModel::Mlp(p) => p.sigma,
        }
    }

    /// Loss of a pair with zero residual; subtract this from a group-mean
    /// loss to get the KL-equivalent loss.
    pub fn nll_offset(&self) -> f64 {
        nll_offset(self.action_dim(), self.sigma())
    }

    pub fn mean(&self, state: &[f64]) -> Vec<f64> {
        match self {
            PolicyModel::Linear(p) => {
                let mut out = vec![0.0; p.action_dim];
                p.mean_into(state, &mut out);
                out
            }
            PolicyModel::Mlp(p) => p.mean(state),
        }
    }

    fn check_pair(&self, pair: &StateActionPair) -> Result<()> {
        if pair.state.len() != self.state_dim() {
            return Err(Error::StateDimMismatch {
                expected: self.state_dim(),
                got: pair.state.len(),
            });
        }
        if pair.action.len() != self.action_dim() {
            return Err(Error::ActionDimMismatch {
                expected: self.action_dim(),
                got: pair.action.len(),
            });
        }
        Ok(())
    }

    /// Negative log likelihood of one pair:
    /// `||a - mean(s)||^2 / (2 sigma^2) + nll_offset`.
    pub fn nll(&self, pair: &StateActionPair) -> Result<f64> {
        self.check_pair(pair)?;
        let mean = self.mean(&pair.state);
        let sq: f64 =
            pair.action.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum();
        Ok(0.5 * sq / (self.sigma() * self.sigma()) + self.nll_offset())
    }

    /// Mean loss over a batch.
    pub fn mean_nll(&self, batch: &[StateActionPair]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for p in batch {
            total += self.nll(p)?;
        }
        Ok(total / batch.len() as f64)
    }

    /// Exact gradient of the mean loss over a batch.
    pub fn grad_mean_nll(&self, batch: &[StateActionPair]) -> Result<ParameterVector> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut grad = vec![0.0; self.param_len()];
        let mut scratch = Scratch::new(self);
        for p in batch {
            self.check_pair(p)?;
            self.backprop_into(p, &mut grad, &mut scratch);
        }
        let inv = 1.0 / batch.len() as f64;
        for g in &mut grad {
            *g *= inv;
        }
        Ok(ParameterVector(grad))
    }

    /// One pass over the dataset collecting per-group mean losses and
    /// per-group mean gradients. Every group must be nonempty.
    pub fn group_stats(&self, dataset: &LabeledDataset) -> Result<GroupStats> {
        let k = dataset.group_count();
        let plen = self.param_len();
        let mut grads = vec![vec![0.0; plen]; k];
        let mut losses = vec![0.0; k];
        let mut counts = vec![0usize; k];
        let mut scratch = Scratch::new(self);
        for p in dataset.pairs() {
            self.check_pair(p)?;
            losses[p.group] += self.backprop_into(p, &mut grads[p.group], &mut scratch);
            counts[p.group] += 1;
        }
        for g in 0..k {
            if counts[g] == 0 {
                return Err(Error::EmptyGroup(g));
            }
            let inv = 1.0 / counts[g] as f64;
            losses[g] *= inv;
            for v in &mut grads[g] {
                *v *= inv;
            }
        }
        Ok(GroupStats { losses, grads, counts })
    }

    /// Per-group mean losses only.
    pub fn group_losses(&self, dataset: &LabeledDataset) -> Result<Vec<f64>> {
        let k = dataset.group_count();
        let mut losses = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for p in dataset.pairs() {
            losses[p.group] += self.nll(p)?;
            counts[p.group] += 1;
        }
        for g in 0..k {
            if counts[g] == 0 {
                return Err(Error::EmptyGroup(g));
            }
            losses[g] /= counts[g] as f64;
        }
        Ok(losses)
    }

    fn backprop_into(&self, pair: &StateActionPair, grad: &mut [f64], ws: &mut Scratch) -> f64 {
        match (self, ws) {
            (PolicyModel::Linear(p), Scratch::Linear(buf)) => p.backprop_into(pair, grad, buf),
            (PolicyModel::Mlp(p), Scratch::Mlp(ws)) => p.backprop_into(pair, grad, ws),
            _ => unreachable!("scratch buffer built for a different policy"),
        }
    }

    pub fn param_len(&self) -> usize {
        match self {
            PolicyModel::Linear(p) => p.theta.len(),
            PolicyModel::Mlp(p) => p.params.len(),
        }
    }

    pub fn params(&self) -> ParameterVector {
        match self {
            PolicyModel::Linear(p) => ParameterVector(p.theta.clone()),
            PolicyModel::Mlp(p) => ParameterVector(p.params.clone()),
        }
    }

    pub fn set_params(&mut self, params: &ParameterVector) -> Result<()> {
        if params.len() != self.param_len() {
            return Err(Error::LengthMismatch { expected: self.param_len(), got: params.len() });
        }
        match self {
            PolicyModel::Linear(p) => p.theta.copy_from_slice(params.as_slice()),
            PolicyModel::Mlp(p) => p.params.copy_from_slice(params.as_slice()),
        }
        Ok(())
    }

    /// In-place gradient step `theta <- theta - lr * grad`.
    pub fn step(&mut self, grad: &[f64], lr: f64) {
        let params = match self {
            PolicyModel::Linear(p) => &mut p.theta,
            PolicyModel::Mlp(p) => &mut p.params,
        };
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= lr * g;
        }
    }
}

impl Controller for PolicyModel {
    fn act(&self, state: &[f64]) -> Vec<f64> {
        self.mean(state)
    }
}

enum Scratch {
    Linear(Vec<f64>),
    Mlp(MlpWorkspace),
}

impl Scratch {
    fn new(policy: &PolicyModel) -> Self {
        match policy {
            PolicyModel::Linear(p) => Scratch::Linear(vec![0.0; p.action_dim]),
            PolicyModel::Mlp(_) => Scratch::Mlp(MlpWorkspace::default()),
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoint format: a single JSON document with an architecture descriptor,
// sigma, and the flat parameter array. f64 values round-trip exactly.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ArchDescriptor {
    Linear { state_dim: usize, action_dim: usize },
    Mlp { layers: Vec<usize> },
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    arch: ArchDescriptor,
    sigma: f64,
    params: Vec<f64>,
}

pub fn save_policy(path: &Path, policy: &PolicyModel) -> Result<()> {
    let arch = match policy {
        PolicyModel::Linear(p) => {
            ArchDescriptor::Linear { state_dim: p.state_dim, action_dim: p.action_dim }
        }
        PolicyModel::Mlp(p) => ArchDescriptor::Mlp { layers: p.sizes.clone() },
    };
    let ckpt = Checkpoint { arch, sigma: policy.sigma(), params: policy.params().0 };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &ckpt)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<PolicyModel> {
    let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let mut policy = match ckpt.arch {
        ArchDescriptor::Linear { state_dim, action_dim } => {
            PolicyModel::Linear(LinearGaussianPolicy::zeros(state_dim, action_dim, ckpt.sigma)?)
        }
        ArchDescriptor::Mlp { layers } => {
            PolicyModel::Mlp(MlpPolicy::init(layers, ckpt.sigma, 0)?)
        }
    };
    policy.set_params(&ParameterVector(ckpt.params))?;
    Ok(policy)
}

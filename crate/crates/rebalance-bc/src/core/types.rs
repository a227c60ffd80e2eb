//! Domain types shared by every module: labeled state-action data, simplex
//! weight vectors, and the per-group excess-loss report used by the min-max
//! reweighting loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One demonstration sample: a state, the action taken there, and the label
/// of the behavior (group) that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateActionPair {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub group: usize,
}

impl StateActionPair {
    pub fn new(state: Vec<f64>, action: Vec<f64>, group: usize) -> Self {
        Self { state, action, group }
    }
}

/// A dataset of state-action pairs partitioned into `group_count` behaviors.
///
/// Every pair carries a group label in `[0, group_count)`; unlabeled data is
/// rejected at construction. State and action dimensions are constant across
/// the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pairs: Vec<StateActionPair>,
    group_count: usize,
    state_dim: usize,
    action_dim: usize,
}

impl LabeledDataset {
    pub fn new(pairs: Vec<StateActionPair>, group_count: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if group_count == 0 {
            return Err(Error::InvalidConfig("group_count must be at least 1".into()));
        }
        let state_dim = pairs[0].state.len();
        let action_dim = pairs[0].action.len();
        for p in &pairs {
            if p.state.len() != state_dim {
                return Err(Error::StateDimMismatch { expected: state_dim, got: p.state.len() });
            }
            if p.action.len() != action_dim {
                return Err(Error::ActionDimMismatch { expected: action_dim, got: p.action.len() });
            }
            if p.group >= group_count {
                return Err(Error::GroupOutOfRange { label: p.group, k: group_count });
            }
        }
        Ok(Self { pairs, group_count, state_dim, action_dim })
    }

    pub fn pairs(&self) -> &[StateActionPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Number of samples per group.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.group_count];
        for p in &self.pairs {
            counts[p.group] += 1;
        }
        counts
    }

    /// Empirical proportions `rho_i = |D_i| / N`. Every declared group must be
    /// nonempty; the proportions sum to 1 exactly up to the final divisions.
    pub fn empirical_proportions(&self) -> Result<Vec<f64>> {
        let counts = self.group_sizes();
        let n = self.pairs.len() as f64;
        for (g, &c) in counts.iter().enumerate() {
            if c == 0 {
                return Err(Error::EmptyGroup(g));
            }
        }
        Ok(counts.iter().map(|&c| c as f64 / n).collect())
    }

    pub fn iter_group(&self, group: usize) -> impl Iterator<Item = &StateActionPair> {
        self.pairs.iter().filter(move |p| p.group == group)
    }

    /// Same pairs under a larger group count (no labels change).
    pub fn with_group_count(&self, group_count: usize) -> Result<Self> {
        Self::new(self.pairs.clone(), group_count.max(self.group_count))
    }

    /// All pairs relabeled to a single group.
    pub fn with_single_group(&self) -> Self {
        let pairs = self
            .pairs
            .iter()
            .map(|p| StateActionPair::new(p.state.clone(), p.action.clone(), 0))
            .collect();
        Self { pairs, group_count: 1, state_dim: self.state_dim, action_dim: self.action_dim }
    }

    /// Union of two datasets over the same dimensions. The group count of the
    /// result is the larger of the two.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if other.state_dim != self.state_dim {
            return Err(Error::StateDimMismatch { expected: self.state_dim, got: other.state_dim });
        }
        if other.action_dim != self.action_dim {
            return Err(Error::ActionDimMismatch {
                expected: self.action_dim,
                got: other.action_dim,
            });
        }
        let mut pairs = self.pairs.clone();
        pairs.extend(other.pairs.iter().cloned());
        Self::new(pairs, self.group_count.max(other.group_count))
    }
}

/// A point on the k-simplex: nonnegative weights that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    alpha: Vec<f64>,
}

impl WeightVector {
    /// Validates nonnegativity and renormalizes so the sum is 1 to within
    /// floating-point accuracy.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidConfig("weight vector must be nonempty".into()));
        }
        let sum: f64 = alpha.iter().sum();
        if alpha.iter().any(|&a| a < 0.0 || !a.is_finite()) || !(sum > 0.0) {
            return Err(Error::NotOnSimplex(sum));
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::NotOnSimplex(sum));
        }
        let alpha = alpha.into_iter().map(|a| a / sum).collect();
        Ok(Self { alpha })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(Self { alpha: vec![1.0 / k as f64; k] })
    }

    /// Weights equal to the dataset's empirical proportions.
    pub fn from_proportions(dataset: &LabeledDataset) -> Result<Self> {
        Ok(Self { alpha: dataset.empirical_proportions()? })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn get(&self, i: usize) -> f64 {
        self.alpha[i]
    }

    pub(crate) fn from_normalized(alpha: Vec<f64>) -> Self {
        Self { alpha }
    }
}

/// Per-group excess losses for one min-max round.
///
/// `delta[i]` is the group loss minus its reference target (nats), and
/// `lambda = -(1/k) * sum(delta)` is the multiplier that projects the ascent
/// direction back onto the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub delta: Vec<f64>,
    pub lambda: f64,
    pub per_group_loss: Vec<f64>,
}

impl DeltaReport {
    pub fn new(delta: Vec<f64>, per_group_loss: Vec<f64>) -> Self {
        let k = delta.len().max(1) as f64;
        let lambda = -delta.iter().sum::<f64>() / k;
        Self { delta, lambda, per_group_loss }
    }

    /// The simplex-projected ascent direction `delta_i + lambda`.
    pub fn projected_gradient(&self) -> Vec<f64> {
        self.delta.iter().map(|d| d + self.lambda).collect()
    }

    /// Spread `max(delta) - min(delta)`; zero at the balanced fixed point.
    pub fn spread(&self) -> f64 {
        let max = self.delta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.delta.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

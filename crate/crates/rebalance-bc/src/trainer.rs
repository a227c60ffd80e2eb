//! Weighted behavior-cloning training: full-batch gradient descent on
//! `L_alpha(theta) = sum_i alpha_i * L_i(theta)`, where `L_i` is the mean
//! loss over group `i`.
//!
//! With `alpha` equal to the empirical proportions this is standard behavior
//! cloning (the weighted objective collapses to the plain dataset mean);
//! any other `alpha` reweights how much each behavior drives the update.
//! Plain gradient descent is used on purpose: the meta-gradient arithmetic
//! in [`crate::metaref`] differentiates through a single descent step, and
//! momentum terms would break that structure.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::core::types::{LabeledDataset, WeightVector};
use crate::error::{Error, Result};
use crate::policy::{PolicyModel, PolicyTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Deterministic full-batch descent (default).
    Full,
    /// Shuffled mini-batches; samples are weighted by `alpha_g / rho_g` so
    /// the expected objective matches the full-batch one.
    Mini { size: usize },
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Inner learning rate (beta_1 in the meta loop).
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: BatchMode,
    pub seed: u64,
    /// Stop early once the epoch-to-epoch change of the weighted loss falls
    /// below this (full-batch only).
    pub convergence_tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 200,
            batch: BatchMode::Full,
            seed: 0,
            convergence_tol: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn full_batch(learning_rate: f64, epochs: usize) -> Self {
        Self { learning_rate, epochs, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.convergence_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if let BatchMode::Mini { size } = self.batch {
            if size == 0 {
                return Err(Error::InvalidConfig("mini-batch size must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Per-epoch weighted total loss and per-group losses, recorded before each
/// update step.
#[derive(Debug, Clone, Default)]
pub struct LossTrace {
    pub total: Vec<f64>,
    pub per_group: Vec<Vec<f64>>,
}

impl LossTrace {
    pub fn len(&self) -> usize {
        self.total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_empty()
    }

    pub fn final_total(&self) -> Option<f64> {
        self.total.last().copied()
    }

    /// Comma-separated export: `epoch,L_total,L_1..L_k`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let k = self.per_group.first().map_or(0, Vec::len);
        write!(w, "epoch,L_total")?;
        for g in 0..k {
            write!(w, ",L_{}", g + 1)?;
        }
        writeln!(w)?;
        for (epoch, (total, groups)) in self.total.iter().zip(&self.per_group).enumerate() {
            write!(w, "{epoch},{total}")?;
            for l in groups {
                write!(w, ",{l}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Mean loss per group under `policy`.
pub fn group_losses(policy: &PolicyModel, dataset: &LabeledDataset) -> Result<Vec<f64>> {
    policy.group_losses(dataset)
}

/// Trains a fresh policy from `template` on the alpha-weighted objective.
pub fn train_weighted(
    dataset: &LabeledDataset,
    alpha: &WeightVector,
    cfg: &TrainConfig,
    template: &PolicyTemplate,
) -> Result<(PolicyModel, LossTrace)> {
    let policy = template.init(cfg.seed)?;
    train_weighted_from(policy, dataset, alpha, cfg)
}

/// Continues training an existing policy on the alpha-weighted objective.
/// The min-max loop uses this to interleave weight updates with a few epochs
/// of descent.
pub fn train_weighted_from(
    mut policy: PolicyModel,
    dataset: &LabeledDataset,
    alpha: &WeightVector,
    cfg: &TrainConfig,
) -> Result<(PolicyModel, LossTrace)> {
    cfg.validate()?;
    if alpha.len() != dataset.group_count() {
        return Err(Error::LengthMismatch { expected: dataset.group_count(), got: alpha.len() });
    }
    match cfg.batch {
        BatchMode::Full => train_full_batch(&mut policy, dataset, alpha, cfg).map(|t| (policy, t)),
        BatchMode::Mini { size } => {
            train_mini_batch(&mut policy, dataset, alpha, cfg, size).map(|t| (policy, t))
        }
    }
}

fn weighted_total(alpha: &WeightVector, losses: &[f64]) -> f64 {
    alpha.as_slice().iter().zip(losses).map(|(a, l)| a * l).sum()
}

fn train_full_batch(
    policy: &mut PolicyModel,
    dataset: &LabeledDataset,
    alpha: &WeightVector,
    cfg: &TrainConfig,
) -> Result<LossTrace> {
    let mut trace = LossTrace::default();
    let mut lr = cfg.learning_rate;
    let mut halvings = 0usize;
    let plen = policy.param_len();
    let mut prev_total = f64::INFINITY;
    let mut prev_params = policy.params();

    for epoch in 0..cfg.epochs {
        let stats = policy.group_stats(dataset)?;
        let total = weighted_total(alpha, &stats.losses);
        if !total.is_finite() {
            if halvings >= 10 {
                return Err(Error::Diverged(epoch));
            }
            // Roll back the last step and retry at half the rate.
            halvings += 1;
            lr *= 0.5;
            policy.set_params(&prev_params)?;
            continue;
        }
        // Full-batch descent should never increase the loss; when it does the
        // step was too long, so back up and halve.
        if total > prev_total && halvings < 10 {
            halvings += 1;
            lr *= 0.5;
            policy.set_params(&prev_params)?;
            continue;
        }

        trace.total.push(total);
        trace.per_group.push(stats.losses.clone());
        if (prev_total - total).abs() < cfg.convergence_tol {
            break;
        }
        prev_total = total;
        prev_params = policy.params();

        let mut grad = vec![0.0; plen];
        for (g, a) in alpha.as_slice().iter().enumerate() {
            for (acc, v) in grad.iter_mut().zip(&stats.grads[g]) {
                *acc += a * v;
            }
        }
        policy.step(&grad, lr);
    }
    if trace.is_empty() {
        return Err(Error::Diverged(0));
    }
    Ok(trace)
}

fn train_mini_batch(
    policy: &mut PolicyModel,
    dataset: &LabeledDataset,
    alpha: &WeightVector,
    cfg: &TrainConfig,
    size: usize,
) -> Result<LossTrace> {
    let rho = dataset.empirical_proportions()?;
    // Per-sample weight alpha_g / rho_g makes the expected mini-batch
    // objective equal the weighted group-mean objective.
    let sample_weight: Vec<f64> =
        dataset.pairs().iter().map(|p| alpha.get(p.group) / rho[p.group]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = LossTrace::default();
    let plen = policy.param_len();

    for epoch in 0..cfg.epochs {
        let losses = policy.group_losses(dataset)?;
        let total = weighted_total(alpha, &losses);
        if !total.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        trace.total.push(total);
        trace.per_group.push(losses);

        order.shuffle(&mut rng);
        for chunk in order.chunks(size) {
            let mut grad = vec![0.0; plen];
            let mut weight_sum = 0.0;
            for &idx in chunk {
                let pair = &dataset.pairs()[idx];
                let g = policy.grad_mean_nll(std::slice::from_ref(pair))?;
                let w = sample_weight[idx];
                weight_sum += w;
                for (acc, v) in grad.iter_mut().zip(g.as_slice()) {
                    *acc += w * v;
                }
            }
            if weight_sum > 0.0 {
                for v in &mut grad {
                    *v /= chunk.len() as f64;
                }
                policy.step(&grad, cfg.learning_rate);
            }
        }
    }
    Ok(trace)
}

/// Outcome of checking the per-epoch worst-case bound: every group's
/// KL-equivalent loss must stay below `total_kl / weight_i` (plus slack).
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// `(epoch, group, excess)` for every violation found.
    pub violations: Vec<(usize, usize, f64)>,
    pub epochs_checked: usize,
}

impl BoundReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies the worst-case bound on every epoch of a trace.
///
/// Losses in the trace are offset negative log likelihoods; subtracting
/// `nll_offset` (and flooring at zero) converts them to KL-equivalent losses,
/// which is the scale on which the bound holds.
pub fn bound_check(trace: &LossTrace, weights: &[f64], nll_offset: f64) -> BoundReport {
    const SLACK: f64 = 1e-6;
    let mut violations = Vec::new();
    for (epoch, groups) in trace.per_group.iter().enumerate() {
        let kl: Vec<f64> = groups.iter().map(|l| (l - nll_offset).max(0.0)).collect();
        let total: f64 = weights.iter().zip(&kl).map(|(w, l)| w * l).sum();
        for (g, (&w, &l)) in weights.iter().zip(&kl).enumerate() {
            if w > 0.0 && l > total / w + SLACK {
                violations.push((epoch, g, l - total / w));
            }
        }
    }
    BoundReport { violations, epochs_checked: trace.per_group.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{optimal_theta, Region, SubPolicySpec};
    use crate::core::types::StateActionPair;
    use crate::datagen::{sample_dataset, GeneratorConfig};
    use crate::policy::nll_offset;

    fn two_group_dataset(rho: (usize, usize), thetas: (f64, f64), sigma: f64) -> LabeledDataset {
        let specs = vec![
            SubPolicySpec::scalar(thetas.0, sigma, Region::MirroredBand { inner: 0.5, outer: 1.0 }),
            SubPolicySpec::scalar(thetas.1, sigma, Region::MirroredBand { inner: 1.0, outer: 1.5 }),
        ];
        let n = rho.0 + rho.1;
        let cfg = GeneratorConfig {
            specs,
            proportions: vec![rho.0 as f64 / n as f64, rho.1 as f64 / n as f64],
            total_pairs: n,
            seed: 77,
            unit_group_second_moment: true,
            ..GeneratorConfig::default()
        };
        sample_dataset(&cfg).unwrap()
    }

    fn linear_template() -> PolicyTemplate {
        PolicyTemplate::Linear { state_dim: 1, action_dim: 1, sigma: 1.0 }
    }

    fn learned_theta(policy: &PolicyModel) -> f64 {
        policy.params().0[0]
    }

    #[test]
    fn standard_bc_recovers_proportion_weighted_optimum() {
        let ds = two_group_dataset((700, 300), (1.0, -1.0), 0.05);
        let alpha = WeightVector::from_proportions(&ds).unwrap();
        let cfg = TrainConfig::full_batch(0.5, 400);
        let (policy, trace) = train_weighted(&ds, &alpha, &cfg, &linear_template()).unwrap();
        let rho = ds.empirical_proportions().unwrap();
        let target = optimal_theta(&rho, &[1.0, -1.0]).unwrap();
        assert!(
            (learned_theta(&policy) - target).abs() < 0.02,
            "theta {} vs {}",
            learned_theta(&policy),
            target
        );
        assert!(trace.len() > 1);
    }

    #[test]
    fn equal_weights_recover_symmetric_optimum() {
        let ds = two_group_dataset((700, 300), (1.0, -1.0), 0.05);
        let alpha = WeightVector::uniform(2).unwrap();
        let cfg = TrainConfig::full_batch(0.5, 400);
        let (policy, _) = train_weighted(&ds, &alpha, &cfg, &linear_template()).unwrap();
        assert!(learned_theta(&policy).abs() < 0.02, "theta {}", learned_theta(&policy));
    }

    #[test]
    fn weighted_total_with_rho_equals_plain_mean() {
        // Algebraic identity: sum_i rho_i * mean_i equals the dataset mean.
        let ds = two_group_dataset((40, 25), (0.7, -0.4), 0.3);
        let policy = linear_template().init(0).unwrap();
        let losses = group_losses(&policy, &ds).unwrap();
        let rho = ds.empirical_proportions().unwrap();
        let weighted: f64 = rho.iter().zip(&losses).map(|(r, l)| r * l).sum();
        let plain = policy.mean_nll(ds.pairs()).unwrap();
        assert!((weighted - plain).abs() < 1e-10);
    }

    #[test]
    fn group_losses_hit_offset_on_noiseless_fit() {
        let pairs: Vec<StateActionPair> = (1..=6)
            .map(|i| StateActionPair::new(vec![i as f64 / 3.0], vec![0.8 * i as f64 / 3.0], 0))
            .collect();
        let ds = LabeledDataset::new(pairs, 1).unwrap();
        let mut policy = linear_template().init(0).unwrap();
        policy.set_params(&crate::policy::ParameterVector(vec![0.8])).unwrap();
        let losses = group_losses(&policy, &ds).unwrap();
        assert!((losses[0] - nll_offset(1, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn full_batch_loss_is_non_increasing() {
        let ds = two_group_dataset((60, 40), (1.5, -0.5), 0.2);
        let alpha = WeightVector::uniform(2).unwrap();
        // Deliberately large learning rate: the halving guard keeps descent
        // monotone anyway.
        let cfg = TrainConfig::full_batch(1.9, 150);
        let (_, trace) = train_weighted(&ds, &alpha, &cfg, &linear_template()).unwrap();
        for w in trace.total.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let ds = two_group_dataset((50, 50), (1.0, -1.0), 0.1);
        let alpha = WeightVector::uniform(2).unwrap();
        let template = PolicyTemplate::mlp(1, 1, 8, 1.0);
        let cfg = TrainConfig::full_batch(0.1, 60).with_seed(5);
        let (a, _) = train_weighted(&ds, &alpha, &cfg, &template).unwrap();
        let (b, _) = train_weighted(&ds, &alpha, &cfg, &template).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn bound_holds_per_epoch() {
        let ds = two_group_dataset((80, 20), (1.0, -1.0), 0.1);
        let alpha = WeightVector::from_proportions(&ds).unwrap();
        let cfg = TrainConfig::full_batch(0.5, 200);
        let (policy, trace) = train_weighted(&ds, &alpha, &cfg, &linear_template()).unwrap();
        let report = bound_check(&trace, alpha.as_slice(), policy.nll_offset());
        assert!(report.ok(), "violations: {:?}", report.violations);
        assert_eq!(report.epochs_checked, trace.len());
    }

    #[test]
    fn bound_single_group_is_equality() {
        let trace = LossTrace { total: vec![1.5], per_group: vec![vec![1.5]] };
        let report = bound_check(&trace, &[1.0], 0.0);
        assert!(report.ok());
    }

    #[test]
    fn divergent_learning_rate_is_caught() {
        let ds = two_group_dataset((30, 30), (1.0, -1.0), 0.1);
        let alpha = WeightVector::uniform(2).unwrap();
        // Absurd learning rate; after ten halvings it still oscillates, and
        // the run must either stay finite or report divergence.
        let cfg = TrainConfig::full_batch(1e9, 40);
        match train_weighted(&ds, &alpha, &cfg, &linear_template()) {
            Ok((_, trace)) => assert!(trace.total.iter().all(|t| t.is_finite())),
            Err(Error::Diverged(_)) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn mini_batch_mode_trains() {
        let ds = two_group_dataset((120, 80), (1.0, -1.0), 0.1);
        let alpha = WeightVector::uniform(2).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.2,
            epochs: 80,
            batch: BatchMode::Mini { size: 16 },
            seed: 3,
            convergence_tol: 0.0,
        };
        let (policy, _) = train_weighted(&ds, &alpha, &cfg, &linear_template()).unwrap();
        assert!(learned_theta(&policy).abs() < 0.1);
    }

    #[test]
    fn trace_csv_layout() {
        let trace =
            LossTrace { total: vec![1.0, 0.5], per_group: vec![vec![1.2, 0.8], vec![0.6, 0.4]] };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "epoch,L_total,L_1,L_2");
        assert_eq!(lines.next().unwrap(), "0,1,1.2,0.8");
    }
}

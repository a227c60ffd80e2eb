//! Synthetic dataset generation from ground-truth sub-policies, plus the
//! suboptimal-mixture transform. The toy environment lives in [`env`].

pub mod env;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analytic::{Region, SubPolicySpec};
use crate::core::types::{LabeledDataset, StateActionPair};
use crate::error::{Error, Result};

/// How states are drawn within each behavior's region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StateSampler {
    /// Uniform over the group's region (mirrored bands get a random sign).
    #[default]
    RegionUniform,
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub specs: Vec<SubPolicySpec>,
    /// Target proportions on the simplex; realized group sizes use
    /// largest-remainder rounding so they sum to `total_pairs` exactly.
    pub proportions: Vec<f64>,
    pub total_pairs: usize,
    pub seed: u64,
    pub state_sampler: StateSampler,
    /// Rescale each group's sampled states to unit mean square (per
    /// dimension) before synthesizing actions. The closed-form optima in
    /// [`crate::analytic`] assume exactly this normalization per behavior,
    /// which disjoint regions cannot provide on their own.
    pub unit_group_second_moment: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            specs: Vec::new(),
            proportions: Vec::new(),
            total_pairs: 0,
            seed: 0,
            state_sampler: StateSampler::RegionUniform,
            unit_group_second_moment: false,
        }
    }
}

/// Integer group sizes with largest-remainder rounding: sizes sum to `n`
/// exactly and distort the proportions as little as possible.
pub fn largest_remainder_sizes(proportions: &[f64], n: usize) -> Result<Vec<usize>> {
    let sum: f64 = proportions.iter().sum();
    if proportions.is_empty() || proportions.iter().any(|&p| !(p > 0.0)) || (sum - 1.0).abs() > 1e-6
    {
        return Err(Error::BadProportions);
    }
    let ideal: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut sizes: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    // Distribute the leftover to the largest fractional remainders; ties go
    // to the lower index for determinism.
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &g in order.iter().take(n - assigned) {
        sizes[g] += 1;
    }
    for (g, &s) in sizes.iter().enumerate() {
        if s == 0 {
            return Err(Error::GroupRoundsToZero(g));
        }
    }
    Ok(sizes)
}

fn sample_region(region: &Region, rng: &mut ChaCha8Rng) -> f64 {
    match *region {
        Region::Interval { lo, hi } => rng.random_range(lo..hi),
        Region::MirroredBand { inner, outer } => {
            let magnitude = rng.random_range(inner..outer);
            if rng.random_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        }
    }
}

/// Draws a labeled dataset from the ground-truth sub-policies: group sizes by
/// largest-remainder rounding, states from each region's sampler, actions
/// `a = theta_i * s + eps` with `eps ~ N(0, sigma_i^2)`. Bit-reproducible for
/// a fixed seed and config; each group reads its own random stream, so the
/// draw for one group does not depend on the others.
pub fn sample_dataset(cfg: &GeneratorConfig) -> Result<LabeledDataset> {
    let k = cfg.specs.len();
    if k == 0 || cfg.proportions.len() != k {
        return Err(Error::LengthMismatch { expected: k.max(1), got: cfg.proportions.len() });
    }
    SubPolicySpec::validate(&cfg.specs)?;
    let sizes = largest_remainder_sizes(&cfg.proportions, cfg.total_pairs)?;
    let dim = cfg.specs[0].theta.len();
    if cfg.specs.iter().any(|s| s.theta.len() != dim) {
        return Err(Error::InvalidConfig("all specs must share the same dimension".into()));
    }

    let mut pairs = Vec::with_capacity(cfg.total_pairs);
    for (g, spec) in cfg.specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(g as u64);
        let n = sizes[g];
        let mut states = vec![vec![0.0; dim]; n];
        for state in &mut states {
            for s in state.iter_mut() {
                *s = sample_region(&spec.region, &mut rng);
            }
        }
        if cfg.unit_group_second_moment {
            for d in 0..dim {
                let ms: f64 = states.iter().map(|s| s[d] * s[d]).sum::<f64>() / n as f64;
                if ms == 0.0 {
                    return Err(Error::DegenerateStateDimension(d));
                }
                let scale = 1.0 / ms.sqrt();
                for state in &mut states {
                    state[d] *= scale;
                }
            }
        }
        for state in states {
            let action: Vec<f64> = state
                .iter()
                .zip(&spec.theta)
                .map(|(s, t)| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    t * s + spec.sigma * noise
                })
                .collect();
            pairs.push(StateActionPair::new(state, action, g));
        }
    }
    LabeledDataset::new(pairs, k)
}

/// Returns a corrupted copy of the dataset: every action is shifted by
/// `bias` and perturbed with `N(0, noise_scale^2)` noise, and every group
/// label moves to a fresh "suboptimal" index (`group + k`), so the group
/// count doubles. Merge the result with the original to build an
/// optimal/suboptimal mixture.
pub fn make_suboptimal(
    dataset: &LabeledDataset,
    noise_scale: f64,
    bias: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if noise_scale < 0.0 {
        return Err(Error::InvalidConfig(format!("noise_scale must be >= 0, got {noise_scale}")));
    }
    let k = dataset.group_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = dataset
        .pairs()
        .iter()
        .map(|p| {
            let action = p
                .action
                .iter()
                .map(|a| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    a + bias + noise_scale * noise
                })
                .collect();
            StateActionPair::new(p.state.clone(), action, p.group + k)
        })
        .collect();
    LabeledDataset::new(pairs, 2 * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(i: usize) -> Region {
        Region::MirroredBand { inner: 0.5 + 0.5 * i as f64, outer: 1.0 + 0.5 * i as f64 }
    }

    fn config(rho: Vec<f64>, n: usize, sigma: f64) -> GeneratorConfig {
        let specs = (0..rho.len())
            .map(|i| SubPolicySpec::scalar(1.0 - i as f64, sigma, band(i)))
            .collect();
        GeneratorConfig {
            specs,
            proportions: rho,
            total_pairs: n,
            seed: 42,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn rounding_simple() {
        assert_eq!(largest_remainder_sizes(&[0.7, 0.3], 10).unwrap(), vec![7, 3]);
        assert_eq!(
            largest_remainder_sizes(&[0.6, 0.3, 0.1], 5000).unwrap(),
            vec![3000, 1500, 500]
        );
    }

    #[test]
    fn rounding_sums_to_n() {
        let sizes = largest_remainder_sizes(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 100).unwrap();
        assert_eq!(sizes.iter().sum::<usize>(), 100);
    }

    #[test]
    fn rounding_rejects_zero_groups() {
        assert!(matches!(
            largest_remainder_sizes(&[0.999, 0.001], 10),
            Err(Error::GroupRoundsToZero(1))
        ));
        assert!(largest_remainder_sizes(&[0.5, 0.5, 0.0], 10).is_err());
    }

    #[test]
    fn sample_sizes_match_rounding() {
        let ds = sample_dataset(&config(vec![0.7, 0.3], 10, 0.1)).unwrap();
        assert_eq!(ds.group_sizes(), vec![7, 3]);
        let rho = ds.empirical_proportions().unwrap();
        assert!((rho[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn noiseless_actions_are_exactly_linear() {
        let ds = sample_dataset(&config(vec![0.5, 0.5], 40, 1e-300)).unwrap();
        for p in ds.pairs() {
            let theta = if p.group == 0 { 1.0 } else { 0.0 };
            assert!((p.action[0] - theta * p.state[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn states_stay_in_regions() {
        let cfg = config(vec![0.4, 0.6], 200, 0.1);
        let ds = sample_dataset(&cfg).unwrap();
        for p in ds.pairs() {
            assert!(cfg.specs[p.group].region.contains(p.state[0]));
        }
    }

    #[test]
    fn generation_is_bit_reproducible() {
        let cfg = config(vec![0.7, 0.3], 64, 0.25);
        assert_eq!(sample_dataset(&cfg).unwrap(), sample_dataset(&cfg).unwrap());
    }

    #[test]
    fn unit_second_moment_per_group() {
        let mut cfg = config(vec![0.8, 0.2], 500, 0.1);
        cfg.unit_group_second_moment = true;
        let ds = sample_dataset(&cfg).unwrap();
        for g in 0..2 {
            let (mut ms, mut n) = (0.0, 0);
            for p in ds.iter_group(g) {
                ms += p.state[0] * p.state[0];
                n += 1;
            }
            assert!((ms / n as f64 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn suboptimal_relabels_and_shifts() {
        let ds = sample_dataset(&config(vec![0.5, 0.5], 20, 0.1)).unwrap();

        let clean = make_suboptimal(&ds, 0.0, 0.0, 1).unwrap();
        assert_eq!(clean.group_count(), 4);
        for (a, b) in ds.pairs().iter().zip(clean.pairs()) {
            assert_eq!(a.action, b.action);
            assert_eq!(b.group, a.group + 2);
        }

        let shifted = make_suboptimal(&ds, 0.0, 1.0, 1).unwrap();
        for (a, b) in ds.pairs().iter().zip(shifted.pairs()) {
            assert!((b.action[0] - a.action[0] - 1.0).abs() < 1e-15);
        }

        assert!(make_suboptimal(&ds, -0.1, 0.0, 1).is_err());
    }

    #[test]
    fn mixture_matches_two_to_one_recipe() {
        // 60 optimal plus 30 suboptimal pairs of the same behavior family.
        let base = sample_dataset(&config(vec![1.0], 60, 0.05)).unwrap();
        let extra = {
            let mut c = config(vec![1.0], 30, 0.05);
            c.seed = 43;
            sample_dataset(&c).unwrap()
        };
        let sub = make_suboptimal(&extra, 0.3, 0.5, 7).unwrap();
        let mixed = base.with_group_count(2).unwrap().merge(&sub).unwrap();
        assert_eq!(mixed.len(), 90);
        assert_eq!(mixed.group_sizes(), vec![60, 30]);
        let rho = mixed.empirical_proportions().unwrap();
        assert!((rho[0] - 2.0 / 3.0).abs() < 1e-12);
    }
}

//! Toy point-mass environment: 2-D position state, 2-D velocity action,
//! deterministic dynamics `s' = s + a * dt`.
//!
//! The environment hosts a few spatially distinct behaviors: the point starts
//! inside one behavior's start box and must reach that behavior's goal within
//! the horizon. A variant drives behavior selection from a binary context
//! flag appended to the state instead of the start position. A scripted
//! proportional controller serves as the ground-truth expert, both for demo
//! collection and as the success-rate calibration reference.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::core::io::parse_key_values;
use crate::core::types::{LabeledDataset, StateActionPair};
use crate::error::{Error, Result};
use crate::policy::Controller;

/// One behavior: a goal, the box start states are drawn from, and the x-band
/// the behavior owns (used to dispatch positional behaviors).
#[derive(Debug, Clone, PartialEq)]
pub struct GoalRegion {
    pub goal: [f64; 2],
    pub start_min: [f64; 2],
    pub start_max: [f64; 2],
    pub band: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEnv {
    pub regions: Vec<GoalRegion>,
    /// When set, the behavior index is a context bit carried as a third
    /// state dimension; otherwise it is the region whose band contains x.
    pub context_flag: bool,
    pub dt: f64,
    pub horizon: usize,
    pub success_radius: f64,
    /// Proportional gain of the scripted expert.
    pub expert_gain: f64,
    /// Speed clamp of the scripted expert.
    pub expert_max_speed: f64,
}

impl ToyEnv {
    /// Three goals on a line, reached from three separated start bands;
    /// the desk-scale analog of picking an object from the left, middle, or
    /// right of a table.
    pub fn three_region() -> Self {
        let band = |c: f64, lo: f64, hi: f64, blo: f64, bhi: f64| GoalRegion {
            goal: [c, 1.0],
            start_min: [lo, -1.2],
            start_max: [hi, -0.4],
            band: (blo, bhi),
        };
        Self {
            regions: vec![
                band(-1.2, -1.7, -0.7, -2.5, -0.6),
                band(0.0, -0.5, 0.5, -0.6, 0.6),
                band(1.2, 0.7, 1.7, 0.6, 2.5),
            ],
            context_flag: false,
            dt: 0.1,
            horizon: 60,
            success_radius: 0.15,
            expert_gain: 1.5,
            expert_max_speed: 1.0,
        }
    }

    /// Two goals selected by a binary context bit from a shared start box;
    /// the analog of opening a drawer when a bulb is on and moving a slider
    /// when it is off.
    pub fn two_region_context() -> Self {
        let region = |c: f64| GoalRegion {
            goal: [c, 1.0],
            start_min: [-0.5, -1.2],
            start_max: [0.5, -0.4],
            band: (-2.5, 2.5),
        };
        Self {
            regions: vec![region(-1.0), region(1.0)],
            context_flag: true,
            dt: 0.1,
            horizon: 60,
            success_radius: 0.15,
            expert_gain: 1.5,
            expert_max_speed: 1.0,
        }
    }

    /// Reads an environment from a `key = value` text config. Keys:
    /// `task` (`three-region` | `two-region-context`), `dt`, `horizon`,
    /// `success_radius`, `expert_gain`, `expert_max_speed`.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut env = ToyEnv::three_region();
        for (key, value) in parse_key_values(text)? {
            let bad = |e: &dyn std::fmt::Display| {
                Error::InvalidConfig(format!("bad value for {key}: {e}"))
            };
            match key.as_str() {
                "task" => {
                    env = match value.as_str() {
                        "three-region" => ToyEnv::three_region(),
                        "two-region-context" => ToyEnv::two_region_context(),
                        other => {
                            return Err(Error::InvalidConfig(format!("unknown task `{other}`")))
                        }
                    }
                }
                "dt" => env.dt = value.parse().map_err(|e| bad(&e))?,
                "horizon" => env.horizon = value.parse().map_err(|e| bad(&e))?,
                "success_radius" => env.success_radius = value.parse().map_err(|e| bad(&e))?,
                "expert_gain" => env.expert_gain = value.parse().map_err(|e| bad(&e))?,
                "expert_max_speed" => {
                    env.expert_max_speed = value.parse().map_err(|e| bad(&e))?
                }
                other => return Err(Error::InvalidConfig(format!("unknown key `{other}`"))),
            }
        }
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if !(self.success_radius > 0.0) {
            return Err(Error::InvalidConfig("success_radius must be positive".into()));
        }
        if self.regions.is_empty() {
            return Err(Error::InvalidConfig("at least one region required".into()));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        if self.context_flag {
            3
        } else {
            2
        }
    }

    pub fn behavior_count(&self) -> usize {
        self.regions.len()
    }

    /// Which behavior is active in this state: the context bit when the
    /// environment is contextual, else the region whose band contains x
    /// (nearest band when the point has wandered into a gap).
    pub fn behavior_of(&self, state: &[f64]) -> usize {
        if self.context_flag {
            let flag = state[2];
            (flag.round() as usize).min(self.regions.len() - 1)
        } else {
            let x = state[0];
            for (i, r) in self.regions.iter().enumerate() {
                if r.band.0 <= x && x < r.band.1 {
                    return i;
                }
            }
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (i, r) in self.regions.iter().enumerate() {
                let c = 0.5 * (r.band.0 + r.band.1);
                if (x - c).abs() < best_dist {
                    best_dist = (x - c).abs();
                    best = i;
                }
            }
            best
        }
    }

    /// Uniform start state for the given behavior.
    pub fn sample_start(&self, behavior: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let r = &self.regions[behavior];
        let x = rng.random_range(r.start_min[0]..r.start_max[0]);
        let y = rng.random_range(r.start_min[1]..r.start_max[1]);
        if self.context_flag {
            vec![x, y, behavior as f64]
        } else {
            vec![x, y]
        }
    }

    fn step(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        let mut next = state.to_vec();
        next[0] = state[0] + action[0] * self.dt;
        next[1] = state[1] + action[1] * self.dt;
        next
    }

    fn distance_to_goal(&self, state: &[f64], behavior: usize) -> f64 {
        let g = self.regions[behavior].goal;
        ((state[0] - g[0]).powi(2) + (state[1] - g[1]).powi(2)).sqrt()
    }
}

/// The scripted expert: clamp(gain * (goal - position)) for whichever
/// behavior governs the current state.
#[derive(Debug, Clone)]
pub struct GroundTruthController {
    pub env: ToyEnv,
}

impl Controller for GroundTruthController {
    fn act(&self, state: &[f64]) -> Vec<f64> {
        let behavior = self.env.behavior_of(state);
        let goal = self.env.regions[behavior].goal;
        let mut a = [
            self.env.expert_gain * (goal[0] - state[0]),
            self.env.expert_gain * (goal[1] - state[1]),
        ];
        let speed = (a[0] * a[0] + a[1] * a[1]).sqrt();
        if speed > self.env.expert_max_speed {
            let scale = self.env.expert_max_speed / speed;
            a[0] *= scale;
            a[1] *= scale;
        }
        vec![a[0], a[1]]
    }
}

/// A recorded episode. Length never exceeds the horizon; `success` means the
/// point reached the active behavior's goal.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<(Vec<f64>, Vec<f64>)>,
    pub success: bool,
}

/// Runs the controller from `start` and records (state, action) pairs. The
/// active behavior is fixed by the start state. A non-finite action ends the
/// episode as a failure.
pub fn rollout(
    env: &ToyEnv,
    controller: &impl Controller,
    start: &[f64],
    max_steps: usize,
) -> Trajectory {
    let behavior = env.behavior_of(start);
    let mut state = start.to_vec();
    let mut steps = Vec::new();
    let limit = env.horizon.min(max_steps);
    for _ in 0..limit {
        let action = controller.act(&state);
        if action.iter().any(|a| !a.is_finite()) {
            return Trajectory { steps, success: false };
        }
        let next = env.step(&state, &action);
        steps.push((state, action));
        state = next;
        if env.distance_to_goal(&state, behavior) <= env.success_radius {
            return Trajectory { steps, success: true };
        }
    }
    Trajectory { steps, success: false }
}

/// Fraction of successful rollouts over uniformly sampled starts in the
/// filtered behaviors. Deterministic for a fixed seed.
pub fn success_rate(
    env: &ToyEnv,
    controller: &impl Controller,
    n_rollouts: usize,
    behavior_filter: &[usize],
    seed: u64,
) -> Result<f64> {
    if behavior_filter.is_empty() {
        return Err(Error::EmptyRegionFilter);
    }
    if n_rollouts == 0 {
        return Err(Error::InvalidConfig("n_rollouts must be at least 1".into()));
    }
    for &b in behavior_filter {
        if b >= env.regions.len() {
            return Err(Error::GroupOutOfRange { label: b, k: env.regions.len() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0xe7a1);
    let mut successes = 0usize;
    for _ in 0..n_rollouts {
        let behavior = behavior_filter[rng.random_range(0..behavior_filter.len())];
        let start = env.sample_start(behavior, &mut rng);
        if rollout(env, controller, &start, env.horizon).success {
            successes += 1;
        }
    }
    Ok(successes as f64 / n_rollouts as f64)
}

/// Collects expert demonstrations: `counts[i]` episodes of behavior `i`,
/// with zero-mean Gaussian noise of scale `action_noise` added to the
/// executed (and recorded) actions. Group labels are the behavior indices.
pub fn collect_demos(
    env: &ToyEnv,
    counts: &[usize],
    action_noise: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if counts.len() != env.regions.len() {
        return Err(Error::LengthMismatch { expected: env.regions.len(), got: counts.len() });
    }
    let expert = GroundTruthController { env: env.clone() };
    let mut pairs = Vec::new();
    for (behavior, &episodes) in counts.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0xde30 + behavior as u64);
        for _ in 0..episodes {
            let mut state = env.sample_start(behavior, &mut rng);
            for _ in 0..env.horizon {
                let mut action = expert.act(&state);
                for a in &mut action {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    *a += action_noise * noise;
                }
                let next = env.step(&state, &action);
                pairs.push(StateActionPair::new(state, action, behavior));
                state = next;
                if env.distance_to_goal(&state, behavior) <= env.success_radius {
                    break;
                }
            }
        }
    }
    LabeledDataset::new(pairs, env.regions.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ZeroController;
    impl Controller for ZeroController {
        fn act(&self, _state: &[f64]) -> Vec<f64> {
            vec![0.0, 0.0]
        }
    }

    struct AntipodalController {
        inner: GroundTruthController,
    }
    impl Controller for AntipodalController {
        fn act(&self, state: &[f64]) -> Vec<f64> {
            self.inner.act(state).iter().map(|a| -a).collect()
        }
    }

    #[test]
    fn expert_succeeds_from_everywhere() {
        let env = ToyEnv::three_region();
        let expert = GroundTruthController { env: env.clone() };
        let rate = success_rate(&env, &expert, 1000, &[0, 1, 2], 99).unwrap();
        assert!(rate >= 0.99, "expert success rate {rate}");
    }

    #[test]
    fn expert_succeeds_in_context_env() {
        let env = ToyEnv::two_region_context();
        let expert = GroundTruthController { env: env.clone() };
        let rate = success_rate(&env, &expert, 500, &[0, 1], 4).unwrap();
        assert!(rate >= 0.99, "expert success rate {rate}");
    }

    #[test]
    fn zero_policy_never_succeeds() {
        let env = ToyEnv::three_region();
        let rate = success_rate(&env, &ZeroController, 200, &[0, 1, 2], 7).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn antipodal_policy_never_succeeds() {
        let env = ToyEnv::three_region();
        let expert = GroundTruthController { env: env.clone() };
        let rate =
            success_rate(&env, &AntipodalController { inner: expert }, 200, &[0, 1, 2], 7).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn infinite_radius_succeeds_at_step_one() {
        let mut env = ToyEnv::three_region();
        env.success_radius = f64::INFINITY;
        let traj = rollout(&env, &ZeroController, &[0.0, -1.0], env.horizon);
        assert!(traj.success);
        assert_eq!(traj.steps.len(), 1);
    }

    #[test]
    fn non_finite_action_fails_the_episode() {
        struct NanController;
        impl Controller for NanController {
            fn act(&self, _s: &[f64]) -> Vec<f64> {
                vec![f64::NAN, 0.0]
            }
        }
        let env = ToyEnv::three_region();
        let traj = rollout(&env, &NanController, &[0.0, -1.0], env.horizon);
        assert!(!traj.success);
        assert!(traj.steps.is_empty());
    }

    #[test]
    fn trajectories_respect_horizon() {
        let env = ToyEnv::three_region();
        let traj = rollout(&env, &ZeroController, &[0.0, -1.0], 1000);
        assert_eq!(traj.steps.len(), env.horizon);
    }

    #[test]
    fn success_rate_rejects_empty_filter() {
        let env = ToyEnv::three_region();
        assert!(matches!(
            success_rate(&env, &ZeroController, 10, &[], 1),
            Err(Error::EmptyRegionFilter)
        ));
    }

    #[test]
    fn success_rate_is_deterministic() {
        let env = ToyEnv::three_region();
        let expert = GroundTruthController { env: env.clone() };
        let a = success_rate(&env, &expert, 100, &[1], 5).unwrap();
        let b = success_rate(&env, &expert, 100, &[1], 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn demos_are_labeled_by_behavior_and_reproducible() {
        let env = ToyEnv::three_region();
        let ds = collect_demos(&env, &[4, 2, 4], 0.05, 11).unwrap();
        assert_eq!(ds.group_count(), 3);
        assert_eq!(ds.state_dim(), 2);
        assert_eq!(ds.action_dim(), 2);
        let sizes = ds.group_sizes();
        assert!(sizes.iter().all(|&s| s > 0));
        let again = collect_demos(&env, &[4, 2, 4], 0.05, 11).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn context_demos_carry_the_flag() {
        let env = ToyEnv::two_region_context();
        let ds = collect_demos(&env, &[3, 3], 0.0, 2).unwrap();
        assert_eq!(ds.state_dim(), 3);
        for p in ds.pairs() {
            assert_eq!(p.state[2], p.group as f64);
        }
    }

    #[test]
    fn config_parsing() {
        let env = ToyEnv::from_config("task = two-region-context\nhorizon = 80\ndt=0.05").unwrap();
        assert!(env.context_flag);
        assert_eq!(env.horizon, 80);
        assert_eq!(env.dt, 0.05);
        assert!(ToyEnv::from_config("task = flying").is_err());
        assert!(ToyEnv::from_config("speed = 3").is_err());
    }
}

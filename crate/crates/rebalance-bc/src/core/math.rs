//! Math primitives: the closed-form Gaussian KL divergence, state
//! normalization, and projected gradient steps on the probability simplex.
//!
//! All losses and excess losses in this crate are carried in nats.

use crate::core::types::{LabeledDataset, StateActionPair, WeightVector};
use crate::error::{Error, Result};

/// KL divergence between two univariate Gaussians,
/// `KL(N(mu1, sigma1^2) || N(mu2, sigma2^2))`:
///
/// ```text
/// log(sigma2 / sigma1) + (sigma1^2 + (mu1 - mu2)^2) / (2 sigma2^2) - 1/2
/// ```
///
/// Returns exactly 0 for identical arguments.
pub fn kl_gaussian(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64) -> Result<f64> {
    if !(sigma1 > 0.0) {
        return Err(Error::NonPositiveSigma(sigma1));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::NonPositiveSigma(sigma2));
    }
    let d = mu1 - mu2;
    Ok((sigma2 / sigma1).ln() + (sigma1 * sigma1 + d * d) / (2.0 * sigma2 * sigma2) - 0.5)
}

/// Rescales every state dimension so its mean square over the dataset is 1.
/// Actions are untouched. Returns the normalized dataset together with the
/// per-dimension scale factors that were applied.
///
/// A dimension that is identically zero cannot be rescaled and is reported as
/// an error; any other constant dimension normalizes fine.
pub fn normalize_states(dataset: &LabeledDataset) -> Result<(LabeledDataset, Vec<f64>)> {
    let dim = dataset.state_dim();
    let n = dataset.len() as f64;
    let mut mean_sq = vec![0.0; dim];
    for p in dataset.pairs() {
        for (d, &s) in p.state.iter().enumerate() {
            mean_sq[d] += s * s;
        }
    }
    for ms in &mut mean_sq {
        *ms /= n;
    }
    let mut scales = Vec::with_capacity(dim);
    for (d, &ms) in mean_sq.iter().enumerate() {
        if ms == 0.0 {
            return Err(Error::DegenerateStateDimension(d));
        }
        scales.push(1.0 / ms.sqrt());
    }
    let pairs = dataset
        .pairs()
        .iter()
        .map(|p| {
            let state = p.state.iter().zip(&scales).map(|(s, c)| s * c).collect();
            StateActionPair::new(state, p.action.clone(), p.group)
        })
        .collect();
    let out = LabeledDataset::new(pairs, dataset.group_count())?;
    Ok((out, scales))
}

/// One projected ascent step on the simplex.
///
/// The raw gradient is shifted by the multiplier `lambda = -mean(raw_grad)`
/// so the step stays in the sum-to-one plane, then negative entries are
/// clipped to zero and the result renormalized. Adding a constant to every
/// gradient component therefore leaves the step unchanged.
pub fn simplex_project_step(
    alpha: &WeightVector,
    raw_grad: &[f64],
    step: f64,
) -> Result<WeightVector> {
    if !(step > 0.0) {
        return Err(Error::NonPositiveStep(step));
    }
    let k = alpha.len();
    if raw_grad.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: raw_grad.len() });
    }
    let lambda = -raw_grad.iter().sum::<f64>() / k as f64;
    let mut next: Vec<f64> = alpha
        .as_slice()
        .iter()
        .zip(raw_grad)
        .map(|(&a, &g)| (a + step * (g + lambda)).max(0.0))
        .collect();
    let sum: f64 = next.iter().sum();
    // Before clipping the updated weights sum to 1 (the projected gradient
    // sums to zero), so at least one entry stays positive.
    debug_assert!(sum > 0.0);
    for a in &mut next {
        *a /= sum;
    }
    Ok(WeightVector::from_normalized(next))
}

/// Subtracts the mean from `values`. The min-max loop works with centered
/// excess losses so that shifting every reference by the same constant leaves
/// the trajectory bit-identical.
pub fn centered(values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| v - mean).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::types::StateActionPair;
    use proptest::prelude::*;

    #[test]
    fn kl_identical_is_exactly_zero() {
        assert_eq!(kl_gaussian(0.0, 1.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(kl_gaussian(1.3, 0.7, 1.3, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn kl_mean_shift() {
        assert!((kl_gaussian(0.0, 1.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kl_variance_mismatch() {
        let expect = 2.0f64.ln() + 0.125 - 0.5;
        assert!((kl_gaussian(0.0, 1.0, 0.0, 2.0).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn kl_rejects_bad_sigma() {
        assert!(kl_gaussian(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(kl_gaussian(0.0, 1.0, 0.0, -2.0).is_err());
    }

    fn ds(states: &[f64]) -> LabeledDataset {
        let pairs =
            states.iter().map(|&s| StateActionPair::new(vec![s], vec![2.0 * s], 0)).collect();
        LabeledDataset::new(pairs, 1).unwrap()
    }

    #[test]
    fn normalize_identity_when_unit_mean_square() {
        let (out, scales) = normalize_states(&ds(&[1.0, -1.0, 1.0, -1.0])).unwrap();
        assert_eq!(scales, vec![1.0]);
        assert_eq!(out.pairs()[0].state, vec![1.0]);
    }

    #[test]
    fn normalize_scales_down() {
        let (out, scales) = normalize_states(&ds(&[2.0, -2.0])).unwrap();
        assert_eq!(scales, vec![0.5]);
        assert_eq!(out.pairs()[0].state, vec![1.0]);
        assert_eq!(out.pairs()[1].state, vec![-1.0]);
        // actions untouched
        assert_eq!(out.pairs()[0].action, vec![4.0]);
    }

    #[test]
    fn normalize_constant_nonzero_dimension_is_fine() {
        let (out, scales) = normalize_states(&ds(&[5.0, 5.0, 5.0])).unwrap();
        assert!((scales[0] - 0.2).abs() < 1e-15);
        for p in out.pairs() {
            assert!((p.state[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_rejects_all_zero_dimension() {
        let err = normalize_states(&ds(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateStateDimension(0)));
    }

    #[test]
    fn normalized_mean_square_is_one() {
        let (out, _) = normalize_states(&ds(&[0.3, 1.7, -4.0, 0.9, 2.2])).unwrap();
        let ms: f64 =
            out.pairs().iter().map(|p| p.state[0] * p.state[0]).sum::<f64>() / out.len() as f64;
        assert!((ms - 1.0).abs() < 1e-9);
    }

    #[test]
    fn project_step_worked_example() {
        let alpha = WeightVector::new(vec![0.6, 0.4]).unwrap();
        let next = simplex_project_step(&alpha, &[0.4, 0.2], 1.0).unwrap();
        assert!((next.get(0) - 0.7).abs() < 1e-12);
        assert!((next.get(1) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn project_step_uniform_gradient_is_inert() {
        let alpha = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        for c in [-3.0, 0.0, 7.5] {
            let next = simplex_project_step(&alpha, &[c, c, c], 0.7).unwrap();
            for i in 0..3 {
                assert!((next.get(i) - alpha.get(i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn project_step_clips_and_renormalizes() {
        let alpha = WeightVector::new(vec![0.05, 0.95]).unwrap();
        let next = simplex_project_step(&alpha, &[-1.0, 1.0], 0.2).unwrap();
        assert_eq!(next.get(0), 0.0);
        assert_eq!(next.get(1), 1.0);
    }

    #[test]
    fn project_step_rejects_bad_step() {
        let alpha = WeightVector::uniform(2).unwrap();
        assert!(simplex_project_step(&alpha, &[0.1, 0.2], 0.0).is_err());
        assert!(simplex_project_step(&alpha, &[0.1, 0.2], -1.0).is_err());
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative(
            mu1 in -10.0..10.0f64, s1 in 0.01..10.0f64,
            mu2 in -10.0..10.0f64, s2 in 0.01..10.0f64,
        ) {
            let kl = kl_gaussian(mu1, s1, mu2, s2).unwrap();
            prop_assert!(kl >= -1e-12);
            if (mu1 - mu2).abs() > 1e-6 || (s1 - s2).abs() > 1e-6 {
                prop_assert!(kl > 0.0);
            }
        }

        #[test]
        fn project_step_stays_on_simplex(
            raw in proptest::collection::vec(-5.0..5.0f64, 4),
            step in 0.01..2.0f64,
        ) {
            let alpha = WeightVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
            let next = simplex_project_step(&alpha, &raw, step).unwrap();
            prop_assert!(next.as_slice().iter().all(|&a| a >= 0.0));
            prop_assert!((next.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn project_step_shift_invariance(
            raw in proptest::collection::vec(-5.0..5.0f64, 3),
            shift in -10.0..10.0f64,
            step in 0.01..2.0f64,
        ) {
            let alpha = WeightVector::new(vec![0.5, 0.3, 0.2]).unwrap();
            let a = simplex_project_step(&alpha, &raw, step).unwrap();
            let shifted: Vec<f64> = raw.iter().map(|g| g + shift).collect();
            let b = simplex_project_step(&alpha, &shifted, step).unwrap();
            for i in 0..3 {
                prop_assert!((a.get(i) - b.get(i)).abs() < 1e-9);
            }
        }
    }
}

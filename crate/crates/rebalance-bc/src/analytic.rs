//! Closed-form results for the linear-Gaussian case.
//!
//! When every behavior is a linear-Gaussian sub-policy over states with unit
//! mean square, the population objective has an exact optimum and an exact
//! per-group loss. These serve as oracles for the trainer: a correctly
//! implemented training loop must land on `optimal_theta` and respect
//! `worst_case_bound`.

use serde::{Deserialize, Serialize};

use crate::core::kl_gaussian;
use crate::error::{Error, Result};

/// A region of the (one-dimensional) state space owned by one behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// `lo <= s < hi`.
    Interval { lo: f64, hi: f64 },
    /// `inner <= |s| < outer`; symmetric about the origin.
    MirroredBand { inner: f64, outer: f64 },
}

impl Region {
    pub fn contains(&self, s: f64) -> bool {
        match *self {
            Region::Interval { lo, hi } => lo <= s && s < hi,
            Region::MirroredBand { inner, outer } => {
                let a = s.abs();
                inner <= a && a < outer
            }
        }
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        let ((a_lo, a_hi), (b_lo, b_hi)) = match (self, other) {
            (Region::MirroredBand { .. }, Region::MirroredBand { .. }) => {
                (self.absolute_span(), other.absolute_span())
            }
            // Conservative check through interval hulls.
            _ => (self.hull(), other.hull()),
        };
        a_hi <= b_lo || b_hi <= a_lo
    }

    fn absolute_span(&self) -> (f64, f64) {
        match *self {
            Region::Interval { lo, hi } => {
                let (a, b) = (lo.abs(), hi.abs());
                (a.min(b), a.max(b))
            }
            Region::MirroredBand { inner, outer } => (inner, outer),
        }
    }

    fn hull(&self) -> (f64, f64) {
        match *self {
            Region::Interval { lo, hi } => (lo, hi),
            Region::MirroredBand { inner: _, outer } => (-outer, outer),
        }
    }

    /// Second moment of a uniform draw from the region.
    pub fn second_moment(&self) -> f64 {
        let (lo, hi) = match *self {
            Region::Interval { lo, hi } => (lo, hi),
            // Uniform over the band's magnitude with a random sign.
            Region::MirroredBand { inner, outer } => (inner, outer),
        };
        (lo * lo + lo * hi + hi * hi) / 3.0
    }
}

/// Ground truth for one behavior: a linear gain, an action noise level, and
/// the state region the behavior owns. Regions of distinct specs must be
/// pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPolicySpec {
    /// Per-dimension gain; length 1 is the scalar reference case.
    pub theta: Vec<f64>,
    pub sigma: f64,
    pub region: Region,
}

impl SubPolicySpec {
    pub fn scalar(theta: f64, sigma: f64, region: Region) -> Self {
        Self { theta: vec![theta], sigma, region }
    }

    pub fn validate(specs: &[Self]) -> Result<()> {
        for s in specs {
            if !(s.sigma > 0.0) {
                return Err(Error::NonPositiveSigma(s.sigma));
            }
        }
        for i in 0..specs.len() {
            for j in i + 1..specs.len() {
                if !specs[i].region.is_disjoint(&specs[j].region) {
                    return Err(Error::InvalidConfig(format!(
                        "regions of behaviors {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_simplex(weights: &[f64]) -> Result<()> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::NotOnSimplex(sum));
    }
    Ok(())
}

/// The population optimum of weighted behavior cloning on normalized states:
/// a weighted sum of the per-behavior gains. With the empirical proportions
/// as weights this is the standard-BC optimum; with uniform weights it is the
/// equal-weight optimum.
pub fn optimal_theta(weights: &[f64], thetas: &[f64]) -> Result<f64> {
    if weights.len() != thetas.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), got: thetas.len() });
    }
    check_simplex(weights)?;
    Ok(weights.iter().zip(thetas).map(|(w, t)| w * t).sum())
}

/// Worst-case per-group loss `total_loss / rho_i`: the whole training loss
/// could be concentrated on one behavior, and the bound loosens as the
/// behavior's share of the data shrinks.
pub fn worst_case_bound(total_loss: f64, rho_i: f64) -> Result<f64> {
    if !(rho_i > 0.0) {
        return Err(Error::BadProportions);
    }
    Ok(total_loss / rho_i)
}

/// Exact population loss of a scalar linear-Gaussian robot policy against a
/// weighted mixture of sub-policies, assuming unit mean-square states:
///
/// ```text
/// sum_i w_i * [ log(sigma/sigma_i) + (sigma_i^2 + (theta_i - theta)^2) / (2 sigma^2) - 1/2 ]
/// ```
///
/// The full KL form is kept (not only the part proportional to the squared
/// gain gap) so values stay comparable across noise settings.
pub fn expected_bc_loss_linear(
    theta: f64,
    specs: &[SubPolicySpec],
    weights: &[f64],
    robot_sigma: f64,
) -> Result<f64> {
    if weights.len() != specs.len() {
        return Err(Error::LengthMismatch { expected: specs.len(), got: weights.len() });
    }
    check_simplex(weights)?;
    if !(robot_sigma > 0.0) {
        return Err(Error::NonPositiveSigma(robot_sigma));
    }
    let mut total = 0.0;
    for (spec, &w) in specs.iter().zip(weights) {
        let theta_i = spec.theta[0];
        total += w * kl_gaussian(theta_i, spec.sigma, theta, robot_sigma)?;
    }
    Ok(total)
}

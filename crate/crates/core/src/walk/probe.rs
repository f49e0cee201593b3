//! Sampling probe for the reciprocal moment of the scalar walk.
//!
//! For the scalar two-point walk `y <- alpha y + (1 - alpha) xi`,
//! `xi ~ Bernoulli(q)`, the reciprocal expectation `E[1/y_t]` stays bounded
//! as t grows only when `alpha > 1 - q`; below that threshold the rare
//! all-zero histories dominate and the expectation blows up. At stationarity
//! the bounded case satisfies the balance identity
//!
//! ```text
//!     ((alpha - 1 + q) / alpha) E[1/y] = q E[1 / (1 - alpha (1 - y))]
//! ```
//!
//! The probe samples `E[1/y_t]` at t = 1, 2, 4, 8, ... and classifies by the
//! growth of consecutive doubling ratios. This is a heuristic: it looks at
//! finitely many sampled paths, so it reports evidence, not proof, and every
//! report carries `heuristic: true` to say so.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

use super::check_alpha;

/// A doubling ratio at or above this counts as still growing.
const RATIO_THRESHOLD: f64 = 2.0;

/// Number of consecutive growing ratios that triggers the divergent verdict.
const RATIO_WINDOW: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalProbeConfig {
    pub alpha: f64,
    /// Bernoulli event probability of the scalar walk.
    pub q: f64,
    /// Starting point; must be positive so every y_t stays positive.
    pub y0: f64,
    pub paths: u64,
    pub seed: u64,
    /// The walk runs to the largest power of two at or below this.
    pub max_t: u32,
}

/// Probe verdict. "Apparently" is deliberate: the classification is sampled
/// evidence about a tail expectation, not a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divergence {
    ApparentlyDivergent,
    ApparentlyConvergent,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReciprocalProbe {
    /// Always true; this report is sampled evidence, not a proof.
    pub heuristic: bool,
    pub classification: Divergence,
    /// Boundedness threshold `1 - q`; the reciprocal moment stays bounded
    /// when alpha exceeds it.
    pub alpha_threshold: f64,
    /// Sampled `E[1/y_t]` at each power-of-two checkpoint.
    pub estimates: Vec<(u32, f64)>,
    /// `estimates[i + 1] / estimates[i]`.
    pub doubling_ratios: Vec<f64>,
    /// Balance identity sides at the final checkpoint.
    pub balance_lhs: f64,
    pub balance_rhs: f64,
    /// `balance_lhs - balance_rhs`; near zero only in the bounded regime.
    pub balance_residual: f64,
}

/// Run the probe described by `cfg`.
///
/// Path p draws from ChaCha8 substream p of `cfg.seed`, so results are
/// deterministic and independent of thread count.
pub fn reciprocal_probe(cfg: &ReciprocalProbeConfig) -> Result<ReciprocalProbe> {
    cfg.validate()?;
    let checkpoints = power_of_two_checkpoints(cfg.max_t);
    let n_cp = checkpoints.len();
    let alpha = cfg.alpha;
    let q = cfg.q;
    let y0 = cfg.y0;

    // Per path: 1/y at every checkpoint, then the balance integrand at the
    // final one.
    let per_path: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(p);
            let mut y = y0;
            let mut row = Vec::with_capacity(n_cp + 1);
            let mut t = 0u32;
            for &cp in &checkpoints {
                while t < cp {
                    let xi = if rng.random::<f64>() < q { 1.0 } else { 0.0 };
                    y = alpha * y + (1.0 - alpha) * xi;
                    t += 1;
                }
                row.push(1.0 / y);
            }
            row.push(1.0 / (1.0 - alpha * (1.0 - y)));
            row
        })
        .collect();

    // Sequential path-order reduction keeps results schedule independent.
    let mut sums = vec![NeumaierSum::new(); n_cp + 1];
    for row in &per_path {
        for (acc, &v) in sums.iter_mut().zip(row) {
            acc.add(v);
        }
    }
    let n = cfg.paths as f64;
    let means: Vec<f64> = sums.iter().map(|s| s.value() / n).collect();

    let estimates: Vec<(u32, f64)> =
        checkpoints.iter().copied().zip(means.iter().copied()).collect();
    let doubling_ratios: Vec<f64> =
        means.windows(2).take(n_cp - 1).map(|w| w[1] / w[0]).collect();
    let divergent = doubling_ratios
        .windows(RATIO_WINDOW)
        .any(|w| w.iter().all(|&r| r >= RATIO_THRESHOLD));
    let classification = if divergent {
        Divergence::ApparentlyDivergent
    } else {
        Divergence::ApparentlyConvergent
    };

    let balance_lhs = (alpha - 1.0 + q) / alpha * means[n_cp - 1];
    let balance_rhs = q * means[n_cp];

    Ok(ReciprocalProbe {
        heuristic: true,
        classification,
        alpha_threshold: 1.0 - q,
        estimates,
        doubling_ratios,
        balance_lhs,
        balance_rhs,
        balance_residual: balance_lhs - balance_rhs,
    })
}

fn power_of_two_checkpoints(max_t: u32) -> Vec<u32> {
    let mut cps = Vec::new();
    let mut t = 1u32;
    while t <= max_t {
        cps.push(t);
        match t.checked_mul(2) {
            Some(next) => t = next,
            None => break,
        }
    }
    cps
}

impl ReciprocalProbeConfig {
    fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !self.q.is_finite() || !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidParameter(format!(
                "event probability must lie in [0, 1], got {}",
                self.q
            )));
        }
        if !self.y0.is_finite() || self.y0 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "probe start must be positive so 1/y stays defined, got {}",
                self.y0
            )));
        }
        if self.paths == 0 {
            return Err(Error::InvalidParameter("at least one path is required".into()));
        }
        if self.max_t < 8 {
            return Err(Error::InvalidParameter(
                "max_t must be at least 8 so the probe sees four checkpoints".into(),
            ));
        }
        Ok(())
    }
}

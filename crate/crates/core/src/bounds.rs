//! Concentration bounds and regime diagnostics built on the variance
//! closed forms.
//!
//! The second moment is all Chebyshev needs: for the scalar walk,
//!
//! ```text
//!     P(|y_t - E y_t| >= eps) <= scale * (q - q^2) / eps^2,
//!     scale = (1 - alpha^2t) (1 - alpha) / (1 + alpha)
//! ```
//!
//! and for the simplex walk in norm, the variance trace gives the same shape
//! with `1 - sum q_i^2` in place of `q - q^2`. At the natural deviation scale
//! `eps = sqrt(1 - alpha)` the bound collapses to `(q - q^2)(1 - alpha^2t)
//! / (1 + alpha)`, at worst `0.25 / (1 + alpha)`; for alpha near 1 that is
//! about 1/8, i.e. roughly seven-eighths coverage, and the report flags when
//! that reading applies.
//!
//! # Regime switches
//!
//! When the event distribution jumps from P1 (held t1 steps) to P2 (held t2
//! steps), the endpoint mean from start X is the exact three-way mixture
//!
//! ```text
//!     E = alpha^(t1 + t2) X + alpha^t2 (1 - alpha^t1) P1 + (1 - alpha^t2) P2
//! ```
//!
//! Worked example used by the verification suite: alpha = 0.99,
//! t1 = t2 = 100, X = (1, 0), P1 = (0, 1), P2 = (1, 0) gives the mixture
//! mean (0.7679473335847325, 0.2320526664152675): one hundred steps after
//! the switch, barely a quarter of the mass still reflects the old regime.
//!
//! The relative weight of one phase-2 event against one phase-1 event is the
//! boost ratio below, approximately `alpha^(-t2) t2 / t1`: recency multiplies
//! per-event influence by about `alpha^(-1)` per elapsed step, against the
//! flat `t2 / t1` of plain counting.

use serde::{Deserialize, Serialize};

use crate::analytics::Horizon;
use crate::error::{Error, Result};
use crate::numeric::{decay_pow, one_minus_pow, NeumaierSum};
use crate::walk::{check_alpha, validate_weights, PROBABILITY_TOL};

/// Worst-case bound at `eps = sqrt(1 - alpha)` below which the report sets
/// `approx_seven_eighths`: 0.25/(1 + alpha) stays under this once alpha is
/// large enough for the "about 7/8 coverage" reading.
pub const SEVEN_EIGHTHS_FLAG_MAX: f64 = 0.13;

/// A deviation-probability query.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundQuery {
    pub alpha: f64,
    /// Per-item event probabilities. Each entry is bounded on its own; the
    /// joint norm bound additionally needs them to form a distribution.
    pub q: Vec<f64>,
    pub epsilon: f64,
    pub horizon: Horizon,
    /// Optional `(t1, t2)` window pair to attach boost ratios.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boost_window: Option<(u64, u64)>,
}

/// Chebyshev bound for one item.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItemBound {
    pub q: f64,
    /// `scale * (q - q^2) / eps^2` as computed.
    pub raw: f64,
    /// Same, clamped to 1: a probability bound above 1 says nothing.
    pub clamped: f64,
}

/// Everything the variance formulas say about deviations at one epsilon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub horizon: Horizon,
    pub per_item: Vec<ItemBound>,
    /// Norm bound `scale * (1 - sum q_i^2) / eps^2` when `q` is a
    /// distribution over at least two items, clamped to 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector_bound: Option<f64>,
    /// The natural deviation scale `sqrt(1 - alpha)`.
    pub sqrt_epsilon: f64,
    /// Per-item bound evaluated at that scale: `(q - q^2)(1 - alpha^2t)
    /// / (1 + alpha)`, computed without the cancelling epsilon division.
    pub sqrt_per_item: Vec<f64>,
    /// The q = 1/2 worst case of the previous: `0.25 (1 - alpha^2t)
    /// / (1 + alpha)`.
    pub worst_case_sqrt_bound: f64,
    /// True when the worst case is small enough to read as "deviations stay
    /// inside sqrt(1 - alpha) with probability about 7/8 or better".
    pub approx_seven_eighths: bool,
    /// Largest relative error epsilon such that a tail at absolute scale
    /// eps^3 stays below it; see [`relative_error_threshold`].
    pub relative_error_threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boost: Option<BoostRatios>,
}

/// Evaluate every bound the variance formulas support at one epsilon.
pub fn tail_bound(query: &BoundQuery) -> Result<BoundReport> {
    check_alpha(query.alpha)?;
    if !query.epsilon.is_finite() || query.epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {}",
            query.epsilon
        )));
    }
    if query.q.is_empty() {
        return Err(Error::InvalidParameter("at least one event probability is required".into()));
    }
    for (i, &w) in query.q.iter().enumerate() {
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "q[{i}] must lie in [0, 1], got {w}"
            )));
        }
    }
    let alpha = query.alpha;
    let scale = query.horizon.variance_scale(alpha);
    let span = query.horizon.variance_span(alpha);
    let eps2 = query.epsilon * query.epsilon;

    let per_item: Vec<ItemBound> = query
        .q
        .iter()
        .map(|&q| {
            let raw = scale * (q - q * q) / eps2;
            ItemBound { q, raw, clamped: raw.min(1.0) }
        })
        .collect();

    let mut qsum = NeumaierSum::new();
    let mut sq = NeumaierSum::new();
    for &w in &query.q {
        qsum.add(w);
        sq.add(w * w);
    }
    let vector_bound = (query.q.len() >= 2 && (qsum.value() - 1.0).abs() <= PROBABILITY_TOL)
        .then(|| (scale * (1.0 - sq.value()) / eps2).min(1.0));

    let sqrt_epsilon = (1.0 - alpha).sqrt();
    // At eps = sqrt(1 - alpha) the (1 - alpha) factors cancel exactly;
    // dividing them back in would only round twice.
    let sqrt_per_item: Vec<f64> =
        query.q.iter().map(|&q| span * (q - q * q) / (1.0 + alpha)).collect();
    let worst_case_sqrt_bound = span * 0.25 / (1.0 + alpha);

    Ok(BoundReport {
        alpha,
        epsilon: query.epsilon,
        horizon: query.horizon,
        per_item,
        vector_bound,
        sqrt_epsilon,
        sqrt_per_item,
        worst_case_sqrt_bound,
        approx_seven_eighths: worst_case_sqrt_bound <= SEVEN_EIGHTHS_FLAG_MAX,
        relative_error_threshold: relative_error_threshold(alpha, query.epsilon)?,
        boost: match query.boost_window {
            Some((t1, t2)) => Some(boost_ratio(alpha, t1, t2)?),
            None => None,
        },
    })
}

/// Largest relative error delta for which the deviation bound at absolute
/// scale `eps^3` still holds:
///
/// ```text
///     delta = 1 / (1 + ((1 + alpha) / (1 - alpha)) eps^3)
/// ```
///
/// Small `1 - alpha` makes the denominator large and the achievable relative
/// error small; at alpha = 0.999, eps = 0.1 this is 1/2.999.
pub fn relative_error_threshold(alpha: f64, epsilon: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(1.0 / (1.0 + (1.0 + alpha) / (1.0 - alpha) * epsilon.powi(3)))
}

/// A two-phase event schedule on the simplex: hold P1 for t1 steps, then P2
/// for t2 steps, starting from distribution X.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegimeSwitchSpec {
    pub alpha: f64,
    pub start: Vec<f64>,
    pub phase1: Vec<f64>,
    pub phase2: Vec<f64>,
    pub t1: u64,
    pub t2: u64,
}

/// Exact endpoint mean of a two-phase schedule, the three-way mixture from
/// the module docs.
pub fn regime_switch_mean(spec: &RegimeSwitchSpec) -> Result<Vec<f64>> {
    check_alpha(spec.alpha)?;
    let n = spec.start.len();
    validate_weights(&spec.start, n, "start")?;
    validate_weights(&spec.phase1, n, "phase1")?;
    validate_weights(&spec.phase2, n, "phase2")?;
    let c0 = decay_pow(spec.alpha, spec.t1 + spec.t2);
    let c1 = decay_pow(spec.alpha, spec.t2) * one_minus_pow(spec.alpha, spec.t1);
    let c2 = one_minus_pow(spec.alpha, spec.t2);
    Ok((0..n)
        .map(|i| c0 * spec.start[i] + c1 * spec.phase1[i] + c2 * spec.phase2[i])
        .collect())
}

/// Per-event weight of the recent window against the older one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoostRatios {
    /// `(1 - alpha^t2) / (alpha^t2 (1 - alpha^t1))`.
    pub exact: f64,
    /// First-order form `alpha^(-t2) t2 / t1`, valid while `(1 - alpha) t`
    /// is small against 1.
    pub approximate: f64,
    /// What plain counting would say: `t2 / t1`.
    pub counting_baseline: f64,
}

/// How much one event in the last t2 steps outweighs one event in the t1
/// steps before that. Equal windows reduce `exact` to pure decay
/// `alpha^(-t2)`.
pub fn boost_ratio(alpha: f64, t1: u64, t2: u64) -> Result<BoostRatios> {
    check_alpha(alpha)?;
    if t1 == 0 || t2 == 0 {
        return Err(Error::InvalidParameter(
            "boost ratio needs non-empty windows (t1, t2 >= 1)".into(),
        ));
    }
    let exact = one_minus_pow(alpha, t2) / (decay_pow(alpha, t2) * one_minus_pow(alpha, t1));
    let counting_baseline = t2 as f64 / t1 as f64;
    let approximate = counting_baseline / decay_pow(alpha, t2);
    Ok(BoostRatios { exact, approximate, counting_baseline })
}

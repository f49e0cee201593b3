//! Streaming rank table with exponential decay.
//!
//! Every observed event for item j replaces the tracked distribution P by the
//! convex mixture
//!
//! ```text
//!     P  <-  alpha * P + (1 - alpha) * delta_j,        0 < alpha < 1
//! ```
//!
//! so an item's probability is, up to the shared normalization, a geometric
//! sum of `alpha^(age)` over its events: recent activity dominates and old
//! activity decays with half-life `ln 2 / ln(1/alpha)`. The mixture of two
//! probability vectors is again a probability vector, so the table sums to 1
//! after every event.
//!
//! The textbook update touches every item per event. [`DecayRankTable`]
//! instead stores unnormalized weights `u_i` together with one pending decay
//! exponent shared by the whole table: the materialized probability is
//!
//! ```text
//!     p_i = u_i * alpha^(step - rebase)
//! ```
//!
//! An event only bumps `u_j` by `(1 - alpha) * alpha^-(step - rebase)` while
//! the shared exponent grows by one, which makes updates O(1). Because the
//! common factor is positive, ranking by `u_i` and ranking by `p_i` agree
//! exactly. Once the pending factor would leave `[2^-500, 2^500]` the factor
//! is folded into every weight and the exponent reset (an O(n) sweep whose
//! period is ~`500 ln 2 / ln(1/alpha)` events, so the amortized cost stays
//! O(1)); weights therefore never overflow and never go subnormal.
//!
//! [`DenseReference`] applies the O(n) update literally. It exists as an
//! independent route for cross-checking the lazy representation and is what
//! the validation suite compares against.
//!
//! Concurrency model: single writer. Readers can share `&DecayRankTable`
//! freely; all mutation goes through `&mut self`, which the borrow checker
//! enforces.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{decay_pow, NeumaierSum};

/// Largest f64 strictly below 1.0; decay factors are clamped here when a huge
/// half-life would otherwise round `exp(-ln2 / T)` up to exactly 1.
const ALPHA_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// The pending factor `alpha^(step - rebase)` is kept inside
/// `[2^-500, 2^500]`; n.b. weight bumps grow like the reciprocal of the
/// factor, so both directions are bounded by the same exponent budget.
const RESCALE_EXP_BUDGET: f64 = 500.0 * std::f64::consts::LN_2;

/// Hard ceiling on the rescale period so pending exponents stay well inside
/// `i32` for `powi` and the O(n) sweep stays amortized-negligible.
const RESCALE_PERIOD_CAP: u64 = 1_000_000_000;

/// Tolerance on "materialized probabilities sum to 1".
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Tolerance for the internal alpha/half-life consistency invariant.
const PARAM_CONSISTENCY_TOL: f64 = 1e-12;

const SNAPSHOT_FORMAT: &str = "decay-rank-table";
const SNAPSHOT_VERSION: u32 = 1;

/// Convert a half-life in events to the per-event decay factor
/// `exp(-ln 2 / half_life)`, strictly inside (0, 1).
pub fn half_life_to_alpha(half_life: f64) -> Result<f64> {
    if !half_life.is_finite() || half_life <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "half-life must be a positive finite number of events, got {half_life}"
        )));
    }
    let alpha = (-std::f64::consts::LN_2 / half_life).exp();
    // For astronomically large half-lives exp() rounds to 1; clamp to the
    // largest representable factor below 1 (consistent within 1e-12).
    Ok(alpha.min(ALPHA_MAX))
}

/// Convert a decay factor to its half-life in events, `ln 2 / ln(1/alpha)`.
pub fn alpha_to_half_life(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(std::f64::consts::LN_2 / -alpha.ln())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "decay factor alpha must lie strictly inside (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Decay rate expressed both ways. The two fields always satisfy
/// `alpha == exp(-ln 2 / half_life)` to within 1e-12.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    alpha: f64,
    half_life: f64,
}

impl DecayParams {
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        Ok(Self { alpha, half_life: alpha_to_half_life(alpha)? })
    }

    pub fn from_half_life(half_life: f64) -> Result<Self> {
        let alpha = half_life_to_alpha(half_life)?;
        Ok(Self { alpha, half_life })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn half_life(&self) -> f64 {
        self.half_life
    }
}

/// Versioned on-disk form of the table. Canonical: items sorted by id.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotV1 {
    format: String,
    version: u32,
    alpha: f64,
    half_life: f64,
    global_step: u64,
    rebase_step: u64,
    eviction_floor: f64,
    items: Vec<(String, f64)>,
}

/// Streaming rank table; see the module docs for the representation.
#[derive(Clone, Debug)]
pub struct DecayRankTable {
    params: DecayParams,
    weights: HashMap<String, f64>,
    global_step: u64,
    rebase_step: u64,
    rescale_period: u64,
    eviction_floor: f64,
}

impl DecayRankTable {
    /// Empty table. The first observed event seeds the point mass on its item
    /// (the update maps a point mass to itself, so this is the unique choice
    /// that keeps total mass at 1 for streams over an undeclared universe).
    pub fn new(params: DecayParams) -> Self {
        let rescale_period = rescale_period(params.alpha);
        Self {
            params,
            weights: HashMap::new(),
            global_step: 0,
            rebase_step: 0,
            rescale_period,
            eviction_floor: 0.0,
        }
    }

    /// Uniform initial distribution over a declared universe of items.
    pub fn uniform<I, S>(items: I, params: DecayParams) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = Self::new(params);
        let ids: Vec<String> = items.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Ok(table);
        }
        let share = 1.0 / ids.len() as f64;
        for id in ids {
            validate_item_id(&id)?;
            if table.weights.insert(id.clone(), share).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate item id {id:?}")));
            }
        }
        Ok(table)
    }

    /// Explicit initial distribution; must be nonnegative and sum to 1 within
    /// [`MASS_TOLERANCE`].
    pub fn with_initial<I, S>(dist: I, params: DecayParams) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut table = Self::new(params);
        let mut mass = NeumaierSum::new();
        for (id, p) in dist {
            let id = id.into();
            validate_item_id(&id)?;
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "initial probability for {id:?} must be finite and nonnegative, got {p}"
                )));
            }
            mass.add(p);
            if table.weights.insert(id.clone(), p).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate item id {id:?}")));
            }
        }
        if table.weights.is_empty() {
            return Ok(table);
        }
        let total = mass.value();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "initial distribution must sum to 1 within {MASS_TOLERANCE:e}, got {total}"
            )));
        }
        Ok(table)
    }

    pub fn params(&self) -> DecayParams {
        self.params
    }

    /// Number of tracked items.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total number of events observed so far.
    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    /// Optional eviction floor: items whose materialized probability falls
    /// below the floor are dropped during rescale sweeps. Disabled at 0.0
    /// (the default). Eviction is lossy: evicted mass is gone, so the table
    /// sum can drift below 1 by up to `floor * evicted_count` per sweep.
    pub fn set_eviction_floor(&mut self, floor: f64) -> Result<()> {
        if !floor.is_finite() || floor < 0.0 || floor >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "eviction floor must lie in [0, 1), got {floor}"
            )));
        }
        self.eviction_floor = floor;
        Ok(())
    }

    /// Record one event for `item`. New items enter with zero prior weight and
    /// receive exactly the `(1 - alpha)` share of this event.
    pub fn observe(&mut self, item: &str) {
        if self.weights.is_empty() {
            // Seed event on an undeclared universe: the stream starts at the
            // point mass delta_item, which the update maps to itself.
            self.global_step += 1;
            self.rebase_step = self.global_step;
            self.weights.insert(item.to_owned(), 1.0);
            return;
        }
        let pending = self.global_step + 1 - self.rebase_step;
        let bump = (1.0 - self.params.alpha) / decay_pow(self.params.alpha, pending);
        *self.weights.entry(item.to_owned()).or_insert(0.0) += bump;
        self.global_step += 1;
        if self.global_step - self.rebase_step >= self.rescale_period {
            self.rescale();
        }
    }

    /// Fold the pending decay factor into the stored weights so that
    /// `u_i == p_i`, then reset the pending exponent.
    fn rescale(&mut self) {
        let factor = decay_pow(self.params.alpha, self.global_step - self.rebase_step);
        for u in self.weights.values_mut() {
            *u *= factor;
            debug_assert!(u.is_finite() && !u.is_subnormal(), "weight left normal range");
        }
        self.rebase_step = self.global_step;
        if self.eviction_floor > 0.0 {
            let floor = self.eviction_floor;
            self.weights.retain(|_, u| *u >= floor);
        }
    }

    fn pending_factor(&self) -> f64 {
        decay_pow(self.params.alpha, self.global_step - self.rebase_step)
    }

    /// Materialized probability of one item.
    pub fn probability(&self, item: &str) -> Option<f64> {
        let f = self.pending_factor();
        self.weights.get(item).map(|u| u * f)
    }

    /// All materialized probabilities, sorted by item id.
    pub fn probabilities(&self) -> Vec<(String, f64)> {
        let f = self.pending_factor();
        let mut out: Vec<(String, f64)> =
            self.weights.iter().map(|(id, u)| (id.clone(), u * f)).collect();
        out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Compensated total mass over items in id order (deterministic).
    pub fn total_mass(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for (_, p) in self.probabilities() {
            acc.add(p);
        }
        acc.value()
    }

    /// The `k` most probable items, probabilities descending, ties broken by
    /// lexicographic item id. `k` larger than the item count returns all
    /// items. Ranking is done on the stored weights, which orders identically
    /// to the materialized probabilities (shared positive factor).
    pub fn top_k(&self, k: usize) -> Vec<(String, f64)> {
        let mut entries: Vec<(&String, f64)> =
            self.weights.iter().map(|(id, u)| (id, *u)).collect();
        entries.sort_unstable_by(|a, b| {
            b.1.partial_cmp(&a.1).expect("weights are never NaN").then_with(|| a.0.cmp(b.0))
        });
        entries.truncate(k);
        let f = self.pending_factor();
        entries.into_iter().map(|(id, u)| (id.clone(), u * f)).collect()
    }

    /// Swap the decay factor mid-stream. Pending decay under the old factor is
    /// materialized first, so history keeps its old-rate decay and only future
    /// events see the new rate. Setting the current alpha again leaves every
    /// materialized probability unchanged.
    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        let params = DecayParams::from_alpha(alpha)?;
        self.rescale();
        self.params = params;
        self.rescale_period = rescale_period(alpha);
        Ok(())
    }

    /// Serialize to the canonical versioned snapshot (JSON, items sorted by
    /// id, full-precision floats). Restoring yields a bit-exact continuation.
    pub fn snapshot_json(&self) -> String {
        let mut items: Vec<(String, f64)> =
            self.weights.iter().map(|(id, u)| (id.clone(), *u)).collect();
        items.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let snap = SnapshotV1 {
            format: SNAPSHOT_FORMAT.to_owned(),
            version: SNAPSHOT_VERSION,
            alpha: self.params.alpha,
            half_life: self.params.half_life,
            global_step: self.global_step,
            rebase_step: self.rebase_step,
            eviction_floor: self.eviction_floor,
            items,
        };
        serde_json::to_string_pretty(&snap).expect("snapshot serialization cannot fail")
    }

    /// Restore from a snapshot produced by [`Self::snapshot_json`]. Rejects
    /// unknown formats, unsupported versions, and structurally invalid state,
    /// naming the offending field.
    pub fn from_snapshot_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("snapshot is not valid JSON: {e}")))?;
        match value.get("format") {
            Some(serde_json::Value::String(s)) if s == SNAPSHOT_FORMAT => {}
            Some(other) => {
                return Err(Error::Format(format!(
                    "field `format`: expected {SNAPSHOT_FORMAT:?}, got {other}"
                )))
            }
            None => return Err(Error::Format("missing field `format`".into())),
        }
        match value.get("version") {
            Some(v) if v.as_u64() == Some(SNAPSHOT_VERSION as u64) => {}
            Some(other) => {
                return Err(Error::Format(format!(
                    "field `version`: only version {SNAPSHOT_VERSION} is supported, got {other}"
                )))
            }
            None => return Err(Error::Format("missing field `version`".into())),
        }
        let snap: SnapshotV1 = serde_json::from_value(value)
            .map_err(|e| Error::Format(format!("snapshot field invalid: {e}")))?;

        check_alpha(snap.alpha).map_err(|_| {
            Error::Format(format!("field `alpha`: must lie in (0, 1), got {}", snap.alpha))
        })?;
        let implied = (-std::f64::consts::LN_2 / snap.half_life).exp();
        if !snap.half_life.is_finite()
            || snap.half_life <= 0.0
            || (implied - snap.alpha).abs() > PARAM_CONSISTENCY_TOL
        {
            return Err(Error::Format(format!(
                "field `half_life`: {} is inconsistent with alpha {}",
                snap.half_life, snap.alpha
            )));
        }
        if snap.rebase_step > snap.global_step {
            return Err(Error::Format(format!(
                "field `rebase_step`: {} exceeds global_step {}",
                snap.rebase_step, snap.global_step
            )));
        }
        if !snap.eviction_floor.is_finite() || snap.eviction_floor < 0.0 || snap.eviction_floor >= 1.0
        {
            return Err(Error::Format(format!(
                "field `eviction_floor`: must lie in [0, 1), got {}",
                snap.eviction_floor
            )));
        }
        let mut weights = HashMap::with_capacity(snap.items.len());
        for (id, u) in &snap.items {
            validate_item_id(id).map_err(|_| {
                Error::Format(format!("field `items`: invalid item id {id:?}"))
            })?;
            if !u.is_finite() || *u < 0.0 || u.is_subnormal() {
                return Err(Error::Format(format!(
                    "field `items`: weight for {id:?} must be finite, nonnegative and not subnormal, got {u:e}"
                )));
            }
            if weights.insert(id.clone(), *u).is_some() {
                return Err(Error::Format(format!("field `items`: duplicate item id {id:?}")));
            }
        }
        let mut table = Self {
            params: DecayParams { alpha: snap.alpha, half_life: snap.half_life },
            weights,
            global_step: snap.global_step,
            rebase_step: snap.rebase_step,
            rescale_period: rescale_period(snap.alpha),
            eviction_floor: snap.eviction_floor,
        };
        // Defensive: a foreign writer may have let the pending exponent grow
        // past our rescale period.
        if table.global_step - table.rebase_step >= table.rescale_period {
            table.rescale();
        }
        Ok(table)
    }
}

fn validate_item_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains('\n') {
        return Err(Error::InvalidParameter(
            "item ids must be non-empty and contain no newline".into(),
        ));
    }
    Ok(())
}

/// Events between O(n) rescale sweeps: as many steps as keep `alpha^steps`
/// at or above 2^-500, capped for i32/powi safety and at least 1.
fn rescale_period(alpha: f64) -> u64 {
    let per_step = -alpha.ln();
    // The ratio can land one ulp below an exact integer (alpha = 0.5 gives
    // 499.99999999999994), so nudge before flooring; the exponent budget has
    // hundreds of bits of headroom, one extra step cannot underflow.
    let steps = (RESCALE_EXP_BUDGET / per_step * (1.0 + 1e-12)).floor();
    if steps.is_finite() && steps >= 1.0 {
        (steps as u64).min(RESCALE_PERIOD_CAP)
    } else {
        1
    }
}

/// Textbook O(n)-per-event implementation of the same update: every event
/// decays all items by `alpha` and adds `1 - alpha` to the observed one.
/// Independent route used to validate [`DecayRankTable`].
#[derive(Clone, Debug)]
pub struct DenseReference {
    alpha: f64,
    probs: HashMap<String, f64>,
}

impl DenseReference {
    pub fn uniform<I, S>(items: I, alpha: f64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        check_alpha(alpha)?;
        let ids: Vec<String> = items.into_iter().map(Into::into).collect();
        let mut probs = HashMap::with_capacity(ids.len());
        if !ids.is_empty() {
            let share = 1.0 / ids.len() as f64;
            for id in ids {
                if probs.insert(id.clone(), share).is_some() {
                    return Err(Error::InvalidParameter(format!("duplicate item id {id:?}")));
                }
            }
        }
        Ok(Self { alpha, probs })
    }

    pub fn observe(&mut self, item: &str) {
        if self.probs.is_empty() {
            self.probs.insert(item.to_owned(), 1.0);
            return;
        }
        for p in self.probs.values_mut() {
            *p *= self.alpha;
        }
        *self.probs.entry(item.to_owned()).or_insert(0.0) += 1.0 - self.alpha;
    }

    pub fn probability(&self, item: &str) -> Option<f64> {
        self.probs.get(item).copied()
    }

    pub fn probabilities(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> =
            self.probs.iter().map(|(id, p)| (id.clone(), *p)).collect();
        out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

//! Exact walk moments by exhausting every vertex sequence.
//!
//! A walk of t steps over m vertices has exactly m^t equally structured
//! histories; each history's endpoint and probability are exact products, so
//! summing over all of them gives moments with no sampling error at all. This
//! is the independent brute-force route against which both the sampling
//! estimates and the closed-form expressions can be checked. The price is the
//! m^t blowup, capped by [`ENUMERATION_BUDGET`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{decay_pow, NeumaierSum};

use super::WalkConfig;

/// Hard cap on the number of vertex sequences enumerated (2^24).
pub const ENUMERATION_BUDGET: u64 = 1 << 24;

/// Highest central-moment order the enumerator reports.
pub const MAX_CENTRAL_ORDER: usize = 8;

/// Endpoint support is retained only up to this many sequences (2^16);
/// beyond it only the aggregated moments are kept.
const SUPPORT_CAP: u64 = 1 << 16;

/// One endpoint of the sequence tree with its exact probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportAtom {
    pub probability: f64,
    pub point: Vec<f64>,
}

/// Exact distribution summary of a walk endpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactMoments {
    /// Exact mean per embedded coordinate.
    pub mean: Vec<f64>,
    /// Exact covariance matrix (probability-weighted, about the exact mean).
    pub covariance: Vec<Vec<f64>>,
    /// Central moments per coordinate, orders `0..=max_order`.
    pub central: Vec<Vec<f64>>,
    /// Complex mode only: scalar variance `E|z - Ez|^2`, the covariance trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex_variance: Option<f64>,
    /// Endpoint atoms in sequence order (first step most significant), one
    /// per history, duplicates not merged. `None` when the tree exceeds
    /// [`SUPPORT_CAP`] sequences.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<SupportAtom>>,
    /// Number of vertex sequences summed over.
    pub sequences: u64,
}

/// Compute the exact endpoint distribution of `cfg` by enumerating all vertex
/// sequences. `cfg.paths` and `cfg.seed` are ignored: there is nothing random
/// here. Central moments are reported up to `max_order`.
pub fn enumerate_exact(cfg: &WalkConfig, max_order: usize) -> Result<ExactMoments> {
    cfg.validate()?;
    if max_order > MAX_CENTRAL_ORDER {
        return Err(Error::InvalidParameter(format!(
            "central moment order {max_order} exceeds the enumeration limit {MAX_CENTRAL_ORDER}"
        )));
    }
    let m = cfg.vertices.vertex_count();
    let t = cfg.steps;
    let sequences = checked_tree_size(m, t)?;
    let dim = cfg.vertices.embedded_dim();
    let y0 = cfg.start.embedding();

    if m == 1 {
        // A single vertex makes the walk deterministic; the sequence tree is
        // one path of arbitrary depth, so fold it in closed form instead of
        // recursing t levels deep.
        return Ok(single_vertex_moments(cfg, max_order, &y0));
    }

    let columns: Vec<Vec<f64>> = (0..m).map(|j| cfg.vertices.column(j)).collect();

    // Pass 1: exact mean (and the support atoms, which come for free in
    // sequence order).
    let mut mean_acc = vec![NeumaierSum::new(); dim];
    let mut support = (sequences <= SUPPORT_CAP).then(|| Vec::with_capacity(sequences as usize));
    visit_leaves(&columns, &cfg.q, cfg.alpha, &y0, t, &mut |prob, point| {
        for (acc, &x) in mean_acc.iter_mut().zip(point) {
            acc.add(prob * x);
        }
        if let Some(atoms) = support.as_mut() {
            atoms.push(SupportAtom { probability: prob, point: point.to_vec() });
        }
    });
    let mean: Vec<f64> = mean_acc.iter().map(NeumaierSum::value).collect();

    // Pass 2: everything centered on that mean.
    let mut cov_acc = vec![vec![NeumaierSum::new(); dim]; dim];
    let mut central_acc = vec![vec![NeumaierSum::new(); max_order + 1]; dim];
    let mut diff = vec![0.0; dim];
    visit_leaves(&columns, &cfg.q, cfg.alpha, &y0, t, &mut |prob, point| {
        for ((d, &x), &mu) in diff.iter_mut().zip(point).zip(&mean) {
            *d = x - mu;
        }
        for i in 0..dim {
            for j in i..dim {
                cov_acc[i][j].add(prob * diff[i] * diff[j]);
            }
            let mut pow = 1.0;
            for acc in central_acc[i].iter_mut() {
                acc.add(prob * pow);
                pow *= diff[i];
            }
        }
    });
    let mut covariance = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let c = cov_acc[i][j].value();
            covariance[i][j] = c;
            covariance[j][i] = c;
        }
    }
    let central: Vec<Vec<f64>> =
        central_acc.iter().map(|row| row.iter().map(NeumaierSum::value).collect()).collect();
    let complex_variance =
        cfg.vertices.is_complex().then(|| covariance[0][0] + covariance[1][1]);

    Ok(ExactMoments { mean, covariance, central, complex_variance, support, sequences })
}

/// m^t, or an error once it exceeds the budget.
fn checked_tree_size(m: usize, t: u32) -> Result<u64> {
    let mut size: u128 = 1;
    for _ in 0..t {
        size *= m as u128;
        if size > ENUMERATION_BUDGET as u128 {
            return Err(Error::BudgetExceeded(format!(
                "{m}^{t} vertex sequences exceed the enumeration budget 2^24 = {ENUMERATION_BUDGET}"
            )));
        }
    }
    Ok(size as u64)
}

/// Depth-first sweep of the sequence tree, visiting each leaf with its exact
/// probability and endpoint. Children are taken in vertex order, so leaves
/// arrive in lexicographic sequence order. Depth is at most 24 levels: with
/// m >= 2 the budget bounds t by log2 of [`ENUMERATION_BUDGET`].
fn visit_leaves(
    columns: &[Vec<f64>],
    q: &[f64],
    alpha: f64,
    y0: &[f64],
    steps: u32,
    visit: &mut impl FnMut(f64, &[f64]),
) {
    let dim = y0.len();
    let mut states = vec![vec![0.0; dim]; steps as usize + 1];
    states[0].copy_from_slice(y0);
    descend(columns, q, alpha, &mut states, 0, 1.0, visit);
}

fn descend(
    columns: &[Vec<f64>],
    q: &[f64],
    alpha: f64,
    states: &mut [Vec<f64>],
    level: usize,
    prob: f64,
    visit: &mut impl FnMut(f64, &[f64]),
) {
    if level + 1 == states.len() {
        visit(prob, &states[level]);
        return;
    }
    let one_minus = 1.0 - alpha;
    for (j, col) in columns.iter().enumerate() {
        let (head, tail) = states.split_at_mut(level + 1);
        let cur = &head[level];
        let next = &mut tail[0];
        for ((n, &y), &v) in next.iter_mut().zip(cur).zip(col) {
            *n = alpha * y + one_minus * v;
        }
        descend(columns, q, alpha, states, level + 1, prob * q[j], visit);
    }
}

fn single_vertex_moments(cfg: &WalkConfig, max_order: usize, y0: &[f64]) -> ExactMoments {
    let dim = y0.len();
    let a_t = decay_pow(cfg.alpha, cfg.steps as u64);
    let col = cfg.vertices.column(0);
    let mean: Vec<f64> =
        y0.iter().zip(&col).map(|(&y, &v)| a_t * y + (1.0 - a_t) * v).collect();
    let mut central = vec![vec![0.0; max_order + 1]; dim];
    for row in central.iter_mut() {
        row[0] = 1.0;
    }
    ExactMoments {
        mean: mean.clone(),
        covariance: vec![vec![0.0; dim]; dim],
        central,
        complex_variance: cfg.vertices.is_complex().then_some(0.0),
        support: Some(vec![SupportAtom { probability: 1.0, point: mean }]),
        sequences: 1,
    }
}

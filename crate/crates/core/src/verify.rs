//! Self-verification: every closed form checked against an independent route.
//!
//! Each check pits at least two implementations that share no code against
//! each other: closed forms against exhaustive enumeration, recurrences
//! against sampling, structured eigensolvers against a dense one, the lazy
//! ranker against a naive dense reference. [`run_all`] executes all fifteen
//! and reports one outcome per check; the `acceptance` integration test and
//! the CLI `verify` subcommand both print exactly that list.
//!
//! Tolerances are pinned as named constants below. Deterministic routes meet
//! at 1e-12 or tighter; sampled routes get standard-error gates (4 sigma for
//! means and higher moments, 5% relative for variances) with fixed seeds, so
//! a run either passes forever or fails forever on a given build.

use std::time::Instant;

use serde::Serialize;

use crate::analytics::{
    central_moments, generalized_moments, moment_root_trend, moment_symmetry_check,
    scalar_mean_var, secular_eigenvalues, simplex_covariance, symmetric_eigen, Horizon,
};
use crate::bounds::{boost_ratio, relative_error_threshold, tail_bound, BoundQuery, RegimeSwitchSpec};
use crate::bounds::regime_switch_mean;
use crate::error::Result;
use crate::ranker::{DecayParams, DecayRankTable, DenseReference};
use crate::walk::{
    enumerate_exact, reciprocal_probe, simulate, simulate_phased, Divergence, Phase,
    ReciprocalProbeConfig, StartPoint, VertexSet, WalkConfig,
};

/// Two deterministic routes to the same number must agree this tightly.
pub const CLOSED_FORM_TOL: f64 = 1e-12;

/// Quantities that cancel exactly in f64 (odd moments at q = 1/2) may leave
/// at most noise at this scale.
pub const EXACT_ZERO_TOL: f64 = 1e-15;

/// Uniform-Q kernel spectra are known in closed form to this accuracy.
pub const UNIFORM_SPECTRUM_TOL: f64 = 1e-10;

/// Secular roots vs the dense eigensolver.
pub const SPECTRAL_CROSS_TOL: f64 = 1e-9;

/// Sampled means sit within this many standard errors of theory.
pub const MC_SIGMA_GATE: f64 = 4.0;

/// Sampled variances sit within this relative distance of theory.
pub const MC_REL_TOL: f64 = 0.05;

/// The natural-scale bound at alpha = 0.99 must reproduce 0.25/1.99 this
/// closely.
pub const SEVEN_EIGHTHS_VALUE_TOL: f64 = 1e-4;

/// Boost approximation vs exact, over the gentle-decay grid.
pub const BOOST_GAP_MAX: f64 = 1e-3;

/// Lazy ranker vs dense reference, per-item probability.
pub const STREAM_EQUIVALENCE_TOL: f64 = 1e-9;

/// The full verification run must finish inside this wall-clock budget.
pub const RUNTIME_BUDGET_SECS: f64 = 600.0;

const SEED_SAMPLED_MOMENTS_LOW: u64 = 404;
const SEED_SAMPLED_MOMENTS_HIGH: u64 = 606;
const SEED_COMPLEX: u64 = 808;
const SEED_REGIME: u64 = 1212;
const SEED_STREAM: u64 = 1414;
const SEED_PROBE: u64 = 1515;
const SEED_SPECTRUM: u64 = 707;

/// How much sampling work the suite does.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    /// Reduced path counts for interactive runs.
    Quick,
    /// The counts the acceptance gates are stated for.
    Full,
}

impl Budget {
    fn pick(self, quick: u64, full: u64) -> u64 {
        match self {
            Budget::Quick => quick,
            Budget::Full => full,
        }
    }
}

/// Result of one verification check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Run all fifteen checks in order. Never panics on a failed check; failures
/// come back as `pass: false` with the measured numbers in `detail`.
pub fn run_all(budget: Budget) -> Vec<CheckOutcome> {
    run_all_with(budget, |_| {})
}

/// Like [`run_all`], invoking `observer` as each check completes. The
/// stream-equivalence outcome passed to the observer does not yet include the
/// whole-suite runtime clause; that is settled only in the returned vector.
pub fn run_all_with<F: FnMut(&CheckOutcome)>(budget: Budget, mut observer: F) -> Vec<CheckOutcome> {
    type Check = fn(Budget) -> Result<(bool, String)>;
    let checks: [(&'static str, &'static str, Check); 15] = [
        ("01-scalar-mean", "scalar mean closed form vs exhaustive enumeration", check_scalar_mean),
        ("02-scalar-variance", "scalar variance closed form vs exhaustive enumeration", check_scalar_variance),
        ("03-simplex-covariance", "simplex covariance closed form vs exhaustive enumeration", check_simplex_covariance),
        ("04-sampled-scalar", "sampled long-run mean and variance vs closed forms", check_sampled_scalar),
        ("05-moment-recurrence", "central moment recurrence vs low-order closed forms and symmetry", check_moment_recurrence),
        ("06-sampled-moments", "sampled central moments of order 3..6 vs recurrence", check_sampled_moments),
        ("07-kernel-spectrum", "secular kernel eigenvalues vs closed forms and dense solver", check_kernel_spectrum),
        ("08-complex-variance", "complex walk variance: sampling vs closed form vs angle form", check_complex_variance),
        ("09-tail-bounds", "deviation bounds dominate every exact enumerated tail", check_tail_bounds),
        ("10-relative-error", "relative error threshold closed form", check_relative_error),
        ("11-boost-ratio", "window boost ratio: exact value and approximation quality", check_boost_ratio),
        ("12-regime-switch", "two-phase schedule mean vs sampled two-phase walk", check_regime_switch),
        ("13-root-trend", "moment root trend: envelope and upward drift", check_root_trend),
        ("14-stream-equivalence", "lazy ranker vs dense reference, snapshot continuation", check_stream_equivalence),
        ("15-reciprocal-probe", "reciprocal probe classifications in both regimes", check_reciprocal_probe),
    ];

    let mut outcomes: Vec<CheckOutcome> = checks
        .iter()
        .map(|&(id, name, f)| {
            let clock = Instant::now();
            let (pass, detail) = match f(budget) {
                Ok(r) => r,
                Err(e) => (false, format!("errored: {e}")),
            };
            let outcome =
                CheckOutcome { id, name, pass, detail, seconds: clock.elapsed().as_secs_f64() };
            observer(&outcome);
            outcome
        })
        .collect();

    // The runtime clause of the stream-equivalence check covers the whole
    // run, so it can only be settled after the last check finishes.
    let total: f64 = outcomes.iter().map(|o| o.seconds).sum();
    let within = total < RUNTIME_BUDGET_SECS;
    let slot = &mut outcomes[13];
    slot.pass &= within;
    slot.detail.push_str(&format!(
        "; whole suite {total:.1}s against the {RUNTIME_BUDGET_SECS:.0}s budget"
    ));
    outcomes
}

const GRID_ALPHA: [f64; 3] = [0.5, 0.9, 0.99];
const GRID_Q: [f64; 3] = [0.1, 0.3, 0.5];
const GRID_Y0: [f64; 2] = [0.0, 1.0];
const GRID_T: [u32; 4] = [1, 5, 10, 12];

/// Two-vertex walk on {0, 1}: the scalar law with event probability q.
fn scalar_cfg(alpha: f64, q: f64, y0: f64, steps: u32, paths: u64, seed: u64) -> WalkConfig {
    WalkConfig {
        alpha,
        q: vec![1.0 - q, q],
        vertices: VertexSet::RealVectors { columns: vec![vec![0.0], vec![1.0]] },
        start: StartPoint::Vector(vec![y0]),
        steps,
        paths,
        seed,
    }
}

fn check_scalar_mean(_: Budget) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut points = 0;
    for alpha in GRID_ALPHA {
        for q in GRID_Q {
            for y0 in GRID_Y0 {
                for t in GRID_T {
                    let exact = enumerate_exact(&scalar_cfg(alpha, q, y0, t, 1, 0), 2)?;
                    let closed = scalar_mean_var(alpha, q, Horizon::Finite(t), Some(y0))?;
                    worst = worst.max((exact.mean[0] - closed.mean).abs());
                    points += 1;
                }
            }
        }
    }
    Ok((worst <= CLOSED_FORM_TOL, format!("{points} grid points, max |delta| = {worst:.2e}")))
}

fn check_scalar_variance(_: Budget) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut points = 0;
    for alpha in GRID_ALPHA {
        for q in GRID_Q {
            for y0 in GRID_Y0 {
                for t in GRID_T {
                    let exact = enumerate_exact(&scalar_cfg(alpha, q, y0, t, 1, 0), 2)?;
                    let closed = scalar_mean_var(alpha, q, Horizon::Finite(t), Some(y0))?;
                    worst = worst.max((exact.covariance[0][0] - closed.variance).abs());
                    points += 1;
                }
            }
        }
    }
    Ok((worst <= CLOSED_FORM_TOL, format!("{points} grid points, max |delta| = {worst:.2e}")))
}

fn check_simplex_covariance(_: Budget) -> Result<(bool, String)> {
    let q = [0.5, 0.3, 0.2];
    let (alpha, t) = (0.95, 8);
    let cfg = WalkConfig {
        alpha,
        q: q.to_vec(),
        vertices: VertexSet::Simplex { n: 3 },
        start: StartPoint::simplex_uniform(3),
        steps: t,
        paths: 1,
        seed: 0,
    };
    let exact = enumerate_exact(&cfg, 2)?;
    let closed = simplex_covariance(alpha, &q, Horizon::Finite(t))?;
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((exact.covariance[i][j] - closed.covariance[i][j]).abs());
        }
    }
    let mut ones_residual = 0.0f64;
    for row in &closed.covariance {
        ones_residual = ones_residual.max(row.iter().sum::<f64>().abs());
    }
    let pass = worst <= CLOSED_FORM_TOL && ones_residual <= CLOSED_FORM_TOL;
    Ok((
        pass,
        format!(
            "{} sequences, max entry |delta| = {worst:.2e}, ones annihilation {ones_residual:.2e}",
            exact.sequences
        ),
    ))
}

fn check_sampled_scalar(budget: Budget) -> Result<(bool, String)> {
    let (alpha, q, t) = (0.9, 0.3, 2000);
    let paths = budget.pick(20_000, 100_000);
    let cfg = scalar_cfg(alpha, q, q, t, paths, SEED_SAMPLED_MOMENTS_LOW);
    let stats = simulate(&cfg)?.stats();
    let closed = scalar_mean_var(alpha, q, Horizon::Finite(t), Some(q))?;
    let se = (closed.variance / paths as f64).sqrt();
    let mean_gap = (stats.mean[0] - closed.mean).abs();
    let var_rel = (stats.covariance[0][0] - closed.variance).abs() / closed.variance;
    let pass = mean_gap <= MC_SIGMA_GATE * se && var_rel <= MC_REL_TOL;
    Ok((
        pass,
        format!(
            "{paths} paths: mean off by {:.2} se, variance off by {:.2}%",
            mean_gap / se,
            100.0 * var_rel
        ),
    ))
}

fn closed_m2(alpha: f64, q: f64) -> f64 {
    (1.0 - alpha) / (1.0 + alpha) * (q - q * q)
}

fn closed_m3(alpha: f64, q: f64) -> f64 {
    (1.0 - alpha).powi(3) / (1.0 - alpha.powi(3)) * (q - q * q) * (1.0 - 2.0 * q)
}

fn closed_m4(alpha: f64, q: f64) -> f64 {
    let v = q - q * q;
    (1.0 - alpha).powi(4) / (1.0 - alpha.powi(4))
        * v
        * (6.0 * alpha * alpha / (1.0 - alpha * alpha) * v + q.powi(3) + (1.0 - q).powi(3))
}

fn check_moment_recurrence(_: Budget) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut worst_odd = 0.0f64;
    let mut symmetry_ok = true;
    for alpha in GRID_ALPHA {
        for q in GRID_Q {
            let table = central_moments(alpha, q, 4)?;
            worst = worst.max((table.moment(2) - closed_m2(alpha, q)).abs());
            worst = worst.max((table.moment(3) - closed_m3(alpha, q)).abs());
            worst = worst.max((table.moment(4) - closed_m4(alpha, q)).abs());
            symmetry_ok &= moment_symmetry_check(alpha, q, 16)?.pass;
        }
        worst_odd = worst_odd.max(central_moments(alpha, 0.5, 3)?.moment(3).abs());
    }
    let pass = worst <= CLOSED_FORM_TOL && worst_odd <= EXACT_ZERO_TOL && symmetry_ok;
    Ok((
        pass,
        format!(
            "max closed-form |delta| = {worst:.2e}, |M3| at q=1/2 = {worst_odd:.1e}, \
             bias-flip symmetry to order 16: {symmetry_ok}"
        ),
    ))
}

fn check_sampled_moments(budget: Budget) -> Result<(bool, String)> {
    let (alpha, q, t) = (0.9, 0.3, 2000);
    let paths = budget.pick(100_000, 1_000_000);
    let cfg = scalar_cfg(alpha, q, q, t, paths, SEED_SAMPLED_MOMENTS_HIGH);
    let samples = simulate(&cfg)?;
    let sampled = samples.central_moments(0, 6);
    let table = central_moments(alpha, q, 12)?;
    let n = paths as f64;
    let mut worst_z = 0.0f64;
    for k in 3..=6usize {
        // Delta-method variance of the k-th sample central moment; the extra
        // terms account for estimating the mean from the same sample.
        let (mk, mk1, mk2) = (table.moment(k), table.moment(k - 1), table.moment(k + 1));
        let var_est = (table.moment(2 * k) - mk * mk
            - 2.0 * k as f64 * mk1 * mk2
            + (k as f64).powi(2) * table.moment(2) * mk1 * mk1)
            / n;
        let se = var_est.sqrt();
        worst_z = worst_z.max((sampled[k] - mk).abs() / se);
    }
    Ok((
        worst_z <= MC_SIGMA_GATE,
        format!("{paths} paths, orders 3..6: worst deviation {worst_z:.2} se"),
    ))
}

fn kernel_matrix(q: &[f64]) -> Vec<Vec<f64>> {
    let n = q.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = if i == j { q[i] - q[i] * q[j] } else { -q[i] * q[j] };
        }
    }
    k
}

fn check_kernel_spectrum(_: Budget) -> Result<(bool, String)> {
    use rand::{Rng, SeedableRng};

    // Two-point closed form.
    let roots = secular_eigenvalues(&[0.3, 0.7])?;
    let two_point = (roots.len() == 1) && (roots[0] - 0.42).abs() <= CLOSED_FORM_TOL;

    // Uniform Q: spectrum is exactly {0, 1/n with multiplicity n-1}.
    let mut uniform_worst = 0.0f64;
    for n in 2..=6usize {
        let q = vec![1.0 / n as f64; n];
        let (vals, _) = symmetric_eigen(&kernel_matrix(&q));
        uniform_worst = uniform_worst.max(vals[0].abs());
        for v in &vals[1..] {
            uniform_worst = uniform_worst.max((v - 1.0 / n as f64).abs());
        }
    }

    // Seeded random distinct distributions: secular route vs dense route.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED_SPECTRUM);
    let mut cross_worst = 0.0f64;
    let mut drawn = 0;
    while drawn < 20 {
        let n = 3 + (rng.random::<u64>() % 6) as usize;
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let q: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mut sorted = q.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[1] - w[0] < 1e-3) {
            continue;
        }
        drawn += 1;
        let secular = secular_eigenvalues(&q)?;
        let (dense, _) = symmetric_eigen(&kernel_matrix(&q));
        cross_worst = cross_worst.max(dense[0].abs());
        for (s, d) in secular.iter().zip(&dense[1..]) {
            cross_worst = cross_worst.max((s - d).abs());
        }
    }

    let pass = two_point
        && uniform_worst <= UNIFORM_SPECTRUM_TOL
        && cross_worst <= SPECTRAL_CROSS_TOL;
    Ok((
        pass,
        format!(
            "two-point root 0.42: {two_point}, uniform spectra |delta| = {uniform_worst:.2e}, \
             20 random distributions cross-residual {cross_worst:.2e}"
        ),
    ))
}

fn check_complex_variance(budget: Budget) -> Result<(bool, String)> {
    let q = [0.2, 0.3, 0.5];
    let (alpha, t) = (0.9, 12);
    let paths = budget.pick(20_000, 100_000);
    let vertices = VertexSet::roots_of_unity(3);
    let start = StartPoint::Complex(num_complex::Complex64::new(0.0, 0.0));
    let theory = generalized_moments(&vertices, &q, alpha, Horizon::Finite(t), &start)?
        .complex_variance
        .expect("complex geometry");
    let angles: Vec<f64> = (0..3).map(|k| 2.0 * std::f64::consts::PI * k as f64 / 3.0).collect();
    let angle_form = crate::analytics::unit_circle_variance(&angles, &q, alpha, Horizon::Finite(t))?;
    let forms_gap = (angle_form - theory).abs();

    let cfg = WalkConfig {
        alpha,
        q: q.to_vec(),
        vertices,
        start,
        steps: t,
        paths,
        seed: SEED_COMPLEX,
    };
    let sampled = simulate(&cfg)?.stats().complex_variance.expect("complex geometry");
    let mc_rel = (sampled - theory).abs() / theory;

    let pass = forms_gap <= CLOSED_FORM_TOL && mc_rel <= MC_REL_TOL;
    Ok((
        pass,
        format!(
            "theory {theory:.6}, angle form off {forms_gap:.2e}, sampled off {:.2}% \
             over {paths} paths",
            100.0 * mc_rel
        ),
    ))
}

fn check_tail_bounds(_: Budget) -> Result<(bool, String)> {
    let epsilons = [0.05, 0.1, 0.2];
    let mut worst_margin = f64::NEG_INFINITY;
    let mut cases = 0;
    for alpha in GRID_ALPHA {
        for q in GRID_Q {
            for y0 in GRID_Y0 {
                for t in GRID_T {
                    let exact = enumerate_exact(&scalar_cfg(alpha, q, y0, t, 1, 0), 2)?;
                    let atoms = exact.support.as_ref().expect("grid fits the support cap");
                    let mean = scalar_mean_var(alpha, q, Horizon::Finite(t), Some(y0))?.mean;
                    for eps in epsilons {
                        let query = BoundQuery {
                            alpha,
                            q: vec![q],
                            epsilon: eps,
                            horizon: Horizon::Finite(t),
                            boost_window: None,
                        };
                        let bound = tail_bound(&query)?.per_item[0].clamped;
                        let tail: f64 = atoms
                            .iter()
                            .filter(|a| (a.point[0] - mean).abs() >= eps)
                            .map(|a| a.probability)
                            .sum();
                        worst_margin = worst_margin.max(tail - bound);
                        cases += 1;
                    }
                }
            }
        }
    }

    // The natural-scale worst case at alpha = 0.99: about 0.1256, i.e. about
    // seven-eighths coverage.
    let showcase = tail_bound(&BoundQuery {
        alpha: 0.99,
        q: vec![0.5],
        epsilon: 0.1,
        horizon: Horizon::Infinite,
        boost_window: None,
    })?;
    let showcase_gap = (showcase.per_item[0].raw - 0.25 / 1.99).abs();

    let pass = worst_margin <= CLOSED_FORM_TOL
        && showcase_gap <= SEVEN_EIGHTHS_VALUE_TOL
        && showcase.approx_seven_eighths;
    Ok((
        pass,
        format!(
            "{cases} tail cases, worst (tail - bound) = {worst_margin:.2e}; \
             natural-scale bound {:.6} vs 0.25/1.99",
            showcase.per_item[0].raw
        ),
    ))
}

fn check_relative_error(_: Budget) -> Result<(bool, String)> {
    let thr = relative_error_threshold(0.999, 0.1)?;
    let gap = (thr - 1.0 / 2.999).abs();
    Ok((gap <= CLOSED_FORM_TOL, format!("threshold {thr:.12} vs 1/2.999, |delta| = {gap:.2e}")))
}

fn check_boost_ratio(_: Budget) -> Result<(bool, String)> {
    let equal = boost_ratio(0.99, 100, 100)?;
    let decay_gap = (equal.exact - 2.7319990264290284).abs();

    // Approximation quality in the gentle-decay regime: the first-order form
    // drifts by about |t2 - t1| (1 - alpha) / 2, so the 1e-3 gate constrains
    // the grid to (1 - alpha) well below 1e-3 / max|t2 - t1| ~ 1e-6.
    let betas = [1e-6, 1e-7, 1e-8, 1e-9];
    let ts: [u64; 9] = [1, 2, 5, 10, 50, 100, 250, 500, 1000];
    let mut worst_rel = 0.0f64;
    for beta in betas {
        let alpha = 1.0 - beta;
        for t1 in ts {
            for t2 in ts {
                let b = boost_ratio(alpha, t1, t2)?;
                worst_rel = worst_rel.max(((b.approximate - b.exact) / b.exact).abs());
            }
        }
    }
    let pass = decay_gap <= CLOSED_FORM_TOL && worst_rel <= BOOST_GAP_MAX;
    Ok((
        pass,
        format!(
            "equal windows off by {decay_gap:.2e}; approximation gap {worst_rel:.2e} \
             over {} window pairs",
            betas.len() * ts.len() * ts.len()
        ),
    ))
}

fn check_regime_switch(budget: Budget) -> Result<(bool, String)> {
    let paths = budget.pick(20_000, 100_000);
    // The worked example holds each phase on a single vertex, which makes
    // every path identical: the sampled mean must then hit the mixture
    // exactly, so the 4-se gate carries an absolute floor. A stochastic
    // companion schedule exercises the gate with real spread.
    let specs = [
        RegimeSwitchSpec {
            alpha: 0.99,
            start: vec![1.0, 0.0],
            phase1: vec![0.0, 1.0],
            phase2: vec![1.0, 0.0],
            t1: 100,
            t2: 100,
        },
        RegimeSwitchSpec {
            alpha: 0.99,
            start: vec![1.0, 0.0],
            phase1: vec![0.2, 0.8],
            phase2: vec![0.7, 0.3],
            t1: 100,
            t2: 100,
        },
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (which, spec) in specs.iter().enumerate() {
        let mixture = regime_switch_mean(spec)?;
        let samples = simulate_phased(
            spec.alpha,
            &VertexSet::Simplex { n: 2 },
            &StartPoint::Vector(spec.start.clone()),
            &[
                Phase { q: spec.phase1.clone(), steps: spec.t1 as u32 },
                Phase { q: spec.phase2.clone(), steps: spec.t2 as u32 },
            ],
            paths,
            SEED_REGIME + which as u64,
        )?;
        let stats = samples.stats();
        let mut worst_gap = 0.0f64;
        let mut worst_gate = f64::INFINITY;
        for i in 0..2 {
            let gap = (stats.mean[i] - mixture[i]).abs();
            let gate = MC_SIGMA_GATE * stats.std_error[i] + CLOSED_FORM_TOL;
            pass &= gap <= gate;
            worst_gap = worst_gap.max(gap);
            worst_gate = worst_gate.min(gate);
        }
        details.push(format!(
            "mixture ({:.6}, {:.6}) off by {worst_gap:.1e} (gate {worst_gate:.1e})",
            mixture[0], mixture[1]
        ));
    }
    Ok((pass, format!("{} over {paths} paths", details.join("; "))))
}

fn check_root_trend(_: Budget) -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = String::new();
    for q in GRID_Q {
        for alpha in [0.5, 0.9] {
            let report = moment_root_trend(alpha, q, 64)?;
            let root = |order: u32| {
                report
                    .entries
                    .iter()
                    .find(|e| e.order == order)
                    .map(|e| e.root)
                    .expect("orders 2..=64 tabulated")
            };
            let closing = (report.limit - root(64)) < (report.limit - root(16));
            let ok = report.within_bounds && report.even_roots_nondecreasing && closing;
            pass &= ok;
            if !ok {
                detail.push_str(&format!(" [failed at alpha={alpha} q={q}]"));
            }
        }
    }
    Ok((pass, format!("6 parameter pairs, orders to 64: envelope, monotonicity, gap shrink{detail}")))
}

fn check_stream_equivalence(budget: Budget) -> Result<(bool, String)> {
    use rand::{Rng, SeedableRng};

    let events = budget.pick(20_000, 100_000);
    let items: Vec<String> = (0..64).map(|i| format!("item{i:02}")).collect();
    let mut worst = 0.0f64;
    let mut continuation_exact = true;
    for alpha in [0.5, 0.99, 0.999] {
        let params = DecayParams::from_alpha(alpha)?;
        let mut lazy = DecayRankTable::uniform(items.iter().cloned(), params)?;
        let mut dense = DenseReference::uniform(items.iter().cloned(), alpha)?;
        let mut resumed: Option<DecayRankTable> = None;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED_STREAM);
        for step in 0..events {
            let item = &items[(rng.random::<u64>() % 64) as usize];
            lazy.observe(item);
            dense.observe(item);
            if let Some(r) = resumed.as_mut() {
                r.observe(item);
            }
            if step + 1 == events / 2 {
                resumed = Some(DecayRankTable::from_snapshot_json(&lazy.snapshot_json())?);
            }
        }
        for item in &items {
            let gap = (lazy.probability(item).unwrap() - dense.probability(item).unwrap()).abs();
            worst = worst.max(gap);
        }
        continuation_exact &= lazy.probabilities() == resumed.unwrap().probabilities();
    }
    let pass = worst <= STREAM_EQUIVALENCE_TOL && continuation_exact;
    Ok((
        pass,
        format!(
            "{events} events x 3 decay rates: lazy vs dense |delta| = {worst:.2e}, \
             snapshot continuation bit-exact: {continuation_exact}"
        ),
    ))
}

fn check_reciprocal_probe(budget: Budget) -> Result<(bool, String)> {
    let paths = budget.pick(20_000, 100_000);
    let mut cfg = ReciprocalProbeConfig {
        alpha: 0.3,
        q: 0.5,
        y0: 0.5,
        paths,
        seed: SEED_PROBE,
        max_t: 2048,
    };
    let low = reciprocal_probe(&cfg)?;
    cfg.alpha = 0.99;
    let high = reciprocal_probe(&cfg)?;
    let pass = low.classification == Divergence::ApparentlyDivergent
        && high.classification == Divergence::ApparentlyConvergent
        && low.heuristic
        && high.heuristic;
    Ok((
        pass,
        format!(
            "alpha 0.3: {:?}, alpha 0.99: {:?} (heuristic, {paths} paths)",
            low.classification, high.classification
        ),
    ))
}

//! One function per subcommand. Each returns the run manifest plus the data
//! block; rendering and exit codes stay in `main`.

use std::fs;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use decayrank::analytics::{
    central_moments, moment_root_trend, moment_symmetry_check, secular_eigenvalues,
    simplex_covariance, symmetric_eigen,
};
use decayrank::bounds::{boost_ratio, regime_switch_mean, tail_bound, BoundQuery, BoundReport, RegimeSwitchSpec};
use decayrank::ranker::{DecayParams, DecayRankTable};
use decayrank::verify::{run_all_with, Budget};
use decayrank::walk::{
    enumerate_exact, simulate as run_simulation, Complex64, StartPoint, VertexSet, WalkConfig,
    PROBABILITY_TOL,
};

use crate::report::{self, Manifest};
use crate::{
    BoostArgs, BoundsArgs, BudgetArg, CliError, EigenArgs, Mode, MomentsArgs, RankArgs,
    SimulateArgs, VerifyArgs,
};

pub struct CommandOutcome {
    pub manifest: Manifest,
    pub data: Value,
    /// Nonzero only for `verify`; forces exit code 3 after the report prints.
    pub failed_checks: usize,
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))
}

fn insert(data: &mut Value, key: &str, v: Value) {
    if let Some(map) = data.as_object_mut() {
        map.insert(key.to_string(), v);
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn open_stream(path: Option<&Path>) -> Result<Box<dyn BufRead>, CliError> {
    match path {
        None => Ok(Box::new(io::stdin().lock())),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(io::stdin().lock())),
        Some(p) => {
            let file = fs::File::open(p)
                .map_err(|e| CliError::Io(format!("cannot open {}: {e}", p.display())))?;
            Ok(Box::new(BufReader::new(file)))
        }
    }
}

fn stream_name(path: Option<&Path>) -> String {
    match path {
        None => "stdin".to_string(),
        Some(p) if p.as_os_str() == "-" => "stdin".to_string(),
        Some(p) => p.display().to_string(),
    }
}

pub fn rank(args: &RankArgs) -> Result<CommandOutcome, CliError> {
    let k = args.k as usize;
    let mut table = if let Some(path) = &args.state_in {
        DecayRankTable::from_snapshot_json(&read_file(path)?)?
    } else {
        let params = match (args.alpha, args.half_life) {
            (Some(a), None) => DecayParams::from_alpha(a)?,
            (None, Some(h)) => DecayParams::from_half_life(h)?,
            _ => unreachable!("the decay arg group admits exactly one source"),
        };
        match &args.items {
            Some(items) => DecayRankTable::uniform(items.iter().cloned(), params)?,
            None => DecayRankTable::new(params),
        }
    };
    if let Some(floor) = args.eviction_floor {
        table.set_eviction_floor(floor)?;
    }

    let reader = open_stream(args.input.as_deref())?;
    let mut reports = Vec::new();
    let mut events = 0u64;
    for line in reader.lines() {
        let line = line.map_err(|e| CliError::Io(format!("stream read failed: {e}")))?;
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        table.observe(token);
        events += 1;
        if args.snapshot_every.is_some_and(|n| events % n == 0) {
            reports.push(top_report(&table, events, k));
        }
    }
    // End-of-stream report, unless the last periodic one already covered it.
    if reports.last().is_none_or(|r| r["events"] != json!(events)) {
        reports.push(top_report(&table, events, k));
    }

    if let Some(path) = &args.state_out {
        let mut text = table.snapshot_json();
        text.push('\n');
        fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }

    let params = table.params();
    let manifest = report::manifest(
        "rank",
        None,
        json!({
            "input": stream_name(args.input.as_deref()),
            "alpha": params.alpha(),
            "half_life": params.half_life(),
            "items": args.items,
            "k": k,
            "snapshot_every": args.snapshot_every,
            "state_in": args.state_in.as_ref().map(|p| p.display().to_string()),
            "state_out": args.state_out.as_ref().map(|p| p.display().to_string()),
            "eviction_floor": args.eviction_floor,
        }),
    );
    Ok(CommandOutcome { manifest, data: json!({ "reports": reports }), failed_checks: 0 })
}

fn top_report(table: &DecayRankTable, events: u64, k: usize) -> Value {
    let top: Vec<Value> = table
        .top_k(k)
        .into_iter()
        .map(|(item, probability)| json!({ "item": item, "probability": probability }))
        .collect();
    json!({
        "events": events,
        "lifetime_events": table.global_step(),
        "tracked_items": table.len(),
        "top": top,
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<CommandOutcome, CliError> {
    let cfg: WalkConfig = if let Some(path) = &args.config {
        serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Io(format!("malformed walk config {}: {e}", path.display())))?
    } else {
        inline_config(args)?
    };

    let max_order = args.order.unwrap_or(4);
    let mut data;
    if args.exact {
        let mut exact = enumerate_exact(&cfg, max_order)?;
        if !args.support {
            exact.support = None;
        }
        data = to_value(&exact)?;
        insert(&mut data, "route", json!("exact"));
    } else {
        let samples = run_simulation(&cfg)?;
        data = to_value(&samples.stats())?;
        if args.order.is_some() {
            let central: Vec<Vec<f64>> =
                (0..samples.dim()).map(|c| samples.central_moments(c, max_order)).collect();
            insert(&mut data, "central", json!(central));
        }
        insert(&mut data, "route", json!("sampled"));
    }

    let seed = (!args.exact).then_some(cfg.seed);
    let manifest = report::manifest(
        "simulate",
        seed,
        json!({
            "config": args.config.as_ref().map(|p| p.display().to_string()),
            "walk": to_value(&cfg)?,
            "exact": args.exact,
            "order": args.order,
            "support": args.support,
        }),
    );
    Ok(CommandOutcome { manifest, data, failed_checks: 0 })
}

fn inline_config(args: &SimulateArgs) -> Result<WalkConfig, CliError> {
    let alpha = args.alpha;
    let q = args
        .q
        .clone()
        .ok_or_else(|| CliError::Usage("--q is required for an inline walk".into()))?;
    let steps = args
        .steps
        .ok_or_else(|| CliError::Usage("--steps is required for an inline walk".into()))?;

    let vertices = match args.mode {
        Mode::Simplex => {
            if args.points.is_some() || args.columns.is_some() {
                return Err(CliError::Usage(
                    "--points and --columns apply to complex / real-vectors modes only".into(),
                ));
            }
            VertexSet::Simplex { n: q.len() }
        }
        Mode::Complex => {
            if args.columns.is_some() {
                return Err(CliError::Usage("--columns applies to real-vectors mode only".into()));
            }
            match &args.points {
                Some(spec) => VertexSet::Complex { points: parse_points(spec)? },
                None => VertexSet::roots_of_unity(q.len()),
            }
        }
        Mode::RealVectors => {
            if args.points.is_some() {
                return Err(CliError::Usage("--points applies to complex mode only".into()));
            }
            let spec = args
                .columns
                .as_ref()
                .ok_or_else(|| CliError::Usage("--columns is required for real-vectors mode".into()))?;
            VertexSet::RealVectors { columns: parse_columns(spec)? }
        }
    };

    let start = match &args.y0 {
        Some(v) if vertices.is_complex() => {
            if v.len() != 2 {
                return Err(CliError::Usage(format!(
                    "--y0 for a complex walk is \"re,im\", got {} numbers",
                    v.len()
                )));
            }
            StartPoint::Complex(Complex64::new(v[0], v[1]))
        }
        Some(v) => StartPoint::Vector(v.clone()),
        None => default_start(&vertices),
    };

    Ok(WalkConfig { alpha, q, vertices, start, steps, paths: args.paths, seed: args.seed })
}

/// Simplex walks start at the uniform center, other geometries at the
/// unweighted vertex centroid.
fn default_start(vertices: &VertexSet) -> StartPoint {
    match vertices {
        VertexSet::Simplex { n } => StartPoint::simplex_uniform(*n),
        VertexSet::RealVectors { columns } => {
            let dim = columns.first().map_or(0, Vec::len);
            let share = 1.0 / columns.len() as f64;
            let mut center = vec![0.0; dim];
            for col in columns {
                for (i, x) in col.iter().enumerate() {
                    center[i] += share * x;
                }
            }
            StartPoint::Vector(center)
        }
        VertexSet::Complex { points } => {
            let sum: Complex64 = points.iter().sum();
            StartPoint::Complex(sum / points.len() as f64)
        }
    }
}

fn parse_points(spec: &str) -> Result<Vec<Complex64>, CliError> {
    spec.split(';')
        .map(|pair| {
            let parts = parse_numbers(pair, "--points")?;
            if parts.len() != 2 {
                return Err(CliError::Usage(format!(
                    "--points entries are \"re,im\" pairs, got {pair:?}"
                )));
            }
            Ok(Complex64::new(parts[0], parts[1]))
        })
        .collect()
}

fn parse_columns(spec: &str) -> Result<Vec<Vec<f64>>, CliError> {
    spec.split(';').map(|col| parse_numbers(col, "--columns")).collect()
}

fn parse_numbers(list: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{flag}: {tok:?} is not a number")))
        })
        .collect()
}

pub fn moments(args: &MomentsArgs) -> Result<CommandOutcome, CliError> {
    let order = args.order as usize;
    let table = central_moments(args.alpha, args.q, order)?;
    let rows: Vec<Value> =
        (2..=order).map(|n| json!({ "order": n, "value": table.moment(n) })).collect();
    let mut data = json!({
        "alpha": args.alpha,
        "q": args.q,
        "mean": args.q,
        "moments": rows,
    });
    if args.symmetry {
        insert(&mut data, "symmetry", to_value(&moment_symmetry_check(args.alpha, args.q, order)?)?);
    }
    if args.trend {
        insert(&mut data, "trend", to_value(&moment_root_trend(args.alpha, args.q, order)?)?);
    }

    let manifest = report::manifest(
        "moments",
        None,
        json!({
            "alpha": args.alpha,
            "q": args.q,
            "order": order,
            "symmetry": args.symmetry,
            "trend": args.trend,
        }),
    );
    Ok(CommandOutcome { manifest, data, failed_checks: 0 })
}

pub fn eigen(args: &EigenArgs) -> Result<CommandOutcome, CliError> {
    check_distribution(&args.q, "--q")?;

    let (kernel_values, _) = symmetric_eigen(&kernel_matrix(&args.q));
    // The secular route needs distinct interior entries; with ties or
    // boundary weights only the dense values apply.
    let secular_roots = secular_eigenvalues(&args.q).ok();

    let mut data = json!({
        "q": args.q,
        "kernel_eigenvalues": kernel_values,
        "secular_roots": secular_roots,
    });
    if let Some(alpha) = args.alpha {
        insert(&mut data, "covariance", to_value(&simplex_covariance(alpha, &args.q, args.t)?)?);
    }

    let manifest = report::manifest(
        "eigen",
        None,
        json!({ "q": args.q, "alpha": args.alpha, "t": args.t }),
    );
    Ok(CommandOutcome { manifest, data, failed_checks: 0 })
}

/// `diag(Q) - Q Q^T`, the alpha-free kernel every covariance here scales.
fn kernel_matrix(q: &[f64]) -> Vec<Vec<f64>> {
    let n = q.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let diag = if i == j { q[i] } else { 0.0 };
                    diag - q[i] * q[j]
                })
                .collect()
        })
        .collect()
}

fn check_distribution(q: &[f64], what: &str) -> Result<(), CliError> {
    if q.is_empty() {
        return Err(CliError::Usage(format!("{what} must be non-empty")));
    }
    let mut sum = 0.0;
    for (i, &x) in q.iter().enumerate() {
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Err(CliError::Usage(format!("{what}[{i}] must lie in [0, 1], got {x}")));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > PROBABILITY_TOL {
        return Err(CliError::Usage(format!("{what} must sum to 1, got {sum}")));
    }
    Ok(())
}

pub fn bounds(args: &BoundsArgs) -> Result<CommandOutcome, CliError> {
    let boost_window = match (args.t1, args.t2) {
        (Some(t1), Some(t2)) => Some((t1, t2)),
        _ => None,
    };
    let query = BoundQuery {
        alpha: args.alpha,
        q: args.q.clone(),
        epsilon: args.eps,
        horizon: args.t,
        boost_window,
    };
    let bound = tail_bound(&query)?;
    let mut data = to_value(&bound)?;
    insert(&mut data, "text", json!(bound_text(&bound)));

    let manifest = report::manifest(
        "bounds",
        None,
        json!({
            "alpha": args.alpha,
            "q": args.q,
            "eps": args.eps,
            "t": args.t,
            "t1": args.t1,
            "t2": args.t2,
        }),
    );
    Ok(CommandOutcome { manifest, data, failed_checks: 0 })
}

fn bound_text(r: &BoundReport) -> Vec<String> {
    let mut lines = vec![format!(
        "deviation bounds at horizon {}, threshold epsilon = {}",
        r.horizon, r.epsilon
    )];
    for b in &r.per_item {
        lines.push(format!(
            "  item with q = {}: P(|p - q| >= {}) <= {:.6}",
            b.q, r.epsilon, b.clamped
        ));
    }
    if let Some(v) = r.vector_bound {
        lines.push(format!(
            "  any item of the distribution: P(|p_i - q_i| >= {}) <= {:.6}",
            r.epsilon, v
        ));
    }
    lines.push(format!(
        "natural threshold sqrt(1 - alpha) = {:.6}: worst-case bound {:.6}{}",
        r.sqrt_epsilon,
        r.worst_case_sqrt_bound,
        if r.approx_seven_eighths { " (within the 7/8 regime, bound <= 0.13)" } else { "" }
    ));
    lines.push(format!(
        "items with q >= {:.6} satisfy P(|p - q| >= {} q) <= {}",
        r.relative_error_threshold, r.epsilon, r.epsilon
    ));
    if let Some(boost) = &r.boost {
        lines.push(format!(
            "recent-window boost: exact {:.6}, approximation {:.6}, raw count ratio {:.6}",
            boost.exact, boost.approximate, boost.counting_baseline
        ));
    }
    lines
}

pub fn boost(args: &BoostArgs) -> Result<CommandOutcome, CliError> {
    let ratios = boost_ratio(args.alpha, args.t1, args.t2)?;
    let mut data = to_value(&ratios)?;

    match (&args.start, &args.phase1, &args.phase2) {
        (Some(start), Some(phase1), Some(phase2)) => {
            let spec = RegimeSwitchSpec {
                alpha: args.alpha,
                start: start.clone(),
                phase1: phase1.clone(),
                phase2: phase2.clone(),
                t1: args.t1,
                t2: args.t2,
            };
            insert(&mut data, "two_phase_mean", json!(regime_switch_mean(&spec)?));
        }
        (None, None, None) => {}
        _ => {
            return Err(CliError::Usage(
                "--start, --phase1 and --phase2 must be given together".into(),
            ))
        }
    }

    let manifest = report::manifest(
        "boost",
        None,
        json!({
            "alpha": args.alpha,
            "t1": args.t1,
            "t2": args.t2,
            "start": args.start,
            "phase1": args.phase1,
            "phase2": args.phase2,
        }),
    );
    Ok(CommandOutcome { manifest, data, failed_checks: 0 })
}

pub fn verify(args: &VerifyArgs) -> Result<CommandOutcome, CliError> {
    let (budget, label) = match args.budget {
        BudgetArg::Quick => (Budget::Quick, "quick"),
        BudgetArg::Full => (Budget::Full, "full"),
    };
    eprintln!("cross-validation at {label} budget, 15 checks");
    let outcomes = run_all_with(budget, |o| {
        let verdict = if o.pass { "[ ok ]" } else { "[FAIL]" };
        eprintln!("{verdict} {} ({:.2}s): {}", o.id, o.seconds, o.detail);
    });

    let failed = outcomes.iter().filter(|o| !o.pass).count();
    let total: f64 = outcomes.iter().map(|o| o.seconds).sum();
    let data = json!({
        "budget": label,
        "checks": to_value(&outcomes)?,
        "passed": outcomes.len() - failed,
        "failed": failed,
        "total_seconds": total,
    });

    let manifest = report::manifest("verify", None, json!({ "budget": label }));
    Ok(CommandOutcome { manifest, data, failed_checks: failed })
}

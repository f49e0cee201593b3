//! End-to-end runs of the `decayrank` binary: golden outputs, determinism,
//! exit codes, and the state round-trip.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_decayrank"));
    // Pin the manifest timestamp so byte comparisons are meaningful.
    cmd.env("SOURCE_DATE_EPOCH", "1700000000");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn parse(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "expected success, got {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is one JSON document")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("decayrank-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).expect("scratch dir");
    dir.join(name)
}

fn write_stream(name: &str, tokens: &[&str]) -> PathBuf {
    let path = scratch(name);
    let mut text = tokens.join("\n");
    text.push('\n');
    fs::write(&path, text).expect("write stream");
    path
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (|delta| = {:e})", (a - b).abs());
}

#[test]
fn rank_stream_golden() {
    let stream = write_stream("golden.txt", &["a", "a", "a", "b"]);
    let v = parse(&run(&["rank", stream.to_str().unwrap(), "--alpha", "0.5", "--items", "a,b", "--k", "2"]));
    let report = &v["data"]["reports"][0];
    assert_eq!(report["events"], 4);
    let top = report["top"].as_array().unwrap();
    // Four applications of p <- 0.5 p + 0.5 delta_j from the uniform start.
    assert_eq!(top[0]["item"], "b");
    assert_eq!(top[0]["probability"], 0.53125);
    assert_eq!(top[1]["item"], "a");
    assert_eq!(top[1]["probability"], 0.46875);
}

#[test]
fn rank_empty_stream_reports_the_uniform_start() {
    let stream = write_stream("empty.txt", &[]);
    let v = parse(&run(&["rank", stream.to_str().unwrap(), "--alpha", "0.5", "--items", "a,b"]));
    let report = &v["data"]["reports"][0];
    assert_eq!(report["events"], 0);
    for entry in report["top"].as_array().unwrap() {
        assert_eq!(entry["probability"], 0.5);
    }
}

#[test]
fn rank_repeated_item_approaches_the_fixed_point() {
    let tokens = vec!["x"; 20];
    let stream = write_stream("repeat.txt", &tokens);
    let v = parse(&run(&["rank", stream.to_str().unwrap(), "--alpha", "0.9", "--items", "x,y"]));
    let top = v["data"]["reports"][0]["top"].as_array().unwrap();
    // The gap to the absorbing point 1 shrinks by alpha per event.
    let expect = 1.0 - 0.5 * 0.9f64.powi(20);
    close(top[0]["probability"].as_f64().unwrap(), expect, 1e-11);
    close(top[1]["probability"].as_f64().unwrap(), 1.0 - expect, 1e-11);
}

#[test]
fn rank_reads_standard_input() {
    let mut child = bin()
        .args(["rank", "--alpha", "0.5", "--items", "a,b", "--k", "1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn");
    child.stdin.as_mut().unwrap().write_all(b"a\n\na\n").unwrap();
    let output = child.wait_with_output().unwrap();
    let v = parse(&output);
    // The blank line is skipped, so two events land.
    assert_eq!(v["data"]["reports"][0]["events"], 2);
    assert_eq!(v["data"]["reports"][0]["top"][0]["item"], "a");
    assert_eq!(v["data"]["reports"][0]["top"][0]["probability"], 0.875);
}

#[test]
fn rank_periodic_reports_cover_the_stream() {
    let stream = write_stream("periodic.txt", &["a", "b", "a", "b", "a"]);
    let v = parse(&run(&[
        "rank", stream.to_str().unwrap(), "--alpha", "0.5", "--items", "a,b",
        "--snapshot-every", "2",
    ]));
    let events: Vec<u64> = v["data"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["events"].as_u64().unwrap())
        .collect();
    assert_eq!(events, vec![2, 4, 5]);
}

#[test]
fn rank_resumed_from_state_matches_the_uninterrupted_run() {
    let first = write_stream("part1.txt", &["a", "b"]);
    let second = write_stream("part2.txt", &["a", "a"]);
    let whole = write_stream("whole.txt", &["a", "b", "a", "a"]);
    let state = scratch("state.json");

    let ok = run(&[
        "rank", first.to_str().unwrap(), "--alpha", "0.5", "--items", "a,b",
        "--state-out", state.to_str().unwrap(),
    ]);
    assert!(ok.status.success());

    let resumed = parse(&run(&["rank", second.to_str().unwrap(), "--state-in", state.to_str().unwrap()]));
    let straight = parse(&run(&["rank", whole.to_str().unwrap(), "--alpha", "0.5", "--items", "a,b"]));

    let r = &resumed["data"]["reports"][0];
    let s = &straight["data"]["reports"][0];
    assert_eq!(r["top"], s["top"]);
    assert_eq!(r["lifetime_events"], s["lifetime_events"]);
    assert_eq!(r["lifetime_events"], 4);
}

#[test]
fn rank_half_life_is_an_equivalent_way_to_give_the_decay() {
    let stream = write_stream("halflife.txt", &["a", "a", "a", "b"]);
    // A half-life of one event means alpha = 1/2.
    let v = parse(&run(&["rank", stream.to_str().unwrap(), "--half-life", "1", "--items", "a,b"]));
    let top = v["data"]["reports"][0]["top"].as_array().unwrap();
    close(top[0]["probability"].as_f64().unwrap(), 0.53125, 1e-9);
    assert_eq!(v["manifest"]["parameters"]["half_life"], 1.0);
}

#[test]
fn seeded_simulate_runs_are_byte_identical() {
    let args = ["simulate", "--alpha", "0.9", "--q", "0.3,0.7", "--steps", "40", "--paths", "300", "--seed", "11"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn simulate_degenerate_distribution_has_zero_variance() {
    let v = parse(&run(&["simulate", "--mode", "simplex", "--q", "1.0", "--steps", "5", "--paths", "10"]));
    assert_eq!(v["data"]["mean"][0], 1.0);
    assert_eq!(v["data"]["covariance"][0][0], 0.0);
    assert_eq!(v["data"]["std_error"][0], 0.0);
    assert_eq!(v["data"]["route"], "sampled");
}

#[test]
fn simulate_exact_route_matches_the_two_step_closed_form() {
    let v = parse(&run(&[
        "simulate", "--alpha", "0.9", "--q", "0.3,0.7", "--steps", "2", "--exact",
    ]));
    assert_eq!(v["data"]["route"], "exact");
    assert_eq!(v["data"]["sequences"], 4);
    // E(y_2) = a^2 y0 + (1 - a^2) q with y0 = (0.5, 0.5).
    close(v["data"]["mean"][0].as_f64().unwrap(), 0.462, 1e-11);
    close(v["data"]["mean"][1].as_f64().unwrap(), 0.538, 1e-11);
    assert!(v["data"].get("support").is_none());
}

#[test]
fn simulate_config_file_round_trips_through_the_walk_schema() {
    let config = scratch("walk.json");
    fs::write(
        &config,
        r#"{
            "alpha": 0.5,
            "q": [0.5, 0.5],
            "vertices": { "mode": "real-vectors", "columns": [[0.0], [1.0]] },
            "start": { "vector": [0.0] },
            "steps": 3,
            "paths": 64,
            "seed": 9
        }"#,
    )
    .unwrap();
    let v = parse(&run(&["simulate", "--config", config.to_str().unwrap()]));
    assert_eq!(v["manifest"]["seed"], 9);
    assert_eq!(v["data"]["paths"], 64);
    let mean = v["data"]["mean"][0].as_f64().unwrap();
    // Three steps from 0 leave the mean in (0, 1 - 2^-3].
    assert!(mean > 0.0 && mean <= 0.875);
}

#[test]
fn moments_match_the_low_order_closed_forms() {
    let v = parse(&run(&["moments", "--alpha", "0.9", "--q", "0.3", "--order", "4"]));
    let rows = v["data"]["moments"].as_array().unwrap();
    let (alpha, q) = (0.9f64, 0.3f64);
    let spread = q - q * q;
    let m2 = (1.0 - alpha) / (1.0 + alpha) * spread;
    let m3 = (1.0 - alpha).powi(3) / (1.0 - alpha.powi(3)) * spread * (1.0 - 2.0 * q);
    assert_eq!(rows[0]["order"], 2);
    close(rows[0]["value"].as_f64().unwrap(), m2, 1e-11);
    close(rows[1]["value"].as_f64().unwrap(), m3, 1e-11);
    assert_eq!(rows.len(), 3);
}

#[test]
fn moments_symmetry_and_trend_sections_appear_on_request() {
    let v = parse(&run(&[
        "moments", "--alpha", "0.9", "--q", "0.3", "--order", "8", "--symmetry", "--trend",
    ]));
    assert_eq!(v["data"]["symmetry"]["pass"], true);
    assert_eq!(v["data"]["trend"]["limit"], 0.7);
    assert!(v["data"]["trend"]["within_bounds"].as_bool().unwrap());
}

#[test]
fn eigen_two_point_distribution_gives_the_known_root() {
    let v = parse(&run(&["eigen", "--q", "0.3,0.7"]));
    assert_eq!(v["data"]["secular_roots"][0], 0.42);
    assert_eq!(v["data"]["kernel_eigenvalues"][0], 0.0);
    assert_eq!(v["data"]["kernel_eigenvalues"][1], 0.42);
}

#[test]
fn eigen_handles_tied_weights_through_the_dense_route() {
    let v = parse(&run(&["eigen", "--q", "0.25,0.25,0.25,0.25"]));
    // Ties have no secular representation; the dense spectrum is {0, 1/n}.
    assert!(v["data"]["secular_roots"].is_null());
    let vals = v["data"]["kernel_eigenvalues"].as_array().unwrap();
    close(vals[0].as_f64().unwrap(), 0.0, 1e-11);
    for x in &vals[1..] {
        close(x.as_f64().unwrap(), 0.25, 1e-10);
    }
}

#[test]
fn eigen_with_alpha_scales_the_covariance_spectrum() {
    let v = parse(&run(&["eigen", "--q", "0.3,0.7", "--alpha", "0.9", "--t", "infinite"]));
    let scale = 0.1f64 / 1.9;
    close(v["data"]["covariance"]["scale"].as_f64().unwrap(), scale, 1e-11);
    let pair = &v["data"]["covariance"]["nonzero_eigenpairs"][0];
    close(pair["value"].as_f64().unwrap(), scale * 0.42, 1e-11);
}

#[test]
fn bounds_report_includes_the_vector_bound_only_for_distributions() {
    let v = parse(&run(&["bounds", "--alpha", "0.99", "--q", "0.1,0.3,0.6", "--eps", "0.1"]));
    assert!(v["data"]["vector_bound"].as_f64().is_some());
    assert!(v["data"]["approx_seven_eighths"].as_bool().unwrap());
    assert!(!v["data"]["text"].as_array().unwrap().is_empty());

    let partial = parse(&run(&["bounds", "--alpha", "0.99", "--q", "0.1,0.3", "--eps", "0.1"]));
    assert!(partial["data"]["vector_bound"].is_null());
}

#[test]
fn boost_equal_windows_match_the_pure_decay_factor() {
    let v = parse(&run(&["boost", "--alpha", "0.99", "--t1", "100", "--t2", "100"]));
    close(v["data"]["exact"].as_f64().unwrap(), 0.99f64.powi(-100), 1e-11);
    assert_eq!(v["data"]["counting_baseline"], 1.0);
}

#[test]
fn boost_two_phase_mean_requires_all_three_distributions() {
    let v = parse(&run(&[
        "boost", "--alpha", "0.99", "--t1", "100", "--t2", "100",
        "--start", "1,0", "--phase1", "0,1", "--phase2", "1,0",
    ]));
    let mean = v["data"]["two_phase_mean"].as_array().unwrap();
    close(mean[0].as_f64().unwrap(), 0.7679473335847325, 1e-11);
    close(mean[1].as_f64().unwrap(), 0.2320526664152675, 1e-11);

    let missing = run(&["boost", "--alpha", "0.99", "--t1", "1", "--t2", "1", "--start", "1,0"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn csv_format_flattens_the_report() {
    let stream = write_stream("csv.txt", &["a", "a", "a", "b"]);
    let out = run(&[
        "rank", stream.to_str().unwrap(), "--alpha", "0.5", "--items", "a,b", "--k", "2",
        "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# command: rank\n"));
    assert!(text.contains("key,value\n"));
    assert!(text.contains("reports.0.top.0.item,b\n"));
    assert!(text.contains("reports.0.top.0.probability,0.53125\n"));
}

#[test]
fn output_flag_writes_the_report_to_a_file() {
    let path = scratch("report.json");
    let out = run(&["eigen", "--q", "0.3,0.7", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["data"]["secular_roots"][0], 0.42);
}

#[test]
fn usage_and_io_failures_map_to_their_exit_codes() {
    // Unreadable stream: I/O.
    let missing = run(&["rank", "/definitely/not/here", "--alpha", "0.5"]);
    assert_eq!(missing.status.code(), Some(1));

    // Malformed state file: I/O.
    let bad_state = scratch("bad_state.json");
    fs::write(&bad_state, "not json").unwrap();
    let stream = write_stream("exitcodes.txt", &["a"]);
    let corrupt = run(&["rank", stream.to_str().unwrap(), "--state-in", bad_state.to_str().unwrap()]);
    assert_eq!(corrupt.status.code(), Some(1));

    // Two decay sources at once, or none: usage.
    let both = run(&["rank", stream.to_str().unwrap(), "--alpha", "0.5", "--half-life", "3"]);
    assert_eq!(both.status.code(), Some(2));
    let neither = run(&["rank", stream.to_str().unwrap()]);
    assert_eq!(neither.status.code(), Some(2));

    // Out-of-domain parameter: usage.
    let bad_alpha = run(&["moments", "--alpha", "1.5", "--q", "0.3"]);
    assert_eq!(bad_alpha.status.code(), Some(2));

    // Refused enumeration budget: usage.
    let too_deep = run(&["simulate", "--alpha", "0.5", "--q", "0.5,0.5", "--steps", "40", "--exact"]);
    assert_eq!(too_deep.status.code(), Some(2));
}

#[test]
fn verify_quick_passes_and_reports_every_check() {
    let out = run(&["verify", "--budget", "quick"]);
    assert!(
        out.status.success(),
        "verify failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["data"]["failed"], 0);
    assert_eq!(v["data"]["checks"].as_array().unwrap().len(), 15);
    let progress = String::from_utf8_lossy(&out.stderr);
    assert_eq!(progress.matches("[ ok ]").count(), 15);
}

//! Seeded Monte Carlo sampling of walk endpoints.
//!
//! Determinism contract: path p draws from a ChaCha8 substream whose stream id
//! is p, seeded from the config seed. Each path's endpoint is therefore a pure
//! function of (seed, p), paths may be evaluated on any number of threads, and
//! the reduction into statistics runs sequentially in path order with
//! compensated accumulation. Results are bit-identical across runs, thread
//! counts, and schedules, and the first N paths of a larger run equal the
//! paths of a smaller run with the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

use super::{check_alpha, validate_weights, Phase, StartPoint, VertexSet, WalkConfig};

/// Endpoint samples of a walk run, path-major; the raw material for
/// [`SampleStats`] and for higher sample moments.
#[derive(Clone, Debug)]
pub struct WalkSamples {
    finals: Vec<f64>,
    dim: usize,
    complex: bool,
    steps: u32,
    paths: u64,
}

/// Summary statistics over walk endpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleStats {
    /// Empirical mean per embedded coordinate (complex mode: `[re, im]`).
    pub mean: Vec<f64>,
    /// Sample covariance matrix (divisor N - 1).
    pub covariance: Vec<Vec<f64>>,
    /// Standard error of each mean coordinate, `sqrt(cov_ii / N)`.
    pub std_error: Vec<f64>,
    /// Complex mode only: scalar variance `E|z - Ez|^2`, the covariance trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex_variance: Option<f64>,
    pub paths: u64,
    pub steps: u32,
}

impl WalkSamples {
    pub fn paths(&self) -> u64 {
        self.paths
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Endpoint of path p as a coordinate slice.
    pub fn path(&self, p: usize) -> &[f64] {
        &self.finals[p * self.dim..(p + 1) * self.dim]
    }

    /// One coordinate across all paths.
    pub fn coordinate(&self, coord: usize) -> impl Iterator<Item = f64> + '_ {
        self.finals.iter().skip(coord).step_by(self.dim).copied()
    }

    /// Summary statistics (two-pass, compensated, deterministic order).
    pub fn stats(&self) -> SampleStats {
        let n = self.paths as f64;
        let dim = self.dim;
        let mut mean = vec![0.0; dim];
        for (c, m) in mean.iter_mut().enumerate() {
            let mut acc = NeumaierSum::new();
            for x in self.coordinate(c) {
                acc.add(x);
            }
            *m = acc.value() / n;
        }
        let mut covariance = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in i..dim {
                let mut acc = NeumaierSum::new();
                for chunk in self.finals.chunks_exact(dim) {
                    acc.add((chunk[i] - mean[i]) * (chunk[j] - mean[j]));
                }
                let cov = if self.paths > 1 { acc.value() / (n - 1.0) } else { 0.0 };
                covariance[i][j] = cov;
                covariance[j][i] = cov;
            }
        }
        let std_error = (0..dim).map(|i| (covariance[i][i] / n).sqrt()).collect();
        let complex_variance = self.complex.then(|| covariance[0][0] + covariance[1][1]);
        SampleStats {
            mean,
            covariance,
            std_error,
            complex_variance,
            paths: self.paths,
            steps: self.steps,
        }
    }

    /// Sample central moments of one coordinate about its sample mean, orders
    /// 0..=`max_order`, divisor N.
    pub fn central_moments(&self, coord: usize, max_order: usize) -> Vec<f64> {
        assert!(coord < self.dim, "coordinate out of range");
        let n = self.paths as f64;
        let mut acc = NeumaierSum::new();
        for x in self.coordinate(coord) {
            acc.add(x);
        }
        let mean = acc.value() / n;
        let mut sums = vec![NeumaierSum::new(); max_order + 1];
        for x in self.coordinate(coord) {
            let d = x - mean;
            let mut pow = 1.0;
            for s in sums.iter_mut() {
                s.add(pow);
                pow *= d;
            }
        }
        sums.into_iter().map(|s| s.value() / n).collect()
    }
}

/// Run the walk of `cfg` and keep every endpoint.
pub fn simulate(cfg: &WalkConfig) -> Result<WalkSamples> {
    cfg.validate()?;
    let phase = [Phase { q: cfg.q.clone(), steps: cfg.steps }];
    simulate_phased_validated(cfg.alpha, &cfg.vertices, &cfg.start, &phase, cfg.paths, cfg.seed)
}

/// Run a walk whose event distribution follows a piecewise-constant schedule:
/// each phase runs `phase.steps` steps with its own Q over the same vertices.
pub fn simulate_phased(
    alpha: f64,
    vertices: &VertexSet,
    start: &StartPoint,
    phases: &[Phase],
    paths: u64,
    seed: u64,
) -> Result<WalkSamples> {
    check_alpha(alpha)?;
    let probe = WalkConfig {
        alpha,
        q: uniform_weights(vertices.vertex_count()),
        vertices: vertices.clone(),
        start: start.clone(),
        steps: 0,
        paths,
        seed,
    };
    probe.validate()?;
    if phases.is_empty() {
        return Err(Error::InvalidParameter("schedule must contain at least one phase".into()));
    }
    for (i, phase) in phases.iter().enumerate() {
        validate_weights(&phase.q, vertices.vertex_count(), &format!("phase {i} q"))?;
    }
    simulate_phased_validated(alpha, vertices, start, phases, paths, seed)
}

fn uniform_weights(m: usize) -> Vec<f64> {
    vec![1.0 / m.max(1) as f64; m.max(1)]
}

fn simulate_phased_validated(
    alpha: f64,
    vertices: &VertexSet,
    start: &StartPoint,
    phases: &[Phase],
    paths: u64,
    seed: u64,
) -> Result<WalkSamples> {
    if paths == 0 {
        return Err(Error::InvalidParameter("at least one path is required".into()));
    }
    if paths > usize::MAX as u64 / vertices.embedded_dim().max(1) as u64 {
        return Err(Error::BudgetExceeded(format!("{paths} paths do not fit in memory")));
    }
    let dim = vertices.embedded_dim();
    let m = vertices.vertex_count();
    let columns: Vec<Vec<f64>> = (0..m).map(|j| vertices.column(j)).collect();
    let y0 = start.embedding();
    let one_minus = 1.0 - alpha;
    // Cumulative distribution per phase for inverse-CDF vertex picks.
    let schedule: Vec<(Vec<f64>, u32)> = phases
        .iter()
        .map(|p| {
            let mut cum = Vec::with_capacity(m);
            let mut run = 0.0;
            for &w in &p.q {
                run += w;
                cum.push(run);
            }
            (cum, p.steps)
        })
        .collect();
    let steps_total: u32 = phases.iter().map(|p| p.steps).sum();

    let mut finals = vec![0.0; paths as usize * dim];
    finals
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(p, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            out.copy_from_slice(&y0);
            for (cum, steps) in &schedule {
                for _ in 0..*steps {
                    let u: f64 = rng.random();
                    let j = pick_vertex(cum, u);
                    for (y, v) in out.iter_mut().zip(&columns[j]) {
                        *y = alpha * *y + one_minus * *v;
                    }
                }
            }
        });

    Ok(WalkSamples { finals, dim, complex: vertices.is_complex(), steps: steps_total, paths })
}

/// First index whose cumulative weight exceeds u; clamped to the last vertex
/// to absorb cumulative rounding at the top end.
fn pick_vertex(cum: &[f64], u: f64) -> usize {
    for (j, &c) in cum.iter().enumerate() {
        if u < c {
            return j;
        }
    }
    cum.len() - 1
}

/// Convenience: simulate and summarize in one call.
pub fn run_walk(cfg: &WalkConfig) -> Result<SampleStats> {
    Ok(simulate(cfg)?.stats())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn base_cfg() -> WalkConfig {
        WalkConfig {
            alpha: 0.9,
            q: vec![0.3, 0.7],
            vertices: VertexSet::Simplex { n: 2 },
            start: StartPoint::simplex_uniform(2),
            steps: 50,
            paths: 2000,
            seed: 42,
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = simulate(&base_cfg()).unwrap();
        let b = simulate(&base_cfg()).unwrap();
        assert_eq!(a.finals, b.finals);
    }

    #[test]
    fn path_prefix_is_stable_under_path_count() {
        // Per-path substreams: enlarging the run must not disturb early paths.
        let small = simulate(&base_cfg()).unwrap();
        let mut big_cfg = base_cfg();
        big_cfg.paths = 4000;
        let big = simulate(&big_cfg).unwrap();
        assert_eq!(&big.finals[..small.finals.len()], &small.finals[..]);
    }

    #[test]
    fn different_seeds_differ() {
        let a = simulate(&base_cfg()).unwrap();
        let mut cfg = base_cfg();
        cfg.seed = 43;
        let b = simulate(&cfg).unwrap();
        assert_ne!(a.finals, b.finals);
    }

    #[test]
    fn simplex_paths_stay_on_the_simplex() {
        let samples = simulate(&base_cfg()).unwrap();
        for p in 0..samples.paths() as usize {
            let point = samples.path(p);
            let sum: f64 = point.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "path {p} left the simplex: sum {sum}");
            assert!(point.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn unit_circle_walk_stays_in_unit_disk() {
        let cfg = WalkConfig {
            alpha: 0.8,
            q: vec![0.2, 0.3, 0.5],
            vertices: VertexSet::roots_of_unity(3),
            start: StartPoint::Complex(Complex64::new(0.0, 0.0)),
            steps: 64,
            paths: 500,
            seed: 9,
        };
        let samples = simulate(&cfg).unwrap();
        for p in 0..samples.paths() as usize {
            let point = samples.path(p);
            let norm = (point[0] * point[0] + point[1] * point[1]).sqrt();
            assert!(norm <= 1.0 + 1e-12, "path {p} left the unit disk: |z| = {norm}");
        }
    }

    #[test]
    fn degenerate_q_gives_zero_variance() {
        let cfg = WalkConfig {
            alpha: 0.9,
            q: vec![1.0, 0.0],
            vertices: VertexSet::Simplex { n: 2 },
            start: StartPoint::Vector(vec![1.0, 0.0]),
            steps: 30,
            paths: 64,
            seed: 5,
        };
        let stats = run_walk(&cfg).unwrap();
        assert!((stats.mean[0] - 1.0).abs() < 1e-15);
        for row in &stats.covariance {
            for &c in row {
                assert!(c.abs() < 1e-20, "degenerate walk must have zero variance");
            }
        }
    }

    #[test]
    fn single_phase_schedule_matches_plain_run() {
        let cfg = base_cfg();
        let plain = simulate(&cfg).unwrap();
        // The same total steps split across two phases with the same Q must
        // consume the RNG identically.
        let split = simulate_phased(
            cfg.alpha,
            &cfg.vertices,
            &cfg.start,
            &[Phase { q: cfg.q.clone(), steps: 20 }, Phase { q: cfg.q.clone(), steps: 30 }],
            cfg.paths,
            cfg.seed,
        )
        .unwrap();
        assert_eq!(plain.finals, split.finals);
        assert_eq!(split.steps(), 50);
    }

    #[test]
    fn zero_steps_returns_start_point() {
        let mut cfg = base_cfg();
        cfg.steps = 0;
        cfg.paths = 4;
        let samples = simulate(&cfg).unwrap();
        for p in 0..4 {
            assert_eq!(samples.path(p), &[0.5, 0.5]);
        }
    }

    #[test]
    fn complex_stats_expose_scalar_variance() {
        let cfg = WalkConfig {
            alpha: 0.7,
            q: vec![0.5, 0.5],
            vertices: VertexSet::roots_of_unity(2),
            start: StartPoint::Complex(Complex64::new(0.0, 0.0)),
            steps: 40,
            paths: 512,
            seed: 3,
        };
        let stats = run_walk(&cfg).unwrap();
        let trace = stats.covariance[0][0] + stats.covariance[1][1];
        let cv = stats.complex_variance.expect("complex mode reports scalar variance");
        assert!((cv - trace).abs() < 1e-15);
        assert!(cv >= 0.0);
    }

    #[test]
    fn rejects_zero_paths() {
        let mut cfg = base_cfg();
        cfg.paths = 0;
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn central_moments_match_direct_computation() {
        let samples = simulate(&base_cfg()).unwrap();
        let moments = samples.central_moments(0, 4);
        assert_eq!(moments[0], 1.0);
        assert!(moments[1].abs() < 1e-14, "first central moment about the mean");
        let stats = samples.stats();
        // population vs sample divisor: m2 = cov * (N-1)/N
        let n = samples.paths() as f64;
        let expect = stats.covariance[0][0] * (n - 1.0) / n;
        assert!((moments[2] - expect).abs() < 1e-15);
    }
}

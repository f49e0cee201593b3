//! The event update as a random walk.
//!
//! Fix a vertex set `v_1 .. v_m` and an event distribution Q over it. Each
//! step picks vertex j with probability `q_j` and moves the state by the same
//! convex mixture the rank table applies:
//!
//! ```text
//!     Y_{t+1} = alpha * Y_t + (1 - alpha) * v_j
//! ```
//!
//! Unrolling gives `Y_t = alpha^t Y_0 + (1 - alpha) * sum_m xi_m alpha^m`
//! with one draw per step, a randomly weighted geometric sum whose law is the
//! object all closed forms in [`crate::analytics`] describe. Three vertex
//! geometries are supported: the corners of the probability simplex (the rank
//! table's own state space), arbitrary real vector sets, and points in the
//! complex plane (internally the real plane embedding).
//!
//! Submodules provide three independent routes onto that law:
//! seeded Monte Carlo sampling ([`simulate`]), exact enumeration of every
//! vertex sequence ([`enumerate_exact`]), and a heuristic reciprocal-moment
//! probe ([`reciprocal_probe`]).

mod enumerate;
mod monte_carlo;
mod probe;

pub use enumerate::{enumerate_exact, ExactMoments, SupportAtom, ENUMERATION_BUDGET, MAX_CENTRAL_ORDER};
pub use monte_carlo::{run_walk, simulate, simulate_phased, SampleStats, WalkSamples};
pub use probe::{reciprocal_probe, Divergence, ReciprocalProbe, ReciprocalProbeConfig};

pub use num_complex::Complex64;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Tolerance for "these weights form a probability vector" checks.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Where the walk lives: which points the update can pull toward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum VertexSet {
    /// Corners `e_1 .. e_n` of the standard simplex in `R^n`.
    Simplex { n: usize },
    /// Arbitrary vertex columns, all of one dimension.
    RealVectors { columns: Vec<Vec<f64>> },
    /// Points in the complex plane, serialized as `[re, im]` pairs.
    Complex { points: Vec<Complex64> },
}

impl VertexSet {
    /// The m-th roots of unity on the complex unit circle.
    pub fn roots_of_unity(m: usize) -> Self {
        let points = (0..m)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                Complex64::new(phi.cos(), phi.sin())
            })
            .collect();
        VertexSet::Complex { points }
    }

    /// Number of vertices (must equal the length of Q).
    pub fn vertex_count(&self) -> usize {
        match self {
            VertexSet::Simplex { n } => *n,
            VertexSet::RealVectors { columns } => columns.len(),
            VertexSet::Complex { points } => points.len(),
        }
    }

    /// Dimension of the real embedding the walk runs in.
    pub fn embedded_dim(&self) -> usize {
        match self {
            VertexSet::Simplex { n } => *n,
            VertexSet::RealVectors { columns } => columns.first().map_or(0, Vec::len),
            VertexSet::Complex { .. } => 2,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, VertexSet::Complex { .. })
    }

    /// Vertex j as a real-embedding column.
    pub(crate) fn column(&self, j: usize) -> Vec<f64> {
        match self {
            VertexSet::Simplex { n } => {
                let mut col = vec![0.0; *n];
                col[j] = 1.0;
                col
            }
            VertexSet::RealVectors { columns } => columns[j].clone(),
            VertexSet::Complex { points } => vec![points[j].re, points[j].im],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            VertexSet::Simplex { n } => {
                if *n == 0 {
                    return Err(Error::InvalidParameter("simplex dimension must be >= 1".into()));
                }
            }
            VertexSet::RealVectors { columns } => {
                if columns.is_empty() {
                    return Err(Error::InvalidParameter("vertex set must be non-empty".into()));
                }
                let dim = columns[0].len();
                if dim == 0 {
                    return Err(Error::InvalidParameter("vertex columns must be non-empty".into()));
                }
                for (j, col) in columns.iter().enumerate() {
                    if col.len() != dim {
                        return Err(Error::InvalidParameter(format!(
                            "vertex column {j} has dimension {} but column 0 has {dim}",
                            col.len()
                        )));
                    }
                    if col.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "vertex column {j} contains a non-finite entry"
                        )));
                    }
                }
            }
            VertexSet::Complex { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidParameter("vertex set must be non-empty".into()));
                }
                if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "complex vertex set contains a non-finite point".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Walk starting point, matching the vertex geometry. Serialized with an
/// explicit tag (`{"vector": [...]}` / `{"complex": [re, im]}`) because a
/// complex point would otherwise be indistinguishable from a 2-vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartPoint {
    Vector(Vec<f64>),
    Complex(Complex64),
}

impl StartPoint {
    /// Uniform center of the simplex of dimension n.
    pub fn simplex_uniform(n: usize) -> Self {
        StartPoint::Vector(vec![1.0 / n as f64; n])
    }

    pub(crate) fn embedding(&self) -> Vec<f64> {
        match self {
            StartPoint::Vector(v) => v.clone(),
            StartPoint::Complex(z) => vec![z.re, z.im],
        }
    }
}

/// One segment of a piecewise-constant event distribution schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub q: Vec<f64>,
    pub steps: u32,
}

/// Full description of a walk run; serializable as a JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub alpha: f64,
    /// Event distribution over the vertices.
    pub q: Vec<f64>,
    pub vertices: VertexSet,
    pub start: StartPoint,
    pub steps: u32,
    pub paths: u64,
    pub seed: u64,
}

/// Check that `q` is a probability vector of the given length.
pub(crate) fn validate_weights(q: &[f64], expected_len: usize, what: &str) -> Result<()> {
    if q.len() != expected_len {
        return Err(Error::InvalidParameter(format!(
            "{what} has {} entries but the vertex set has {expected_len}",
            q.len()
        )));
    }
    let mut sum = NeumaierSum::new();
    for (i, &w) in q.iter().enumerate() {
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "{what}[{i}] must lie in [0, 1], got {w}"
            )));
        }
        sum.add(w);
    }
    let total = sum.value();
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::InvalidParameter(format!(
            "{what} must sum to 1 within {PROBABILITY_TOL:e}, got {total}"
        )));
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie strictly inside (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        self.vertices.validate()?;
        validate_weights(&self.q, self.vertices.vertex_count(), "q")?;
        self.validate_start()
    }

    fn validate_start(&self) -> Result<()> {
        match (&self.vertices, &self.start) {
            (VertexSet::Simplex { n }, StartPoint::Vector(y0)) => {
                validate_weights(y0, *n, "start point")
            }
            (VertexSet::RealVectors { .. }, StartPoint::Vector(y0)) => {
                let dim = self.vertices.embedded_dim();
                if y0.len() != dim {
                    return Err(Error::InvalidParameter(format!(
                        "start point has dimension {} but the vertex set has {dim}",
                        y0.len()
                    )));
                }
                if y0.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidParameter("start point must be finite".into()));
                }
                Ok(())
            }
            (VertexSet::Complex { .. }, StartPoint::Complex(z)) => {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::InvalidParameter("start point must be finite".into()));
                }
                Ok(())
            }
            _ => Err(Error::InvalidParameter(
                "start point kind does not match the vertex set (vector modes need a vector, complex mode a complex point)"
                    .into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex_cfg() -> WalkConfig {
        WalkConfig {
            alpha: 0.9,
            q: vec![0.3, 0.7],
            vertices: VertexSet::Simplex { n: 2 },
            start: StartPoint::simplex_uniform(2),
            steps: 10,
            paths: 100,
            seed: 7,
        }
    }

    #[test]
    fn accepts_well_formed_configs() {
        simplex_cfg().validate().unwrap();

        let mut cfg = simplex_cfg();
        cfg.vertices = VertexSet::RealVectors { columns: vec![vec![0.0], vec![1.0]] };
        cfg.start = StartPoint::Vector(vec![0.5]);
        cfg.validate().unwrap();

        let mut cfg = simplex_cfg();
        cfg.vertices = VertexSet::roots_of_unity(2);
        cfg.start = StartPoint::Complex(num_complex::Complex64::new(0.0, 0.0));
        cfg.validate().unwrap();
    }

    #[test]
    fn roots_of_unity_sit_on_the_unit_circle() {
        for m in 1..=8 {
            if let VertexSet::Complex { points } = VertexSet::roots_of_unity(m) {
                assert_eq!(points.len(), m);
                for p in points {
                    assert!((p.norm() - 1.0).abs() < 1e-12);
                }
            } else {
                unreachable!();
            }
        }
    }

    #[test]
    fn rejects_mismatched_q_length() {
        let mut cfg = simplex_cfg();
        cfg.q = vec![0.5, 0.3, 0.2];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_non_probability_q() {
        let mut cfg = simplex_cfg();
        cfg.q = vec![0.5, 0.6];
        assert!(cfg.validate().is_err());
        cfg.q = vec![-0.1, 1.1];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_alpha_outside_open_interval() {
        for bad in [0.0, 1.0, -0.5, f64::NAN] {
            let mut cfg = simplex_cfg();
            cfg.alpha = bad;
            assert!(cfg.validate().is_err(), "alpha {bad} must be rejected");
        }
    }

    #[test]
    fn rejects_start_point_off_the_simplex() {
        let mut cfg = simplex_cfg();
        cfg.start = StartPoint::Vector(vec![0.9, 0.2]);
        assert!(cfg.validate().is_err());
        cfg.start = StartPoint::Complex(num_complex::Complex64::new(0.0, 0.0));
        assert!(cfg.validate().is_err(), "kind mismatch must be rejected");
    }

    #[test]
    fn rejects_ragged_vertex_columns() {
        let mut cfg = simplex_cfg();
        cfg.vertices = VertexSet::RealVectors { columns: vec![vec![0.0, 1.0], vec![1.0]] };
        cfg.start = StartPoint::Vector(vec![0.0, 0.0]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trips() {
        let cfg = simplex_cfg();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: WalkConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);

        let complex = WalkConfig {
            alpha: 0.8,
            q: vec![0.2, 0.3, 0.5],
            vertices: VertexSet::roots_of_unity(3),
            start: StartPoint::Complex(num_complex::Complex64::new(0.1, -0.2)),
            steps: 5,
            paths: 10,
            seed: 1,
        };
        let text = serde_json::to_string(&complex).unwrap();
        assert!(text.contains("\"mode\":\"complex\""));
        let back: WalkConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(complex, back);
    }
}

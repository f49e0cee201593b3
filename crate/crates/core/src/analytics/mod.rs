//! Closed-form moments of the decay walk.
//!
//! Everything here evaluates formulas; nothing samples. For the scalar walk
//! with event probability q and start y0,
//!
//! ```text
//!     E[y_t]   = alpha^t y0 + (1 - alpha^t) q
//!     VAR[y_t] = (1 - alpha^2t) (1 - alpha) / (1 + alpha) * (q - q^2)
//! ```
//!
//! and the simplex walk's covariance is the same scalar scale times the
//! kernel `diag(Q) - Q Q^T`. A general vertex matrix V conjugates that
//! kernel: `COV[Y_t] = scale * V (diag(Q) - Q Q^T) V^T`, which specializes
//! to the unit circle as `4 * scale * sum_{i<j} sin^2((phi_i - phi_j)/2)
//! q_i q_j` for the scalar complex variance. The [`Horizon`] type carries
//! the `t -> infinity` limit through every signature, where the mean decay
//! `alpha^t` vanishes and the variance scale loses its `(1 - alpha^2t)`
//! factor.

pub mod moments;
pub mod spectral;

pub use moments::{
    central_moments, moment_root_trend, moment_symmetry_check, CentralMomentTable,
    MomentSymmetryReport, RootTrendEntry, RootTrendReport, MAX_MOMENT_ORDER,
};
pub use spectral::{secular_eigenvalues, symmetric_eigen};

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{decay_pow, one_minus_pow, NeumaierSum};
use crate::walk::{check_alpha, validate_weights, StartPoint, VertexSet, WalkConfig};

/// Evaluation horizon: a concrete step count or the stationary limit.
///
/// Serializes as the bare number of steps, or the string `"infinite"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Finite(u32),
    Infinite,
}

impl Horizon {
    /// `alpha^t`, the weight the start point still carries.
    pub fn mean_decay(self, alpha: f64) -> f64 {
        match self {
            Horizon::Finite(t) => decay_pow(alpha, t as u64),
            Horizon::Infinite => 0.0,
        }
    }

    /// `(1 - alpha^2t) (1 - alpha) / (1 + alpha)`, the scalar factor in every
    /// variance and covariance formula here.
    pub fn variance_scale(self, alpha: f64) -> f64 {
        self.variance_span(alpha) * (1.0 - alpha) / (1.0 + alpha)
    }

    /// `1 - alpha^2t` alone; useful where the `(1 - alpha)` factor cancels
    /// against a bound's epsilon and dividing it back in would lose digits.
    pub fn variance_span(self, alpha: f64) -> f64 {
        match self {
            Horizon::Finite(t) => one_minus_pow(alpha * alpha, t as u64),
            Horizon::Infinite => 1.0,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Infinite => f.write_str("infinite"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infinite" | "inf" => Ok(Horizon::Infinite),
            other => other
                .parse::<u32>()
                .map(Horizon::Finite)
                .map_err(|_| Error::InvalidParameter(format!(
                    "horizon must be a step count or \"infinite\", got {other:?}"
                ))),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(t) => serializer.serialize_u32(*t),
            Horizon::Infinite => serializer.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct HorizonVisitor;

        impl Visitor<'_> for HorizonVisitor {
            type Value = Horizon;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a step count or the string \"infinite\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Horizon, E> {
                u32::try_from(v)
                    .map(Horizon::Finite)
                    .map_err(|_| E::custom(format!("horizon {v} exceeds u32")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Horizon, E> {
                u32::try_from(v)
                    .map(Horizon::Finite)
                    .map_err(|_| E::custom(format!("horizon {v} must be a small nonnegative integer")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Horizon, E> {
                Horizon::from_str(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(HorizonVisitor)
    }
}

/// Mean and variance of the scalar walk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarMoments {
    pub alpha: f64,
    pub q: f64,
    pub horizon: Horizon,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    pub mean: f64,
    pub variance: f64,
}

/// Closed-form mean and variance of the scalar walk. A finite horizon needs
/// the start value; at the stationary limit it no longer matters and may be
/// omitted.
pub fn scalar_mean_var(
    alpha: f64,
    q: f64,
    horizon: Horizon,
    y0: Option<f64>,
) -> Result<ScalarMoments> {
    check_alpha(alpha)?;
    if !q.is_finite() || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "event probability must lie in [0, 1], got {q}"
        )));
    }
    if let Some(y) = y0 {
        if !y.is_finite() {
            return Err(Error::InvalidParameter(format!("start value must be finite, got {y}")));
        }
    }
    let mean = match horizon {
        Horizon::Finite(_) => {
            let y = y0.ok_or_else(|| {
                Error::InvalidParameter("a finite horizon needs a start value y0".into())
            })?;
            let decay = horizon.mean_decay(alpha);
            decay * y + (1.0 - decay) * q
        }
        Horizon::Infinite => q,
    };
    let variance = horizon.variance_scale(alpha) * (q - q * q);
    Ok(ScalarMoments { alpha, q, horizon, y0, mean, variance })
}

/// A scaled kernel eigenpair of a covariance matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenPair {
    /// Covariance eigenvalue, i.e. the kernel eigenvalue times the scale.
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Covariance of the simplex walk with its spectral summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub alpha: f64,
    pub q: Vec<f64>,
    pub horizon: Horizon,
    /// `(1 - alpha^2t) (1 - alpha) / (1 + alpha)`.
    pub scale: f64,
    /// `scale * (diag(Q) - Q Q^T)`.
    pub covariance: Vec<Vec<f64>>,
    /// Eigenvalues of the unscaled kernel, ascending; the first is the zero
    /// forced by mass conservation.
    pub kernel_eigenvalues: Vec<f64>,
    /// Eigenpairs with kernel eigenvalue above 1e-12, values rescaled to
    /// covariance units.
    pub nonzero_eigenpairs: Vec<EigenPair>,
}

/// Kernel eigenvalues at or below this are treated as the structural zero.
const KERNEL_NULL_TOL: f64 = 1e-12;

/// Covariance matrix of the simplex walk over event distribution `q`.
pub fn simplex_covariance(alpha: f64, q: &[f64], horizon: Horizon) -> Result<CovarianceReport> {
    check_alpha(alpha)?;
    validate_weights(q, q.len(), "q")?;
    if q.len() < 2 {
        return Err(Error::InvalidParameter(
            "covariance needs at least two items; one item has no freedom".into(),
        ));
    }
    let scale = horizon.variance_scale(alpha);
    let n = q.len();
    let mut kernel = vec![vec![0.0; n]; n];
    let mut covariance = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let k = if i == j { q[i] - q[i] * q[j] } else { -q[i] * q[j] };
            kernel[i][j] = k;
            covariance[i][j] = scale * k;
        }
    }
    let (kernel_eigenvalues, vectors) = symmetric_eigen(&kernel);
    let nonzero_eigenpairs = kernel_eigenvalues
        .iter()
        .zip(vectors)
        .filter(|(lambda, _)| **lambda > KERNEL_NULL_TOL)
        .map(|(lambda, vector)| EigenPair { value: scale * lambda, vector })
        .collect();
    Ok(CovarianceReport { alpha, q: q.to_vec(), horizon, scale, covariance, kernel_eigenvalues, nonzero_eigenpairs })
}

/// Closed-form endpoint moments of a walk over an arbitrary vertex set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneralizedMoments {
    pub alpha: f64,
    pub q: Vec<f64>,
    pub horizon: Horizon,
    /// Mean in the real embedding (complex mode: `[re, im]`).
    pub mean: Vec<f64>,
    /// `scale * V (diag(Q) - Q Q^T) V^T` in the real embedding.
    pub covariance: Vec<Vec<f64>>,
    /// Complex mode only: scalar variance `E|z - Ez|^2`, the trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex_variance: Option<f64>,
}

/// Mean and covariance of the walk endpoint for any vertex geometry.
pub fn generalized_moments(
    vertices: &VertexSet,
    q: &[f64],
    alpha: f64,
    horizon: Horizon,
    start: &StartPoint,
) -> Result<GeneralizedMoments> {
    // Reuse the walk's own validation so geometry mismatches read the same.
    let probe = WalkConfig {
        alpha,
        q: q.to_vec(),
        vertices: vertices.clone(),
        start: start.clone(),
        steps: 0,
        paths: 1,
        seed: 0,
    };
    probe.validate()?;

    let m = vertices.vertex_count();
    let dim = vertices.embedded_dim();
    let columns: Vec<Vec<f64>> = (0..m).map(|j| vertices.column(j)).collect();
    let y0 = start.embedding();

    // Event-weighted vertex average VQ, the attractor the mean decays toward.
    let mut attractor = vec![0.0; dim];
    for (a, slot) in attractor.iter_mut().enumerate() {
        let mut acc = NeumaierSum::new();
        for (col, &w) in columns.iter().zip(q) {
            acc.add(w * col[a]);
        }
        *slot = acc.value();
    }
    let decay = horizon.mean_decay(alpha);
    let mean: Vec<f64> =
        y0.iter().zip(&attractor).map(|(&y, &vq)| decay * y + (1.0 - decay) * vq).collect();

    let scale = horizon.variance_scale(alpha);
    let covariance = if matches!(vertices, VertexSet::Simplex { .. }) {
        // Identity embedding: produce exactly the simplex formula so both
        // entry points agree bit for bit.
        let mut cov = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                let k = if i == j { q[i] - q[i] * q[j] } else { -q[i] * q[j] };
                cov[i][j] = scale * k;
            }
        }
        cov
    } else {
        // V K V^T with K = diag(Q) - Q Q^T: entry (a, b) is
        // sum_j q_j V_aj V_bj - (VQ)_a (VQ)_b.
        let mut cov = vec![vec![0.0; dim]; dim];
        for a in 0..dim {
            for b in a..dim {
                let mut acc = NeumaierSum::new();
                for (col, &w) in columns.iter().zip(q) {
                    acc.add(w * col[a] * col[b]);
                }
                let c = scale * (acc.value() - attractor[a] * attractor[b]);
                cov[a][b] = c;
                cov[b][a] = c;
            }
        }
        cov
    };
    let complex_variance =
        vertices.is_complex().then(|| covariance[0][0] + covariance[1][1]);
    Ok(GeneralizedMoments { alpha, q: q.to_vec(), horizon, mean, covariance, complex_variance })
}

/// Scalar variance of a walk over points `e^(i phi)` on the unit circle:
///
/// ```text
///     4 * scale * sum_{i<j} sin^2((phi_i - phi_j) / 2) q_i q_j
/// ```
///
/// Algebraically equal to the complex-variance trace of
/// [`generalized_moments`] over the same points; computed from angle gaps
/// alone, which is what makes it an independent cross-check.
pub fn unit_circle_variance(
    angles: &[f64],
    q: &[f64],
    alpha: f64,
    horizon: Horizon,
) -> Result<f64> {
    check_alpha(alpha)?;
    validate_weights(q, angles.len(), "q")?;
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidParameter("angles must be finite".into()));
    }
    let mut acc = NeumaierSum::new();
    for i in 0..angles.len() {
        for j in (i + 1)..angles.len() {
            let s = (0.5 * (angles[i] - angles[j])).sin();
            acc.add(s * s * q[i] * q[j]);
        }
    }
    Ok(4.0 * horizon.variance_scale(alpha) * acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn horizon_serde_and_parse_round_trip() {
        let fin = serde_json::to_string(&Horizon::Finite(12)).unwrap();
        assert_eq!(fin, "12");
        let inf = serde_json::to_string(&Horizon::Infinite).unwrap();
        assert_eq!(inf, "\"infinite\"");
        assert_eq!(serde_json::from_str::<Horizon>("12").unwrap(), Horizon::Finite(12));
        assert_eq!(serde_json::from_str::<Horizon>("\"infinite\"").unwrap(), Horizon::Infinite);
        assert_eq!("64".parse::<Horizon>().unwrap(), Horizon::Finite(64));
        assert_eq!("inf".parse::<Horizon>().unwrap(), Horizon::Infinite);
        assert!("never".parse::<Horizon>().is_err());
        assert!(serde_json::from_str::<Horizon>("-3").is_err());
    }

    #[test]
    fn one_step_moments_by_hand() {
        // One step from y0: mean = alpha y0 + (1 - alpha) q and variance
        // = (1 - alpha)^2 q (1 - q), both directly from y1 = alpha y0
        // + (1 - alpha) xi.
        let (alpha, q, y0) = (0.9, 0.3, 1.0);
        let m = scalar_mean_var(alpha, q, Horizon::Finite(1), Some(y0)).unwrap();
        assert!((m.mean - (alpha * y0 + (1.0 - alpha) * q)).abs() < 1e-15);
        assert!((m.variance - (1.0 - alpha) * (1.0 - alpha) * q * (1.0 - q)).abs() < 1e-15);
    }

    #[test]
    fn long_horizons_approach_the_stationary_values() {
        let fin = scalar_mean_var(0.9, 0.3, Horizon::Finite(5000), Some(0.9)).unwrap();
        let inf = scalar_mean_var(0.9, 0.3, Horizon::Infinite, None).unwrap();
        assert!((fin.mean - inf.mean).abs() < 1e-15);
        assert!((fin.variance - inf.variance).abs() < 1e-15);
        assert_eq!(inf.mean, 0.3);
    }

    #[test]
    fn finite_horizon_requires_a_start() {
        assert!(scalar_mean_var(0.9, 0.3, Horizon::Finite(4), None).is_err());
        assert!(scalar_mean_var(0.9, 0.3, Horizon::Infinite, None).is_ok());
    }

    #[test]
    fn covariance_rows_annihilate_ones_and_spectrum_splits() {
        let report = simplex_covariance(0.95, &[0.5, 0.3, 0.2], Horizon::Finite(8)).unwrap();
        for row in &report.covariance {
            let s: f64 = row.iter().sum();
            assert!(s.abs() < 1e-15, "row sum {s} should vanish");
        }
        assert!(report.kernel_eigenvalues[0].abs() < 1e-13);
        assert_eq!(report.nonzero_eigenpairs.len(), 2);
        for pair in &report.nonzero_eigenpairs {
            assert!(pair.value > 0.0);
            // Scaled eigenvalue consistency with the kernel spectrum.
            let kernel_value = pair.value / report.scale;
            assert!(report
                .kernel_eigenvalues
                .iter()
                .any(|k| (k - kernel_value).abs() < 1e-12));
        }
    }

    #[test]
    fn generalized_on_the_simplex_is_bit_identical_to_the_direct_route() {
        let q = [0.5, 0.3, 0.2];
        let direct = simplex_covariance(0.95, &q, Horizon::Finite(8)).unwrap();
        let general = generalized_moments(
            &VertexSet::Simplex { n: 3 },
            &q,
            0.95,
            Horizon::Finite(8),
            &StartPoint::simplex_uniform(3),
        )
        .unwrap();
        assert_eq!(direct.covariance, general.covariance);
    }

    #[test]
    fn generalized_mean_decays_toward_the_weighted_vertex_average() {
        let vertices = VertexSet::RealVectors { columns: vec![vec![0.0, 0.0], vec![2.0, 4.0]] };
        let q = [0.25, 0.75];
        let start = StartPoint::Vector(vec![1.0, 1.0]);
        let g =
            generalized_moments(&vertices, &q, 0.5, Horizon::Finite(3), &start).unwrap();
        // attractor = 0.75 * (2, 4) = (1.5, 3); alpha^3 = 1/8.
        assert!((g.mean[0] - (1.0 / 8.0 + 7.0 / 8.0 * 1.5)).abs() < 1e-15);
        assert!((g.mean[1] - (1.0 / 8.0 + 7.0 / 8.0 * 3.0)).abs() < 1e-15);
        let inf = generalized_moments(&vertices, &q, 0.5, Horizon::Infinite, &start).unwrap();
        assert_eq!(inf.mean, vec![1.5, 3.0]);
    }

    #[test]
    fn unit_circle_form_matches_the_general_covariance_trace() {
        let q = [0.2, 0.3, 0.5];
        let vertices = VertexSet::roots_of_unity(3);
        let angles: Vec<f64> =
            (0..3).map(|k| 2.0 * std::f64::consts::PI * k as f64 / 3.0).collect();
        for horizon in [Horizon::Finite(12), Horizon::Infinite] {
            let g = generalized_moments(
                &vertices,
                &q,
                0.9,
                horizon,
                &StartPoint::Complex(Complex64::new(0.0, 0.0)),
            )
            .unwrap();
            let direct = unit_circle_variance(&angles, &q, 0.9, horizon).unwrap();
            let trace = g.complex_variance.unwrap();
            assert!(
                (direct - trace).abs() < 1e-12,
                "angle-gap form {direct} vs trace {trace} at horizon {horizon}"
            );
        }
    }

    #[test]
    fn uniform_circle_walk_centers_on_the_origin() {
        let g = generalized_moments(
            &VertexSet::roots_of_unity(4),
            &[0.25; 4],
            0.8,
            Horizon::Infinite,
            &StartPoint::Complex(Complex64::new(0.3, 0.3)),
        )
        .unwrap();
        assert!(g.mean[0].abs() < 1e-15 && g.mean[1].abs() < 1e-15);
    }

    #[test]
    fn variance_scale_knows_its_limit() {
        let base = (1.0 - 0.9) / (1.0 + 0.9);
        assert_eq!(Horizon::Infinite.variance_scale(0.9), base);
        let almost = Horizon::Finite(4000).variance_scale(0.9);
        assert!((almost - base).abs() < 1e-15);
        assert_eq!(Horizon::Finite(0).variance_scale(0.9), 0.0);
    }
}

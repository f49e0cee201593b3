//! Eigenvalues of the walk's covariance kernel, by two independent routes.
//!
//! The kernel `K = diag(Q) - Q Q^T` is symmetric, annihilates the all-ones
//! vector, and its remaining eigenvalues interlace the sorted entries of Q.
//! [`secular_eigenvalues`] exploits that structure: the nonzero eigenvalues
//! are exactly the roots of
//!
//! ```text
//!     f(lambda) = sum_i q_i / (q_i - lambda) = 0
//! ```
//!
//! with one root strictly inside each gap between consecutive distinct q_i,
//! found here by bisection. [`symmetric_eigen`] is a plain cyclic Jacobi
//! solver for any dense symmetric matrix; it knows nothing about the kernel's
//! structure, which is what makes it a fair cross-check.

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::walk::PROBABILITY_TOL;

/// Bisection steps per secular root; 100 halvings exhaust f64 resolution.
const BISECT_ITERS: usize = 100;

/// Jacobi sweeps are capped here; convergence is quadratic and even 20x20
/// matrices settle in well under ten sweeps.
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a dense symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(values, vectors)` with eigenvalues ascending and `vectors[i]`
/// the unit eigenvector for `values[i]`, sign-fixed so the entry of largest
/// magnitude is positive. Symmetry of the input is the caller's contract;
/// only the upper triangle of each rotation pair is trusted.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let frob: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|x| x * x))
        .sum::<f64>()
        .sqrt();
    let stop = 1e-15 * frob.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum::<f64>()
            .sqrt();
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= stop / (n as f64) {
                    continue;
                }
                // Classic Jacobi rotation choosing the smaller angle.
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (app, aqq) = (a[p][p], a[q][q]);
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[p][k] = a[k][p];
                        a[k][q] = s * akp + c * akq;
                        a[q][k] = a[k][q];
                    }
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| {
            let mut vector: Vec<f64> = v.iter().map(|row| row[col]).collect();
            canonicalize_sign(&mut vector);
            vector
        })
        .collect();
    (values, vectors)
}

/// Flip the vector so its largest-magnitude entry is positive (first such
/// entry on ties), making eigenvector output deterministic.
fn canonicalize_sign(v: &mut [f64]) {
    let mut lead = 0.0f64;
    for &x in v.iter() {
        if x.abs() > lead.abs() {
            lead = x;
        }
    }
    if lead < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Nonzero eigenvalues of `diag(Q) - Q Q^T` via the secular equation,
/// ascending. Requires at least two entries, all positive, summing to 1, and
/// pairwise distinct so that every root is bracketed by a strict gap.
pub fn secular_eigenvalues(q: &[f64]) -> Result<Vec<f64>> {
    if q.len() < 2 {
        return Err(Error::InvalidParameter(
            "secular equation needs at least two bias probabilities".into(),
        ));
    }
    let mut sum = NeumaierSum::new();
    for (i, &w) in q.iter().enumerate() {
        if !w.is_finite() || w <= 0.0 || w >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "bias probability [{i}] must lie strictly inside (0, 1), got {w}"
            )));
        }
        sum.add(w);
    }
    let total = sum.value();
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::InvalidParameter(format!(
            "bias probabilities must sum to 1 within {PROBABILITY_TOL:e}, got {total}"
        )));
    }
    let mut qs = q.to_vec();
    qs.sort_by(f64::total_cmp);
    if qs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter(
            "bias probabilities must be pairwise distinct for the secular route; \
             use the dense eigensolver for repeated entries"
                .into(),
        ));
    }

    let f = |lambda: f64| -> f64 {
        let mut acc = NeumaierSum::new();
        for &w in &qs {
            acc.add(w / (w - lambda));
        }
        acc.value()
    };

    // One root per gap: f decreases through -inf as lambda leaves q_i from
    // above and returns from +inf below q_{i+1}, crossing zero once.
    let mut roots = Vec::with_capacity(qs.len() - 1);
    for gap in qs.windows(2) {
        let (mut lo, mut hi) = (gap[0], gap[1]);
        for _ in 0..BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    Ok(roots)
}

//! Numeric helpers shared across modules: compensated summation and stable
//! evaluation of decay powers.

/// Exponent threshold for switching `decay_pow` from `powi` to the exp route.
///
/// Square-and-multiply loses up to ~k * eps relative accuracy because early
/// rounding errors are re-squared (measured: ~1e-13 at k = 4096, ~1e-8 at
/// k = 1e9). The exp route's error is bounded by |k ln alpha| * eps, which for
/// any representable result stays below ~4e-14. Below the threshold `powi` is
/// both faster and slightly more accurate.
const POW_SWITCH: u64 = 4096;

/// `alpha^k` for a decay factor `alpha` in (0, 1] and a step count `k`.
pub fn decay_pow(alpha: f64, k: u64) -> f64 {
    if k <= POW_SWITCH {
        alpha.powi(k as i32)
    } else {
        ((k as f64) * alpha.ln()).exp()
    }
}

/// `1 - alpha^k` without cancellation for alpha near 1.
pub fn one_minus_pow(alpha: f64, k: u64) -> f64 {
    -((k as f64) * alpha.ln()).exp_m1()
}

/// Neumaier's variant of Kahan summation. Tracks a running compensation term
/// that also survives the case where the addend is larger than the sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of addends.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Pascal triangle of binomial coefficients C(n, k) for n <= `n_max`, in f64.
///
/// C(64, 32) ~ 1.8e18 exceeds 2^53, so exact integer binomials do not fit in
/// f64 (and u64 additions would be silently lossy once converted). Building
/// the triangle by float additions keeps every entry within ~1e-15 relative
/// error, well inside the ~1e-12 budget of the moment recurrence.
pub fn binomial_triangle(n_max: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut row = vec![0.0; n + 1];
        row[0] = 1.0;
        row[n] = 1.0;
        for k in 1..n {
            row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
        }
        rows.push(row);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_pow_matches_powi_small_exponents() {
        for &a in &[0.3_f64, 0.5, 0.9, 0.999] {
            for k in 0..200_u64 {
                assert_eq!(decay_pow(a, k), a.powi(k as i32));
            }
        }
    }

    #[test]
    fn decay_pow_large_exponent_beats_repeated_squaring() {
        // Reference computed at 40-digit precision for the f64 value of the
        // literal (which is not the decimal 0.9999999 exactly).
        let got = decay_pow(0.999_999_9, 1_000_000_000);
        let reference = 3.720_057_571_493_637e-44;
        assert!(
            (got - reference).abs() / reference < 1e-12,
            "got {got:e}, want ~{reference:e}"
        );
    }

    #[test]
    fn one_minus_pow_avoids_cancellation() {
        // Reference computed at 40-digit precision for the f64 nearest
        // 1 - 1e-9; the decimal answer 9.9999995e-8 differs in the eighth
        // digit because the base itself rounds.
        let a: f64 = 1.0 - 1e-9;
        let got = one_minus_pow(a, 100);
        let want = 9.999_999_222_180_73e-8;
        assert!((got - want).abs() / want < 1e-12, "got {got:e}");
        // consistency with the direct route where no cancellation occurs
        assert!((one_minus_pow(0.5, 10) - (1.0 - 0.5f64.powi(10))).abs() < 1e-15);
    }

    #[test]
    fn neumaier_recovers_cancelled_tail() {
        // Naive summation of [1e100, 1, -1e100] loses the 1; Neumaier keeps it.
        let xs = [1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs.iter().copied()), 1.0);
    }

    #[test]
    fn neumaier_matches_exact_rational_sum() {
        let mut acc = NeumaierSum::new();
        for _ in 0..10_000 {
            acc.add(0.1);
        }
        assert!((acc.value() - 1000.0).abs() < 1e-10);
    }

    #[test]
    fn binomial_triangle_exact_in_integer_range() {
        let tri = binomial_triangle(30);
        assert_eq!(tri[4][2], 6.0);
        assert_eq!(tri[10][5], 252.0);
        assert_eq!(tri[30][15], 155_117_520.0);
    }

    #[test]
    fn binomial_triangle_row_64_relative_error() {
        // C(64, 32) = 1832624140942590534 exactly; float triangle must stay
        // within ~1e-13 relative.
        let tri = binomial_triangle(64);
        let exact = 1_832_624_140_942_590_534u64 as f64;
        assert!(((tri[64][32] - exact) / exact).abs() < 1e-13);
    }
}

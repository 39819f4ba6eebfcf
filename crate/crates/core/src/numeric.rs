//! Small numerical helpers shared by the norm evaluators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
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

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `j^exponent` for an integer `j ≥ 1`, exactly 1 at `j = 1`.
pub fn int_pow(j: usize, exponent: f64) -> f64 {
    debug_assert!(j >= 1);
    if j == 1 || exponent == 0.0 {
        1.0
    } else {
        (exponent * (j as f64).ln()).exp()
    }
}

/// `i^s − (i−1)^s` for `i ≥ 1`, `s > 0`, without cancellation for large `i`.
pub fn power_increment(i: usize, s: f64) -> f64 {
    debug_assert!(i >= 1 && s > 0.0);
    if i == 1 {
        return 1.0;
    }
    let x = i as f64;
    // i^s (1 − (1 − 1/i)^s)
    -int_pow(i, s) * (s * (-1.0 / x).ln_1p()).exp_m1()
}

/// Independent ChaCha stream for `(seed, stream)`; used to give each restart
/// of a multi-start search its own reproducible generator.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}


/// `ln(e^x + e^y)`.
pub fn ln_add(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// A positive integer that may be far beyond `u64`, kept as its logarithm
/// (and exactly, when it fits).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BigIndex {
    pub ln: f64,
    pub exact: Option<u64>,
}

impl BigIndex {
    pub fn from_u64(n: u64) -> Self {
        debug_assert!(n >= 1);
        Self {
            ln: (n as f64).ln(),
            exact: Some(n),
        }
    }

    /// `2^k`.
    pub fn pow2(k: u32) -> Self {
        if k < 63 {
            Self::from_u64(1 << k)
        } else {
            Self {
                ln: k as f64 * std::f64::consts::LN_2,
                exact: None,
            }
        }
    }

    /// `2^k − 1`, for `k ≥ 1`.
    pub fn pow2_minus_one(k: u32) -> Self {
        debug_assert!(k >= 1);
        if k < 63 {
            Self::from_u64((1 << k) - 1)
        } else {
            Self {
                ln: k as f64 * std::f64::consts::LN_2 + (-(0.5f64.powi(k as i32))).ln_1p(),
                exact: None,
            }
        }
    }
}

/// Indices up to this bound are summed term by term in [`ln_power_sum`].
const DIRECT_SUM_LIMIT: u64 = 1 << 20;

/// `ln Σ_{j=a}^{b} j^β` for `1 ≤ a ≤ b` and `β > −1`.
///
/// Terms up to `2^20` are added directly; beyond that the sum is the
/// integral plus the first two Euler–Maclaurin corrections, whose omitted
/// remainder is of relative size `a^{−4}`.
pub fn ln_power_sum(beta: f64, a: BigIndex, b: BigIndex) -> f64 {
    debug_assert!(beta > -1.0 && a.ln <= b.ln);
    match (a.exact, b.exact) {
        (Some(lo), Some(hi)) if hi <= DIRECT_SUM_LIMIT => {
            let s: CompensatedSum = (lo..=hi).map(|j| int_pow(j as usize, beta)).collect();
            s.value().ln()
        }
        (Some(lo), _) if lo <= DIRECT_SUM_LIMIT => ln_add(
            ln_power_sum(beta, a, BigIndex::from_u64(DIRECT_SUM_LIMIT)),
            ln_power_sum(beta, BigIndex::from_u64(DIRECT_SUM_LIMIT + 1), b),
        ),
        _ => euler_maclaurin(beta, a.ln, b.ln),
    }
}

fn euler_maclaurin(beta: f64, ln_a: f64, ln_b: f64) -> f64 {
    if ln_a == ln_b {
        return beta * ln_a;
    }
    let s = beta + 1.0;
    let ln_int = s * ln_b + (-(s * (ln_a - ln_b)).exp_m1()).ln() - s.ln();
    let rel = |e: f64, ln_x: f64| (e * ln_x - ln_int).exp();
    let corr = 0.5 * (rel(beta, ln_a) + rel(beta, ln_b))
        + beta / 12.0 * (rel(beta - 1.0, ln_b) - rel(beta - 1.0, ln_a));
    ln_int + corr.ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn power_increment_matches_naive_for_small_i() {
        for i in 1..50 {
            for s in [0.25, 0.5, 1.0, 2.0, 3.5] {
                let naive = (i as f64).powf(s) - ((i - 1) as f64).powf(s);
                let got = power_increment(i, s);
                assert!((got - naive).abs() <= 1e-12 * naive.abs().max(1.0), "i={i} s={s}");
            }
        }
    }

    #[test]
    fn int_pow_is_exact_at_one() {
        assert_eq!(int_pow(1, -0.5), 1.0);
        assert_eq!(int_pow(7, 0.0), 1.0);
    }

    #[test]
    fn ln_add_basics() {
        assert!((ln_add(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(ln_add(3.0, f64::NEG_INFINITY), 3.0);
    }

    #[test]
    fn power_sums_agree_across_regimes() {
        for beta in [-0.5, 0.0, 1.0, 7.0] {
            // the EM branch against a direct sum just past the limit
            let a = DIRECT_SUM_LIMIT + 1;
            let b = a + 3_000_000;
            let direct: CompensatedSum = (a..=b).map(|j| int_pow(j as usize, beta)).collect();
            let em = euler_maclaurin(beta, (a as f64).ln(), (b as f64).ln());
            assert!((em - direct.value().ln()).abs() < 1e-13, "beta={beta}");
            // the split branch
            let lo = BigIndex::from_u64(1000);
            let hi = BigIndex::from_u64(DIRECT_SUM_LIMIT + 50);
            let direct: CompensatedSum = (1000..=DIRECT_SUM_LIMIT + 50).map(|j| int_pow(j as usize, beta)).collect();
            assert!((ln_power_sum(beta, lo, hi) - direct.value().ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn big_index_matches_exact_form() {
        let k = 62;
        let big = BigIndex {
            ln: k as f64 * std::f64::consts::LN_2 + (-(0.5f64.powi(k))).ln_1p(),
            exact: None,
        };
        assert!((big.ln - BigIndex::pow2_minus_one(62).ln).abs() < 1e-12);
        assert_eq!(BigIndex::pow2(70).exact, None);
    }
}

//! Dyadic step functions on `[0, 1]` and their Lorentz function-space norms.
//!
//! A level-`n` step function takes the value `coeffs[i−1]` on
//! `I_i = ((i−1)/2^n, i/2^n)`. Its decreasing rearrangement is the step
//! function of the sorted moduli, so
//!
//! ```text
//! ‖A‖_{L^{p,q}}^q = Σ_i (a_i*)^q ∫_{I_i} t^{q/p−1} dt
//!                 = (p/q) 2^{−nq/p} Σ_i (a_i*)^q (i^{q/p} − (i−1)^{q/p}),
//! ```
//!
//! evaluated through the antiderivative, never by quadrature. The
//! increments `i^s − (i−1)^s` use a cancellation-free form.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lorentz::{norm_of_sorted, NormValue};
use crate::numeric::{int_pow, power_increment, CompensatedSum};
use crate::seqspace::{sorted_moduli, Exponent, Exponents, Seq};

/// Largest level accepted by [`from_seq`] (2^20 coefficients).
pub const DEFAULT_MAX_LEVEL: u32 = 20;

/// A step function constant on each of the `2^level` dyadic intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicStep {
    level: u32,
    coeffs: Vec<f64>,
}

impl DyadicStep {
    pub fn new(level: u32, coeffs: Vec<f64>) -> Result<Self> {
        if level > 40 {
            return domain(format!("level {level} is not representable"));
        }
        if coeffs.len() != 1usize << level {
            return domain(format!(
                "level {level} needs {} coefficients, got {}",
                1usize << level,
                coeffs.len()
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return domain("step coefficients must be finite");
        }
        Ok(Self { level, coeffs })
    }

    pub fn zero(level: u32) -> Self {
        Self {
            level,
            coeffs: vec![0.0; 1usize << level],
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficients as a sequence indexed `1..=2^level`.
    pub fn to_seq(&self) -> Seq {
        Seq::from_finite(self.coeffs.clone())
    }

    /// Same function written at a finer level.
    pub fn refine(&self, level: u32) -> Result<Self> {
        if level < self.level {
            return domain(format!("cannot refine level {} to {level}", self.level));
        }
        let rep = 1usize << (level - self.level);
        let coeffs = self
            .coeffs
            .iter()
            .flat_map(|c| std::iter::repeat(*c).take(rep))
            .collect();
        Self::new(level, coeffs)
    }

    /// `self + alpha * other`; both at the same level.
    pub fn add_scaled(&self, alpha: f64, other: &DyadicStep) -> Result<Self> {
        if self.level != other.level {
            return domain("step functions live on different levels");
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Self::new(self.level, coeffs)
    }
}

/// The step function `A = Σ a_i χ_{I_i}` at level `n`, with the default level cap.
pub fn from_seq(a: &Seq, n: u32) -> Result<DyadicStep> {
    from_seq_capped(a, n, DEFAULT_MAX_LEVEL)
}

pub fn from_seq_capped(a: &Seq, n: u32, max_level: u32) -> Result<DyadicStep> {
    if n > max_level {
        return domain(format!("level {n} exceeds the cap {max_level}"));
    }
    let size = 1usize << n;
    if a.len() > size {
        return domain(format!(
            "support reaches index {} but level {n} has only {size} intervals",
            a.len()
        ));
    }
    let mut coeffs = a.values().to_vec();
    coeffs.resize(size, 0.0);
    DyadicStep::new(n, coeffs)
}

/// `‖A‖_{L^{p,q}(0,1)}` for `q < ∞`, in closed form.
pub fn fn_norm(a: &DyadicStep, e: Exponents) -> Result<NormValue> {
    let q = e.finite_q("fn_norm")?;
    Ok(NormValue::from_raw(fn_norm_sorted(
        &sorted_moduli(&a.coeffs),
        a.level,
        e.p(),
        q,
    )))
}

pub(crate) fn fn_norm_sorted(sorted: &[f64], level: u32, p: f64, q: f64) -> f64 {
    if sorted.is_empty() || sorted[0] == 0.0 {
        return 0.0;
    }
    let s = q / p;
    let scale = sorted[0];
    let mut acc = CompensatedSum::new();
    for (i, v) in sorted.iter().enumerate().rev() {
        if *v != 0.0 {
            acc.add(power_increment(i + 1, s) * (v / scale).powf(q));
        }
    }
    // (p/q)^{1/q} 2^{-n/p} a_1* (Σ ...)^{1/q}
    scale * (p / q).powf(1.0 / q) * 2f64.powf(-(level as f64) / p) * acc.value().powf(1.0 / q)
}

/// `‖A‖_{L^{p,∞}(0,1)} = max_i (i/2^n)^{1/p} a_i*`.
pub fn fn_norm_inf(a: &DyadicStep, p: f64) -> Result<NormValue> {
    if !(p.is_finite() && p > 0.0) {
        return domain(format!("p must be in (0, inf), got {p}"));
    }
    Ok(NormValue::from_raw(fn_norm_inf_sorted(
        &sorted_moduli(&a.coeffs),
        a.level,
        p,
    )))
}

pub(crate) fn fn_norm_inf_sorted(sorted: &[f64], level: u32, p: f64) -> f64 {
    let size = (1u64 << level) as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64 / size).powf(1.0 / p) * v)
        .fold(0.0, f64::max)
}

/// `‖A‖_{L^{p,q}(0,1)}` for any `q`, dispatching on `q = ∞`.
pub fn fn_norm_any(a: &DyadicStep, e: Exponents) -> NormValue {
    match e.q() {
        Exponent::Finite(q) => NormValue::from_raw(fn_norm_sorted(
            &sorted_moduli(&a.coeffs),
            a.level,
            e.p(),
            q,
        )),
        Exponent::Infinite => {
            NormValue::from_raw(fn_norm_inf_sorted(&sorted_moduli(&a.coeffs), a.level, e.p()))
        }
    }
}

/// `‖f‖_{L^{p,q}(0,1)}` for a simple function given as `(|value|, measure)`
/// pairs; the measures must sum to at most 1.
pub(crate) fn distribution_norm(pairs: &mut [(f64, f64)], p: f64, q: Exponent) -> f64 {
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let Some(&(top, _)) = pairs.first() else {
        return 0.0;
    };
    if top == 0.0 {
        return 0.0;
    }
    match q {
        Exponent::Infinite => {
            let mut t = 0.0;
            let mut best = 0.0f64;
            for &(v, m) in pairs.iter() {
                t += m;
                best = best.max(t.powf(1.0 / p) * v);
            }
            best
        }
        Exponent::Finite(q) => {
            let s = q / p;
            let mut t = 0.0;
            let mut acc = CompensatedSum::new();
            for &(v, m) in pairs.iter() {
                if v == 0.0 || m == 0.0 {
                    t += m;
                    continue;
                }
                let prev = t;
                t += m;
                // t^s − prev^s without cancellation
                let incr = -t.powf(s) * (s * (-(t - prev) / t).ln_1p()).exp_m1();
                acc.add(incr * (v / top).powf(q));
            }
            top * (p / q).powf(1.0 / q) * acc.value().powf(1.0 / q)
        }
    }
}

/// `min{(p/q)^{1/q}, 2^{1/q−1/p}}`, the published lower transfer constant.
///
/// Together with the upper constant 1 it brackets `2^{n/p}‖A‖ / ‖a‖` only
/// when `q ≥ p`; see [`transfer_bounds`] for constants valid for all
/// exponents.
pub fn transfer_lower_constant(p: f64, q: f64) -> f64 {
    (p / q).powf(1.0 / q).min(2f64.powf(1.0 / q - 1.0 / p))
}

/// `(k, K)` with `k ‖a‖_{ℓ^{p,q}} ≤ 2^{n/p} ‖A‖_{L^{p,q}} ≤ K ‖a‖_{ℓ^{p,q}}`
/// for every level `n` and every `a`.
///
/// With `β = q/p − 1`, the first interval contributes exactly
/// `(p/q) 2^{−nq/p}` and every later interval `I_i` carries
/// `∫_{I_i} t^β dt` between `2^{−n}(i/2^n)^β` and `2^{−β} 2^{−n}(i/2^n)^β`,
/// in an order fixed by the sign of `β`. Hence
/// `k = min{1, (p/q)^{1/q}, 2^{1/q−1/p}}` and
/// `K = max{1, (p/q)^{1/q}, 2^{1/q−1/p}}`. For `q ≥ p` these reduce to the
/// published pair (`K = 1`); for `q < p` it is `k = 1` instead.
pub fn transfer_bounds(p: f64, q: f64) -> (f64, f64) {
    let a = (p / q).powf(1.0 / q);
    let b = 2f64.powf(1.0 / q - 1.0 / p);
    (a.min(b).min(1.0), a.max(b).max(1.0))
}

/// Outcome of checking the two-sided transfer inequality between
/// `‖a‖_{ℓ^{p,q}}` and `2^{n/p} ‖A‖_{L^{p,q}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCheck {
    pub seq_norm: f64,
    /// `2^{n/p} ‖A‖_{L^{p,q}}`.
    pub scaled_fn_norm: f64,
    /// Published form: `c‖a‖ ≤ 2^{n/p}‖A‖ ≤ ‖a‖` with
    /// `c = min{(p/q)^{1/q}, 2^{1/q−1/p}}`.
    pub lower_constant: f64,
    /// `2^{n/p}‖A‖ − c‖a‖`.
    pub lower_slack: f64,
    /// `‖a‖ − 2^{n/p}‖A‖`.
    pub upper_slack: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Constants from [`transfer_bounds`], valid for all exponents.
    pub bounds: (f64, f64),
    /// `2^{n/p}‖A‖ − k‖a‖`.
    pub bounded_lower_slack: f64,
    /// `K‖a‖ − 2^{n/p}‖A‖`.
    pub bounded_upper_slack: f64,
    pub bounds_ok: bool,
}

/// Relative rounding allowance used by [`transfer_check`].
pub const TRANSFER_REL_TOL: f64 = 1e-12;

/// Evaluates both forms of the transfer inequality at level `n`.
pub fn transfer_check(a: &Seq, n: u32, e: Exponents) -> Result<TransferCheck> {
    let q = e.finite_q("transfer_check")?;
    let p = e.p();
    let step = from_seq(a, n)?;
    let sorted = sorted_moduli(a.values());
    let seq_norm = norm_of_sorted(&sorted, p, e.q());
    let scaled_fn_norm = 2f64.powf(n as f64 / p) * fn_norm(&step, e)?.value();
    let lower_constant = transfer_lower_constant(p, q);
    let lower_slack = scaled_fn_norm - lower_constant * seq_norm;
    let upper_slack = seq_norm - scaled_fn_norm;
    let bounds = transfer_bounds(p, q);
    let bounded_lower_slack = scaled_fn_norm - bounds.0 * seq_norm;
    let bounded_upper_slack = bounds.1 * seq_norm - scaled_fn_norm;
    let tol = TRANSFER_REL_TOL * seq_norm * bounds.1;
    Ok(TransferCheck {
        seq_norm,
        scaled_fn_norm,
        lower_constant,
        lower_slack,
        upper_slack,
        lower_ok: lower_slack >= -tol,
        upper_ok: upper_slack >= -tol,
        bounds,
        bounded_lower_slack,
        bounded_upper_slack,
        bounds_ok: bounded_lower_slack >= -tol && bounded_upper_slack >= -tol,
    })
}

/// `‖a‖_{ℓ^{p,∞}}` and `2^{n/p} ‖A‖_{L^{p,∞}}`, which coincide.
pub fn weak_transfer_pair(a: &Seq, n: u32, p: f64) -> Result<(f64, f64)> {
    let step = from_seq(a, n)?;
    let seq = norm_of_sorted(&sorted_moduli(a.values()), p, Exponent::Infinite);
    let fun = fn_norm_inf(&step, p)?.value();
    Ok((seq, int_pow(2, n as f64 / p) * fun))
}

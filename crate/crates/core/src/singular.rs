//! A desk-scale run of the gliding-hump construction showing that
//! `ℓ_{p,q} ↪ ℓ_{p,r}` is not an isomorphism on a block subspace.
//!
//! A subspace is given by a generator rule `k ↦ g_k` ([`BlockSubspaceSpec`]).
//! [`build_construction`] runs the induction: stage `k` picks a unit vector
//! `u_k` supported after `n_{k−1}`, splits it as `v_k = P_{n_k} u_k` plus a
//! small tail `w_k = R_{n_k} u_k`, fixes the next height bound `ε_{k+1}`
//! and extends the reference sequence `a`. Every condition the induction
//! promises is recorded and re-checked by [`ConstructionState::verify`].
//!
//! For `z_N = Σ_{k≤N} k^{−1/q} u_k` the `ℓ_{p,q}` norm grows like
//! `(A ln N − B)^{1/q}` while the `ℓ_{p,r}` norm stays bounded;
//! [`growth_curve`] tabulates both for a built state and
//! [`dyadic_chain_growth`] does so in log space for the plain dyadic block
//! chain, whose indices outgrow any dense representation.
//!
//! The height schedule `ε_{k+1} ≤ c_k^{1/q}` with
//! `c_k = min_{j≤n_k} 1/(k n_k j^{q/p−1})` forces the next block to be at
//! least about `k^{p/q} n_k^{max(1, p/q)}` long. For `q ≥ p` this is
//! geometric growth; for `q < p` the exponent of `n_k` is `p/q > 1` and the
//! indices grow like a tower, so only a handful of stages fit in memory.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::lorentz::{norm_of_sorted, quasi_triangle_constant};
use crate::numeric::{int_pow, ln_add, ln_power_sum, BigIndex, CompensatedSum};
use crate::seqspace::{sorted_moduli, Exponent, Exponents, Seq};

/// Largest index a dense construction may reach.
pub const MAX_DENSE_INDEX: usize = 10_000_000;

/// Largest number of stages for the log-space chain.
pub const MAX_CHAIN_STAGES: usize = 1 << 14;

/// Fraction of the binding bound used for `ε_{k+1}`.
pub const EPSILON_SAFETY: f64 = 0.9;

/// Slack for float comparisons in the recorded checks.
pub const CHECK_TOL: f64 = 1e-12;

/// Values on the contiguous index range `start..start+len` (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockVec {
    pub start: usize,
    pub values: Vec<f64>,
}

impl BlockVec {
    pub fn empty() -> Self {
        Self {
            start: 1,
            values: Vec::new(),
        }
    }

    /// Last index covered, or `start − 1` when empty.
    pub fn end(&self) -> usize {
        self.start + self.values.len() - 1
    }

    pub fn get(&self, j: usize) -> f64 {
        if j < self.start {
            0.0
        } else {
            self.values.get(j - self.start).copied().unwrap_or(0.0)
        }
    }

    pub fn to_seq(&self) -> Seq {
        let mut v = vec![0.0; self.start - 1];
        v.extend_from_slice(&self.values);
        Seq::from_finite(v)
    }

    pub fn norm(&self, p: f64, q: Exponent) -> f64 {
        norm_of_sorted(&sorted_moduli(&self.values), p, q)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_nonzero_abs(&self) -> Option<f64> {
        self.values
            .iter()
            .filter(|v| **v != 0.0)
            .map(|v| v.abs())
            .min_by(f64::total_cmp)
    }

    /// First and last indices carrying a nonzero value.
    pub fn support_range(&self) -> Option<(usize, usize)> {
        let first = self.values.iter().position(|v| *v != 0.0)?;
        let last = self.values.iter().rposition(|v| *v != 0.0)?;
        Some((self.start + first, self.start + last))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            start: self.start,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &BlockVec) -> Self {
        if self.values.is_empty() {
            return other.scaled(alpha);
        }
        if other.values.is_empty() {
            return self.clone();
        }
        let start = self.start.min(other.start);
        let end = self.end().max(other.end());
        let values = (start..=end).map(|j| self.get(j) + alpha * other.get(j)).collect();
        Self { start, values }
    }

    /// `P_m`: entries with index `≤ m`.
    pub fn head(&self, m: usize) -> Self {
        let keep = (m + 1).saturating_sub(self.start).min(self.values.len());
        Self {
            start: self.start,
            values: self.values[..keep].to_vec(),
        }
    }

    /// `R_m`: entries with index `> m`.
    pub fn tail(&self, m: usize) -> Self {
        let skip = (m + 1).saturating_sub(self.start).min(self.values.len());
        Self {
            start: self.start + skip,
            values: self.values[skip..].to_vec(),
        }
    }
}

/// A block-type subspace, described by its generators `g_1, g_2, …`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BlockSubspaceSpec {
    /// `g_k` is the indicator of `{2^{k−1}, …, 2^k − 1}`.
    DyadicFlat,
    /// `g_k(j) = ratio^{j − s}` for `s ≤ j < s + spread·s`, `s = 2^{k−1}`;
    /// consecutive generators overlap.
    GeometricTail { ratio: f64, spread: usize },
}

impl BlockSubspaceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::DyadicFlat => Ok(()),
            Self::GeometricTail { ratio, spread } => {
                if !(ratio > 0.0 && ratio < 1.0) || spread == 0 {
                    return validation(format!(
                        "geometric tail needs 0 < ratio < 1 and spread ≥ 1, got {ratio}, {spread}"
                    ));
                }
                Ok(())
            }
        }
    }

    /// Generators never overlap.
    pub fn is_disjoint(&self) -> bool {
        matches!(self, Self::DyadicFlat)
    }

    /// First index of `g_k`, or `None` past `usize`.
    pub fn start(&self, k: usize) -> Option<usize> {
        1usize.checked_shl(u32::try_from(k.checked_sub(1)?).ok()?)
    }

    /// Smallest `k` with `g_k` supported after `n`.
    pub fn first_after(&self, n: usize) -> usize {
        let mut k = 1;
        while self.start(k).is_some_and(|s| s <= n) {
            k += 1;
        }
        k
    }

    /// `g_k`, refusing anything that reaches past `max_index`.
    pub fn generator(&self, k: usize, max_index: usize) -> Option<BlockVec> {
        let s = self.start(k)?;
        let len = match *self {
            Self::DyadicFlat => s,
            Self::GeometricTail { spread, .. } => s.checked_mul(spread)?,
        };
        if s.checked_add(len)? - 1 > max_index {
            return None;
        }
        let values = match *self {
            Self::DyadicFlat => vec![1.0; len],
            Self::GeometricTail { ratio, .. } => (0..len).map(|i| ratio.powi(i as i32)).collect(),
        };
        Some(BlockVec { start: s, values })
    }
}

/// The fixed reference sequence `ã`: positive, nonincreasing, `‖ã‖_{p,q} ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ReferenceSeq {
    /// `ζ j^{−1/p} (1 + ln j)^{−γ}`.
    LogDecay { zeta: f64, p: f64, gamma: f64 },
    /// `ζ 2^{−j/p}`.
    Geometric { zeta: f64, p: f64 },
}

impl ReferenceSeq {
    /// `ζ j^{−1/p}(1 + ln j)^{−γ}` scaled to `‖ã‖_{p,q} = target`; needs `γq > 1`.
    pub fn log_decay(e: Exponents, gamma: f64, target: f64) -> Result<Self> {
        let q = e.finite_q("the reference sequence")?;
        if !(gamma * q > 1.0) {
            return validation(format!("need gamma·q > 1 for a finite norm, got {}", gamma * q));
        }
        check_target(target)?;
        Ok(Self::LogDecay {
            zeta: target / log_decay_sum(gamma * q).powf(1.0 / q),
            p: e.p(),
            gamma,
        })
    }

    /// `ζ 2^{−j/p}` scaled to `‖ã‖_{p,q} = target`.
    pub fn geometric(e: Exponents, target: f64) -> Result<Self> {
        let q = e.finite_q("the reference sequence")?;
        check_target(target)?;
        Ok(Self::Geometric {
            zeta: target / geometric_sum(e.p(), q).powf(1.0 / q),
            p: e.p(),
        })
    }

    pub fn at(&self, j: usize) -> f64 {
        let x = j as f64;
        match *self {
            Self::LogDecay { zeta, p, gamma } => zeta * x.powf(-1.0 / p) * (1.0 + x.ln()).powf(-gamma),
            Self::Geometric { zeta, p } => zeta * (-x / p * std::f64::consts::LN_2).exp(),
        }
    }

    /// `‖ã‖_{p,q}`; `NAN` when the series diverges.
    pub fn norm(&self, q: f64) -> f64 {
        match *self {
            Self::LogDecay { zeta, gamma, .. } if gamma * q > 1.0 => zeta * log_decay_sum(gamma * q).powf(1.0 / q),
            Self::LogDecay { .. } => f64::NAN,
            Self::Geometric { zeta, p } => zeta * geometric_sum(p, q).powf(1.0 / q),
        }
    }

    fn p(&self) -> f64 {
        match *self {
            Self::LogDecay { p, .. } | Self::Geometric { p, .. } => p,
        }
    }
}

/// `Σ_j j^{−1}(1 + ln j)^{−c}` for `c > 1`: a direct head plus an
/// Euler–Maclaurin tail.
fn log_decay_sum(c: f64) -> f64 {
    let f = |x: f64| 1.0 / (x * (1.0 + x.ln()).powf(c));
    const J: usize = 100_000;
    let head: CompensatedSum = (1..=J).map(|j| f(j as f64)).collect();
    let x = J as f64;
    let l = 1.0 + x.ln();
    let df = -(1.0 + c / l) / (x * x * l.powf(c));
    head.value() + l.powf(1.0 - c) / (c - 1.0) - f(x) / 2.0 - df / 12.0
}

/// `Σ_j j^{q/p−1} 2^{−jq/p}`.
fn geometric_sum(p: f64, q: f64) -> f64 {
    let mut sum = CompensatedSum::new();
    for j in 1usize.. {
        let term = int_pow(j, q / p - 1.0) * (-(j as f64) * q / p * std::f64::consts::LN_2).exp();
        sum.add(term);
        if term < 1e-18 * sum.value() && j as f64 > 4.0 * p / q {
            break;
        }
    }
    sum.value()
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target <= 1.0) {
        return validation(format!("reference norm must lie in (0, 1], got {target}"));
    }
    Ok(())
}

/// What one gliding-hump step must achieve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HumpTarget {
    /// `u` must vanish on `{1..n}`.
    pub n: usize,
    /// Lower bound for the cut index `m`.
    pub n_floor: usize,
    /// Bound for `|P_m u|`.
    pub epsilon: f64,
    /// Bound for `‖R_m u‖`; must lie in `(0, 1/T)`.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HumpStep {
    pub m: usize,
    pub u: BlockVec,
    pub v: BlockVec,
    pub w: BlockVec,
    /// Number of normalized generators summed into `u`.
    pub terms: usize,
}

fn hump_failure<T>(condition: impl Into<String>) -> Result<T> {
    Err(Error::Construction {
        stage: 0,
        condition: condition.into(),
    })
}

/// Smallest `m ≥ lo` with `‖R_m u‖ ≤ bound`, by bisection on the
/// nonincreasing tail norm.
fn minimal_cut(u: &BlockVec, lo: usize, bound: f64, p: f64, q: Exponent) -> usize {
    let hi = u.end().max(lo);
    if u.tail(lo).norm(p, q) <= bound {
        return lo;
    }
    let (mut bad, mut good) = (lo, hi);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if u.tail(mid).norm(p, q) <= bound {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Finds `m` and a unit `u` in the span of generators supported after `n`
/// with `m > 2n`, `m ≥ n_floor`, `|P_m u| ≤ ε`,
/// `1/T − δ ≤ ‖P_m u‖ ≤ 1` and `‖R_m u‖ ≤ δ`.
///
/// Disjoint specs take the first single normalized generator that is flat
/// enough. Otherwise normalized generators `u_1, u_2, …` are accumulated,
/// each cut at the first index where its tail drops below `δ/(2T)^i`, and
/// `u` is the normalized running sum once it satisfies every condition.
/// Each condition is re-checked before returning.
pub fn gliding_hump_step(
    spec: &BlockSubspaceSpec,
    e: Exponents,
    t: f64,
    target: HumpTarget,
    max_index: usize,
) -> Result<HumpStep> {
    spec.validate()?;
    let (p, q) = (e.p(), e.q());
    let HumpTarget {
        n,
        n_floor,
        epsilon,
        delta,
    } = target;
    if !(epsilon > 0.0) {
        return domain(format!("epsilon must be positive, got {epsilon}"));
    }
    if !(delta > 0.0 && delta < 1.0 / t) {
        return domain(format!("delta must lie in (0, 1/T) = (0, {}), got {delta}", 1.0 / t));
    }
    let lo = (2 * n + 1).max(n_floor).max(1);
    let exhausted = |k: usize| {
        hump_failure(format!(
            "generator g_{k} would pass the index cap {max_index} (n = {n}, epsilon = {epsilon:e}); \
             use fewer stages or exponents with q ≥ p"
        ))
    };

    let step = if spec.is_disjoint() {
        let mut k = spec.first_after(n);
        loop {
            let Some(g) = spec.generator(k, max_index) else {
                return exhausted(k);
            };
            let u = g.scaled(1.0 / g.norm(p, q));
            if u.max_abs() <= epsilon {
                let m = lo.max(u.end());
                break HumpStep {
                    m,
                    v: u.head(m),
                    w: u.tail(m),
                    u,
                    terms: 1,
                };
            }
            k += 1;
        }
    } else {
        let mut y = BlockVec::empty();
        let mut inner_n = n;
        let mut terms = 0;
        loop {
            let k = spec.first_after(inner_n);
            let Some(g) = spec.generator(k, max_index) else {
                return exhausted(k);
            };
            let ui = g.scaled(1.0 / g.norm(p, q));
            terms += 1;
            let bound = delta / (2.0 * t).powi(terms as i32);
            inner_n = minimal_cut(&ui, inner_n + 1, bound, p, q);
            y = y.add_scaled(1.0, &ui);
            let u = y.scaled(1.0 / y.norm(p, q));
            let m = minimal_cut(&u, lo, delta, p, q);
            let v = u.head(m);
            if v.max_abs() <= epsilon && v.norm(p, q) >= 1.0 / t - delta {
                break HumpStep {
                    m,
                    w: u.tail(m),
                    v,
                    u,
                    terms,
                };
            }
        }
    };

    let HumpStep { m, u, v, w, .. } = &step;
    let checks = [
        ((u.norm(p, q) - 1.0).abs() <= CHECK_TOL, "‖u‖ = 1"),
        (*m > 2 * n && *m >= n_floor, "m > 2n and m ≥ n_floor"),
        (
            v.support_range().map_or(true, |(a, b)| a > n && b <= *m),
            "supp P_m u ⊆ {n+1..m}",
        ),
        (v.max_abs() <= epsilon, "|P_m u| ≤ epsilon"),
        (
            v.norm(p, q) >= 1.0 / t - delta && v.norm(p, q) <= 1.0 + CHECK_TOL,
            "1/T − delta ≤ ‖P_m u‖ ≤ 1",
        ),
        (w.norm(p, q) <= delta, "‖R_m u‖ ≤ delta"),
    ];
    for (ok, what) in checks {
        if !ok {
            return hump_failure(format!("gliding hump step violates {what}"));
        }
    }
    Ok(step)
}

/// One stage of the induction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: usize,
    /// `n_k`.
    pub n: usize,
    /// `ε_k`, the height bound this stage had to meet.
    pub epsilon: f64,
    /// `ε_{k+1}`, chosen at the end of this stage.
    pub epsilon_next: f64,
    pub c: f64,
    /// Smallest nonzero `|v_k|`.
    pub b: f64,
    /// `λ_k`: the scale of `a` on `I_{k+1}`.
    pub lambda: f64,
    pub terms: usize,
    pub u: BlockVec,
    pub v: BlockVec,
    pub w: BlockVec,
}

/// Result of [`build_construction`]; serializes for replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionState {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub delta: f64,
    pub spec: BlockSubspaceSpec,
    pub a_tilde: ReferenceSeq,
    pub stages: Vec<StageRecord>,
    /// `a(1..=n_N)`.
    pub a: Vec<f64>,
}

/// A named condition evaluated on a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Stage the condition belongs to; 0 for global conditions.
    pub stage: usize,
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// `1/(k n_k max_{j≤n_k} j^{q/p−1})`.
pub fn c_bound(k: usize, n_k: usize, p: f64, q: f64) -> f64 {
    let beta = q / p - 1.0;
    let worst = if beta > 0.0 { int_pow(n_k, beta) } else { 1.0 };
    1.0 / (k as f64 * n_k as f64 * worst)
}

/// Runs the induction to stage `n_stages` with `δ = delta` and reference
/// sequence `a_tilde`, aborting on the first violated condition.
pub fn build_construction(
    spec: &BlockSubspaceSpec,
    e: Exponents,
    n_stages: usize,
    delta: f64,
    a_tilde: &ReferenceSeq,
) -> Result<ConstructionState> {
    build_construction_capped(spec, e, n_stages, delta, a_tilde, MAX_DENSE_INDEX)
}

pub fn build_construction_capped(
    spec: &BlockSubspaceSpec,
    e: Exponents,
    n_stages: usize,
    delta: f64,
    a_tilde: &ReferenceSeq,
    max_index: usize,
) -> Result<ConstructionState> {
    let q = e.finite_q("the construction")?;
    let p = e.p();
    spec.validate()?;
    let t = quasi_triangle_constant(e).t;
    if !(delta > 0.0 && delta < 1.0 / t) {
        return validation(format!("delta must lie in (0, 1/T) = (0, {}), got {delta}", 1.0 / t));
    }
    if a_tilde.p() != p {
        return validation("reference sequence was built for a different p");
    }
    let ref_norm = a_tilde.norm(q);
    if !(ref_norm > 0.0 && ref_norm <= 1.0 + CHECK_TOL) {
        return validation(format!("reference sequence norm {ref_norm} is not in (0, 1]"));
    }
    if n_stages == 0 {
        return domain("at least one stage is required");
    }

    let mut stages: Vec<StageRecord> = Vec::with_capacity(n_stages);
    let mut a: Vec<f64> = Vec::new();
    let mut n_prev = 0usize;
    let mut epsilon = 1.0;
    let mut lambda_prev = 1.0;
    for k in 1..=n_stages {
        let target = HumpTarget {
            n: n_prev,
            n_floor: 2 * n_prev + 1,
            epsilon,
            delta: delta / (2.0 * t).powi(k as i32),
        };
        let step = gliding_hump_step(spec, e, t, target, max_index).map_err(|err| match err {
            Error::Construction { condition, .. } => Error::Construction { stage: k, condition },
            other => other,
        })?;
        let n_k = step.m;
        a.extend((n_prev + 1..=n_k).map(|j| lambda_prev * a_tilde.at(j)));
        let Some(b) = step.v.min_nonzero_abs() else {
            return Err(Error::Construction {
                stage: k,
                condition: "v_k vanishes".into(),
            });
        };
        let c = c_bound(k, n_k, p, q);
        let a_nk = a[n_k - 1];
        let epsilon_next = EPSILON_SAFETY
            * b.min(c.powf(1.0 / q))
                .min(a_nk)
                .min((n_k as f64).powf(-1.0 / p));
        if !epsilon_next.is_normal() {
            return Err(Error::Construction {
                stage: k,
                condition: format!("epsilon_(k+1) underflows (a(n_k) = {a_nk:e}); the reference sequence decays too fast"),
            });
        }
        let next_ref = a_tilde.at(n_k + 1);
        let lambda = (a_nk / next_ref).min(b / next_ref).min(1.0);
        stages.push(StageRecord {
            k,
            n: n_k,
            epsilon,
            epsilon_next,
            c,
            b,
            lambda,
            terms: step.terms,
            u: step.u,
            v: step.v,
            w: step.w,
        });
        epsilon = epsilon_next;
        lambda_prev = lambda;
        n_prev = n_k;
    }
    let state = ConstructionState {
        p,
        q,
        t,
        delta,
        spec: *spec,
        a_tilde: *a_tilde,
        stages,
        a,
    };
    if let Some(bad) = state.verify().into_iter().find(|c| !c.ok) {
        return Err(Error::Construction {
            stage: bad.stage,
            condition: format!("{}: {}", bad.name, bad.detail),
        });
    }
    Ok(state)
}

impl ConstructionState {
    pub fn exponents(&self) -> Exponents {
        Exponents::new(self.p, self.q).expect("validated at construction")
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// `n_k`, with `n_0 = 0`.
    pub fn n(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            self.stages[k - 1].n
        }
    }

    /// `I_k = {n_{k−1}+1, …, n_k}`.
    pub fn interval(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        self.n(k - 1) + 1..=self.n(k)
    }

    pub fn a_at(&self, j: usize) -> f64 {
        self.a.get(j - 1).copied().unwrap_or(0.0)
    }

    /// `ṽ_k = |v_k| + a χ_{A_k}` on `I_k`, where `A_k` is the zero set of
    /// `v_k` in `I_k`.
    pub fn v_tilde(&self, k: usize) -> BlockVec {
        let v = &self.stages[k - 1].v;
        let range = self.interval(k);
        BlockVec {
            start: *range.start(),
            values: range
                .map(|j| {
                    let x = v.get(j);
                    if x == 0.0 {
                        self.a_at(j)
                    } else {
                        x.abs()
                    }
                })
                .collect(),
        }
    }

    /// Re-evaluates every recorded condition from the stored vectors.
    pub fn verify(&self) -> Vec<Check> {
        let (p, q) = (self.p, self.q);
        let qe = Exponent::Finite(q);
        let mut out = Vec::new();
        let mut push = |stage: usize, name: &str, ok: bool, detail: String| {
            out.push(Check {
                stage,
                name: name.to_string(),
                ok,
                detail,
            })
        };
        let n_total = self.stages.len();
        for (idx, s) in self.stages.iter().enumerate() {
            let k = idx + 1;
            let n_k = s.n;
            let n_prev = self.n(k - 1);
            let u_norm = s.u.norm(p, qe);
            push(k, "unit norm", (u_norm - 1.0).abs() <= CHECK_TOL, format!("‖u_k‖ = {u_norm}"));
            push(k, "index growth", n_k > 2 * n_prev, format!("n_k = {n_k}, n_(k-1) = {n_prev}"));
            let recon = s.v.add_scaled(1.0, &s.w);
            let split_ok = s.v.end() <= n_k
                && s.w.start > n_k
                && (s.u.start..=s.u.end()).all(|j| recon.get(j) == s.u.get(j));
            push(k, "head/tail split", split_ok, format!("cut at {n_k}"));
            let supp_ok = s.v.support_range().map_or(false, |(lo, hi)| lo > n_prev && hi <= n_k);
            push(k, "support in interval", supp_ok, format!("supp v_k = {:?}", s.v.support_range()));
            let b = s.v.min_nonzero_abs().unwrap_or(0.0);
            push(k, "b definition", b == s.b, format!("b_k = {b}"));
            let c = c_bound(k, n_k, p, q);
            push(k, "c definition", c == s.c, format!("c_k = {c}"));
            let a_nk = self.a_at(n_k);
            let cap = b.min(c.powf(1.0 / q)).min(a_nk);
            push(
                k,
                "next epsilon below b, c^(1/q), a(n_k)",
                s.epsilon_next <= cap && s.epsilon_next > 0.0,
                format!("epsilon_(k+1) = {:e}, bound = {cap:e}", s.epsilon_next),
            );
            let scale = s.epsilon_next * (n_k as f64).powf(1.0 / p);
            push(k, "next epsilon scale", scale <= 1.0, format!("epsilon_(k+1) n_k^(1/p) = {scale}"));
            let expected_eps = if k == 1 { 1.0 } else { self.stages[idx - 1].epsilon_next };
            push(
                k,
                "v bounded by epsilon",
                s.v.max_abs() <= s.epsilon && s.epsilon == expected_eps,
                format!("max |v_k| = {:e}, epsilon_k = {:e}", s.v.max_abs(), s.epsilon),
            );
            let lambda_prev = if k == 1 { 1.0 } else { self.stages[idx - 1].lambda };
            let a_ok = self
                .interval(k)
                .all(|j| self.a_at(j) == lambda_prev * self.a_tilde.at(j) && self.a_at(j) <= self.a_tilde.at(j));
            push(k, "a below reference", a_ok && lambda_prev <= 1.0, format!("lambda_(k-1) = {lambda_prev}"));
            if k < n_total {
                let a_next = self.a_at(n_k + 1);
                push(k, "a(n_k + 1) ≤ b_k", a_next <= b, format!("a(n_k+1) = {a_next:e}, b_k = {b:e}"));
            }
            let v_norm = s.v.norm(p, qe);
            let floor = 1.0 / self.t - self.delta;
            push(
                k,
                "v norm window",
                v_norm >= floor && v_norm <= 1.0 + CHECK_TOL,
                format!("‖v_k‖ = {v_norm}, lower bound {floor}"),
            );
            let w_norm = s.w.norm(p, qe);
            let w_cap = self.delta / (2.0 * self.t).powi(k as i32);
            push(k, "w norm", w_norm <= w_cap, format!("‖w_k‖ = {w_norm:e}, bound {w_cap:e}"));
        }

        let positive = self.a.iter().all(|x| *x > 0.0);
        let monotone = self.a.windows(2).all(|w| w[1] <= w[0]);
        push(0, "a positive and nonincreasing", positive && monotone, format!("{} entries", self.a.len()));

        for k in 1..n_total {
            let lo = self.v_tilde(k).values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = self.v_tilde(k + 1).values.iter().copied().fold(0.0, f64::max);
            let wk = (k as f64).powf(-1.0 / q);
            let wk1 = ((k + 1) as f64).powf(-1.0 / q);
            push(
                k,
                "comparison chain",
                lo >= hi && wk * lo >= wk1 * hi - CHECK_TOL,
                format!("min ṽ_k = {lo:e}, max ṽ_(k+1) = {hi:e}"),
            );
        }

        let weighted = self.weighted_v_tilde();
        let mut global = weighted.clone();
        global.sort_by(|x, y| y.total_cmp(x));
        let mut blockwise = Vec::with_capacity(weighted.len());
        for k in 1..=n_total {
            let range = self.interval(k);
            let mut block = weighted[*range.start() - 1..*range.end()].to_vec();
            block.sort_by(|x, y| y.total_cmp(x));
            blockwise.extend(block);
        }
        push(
            0,
            "rearrangement identity",
            global == blockwise,
            format!("{} entries compared", global.len()),
        );
        out
    }

    /// `Σ_k k^{−1/q} ṽ_k` on `{1..n_N}`.
    fn weighted_v_tilde(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n(self.n_stages()));
        for k in 1..=self.n_stages() {
            let wk = (k as f64).powf(-1.0 / self.q);
            x.extend(self.v_tilde(k).values.iter().map(|v| wk * v));
        }
        x
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Validation(format!("bad construction state: {e}")))
    }
}

/// One row of a growth table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    pub norm_q: f64,
    pub norm_r: f64,
}

/// Least-squares fit `y ≈ A ln N − B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub a: f64,
    pub b: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub p: f64,
    pub q: f64,
    pub r: Exponent,
    pub rows: Vec<GrowthRow>,
    /// Fit of `‖z_N‖_{p,q}^q` against `ln N` over rows with `N ≥ fit_from`.
    pub fit: Option<LogFit>,
    pub fit_from: usize,
}

impl GrowthTable {
    /// `max/min` of `‖z_N‖_{p,r}` over rows with `N ≥ from`.
    pub fn r_spread(&self, from: usize) -> Option<f64> {
        let vals: Vec<f64> = self.rows.iter().filter(|r| r.n >= from).map(|r| r.norm_r).collect();
        if vals.is_empty() {
            return None;
        }
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max / min)
    }
}

/// `y ≈ A x − B` by ordinary least squares; `None` for fewer than two
/// distinct `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LogFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (slope * a + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LogFit {
        a: slope,
        b: -intercept,
        r2,
        points: n,
    })
}

fn finish_table(p: f64, q: f64, r: Exponent, rows: Vec<GrowthRow>, fit_from: usize) -> GrowthTable {
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|row| row.n >= fit_from)
        .map(|row| ((row.n as f64).ln(), row.norm_q.powf(q)))
        .unzip();
    GrowthTable {
        p,
        q,
        r,
        fit: fit_line(&x, &y),
        rows,
        fit_from,
    }
}

fn check_n_list(n_list: &[usize], max: usize) -> Result<()> {
    if n_list.is_empty() {
        return domain("no N values requested");
    }
    if let Some(bad) = n_list.iter().find(|n| **n == 0 || **n > max) {
        return domain(format!("N = {bad} is outside 1..={max}"));
    }
    Ok(())
}

/// `‖z_N‖_{p,q}` and `‖z_N‖_{p,r}` for a built state, `z_N = Σ_{k≤N} k^{−1/q} u_k`.
pub fn growth_curve(state: &ConstructionState, r: Exponent, n_list: &[usize], fit_from: usize) -> Result<GrowthTable> {
    check_n_list(n_list, state.n_stages())?;
    let qe = Exponent::Finite(state.q);
    if qe >= r {
        return domain(format!("need q < r, got q={}, r={r}", state.q));
    }
    Exponents::with(state.p, r)?;
    let len = state.stages.iter().map(|s| s.u.end()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut z = vec![0.0; len];
        for s in &state.stages[..n] {
            let wk = (s.k as f64).powf(-1.0 / state.q);
            for (i, v) in s.u.values.iter().enumerate() {
                z[s.u.start - 1 + i] += wk * v;
            }
        }
        let sorted = sorted_moduli(&z);
        rows.push(GrowthRow {
            n,
            norm_q: norm_of_sorted(&sorted, state.p, qe),
            norm_r: norm_of_sorted(&sorted, state.p, r),
        });
    }
    Ok(finish_table(state.p, state.q, r, rows, fit_from))
}

/// Growth table for the chain `u_k = g_k/‖g_k‖_{p,q}` of normalized dyadic
/// flat blocks, `g_k = χ_{{2^{k−1}..2^k−1}}`.
///
/// Block `k` of `z_N` carries the constant `k^{−1/q}/‖χ_{{1..2^{k−1}}}‖_{p,q}`.
/// These constants decrease in `k` (checked), so `z_N` is its own
/// rearrangement and
///
/// ```text
/// ‖z_N‖_{p,s}^s = Σ_{k≤N} k^{−s/q} ‖χ_{{1..2^{k−1}}}‖_{p,q}^{−s} Σ_{j=2^{k−1}}^{2^k−1} j^{s/p−1}.
/// ```
///
/// All power sums are taken in log space, so `N` may reach
/// [`MAX_CHAIN_STAGES`] with indices near `2^N`.
pub fn dyadic_chain_growth(e: Exponents, r: Exponent, n_list: &[usize], fit_from: usize) -> Result<GrowthTable> {
    let q = e.finite_q("the growth curve")?;
    let p = e.p();
    Exponents::with(p, r)?;
    if Exponent::Finite(q) >= r {
        return domain(format!("need q < r, got q={q}, r={r}"));
    }
    check_n_list(n_list, MAX_CHAIN_STAGES)?;
    let n_max = *n_list.iter().max().expect("nonempty");

    let beta_q = q / p - 1.0;
    let beta_r = r.finite().map(|r| r / p - 1.0);
    let mut ln_prefix_q = f64::NEG_INFINITY; // ln Σ_{j<2^{k−1}} j^{β_q}
    let mut ln_heights = Vec::with_capacity(n_max);
    let mut q_terms = Vec::with_capacity(n_max);
    let mut r_terms = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        let lo = BigIndex::pow2(k as u32 - 1);
        let hi = BigIndex::pow2_minus_one(k as u32);
        let ln_block_q = ln_power_sum(beta_q, lo, hi);
        // ‖χ_{1..2^{k−1}}‖^q = Σ_{j<2^{k−1}} j^β + (2^{k−1})^β
        let ln_unit = ln_add(ln_prefix_q, beta_q * lo.ln);
        let ln_h = -(ln_unit) / q - (k as f64).ln() / q;
        ln_heights.push(ln_h);
        q_terms.push((q * ln_h + ln_block_q).exp());
        r_terms.push(match (r, beta_r) {
            (Exponent::Finite(rv), Some(br)) => (rv * ln_h + ln_power_sum(br, lo, hi)).exp(),
            _ => (ln_h + hi.ln / p).exp(),
        });
        ln_prefix_q = ln_add(ln_prefix_q, ln_block_q);
    }
    if ln_heights.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Construction {
            stage: 0,
            condition: "block heights of z_N are not decreasing".into(),
        });
    }

    let mut sum_q = CompensatedSum::new();
    let mut sum_r = CompensatedSum::new();
    let mut max_r = 0.0f64;
    let mut cumulative = Vec::with_capacity(n_max);
    for k in 0..n_max {
        sum_q.add(q_terms[k]);
        sum_r.add(r_terms[k]);
        max_r = max_r.max(r_terms[k]);
        let norm_r = match r {
            Exponent::Finite(rv) => sum_r.value().powf(1.0 / rv),
            Exponent::Infinite => max_r,
        };
        cumulative.push((sum_q.value().powf(1.0 / q), norm_r));
    }
    let rows = n_list
        .iter()
        .map(|&n| GrowthRow {
            n,
            norm_q: cumulative[n - 1].0,
            norm_r: cumulative[n - 1].1,
        })
        .collect();
    Ok(finish_table(p, q, r, rows, fit_from))
}

/// `1, 2, 4, …` up to `n_max`, with `n_max` itself appended.
pub fn default_n_list(n_max: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|n| *n <= n_max)
        .collect();
    if out.last() != Some(&n_max) && n_max > 0 {
        out.push(n_max);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(p: f64, q: f64) -> Exponents {
        Exponents::new(p, q).unwrap()
    }

    #[test]
    fn block_vec_projections() {
        let b = BlockVec {
            start: 4,
            values: vec![1.0, 0.0, -2.0, 3.0],
        };
        assert_eq!(b.end(), 7);
        assert_eq!(b.head(5).values, vec![1.0, 0.0]);
        assert_eq!(b.tail(5).start, 6);
        assert_eq!(b.tail(5).values, vec![-2.0, 3.0]);
        assert_eq!(b.head(2).values.len(), 0);
        assert_eq!(b.tail(10).values.len(), 0);
        assert_eq!(b.head(5).add_scaled(1.0, &b.tail(5)), b);
        assert_eq!(b.support_range(), Some((4, 7)));
        assert_eq!(b.min_nonzero_abs(), Some(1.0));
        assert_eq!(b.to_seq().at(6), -2.0);
    }

    #[test]
    fn dyadic_generators() {
        let s = BlockSubspaceSpec::DyadicFlat;
        let g = s.generator(3, 100).unwrap();
        assert_eq!((g.start, g.end()), (4, 7));
        assert_eq!(s.first_after(0), 1);
        assert_eq!(s.first_after(3), 3);
        assert_eq!(s.first_after(4), 4);
        assert!(s.generator(8, 100).is_none());
    }

    #[test]
    fn disjoint_step_has_no_tail() {
        let e = ex(2.0, 1.0);
        let t = quasi_triangle_constant(e).t;
        let target = HumpTarget {
            n: 3,
            n_floor: 7,
            epsilon: 0.3,
            delta: 0.1,
        };
        let step = gliding_hump_step(&BlockSubspaceSpec::DyadicFlat, e, t, target, 1 << 20).unwrap();
        assert!(step.w.values.iter().all(|v| *v == 0.0) || step.w.values.is_empty());
        assert!((step.u.norm(2.0, Exponent::Finite(1.0)) - 1.0).abs() < 1e-12);
        assert!(step.v.max_abs() <= 0.3 && step.m >= 7);
    }

    #[test]
    fn geometric_tail_step_uses_minimal_cut() {
        let e = ex(1.0, 2.0);
        let t = quasi_triangle_constant(e).t;
        let spec = BlockSubspaceSpec::GeometricTail {
            ratio: 0.97,
            spread: 3,
        };
        let delta = 0.01;
        let target = HumpTarget {
            n: 2,
            n_floor: 5,
            epsilon: 0.5,
            delta,
        };
        let step = gliding_hump_step(&spec, e, t, target, 1 << 16).unwrap();
        let qe = Exponent::Finite(2.0);
        assert!(step.w.norm(1.0, qe) <= delta);
        assert!(step.u.tail(step.m - 1).norm(1.0, qe) > delta || step.m == 5);
        assert!(step.v.support_range().unwrap().0 > 2);
    }

    #[test]
    fn hump_step_rejects_bad_delta() {
        let e = ex(2.0, 1.0);
        let t = quasi_triangle_constant(e).t;
        let target = HumpTarget {
            n: 0,
            n_floor: 1,
            epsilon: 1.0,
            delta: 1.0 / t,
        };
        assert!(matches!(
            gliding_hump_step(&BlockSubspaceSpec::DyadicFlat, e, t, target, 100),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reference_sequences_have_requested_norm() {
        let e = ex(2.0, 1.0);
        let a = ReferenceSeq::log_decay(e, 2.0, 0.5).unwrap();
        assert!((a.norm(1.0) - 0.5).abs() < 1e-14);
        // the remainder past J is 1/(1 + ln J) up to lower-order terms
        let j = 1_000_000usize;
        let head: CompensatedSum = (1..=j).map(|i| int_pow(i, -0.5) * a.at(i)).collect();
        let zeta = match a {
            ReferenceSeq::LogDecay { zeta, .. } => zeta,
            _ => unreachable!(),
        };
        let rest = zeta / (1.0 + (j as f64).ln());
        assert!((head.value() + rest - 0.5).abs() < 1e-6);
        assert!((2..j).all(|i| a.at(i) <= a.at(i - 1)));
        let g = ReferenceSeq::geometric(e, 0.5).unwrap();
        let norm: CompensatedSum = (1..=400usize).map(|j| int_pow(j, -0.5) * g.at(j)).collect();
        assert!((norm.value() - 0.5).abs() < 1e-14);
        assert!(ReferenceSeq::log_decay(e, 0.5, 0.5).is_err());
    }

    #[test]
    fn dyadic_chain_matches_dense_evaluation() {
        let e = ex(2.0, 1.0);
        for r in [Exponent::Finite(2.0), Exponent::Infinite] {
            let n_list = [1, 2, 5, 9, 14];
            let table = dyadic_chain_growth(e, r, &n_list, 1).unwrap();
            for row in &table.rows {
                let mut z = vec![0.0; (1 << row.n) - 1];
                for k in 1..=row.n {
                    let g = BlockSubspaceSpec::DyadicFlat.generator(k, usize::MAX).unwrap();
                    let u = g.scaled((k as f64).powf(-1.0) / g.norm(2.0, Exponent::Finite(1.0)));
                    for j in u.start..=u.end() {
                        z[j - 1] += u.get(j);
                    }
                }
                let sorted = sorted_moduli(&z);
                let nq = norm_of_sorted(&sorted, 2.0, Exponent::Finite(1.0));
                let nr = norm_of_sorted(&sorted, 2.0, r);
                assert!((row.norm_q - nq).abs() <= 1e-12 * nq, "N={} {} vs {nq}", row.n, row.norm_q);
                assert!((row.norm_r - nr).abs() <= 1e-12 * nr);
            }
        }
    }

    #[test]
    fn first_partial_sum_is_normalized() {
        let table = dyadic_chain_growth(ex(2.0, 1.0), Exponent::Finite(2.0), &[1], 1).unwrap();
        assert!((table.rows[0].norm_q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let x: Vec<f64> = (1..10).map(|v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 3.0).collect();
        let fit = fit_line(&x, &y).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-12 && (fit.b - 3.0).abs() < 1e-12 && fit.r2 > 0.999_999);
    }

    #[test]
    fn default_list() {
        assert_eq!(default_n_list(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(default_n_list(8), vec![1, 2, 4, 8]);
    }

    fn build(p: f64, q: f64, stages: usize) -> Result<ConstructionState> {
        let e = ex(p, q);
        let t = quasi_triangle_constant(e).t;
        let a = ReferenceSeq::log_decay(e, 2.0 / q, 0.5)?;
        build_construction(&BlockSubspaceSpec::DyadicFlat, e, stages, 0.25 / t, &a)
    }

    #[test]
    fn construction_reaches_eight_stages() {
        let state = build(0.5, 4.0, 8).unwrap();
        assert_eq!(state.n_stages(), 8);
        assert!(state.verify().iter().all(|c| c.ok));
        let ns: Vec<usize> = state.stages.iter().map(|s| s.n).collect();
        assert!(ns.windows(2).all(|w| w[1] > 2 * w[0]), "{ns:?}");
        let names: std::collections::BTreeSet<_> = state.verify().into_iter().map(|c| c.name).collect();
        assert!(names.contains("rearrangement identity") && names.contains("comparison chain"));
    }

    #[test]
    fn state_survives_json() {
        let state = build(0.5, 4.0, 4).unwrap();
        let back = ConstructionState::from_json(&state.to_json()).unwrap();
        assert_eq!(back, state);
        assert!(back.verify().iter().all(|c| c.ok));
    }

    #[test]
    fn tampered_state_fails_verification() {
        let mut state = build(0.5, 4.0, 4).unwrap();
        state.stages[2].v.values[0] *= 4.0;
        let bad: Vec<_> = state.verify().into_iter().filter(|c| !c.ok).map(|c| c.name).collect();
        assert!(bad.iter().any(|n| n == "v bounded by epsilon" || n == "head/tail split"), "{bad:?}");
    }

    #[test]
    fn tower_growth_hits_the_index_cap() {
        match build(2.0, 1.0, 8) {
            Err(Error::Construction { stage, condition }) => {
                assert!(stage >= 2 && stage <= 8, "{stage}");
                assert!(condition.contains("index cap"), "{condition}");
            }
            other => panic!("expected a construction error, got {other:?}"),
        }
    }

    #[test]
    fn geometric_reference_fails_early() {
        let e = ex(0.5, 4.0);
        let t = quasi_triangle_constant(e).t;
        let a = ReferenceSeq::geometric(e, 0.5).unwrap();
        assert!(matches!(
            build_construction(&BlockSubspaceSpec::DyadicFlat, e, 8, 0.25 / t, &a),
            Err(Error::Construction { .. })
        ));
    }

    #[test]
    fn construction_growth_is_logarithmic_in_q_and_flat_in_r() {
        let state = build(0.5, 4.0, 8).unwrap();
        let table = growth_curve(&state, Exponent::Finite(8.0), &[1, 2, 4, 8], 1).unwrap();
        assert!((table.rows[0].norm_q - 1.0).abs() < 1e-12);
        assert!(table.rows.windows(2).all(|w| w[1].norm_q > w[0].norm_q));
        let (r4, r8) = (table.rows[2], table.rows[3]);
        assert!(r8.norm_r - r4.norm_r < r8.norm_q - r4.norm_q);
        assert!(r8.norm_q / r8.norm_r > r4.norm_q / r4.norm_r);
    }
}

//! Lorentz quasi-norms `‖·‖_{p,q}` on sequences and the constants that
//! relate them.
//!
//! For `q < ∞` the norm is `(Σ_j j^{q/p−1} u*(j)^q)^{1/q}`; for `q = ∞` it
//! is `max_j j^{1/p} u*(j)`. The sum is accumulated with Neumaier
//! compensation from the last rearranged entry to the first (descending
//! `j`), after dividing every entry by `u*(1)` so that large exponents do
//! not overflow. The `q = ∞` case is an exact maximum over finitely many
//! terms.
//!
//! # Derived constants
//!
//! None of the constants below has a closed form in the literature this
//! crate follows; each is derived here and tested against random search.
//!
//! * **Weak-type constant** `C(p,q) = max(1, q/p)^{1/q}` (and `1` for
//!   `q = ∞`), giving `n^{1/p} u*(n) ≤ C(p,q) ‖u‖_{p,q}`. From
//!   `‖u‖^q ≥ u*(n)^q Σ_{j≤n} j^{q/p−1}` and
//!   `Σ_{j≤n} j^{q/p−1} ≥ min(1, p/q) n^{q/p}`.
//! * **Embedding bound** `D(p,q,r) = C(p,q)^{1−q/r}` (`C(p,q)` for
//!   `r = ∞`), giving `‖u‖_{p,r} ≤ D ‖u‖_{p,q}` for `q < r`. From
//!   `j^{r/p−1}u*(j)^r = j^{q/p−1}u*(j)^q · (j^{1/p}u*(j))^{r−q}` and the
//!   weak-type bound.
//! * **Quasi-triangle constant** `T(p,q) = c^{1/q} · max(1, 2^{1/q−1})` with
//!   `c = 2^{q/p}` when `q ≥ p` and `c = 1 + 2^{q/p−1}` otherwise;
//!   `T(p,∞) = 2^{1/p}`. Split the sum over odd and even `j`, use
//!   `(u+v)*(2k−1), (u+v)*(2k) ≤ u*(k)+v*(k)`, bound
//!   `(2k−1)^β + (2k)^β ≤ c k^β`, then apply Minkowski (`q ≥ 1`) or the
//!   `q`-triangle inequality (`q < 1`) in weighted `ℓ^q`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::numeric::{int_pow, stream_rng, CompensatedSum};
use crate::seqspace::{project_tail, sorted_moduli, Exponent, Exponents, Seq};

/// A nonnegative quasi-norm value.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct NormValue(f64);

impl NormValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub(crate) fn from_raw(v: f64) -> Self {
        debug_assert!(v >= 0.0);
        NormValue(v)
    }
}

impl From<NormValue> for f64 {
    fn from(n: NormValue) -> f64 {
        n.0
    }
}

/// Lorentz quasi-norm of a list of moduli already sorted nonincreasing.
///
/// Zero entries may be present only at the end.
pub(crate) fn norm_of_sorted(sorted: &[f64], p: f64, q: Exponent) -> f64 {
    let len = sorted.iter().rposition(|v| *v != 0.0).map_or(0, |i| i + 1);
    let sorted = &sorted[..len];
    if sorted.is_empty() {
        return 0.0;
    }
    match q {
        Exponent::Infinite => sorted
            .iter()
            .enumerate()
            .map(|(i, v)| int_pow(i + 1, 1.0 / p) * v)
            .fold(0.0, f64::max),
        Exponent::Finite(q) => {
            let scale = sorted[0];
            let beta = q / p - 1.0;
            let mut acc = CompensatedSum::new();
            for (i, v) in sorted.iter().enumerate().rev() {
                acc.add(int_pow(i + 1, beta) * (v / scale).powf(q));
            }
            scale * acc.value().powf(1.0 / q)
        }
    }
}

/// `‖u‖_{p,q}`.
pub fn quasi_norm(u: &Seq, e: Exponents) -> NormValue {
    NormValue(norm_of_sorted(&sorted_moduli(u.values()), e.p(), e.q()))
}

/// `Σ_{j=1}^n j^{q/p−1} / ((p/q) n^{q/p})`; tends to 1 as `n → ∞`.
pub fn partial_sum_ratio(n: usize, e: Exponents) -> Result<f64> {
    let q = e.finite_q("partial_sum_ratio")?;
    if n == 0 {
        return domain("partial_sum_ratio requires n >= 1");
    }
    let p = e.p();
    let beta = q / p - 1.0;
    let sum: CompensatedSum = (1..=n).rev().map(|j| int_pow(j, beta)).collect();
    Ok(sum.value() / ((p / q) * int_pow(n, q / p)))
}

/// `C(p,q)` with `n^{1/p} u*(n) ≤ C(p,q) ‖u‖_{p,q}` for every `n` and `u`.
pub fn weak_type_constant(e: Exponents) -> f64 {
    match e.q() {
        Exponent::Infinite => 1.0,
        Exponent::Finite(q) => (q / e.p()).max(1.0).powf(1.0 / q),
    }
}

/// Where a quasi-triangle constant came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// A proven upper bound.
    Analytic,
    /// A witness from random search: a lower bound on the best constant.
    Empirical {
        seed: u64,
        trials: usize,
        /// Largest `‖u+v‖/(‖u‖+‖v‖)` seen; may be below 1.
        witness_ratio: f64,
        witness: (Seq, Seq),
    },
}

/// A constant `T ≥ 1` in `‖u+v‖ ≤ T(‖u‖+‖v‖)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiConstant {
    pub t: f64,
    pub provenance: Provenance,
}

/// Proven quasi-triangle constant `T(p,q)` (see the module docs).
pub fn quasi_triangle_constant(e: Exponents) -> QuasiConstant {
    let p = e.p();
    let t = match e.q() {
        Exponent::Infinite => 2f64.powf(1.0 / p),
        Exponent::Finite(q) => {
            let beta = q / p - 1.0;
            let c = if beta >= 0.0 {
                2f64.powf(beta + 1.0)
            } else {
                1.0 + 2f64.powf(beta)
            };
            c.powf(1.0 / q) * 2f64.powf(1.0 / q - 1.0).max(1.0)
        }
    };
    QuasiConstant {
        t,
        provenance: Provenance::Analytic,
    }
}

fn random_values(rng: &mut ChaCha8Rng, len: usize, density: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            if rng.gen::<f64>() < density {
                let mag = (rng.gen_range(-3.0..1.0f64)).exp();
                if rng.gen::<bool>() {
                    mag
                } else {
                    -mag
                }
            } else {
                0.0
            }
        })
        .collect()
}

/// A random pair drawn from a mix of dense, sparse, disjoint and flat shapes.
pub(crate) fn random_pair(rng: &mut ChaCha8Rng, max_len: usize) -> (Seq, Seq) {
    let len = rng.gen_range(1..=max_len);
    match rng.gen_range(0..4) {
        0 => (
            Seq::from_finite(random_values(rng, len, 1.0)),
            Seq::from_finite(random_values(rng, len, 1.0)),
        ),
        1 => {
            let d = rng.gen_range(0.05..0.6);
            (
                Seq::from_finite(random_values(rng, len, d)),
                Seq::from_finite(random_values(rng, len, d)),
            )
        }
        2 => {
            // disjoint supports
            let base = random_values(rng, len, 1.0);
            let mask: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
            let u = base.iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 });
            let v = base.iter().zip(&mask).map(|(v, m)| if *m { 0.0 } else { *v });
            (Seq::from_finite(u.collect()), Seq::from_finite(v.collect()))
        }
        _ => {
            // flat blocks at random offsets
            let h1 = rng.gen_range(0.1..2.0);
            let h2 = rng.gen_range(0.1..2.0);
            let a = rng.gen_range(0..len);
            let b = rng.gen_range(0..len);
            let mut u = vec![0.0; len];
            let mut v = vec![0.0; len];
            u[a..].iter_mut().for_each(|x| *x = h1);
            v[..=b].iter_mut().for_each(|x| *x = h2);
            (Seq::from_finite(u), Seq::from_finite(v))
        }
    }
}

/// Seeded random search for a large `‖u+v‖/(‖u‖+‖v‖)`.
///
/// The returned `t` is `max(1, witness)`: a lower bound on the best
/// quasi-triangle constant, never an upper bound.
pub fn empirical_quasi_triangle(e: Exponents, trials: usize, seed: u64) -> QuasiConstant {
    let mut rng = stream_rng(seed, 0);
    let mut best = (f64::NEG_INFINITY, Seq::zero(), Seq::zero());
    let mut consider = |u: Seq, v: Seq| {
        let denom = quasi_norm(&u, e).value() + quasi_norm(&v, e).value();
        if denom > 0.0 {
            let ratio = quasi_norm(&u.add(&v), e).value() / denom;
            if ratio > best.0 {
                best = (ratio, u, v);
            }
        }
    };
    consider(Seq::unit(1), Seq::unit(2));
    for _ in 0..trials {
        let (u, v) = random_pair(&mut rng, 24);
        consider(u, v);
    }
    let (witness_ratio, u, v) = best;
    QuasiConstant {
        t: witness_ratio.max(1.0),
        provenance: Provenance::Empirical {
            seed,
            trials,
            witness_ratio,
            witness: (u, v),
        },
    }
}

/// Proven bound `D` in `‖u‖_{p,r} ≤ D ‖u‖_{p,q}` for `q < r`.
pub fn analytic_embedding_bound(p: f64, q: Exponent, r: Exponent) -> Result<f64> {
    check_embedding_order(q, r)?;
    let c = weak_type_constant(Exponents::with(p, q)?);
    Ok(match (q, r) {
        (Exponent::Finite(q), Exponent::Finite(r)) => c.powf(1.0 - q / r),
        _ => c,
    })
}

fn check_embedding_order(q: Exponent, r: Exponent) -> Result<()> {
    match (q, r) {
        (Exponent::Finite(q), Exponent::Finite(r)) if q < r => Ok(()),
        (Exponent::Finite(_), Exponent::Infinite) => Ok(()),
        _ => domain(format!("embedding requires q < r, got q={q}, r={r}")),
    }
}

/// Best witness found for the norm of `ℓ_{p,q} ↪ ℓ_{p,r}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConstant {
    /// Largest `‖a‖_{p,r}/‖a‖_{p,q}` over all candidates tried.
    pub d_lower: f64,
    pub witness: Seq,
    /// The proven bound, reported alongside and never mixed with `d_lower`.
    pub d_analytic: f64,
    pub p: f64,
    pub q: Exponent,
    pub r: Exponent,
    pub seed: u64,
    pub budget: usize,
}

fn structured_candidates(p: f64) -> Vec<Seq> {
    let mut out = vec![Seq::unit(1)];
    for n in (2..=64).chain((7..=14).map(|k| 1usize << k)) {
        out.push(Seq::flat(n, 1.0));
    }
    for rho in [0.3, 0.5, 0.7, 0.9, 0.95, 0.99] {
        let len = ((40.0 / -f64::ln(rho)) as usize).clamp(8, 4000);
        out.push(Seq::from_finite((0..len).map(|j| rho.powi(j as i32)).collect()));
    }
    for gamma in [0.5, 0.8, 1.0, 1.2, 1.5, 2.0] {
        for len in [64usize, 1024, 16384] {
            out.push(Seq::from_finite(
                (1..=len).map(|j| int_pow(j, -gamma / p)).collect(),
            ));
        }
    }
    out
}

fn random_nonincreasing(rng: &mut ChaCha8Rng) -> Seq {
    let len = 1usize << rng.gen_range(0..10);
    let len = rng.gen_range(len..=2 * len);
    let mut values: Vec<f64> = match rng.gen_range(0..3) {
        0 => (0..len).map(|_| rng.gen::<f64>()).collect(),
        1 => (0..len).map(|_| rng.gen_range(-6.0..0.0f64).exp()).collect(),
        _ => {
            let gamma = rng.gen_range(0.0..3.0);
            (1..=len)
                .map(|j| int_pow(j, -gamma) * rng.gen_range(0.5..1.0))
                .collect()
        }
    };
    values.sort_by(|a, b| b.total_cmp(a));
    Seq::from_finite(values)
}

/// Maximizes `‖a‖_{p,r}/‖a‖_{p,q}` over structured candidates (unit
/// vector, flat vectors, geometric and power decay) followed by `budget`
/// seeded random nonincreasing candidates.
///
/// Candidates are generated in a fixed order, so `d_lower` is
/// nondecreasing in `budget` for a fixed seed.
pub fn estimate_embedding_norm(
    p: f64,
    q: Exponent,
    r: Exponent,
    budget: usize,
    seed: u64,
) -> Result<EmbeddingConstant> {
    let d_analytic = analytic_embedding_bound(p, q, r)?;
    let eq = Exponents::with(p, q)?;
    let er = Exponents::with(p, r)?;
    let ratio = |a: &Seq| quasi_norm(a, er).value() / quasi_norm(a, eq).value();

    let mut best = (ratio(&Seq::unit(1)), Seq::unit(1));
    let mut rng = stream_rng(seed, 1);
    let randoms = (0..budget).map(|_| random_nonincreasing(&mut rng));
    for a in structured_candidates(p).into_iter().chain(randoms) {
        let r = ratio(&a);
        if r > best.0 {
            best = (r, a);
        }
    }
    Ok(EmbeddingConstant {
        d_lower: best.0,
        witness: best.1,
        d_analytic,
        p,
        q,
        r,
        seed,
        budget,
    })
}

/// `‖R_n u‖_{p,q}` for each cutoff `n`.
pub fn tail_norm_profile(u: &Seq, e: Exponents, cutoffs: &[usize]) -> Result<Vec<f64>> {
    e.finite_q("tail_norm_profile")?;
    Ok(cutoffs
        .iter()
        .map(|&n| quasi_norm(&project_tail(u, n), e).value())
        .collect())
}

/// For pairwise disjointly supported `blocks`, the first `k` (1-based) with
/// `‖Σ_{j≤k} v_j‖_{p,q} > bound`, or `None` if the running norm never
/// exceeds it.
pub fn disjoint_divergence(blocks: &[Seq], e: Exponents, bound: f64) -> Result<Option<usize>> {
    e.finite_q("disjoint_divergence")?;
    let mut acc = Seq::zero();
    for (k, v) in blocks.iter().enumerate() {
        if !acc.disjoint_from(v) {
            return validation(format!("block {} overlaps an earlier block", k + 1));
        }
        acc = acc.add(v);
        if quasi_norm(&acc, e).value() > bound {
            return Ok(Some(k + 1));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqspace::rearrange;

    fn ex(p: f64, q: f64) -> Exponents {
        Exponents::new(p, q).unwrap()
    }

    fn s(v: &[f64]) -> Seq {
        Seq::new(v.to_vec()).unwrap()
    }

    /// Direct summation over sorted moduli, written independently of
    /// `norm_of_sorted`.
    fn oracle_norm(u: &[f64], p: f64, q: f64) -> f64 {
        let mut m: Vec<f64> = u.iter().map(|x| x.abs()).collect();
        m.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut sum = 0.0;
        for (i, v) in m.iter().enumerate() {
            let j = (i + 1) as f64;
            sum += j.powf(q / p - 1.0) * v.powf(q);
        }
        sum.powf(1.0 / q)
    }

    #[test]
    fn unit_vector_has_norm_one() {
        for (p, q) in [(0.5, 0.5), (1.0, 2.0), (2.0, 1.0), (3.0, f64::INFINITY)] {
            assert_eq!(quasi_norm(&Seq::unit(1), ex(p, q)).value(), 1.0);
            assert_eq!(quasi_norm(&Seq::unit(7), ex(p, q)).value(), 1.0);
        }
    }

    #[test]
    fn ones_in_l22() {
        let v = quasi_norm(&s(&[1.0, 1.0, 1.0, 1.0]), ex(2.0, 2.0)).value();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ones_in_weak_space() {
        for n in [1usize, 2, 5, 17] {
            for p in [0.5, 1.0, 2.0, 3.0] {
                let v = quasi_norm(&Seq::flat(n, 1.0), ex(p, f64::INFINITY)).value();
                let expected = (n as f64).powf(1.0 / p);
                assert!((v - expected).abs() <= 1e-14 * expected);
            }
        }
    }

    #[test]
    fn mixed_example_matches_direct_summation() {
        // sorted moduli 4, 3, 2, 1 with weights j^{-1/2}
        let expected = 4.0 + 3.0 / 2f64.sqrt() + 2.0 / 3f64.sqrt() + 1.0 / 2.0;
        let oracle = oracle_norm(&[4.0, 1.0, 2.0, 3.0], 2.0, 1.0);
        assert!((oracle - expected).abs() < 1e-14);
        let v = quasi_norm(&s(&[4.0, 1.0, 2.0, 3.0]), ex(2.0, 1.0)).value();
        assert!((v - 7.776_020_881_938_893).abs() < 1e-13, "{v}");
        assert!((v - oracle).abs() < 1e-13);
    }

    #[test]
    fn zero_has_norm_zero() {
        assert_eq!(quasi_norm(&Seq::zero(), ex(1.0, 2.0)).value(), 0.0);
        assert_eq!(quasi_norm(&Seq::zero(), ex(1.0, f64::INFINITY)).value(), 0.0);
    }

    #[test]
    fn partial_sum_ratio_examples() {
        assert_eq!(partial_sum_ratio(1, ex(2.0, 2.0)).unwrap(), 1.0);
        // single term 1 over (p/q) * 1 = 2
        assert_eq!(partial_sum_ratio(1, ex(2.0, 1.0)).unwrap(), 0.5);
        let big = partial_sum_ratio(1_000_000, ex(2.0, 1.0)).unwrap();
        assert!((big - 1.0).abs() < 0.01, "{big}");
        assert!(partial_sum_ratio(5, ex(2.0, f64::INFINITY)).is_err());
        assert!(partial_sum_ratio(0, ex(2.0, 1.0)).is_err());
    }

    #[test]
    fn partial_sum_ratio_tends_to_one() {
        for (p, q) in [(0.5, 2.0), (1.0, 0.5), (3.0, 1.0), (1.0, 3.0)] {
            let r = partial_sum_ratio(200_000, ex(p, q)).unwrap();
            assert!((r - 1.0).abs() < 0.02, "p={p} q={q} r={r}");
        }
    }

    #[test]
    fn analytic_triangle_constants() {
        // q = p = 2: c = 2, T = sqrt(2)
        let t = quasi_triangle_constant(ex(2.0, 2.0)).t;
        assert!((t - 2f64.sqrt()).abs() < 1e-15);
        // q = infinity
        assert!((quasi_triangle_constant(ex(0.5, f64::INFINITY)).t - 4.0).abs() < 1e-15);
        for (p, q) in [(0.5, 0.5), (1.0, 0.5), (2.0, 1.0), (1.0, 4.0)] {
            assert!(quasi_triangle_constant(ex(p, q)).t >= 1.0);
        }
    }

    #[test]
    fn minkowski_case_witness_at_most_one() {
        for p in [1.0, 1.5, 2.0, 3.0] {
            let c = empirical_quasi_triangle(ex(p, p), 2000, 11);
            match c.provenance {
                Provenance::Empirical { witness_ratio, .. } => {
                    assert!(witness_ratio <= 1.0 + 1e-12, "p={p}: {witness_ratio}")
                }
                _ => unreachable!(),
            }
            assert!(c.t <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn nonconvex_case_has_witness_above_one() {
        let c = empirical_quasi_triangle(ex(1.0, 0.5), 10_000, 3);
        assert!(c.t > 1.0);
        assert!(c.t <= quasi_triangle_constant(ex(1.0, 0.5)).t);
    }

    #[test]
    fn embedding_bound_values() {
        let inf = Exponent::Infinite;
        let f = Exponent::Finite;
        assert_eq!(analytic_embedding_bound(2.0, f(1.0), inf).unwrap(), 1.0);
        let d = analytic_embedding_bound(1.0, f(2.0), inf).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let d = analytic_embedding_bound(1.0, f(2.0), f(4.0)).unwrap();
        assert!((d - 2f64.powf(0.25)).abs() < 1e-15);
        assert!(analytic_embedding_bound(1.0, f(2.0), f(2.0)).is_err());
        assert!(analytic_embedding_bound(1.0, inf, inf).is_err());
        assert!(analytic_embedding_bound(1.0, f(3.0), f(2.0)).is_err());
    }

    #[test]
    fn embedding_estimate_baseline_and_monotone_budget() {
        let f = Exponent::Finite;
        let mut last = 0.0;
        for budget in [0, 10, 100, 400] {
            let est = estimate_embedding_norm(1.0, f(2.0), f(3.0), budget, 5).unwrap();
            assert!(est.d_lower >= 1.0);
            assert!(est.d_lower >= last);
            assert!(est.d_lower <= est.d_analytic * (1.0 + 1e-12));
            last = est.d_lower;
        }
        assert!(estimate_embedding_norm(1.0, f(2.0), f(1.0), 0, 5).is_err());
    }

    #[test]
    fn embedding_flat_vector_closed_form() {
        let (p, q) = (2.0, 1.0);
        for n in [1usize, 4, 9, 100] {
            let a = Seq::flat(n, 1.0);
            let sum: f64 = (1..=n).map(|j| (j as f64).powf(-0.5)).sum();
            let expected = (n as f64).sqrt() / sum;
            let got = quasi_norm(&a, ex(p, f64::INFINITY)).value() / quasi_norm(&a, ex(p, q)).value();
            assert!((got - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn tail_profile_examples() {
        let e = ex(2.0, 1.0);
        let u = s(&[3.0, -1.0, 2.0, 0.5, 4.0]);
        let prof = tail_norm_profile(&u, e, &[0, 1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(prof[0], quasi_norm(&u, e).value());
        assert_eq!(prof[5], 0.0);
        assert_eq!(prof[6], 0.0);
        assert!(prof.windows(2).all(|w| w[1] <= w[0]));
        assert!(tail_norm_profile(&u, ex(2.0, f64::INFINITY), &[1]).is_err());
    }

    #[test]
    fn disjoint_flat_blocks_diverge() {
        let e = ex(2.0, 1.0);
        // blocks of doubling length, each normalized to norm 1
        let mut blocks = Vec::new();
        let mut start = 1usize;
        for k in 0..14 {
            let len = 1usize << k;
            let mut v = vec![0.0; start + len - 1];
            v[start - 1..].iter_mut().for_each(|x| *x = 1.0);
            let v = Seq::new(v).unwrap();
            let n = quasi_norm(&v, e).value();
            blocks.push(v.scale(1.0 / n));
            start += len;
        }
        let k = disjoint_divergence(&blocks, e, 4.0).unwrap();
        assert!(k.is_some());
        let bad = vec![Seq::unit(1), Seq::unit(1)];
        assert!(disjoint_divergence(&bad, e, 10.0).is_err());
    }

    #[test]
    fn rearrangement_invariance_small() {
        let u = s(&[0.0, -3.0, 1.0, 2.5, 0.0, -0.25]);
        for (p, q) in [(1.0, 2.0), (2.0, 1.0), (0.5, f64::INFINITY)] {
            assert_eq!(quasi_norm(&u, ex(p, q)), quasi_norm(&rearrange(&u), ex(p, q)));
        }
    }
}

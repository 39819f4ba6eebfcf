//! Rademacher functions `R_i(t) = sign sin(2^i π t)`, their sequence
//! analogues `r_{i,n}`, and empirical Khintchine constants in `L^{p,q}(0,1)`.
//!
//! At level `N` the sum `Σ_{i≤N} a_i R_i` takes the value
//! `Σ_i a_i (1 − 2 b_i(k))` on the `k`-th interval, where `b_i(k)` is bit
//! `N−i` of `k`. Every sign pattern `ε ∈ {±1}^N` occurs on exactly one
//! interval, so the distribution of the sum is that of `Σ ε_i a_i` under
//! uniform random signs. Norms are computed from that distribution.
//!
//! The distribution is unchanged by permuting the `a_i` or flipping their
//! signs. The exhaustive search therefore visits each class of
//! `{−1, 0, 1}^N` once: the vectors with `k` entries equal to one,
//! `k = 1..=N`. That covers all sign vectors (`k = N`) and all axis vectors
//! (`k = 1`), and each class is evaluated in closed form from binomial
//! weights.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{budget, domain, Result};
use crate::numeric::stream_rng;
use crate::optim::coordinate_ascent;
use crate::seqspace::{Exponent, Exponents, Seq};
use crate::stepfun::{distribution_norm, DyadicStep, DEFAULT_MAX_LEVEL};

/// Largest dimension for which the full sign-sum distribution is enumerated.
pub const MAX_KHINTCHINE_DIM: usize = 20;

/// `R_i` written at `level`: blocks of length `2^{level−i}`, alternating
/// and starting with `+1`.
pub fn rademacher_fn(i: u32, level: u32) -> Result<DyadicStep> {
    check_index(i, level)?;
    let shift = level - i;
    let coeffs = (0..1usize << level)
        .map(|k| if (k >> shift) & 1 == 0 { 1.0 } else { -1.0 })
        .collect();
    DyadicStep::new(level, coeffs)
}

/// `r_{i,n}`: the coefficients of [`rademacher_fn`] as a sequence on
/// `{1..2^n}`, zero beyond.
pub fn rademacher_seq(i: u32, n: u32) -> Result<Seq> {
    Ok(rademacher_fn(i, n)?.to_seq())
}

fn check_index(i: u32, level: u32) -> Result<()> {
    if i == 0 || i > level {
        return domain(format!("Rademacher index {i} must lie in 1..={level}"));
    }
    if level > DEFAULT_MAX_LEVEL {
        return domain(format!("level {level} exceeds the cap {DEFAULT_MAX_LEVEL}"));
    }
    Ok(())
}

/// `Σ_i a_i R_i` at `level ≥ a.len()`.
pub fn rademacher_sum(a: &[f64], level: u32) -> Result<DyadicStep> {
    if a.len() > level as usize {
        return domain(format!("{} coefficients need level ≥ {}", a.len(), a.len()));
    }
    if level > DEFAULT_MAX_LEVEL {
        return domain(format!("level {level} exceeds the cap {DEFAULT_MAX_LEVEL}"));
    }
    let coeffs = (0..1usize << level)
        .map(|k| {
            a.iter()
                .enumerate()
                .map(|(i, ai)| {
                    let bit = (k >> (level as usize - 1 - i)) & 1;
                    if bit == 0 {
                        *ai
                    } else {
                        -*ai
                    }
                })
                .sum()
        })
        .collect();
    DyadicStep::new(level, coeffs)
}

/// All `2^N` values `Σ ε_i a_i`.
pub(crate) fn sign_sums(a: &[f64]) -> Vec<f64> {
    let mut vals = Vec::with_capacity(1 << a.len());
    vals.push(0.0);
    for ai in a {
        let len = vals.len();
        for k in 0..len {
            let v = vals[k];
            vals[k] = v + ai;
            vals.push(v - ai);
        }
    }
    vals
}

/// `‖Σ a_i R_i‖_{L^{p,q}(0,1)}`.
pub fn rademacher_sum_norm(a: &[f64], e: Exponents) -> Result<f64> {
    let len = a.iter().rposition(|v| *v != 0.0).map_or(0, |i| i + 1);
    if len > MAX_KHINTCHINE_DIM {
        return budget(format!(
            "Rademacher sums of {len} terms exceed the cap {MAX_KHINTCHINE_DIM}"
        ));
    }
    Ok(sum_norm_unchecked(&a[..len], e))
}

fn sum_norm_unchecked(a: &[f64], e: Exponents) -> f64 {
    let m = 1.0 / (1u64 << a.len()) as f64;
    let mut pairs: Vec<(f64, f64)> = sign_sums(a).into_iter().map(|v| (v.abs(), m)).collect();
    distribution_norm(&mut pairs, e.p(), e.q())
}

/// Norm of `Σ_{i≤k} R_i`, from the binomial distribution of `k` signs.
fn flat_sum_norm(k: usize, e: Exponents) -> f64 {
    let scale = 0.5f64.powi(k as i32);
    let mut binom = 1.0f64;
    let mut pairs = Vec::with_capacity(k + 1);
    for j in 0..=k {
        pairs.push(((k as f64 - 2.0 * j as f64).abs(), binom * scale));
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    distribution_norm(&mut pairs, e.p(), e.q())
}

/// `(‖a‖₂ / ‖Σ a_i R_i‖, ‖Σ a_i R_i‖ / ‖a‖₂)`, or `None` for `a = 0`.
pub fn khintchine_ratios(a: &[f64], e: Exponents) -> Result<Option<(f64, f64)>> {
    let l2 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Ok(None);
    }
    let s = rademacher_sum_norm(a, e)?;
    Ok(Some((l2 / s, s / l2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KhintchineMethod {
    ExhaustiveSigns,
    SeededSearch,
}

impl std::str::FromStr for KhintchineMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exhaustive" | "exhaustive-signs" => Ok(Self::ExhaustiveSigns),
            "seeded" | "seeded-search" => Ok(Self::SeededSearch),
            other => Err(format!("unknown method {other:?} (expected exhaustive-signs or seeded-search)")),
        }
    }
}

impl std::fmt::Display for KhintchineMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ExhaustiveSigns => "exhaustive-signs",
            Self::SeededSearch => "seeded-search",
        })
    }
}

/// Largest Khintchine ratios found in dimension `n_dim`.
///
/// These are lower bounds for the true constants, never upper bounds:
/// `c_low_witness ≤ sup ‖a‖₂/‖Σ a_i R_i‖` and
/// `c_up_witness ≤ sup ‖Σ a_i R_i‖/‖a‖₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KhintchineEstimate {
    pub p: f64,
    pub q: Exponent,
    pub n_dim: usize,
    pub c_low_witness: f64,
    pub c_up_witness: f64,
    pub low_argmax: Vec<f64>,
    pub up_argmax: Vec<f64>,
    pub method: KhintchineMethod,
    pub seed: u64,
    pub evaluations: usize,
}

impl KhintchineEstimate {
    pub fn exponents(&self) -> Exponents {
        Exponents::with(self.p, self.q).expect("validated at construction")
    }

    /// Raises the witnesses to cover the coefficient vector `a`.
    ///
    /// Returns whether either witness grew.
    pub fn absorb(&mut self, a: &[f64]) -> Result<bool> {
        if a.len() > self.n_dim {
            return domain(format!(
                "{} coefficients do not fit dimension {}",
                a.len(),
                self.n_dim
            ));
        }
        let Some((low, up)) = khintchine_ratios(a, self.exponents())? else {
            return Ok(false);
        };
        self.evaluations += 1;
        let mut grew = false;
        if low > self.c_low_witness {
            self.c_low_witness = low;
            self.low_argmax = a.to_vec();
            grew = true;
        }
        if up > self.c_up_witness {
            self.c_up_witness = up;
            self.up_argmax = a.to_vec();
            grew = true;
        }
        Ok(grew)
    }
}

/// Seeded search settings beyond the restart count.
const SWEEPS: usize = 4;
const LINE_ITERS: usize = 40;

/// Empirical Khintchine constants for `L^{p,q}(0,1)` in dimension `n_dim`.
///
/// `restarts` random starts are run per ratio by the seeded search; the
/// exhaustive method ignores it.
pub fn khintchine_estimate(
    e: Exponents,
    n_dim: usize,
    method: KhintchineMethod,
    seed: u64,
    restarts: usize,
) -> Result<KhintchineEstimate> {
    if n_dim == 0 {
        return domain("dimension must be at least 1");
    }
    if n_dim > MAX_KHINTCHINE_DIM {
        return budget(format!(
            "dimension {n_dim} exceeds the enumeration cap {MAX_KHINTCHINE_DIM}"
        ));
    }
    let mut est = KhintchineEstimate {
        p: e.p(),
        q: e.q(),
        n_dim,
        c_low_witness: 0.0,
        c_up_witness: 0.0,
        low_argmax: Vec::new(),
        up_argmax: Vec::new(),
        method,
        seed,
        evaluations: 0,
    };
    for k in 1..=n_dim {
        let s = flat_sum_norm(k, e);
        let l2 = (k as f64).sqrt();
        est.evaluations += 1;
        if l2 / s > est.c_low_witness {
            est.c_low_witness = l2 / s;
            est.low_argmax = vec![1.0; k];
        }
        if s / l2 > est.c_up_witness {
            est.c_up_witness = s / l2;
            est.up_argmax = vec![1.0; k];
        }
    }
    if method == KhintchineMethod::SeededSearch && n_dim > 1 {
        let runs: Vec<(f64, Vec<f64>, f64, Vec<f64>)> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(seed, r as u64);
                let x0: Vec<f64> = (0..n_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let ratio = |a: &[f64], low: bool| match khintchine_ratios(a, e) {
                    Ok(Some((l, u))) => {
                        if low {
                            l
                        } else {
                            u
                        }
                    }
                    _ => 0.0,
                };
                let (xl, vl) = coordinate_ascent(|a| ratio(a, true), &x0, SWEEPS, LINE_ITERS, 2.0);
                let (xu, vu) = coordinate_ascent(|a| ratio(a, false), &x0, SWEEPS, LINE_ITERS, 2.0);
                (vl, xl, vu, xu)
            })
            .collect();
        for (vl, xl, vu, xu) in runs {
            est.evaluations += 2 * (1 + SWEEPS * n_dim * (LINE_ITERS + 4));
            if vl > est.c_low_witness {
                est.c_low_witness = vl;
                est.low_argmax = xl;
            }
            if vu > est.c_up_witness {
                est.c_up_witness = vu;
                est.up_argmax = xu;
            }
        }
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepfun::{fn_norm, fn_norm_any};

    #[test]
    fn paper_patterns() {
        assert_eq!(rademacher_fn(1, 1).unwrap().coeffs(), &[1.0, -1.0]);
        assert_eq!(rademacher_fn(1, 2).unwrap().coeffs(), &[1.0, 1.0, -1.0, -1.0]);
        assert_eq!(rademacher_fn(2, 2).unwrap().coeffs(), &[1.0, -1.0, 1.0, -1.0]);
        let r = rademacher_seq(4, 4).unwrap();
        assert!((1..=16).all(|j| r.at(j) == if j % 2 == 1 { 1.0 } else { -1.0 }));
        let r = rademacher_seq(1, 4).unwrap();
        assert!((1..=8).all(|j| r.at(j) == 1.0) && (9..=16).all(|j| r.at(j) == -1.0));
        assert_eq!(r.at(17), 0.0);
    }

    #[test]
    fn index_errors() {
        assert!(rademacher_fn(0, 3).is_err());
        assert!(rademacher_fn(4, 3).is_err());
        assert!(rademacher_seq(2, 1).is_err());
    }

    #[test]
    fn orthogonality_and_energy() {
        let n = 5;
        let rs: Vec<Seq> = (1..=n).map(|i| rademacher_seq(i, n).unwrap()).collect();
        for i in 0..rs.len() {
            for j in 0..rs.len() {
                let dot: f64 = (1..=32).map(|k| rs[i].at(k) * rs[j].at(k)).sum();
                assert_eq!(dot, if i == j { 32.0 } else { 0.0 });
            }
        }
        let a = [0.3, -1.25, 2.0, 0.5, -0.125];
        let sum = rademacher_sum(&a, n).unwrap();
        let energy: f64 = sum.coeffs().iter().map(|v| v * v).sum();
        let expected = 32.0 * a.iter().map(|v| v * v).sum::<f64>();
        assert!((energy - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn sum_matches_explicit_combination() {
        let a = [1.5, -0.5, 0.25];
        let level = 4;
        let mut want = DyadicStep::zero(level);
        for (i, ai) in a.iter().enumerate() {
            want = want.add_scaled(*ai, &rademacher_fn(i as u32 + 1, level).unwrap()).unwrap();
        }
        assert_eq!(rademacher_sum(&a, level).unwrap(), want);
    }

    #[test]
    fn l2_norm_of_sum_is_euclidean() {
        let a = [0.7, -0.2, 1.1, 0.05];
        let e = Exponents::new(2.0, 2.0).unwrap();
        let step = rademacher_sum(&a, 4).unwrap();
        let l2 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((fn_norm(&step, e).unwrap().value() - l2).abs() < 1e-14);
        assert!((rademacher_sum_norm(&a, e).unwrap() - l2).abs() < 1e-14);
    }

    #[test]
    fn distribution_norm_agrees_with_step_norm() {
        let a = [0.7, -0.2, 1.1, 0.05, 0.3];
        for (p, q) in [(0.5, 1.0), (2.0, 1.0), (3.0, f64::INFINITY), (1.0, 4.0)] {
            let e = Exponents::new(p, q).unwrap();
            let step = rademacher_sum(&a, 5).unwrap();
            let want = fn_norm_any(&step, e).value();
            let got = rademacher_sum_norm(&a, e).unwrap();
            assert!((got - want).abs() <= 1e-13 * want, "p={p} q={q}");
        }
    }

    #[test]
    fn flat_norm_matches_enumeration() {
        for (p, q) in [(0.5, 2.0), (2.0, 1.0), (2.0, f64::INFINITY)] {
            let e = Exponents::new(p, q).unwrap();
            for k in 1..=9 {
                let want = sum_norm_unchecked(&vec![1.0; k], e);
                assert!((flat_sum_norm(k, e) - want).abs() <= 1e-13 * want);
            }
        }
    }

    #[test]
    fn orthonormal_case_gives_unit_witnesses() {
        let e = Exponents::new(2.0, 2.0).unwrap();
        for method in [KhintchineMethod::ExhaustiveSigns, KhintchineMethod::SeededSearch] {
            let k = khintchine_estimate(e, 6, method, 3, 8).unwrap();
            assert!((k.c_low_witness - 1.0).abs() < 1e-9);
            assert!((k.c_up_witness - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn witnesses_dominate_unit_vector_baseline() {
        for (p, q) in [(2.0, 1.0), (1.0, 3.0), (0.5, 0.5)] {
            let e = Exponents::new(p, q).unwrap();
            let k = khintchine_estimate(e, 5, KhintchineMethod::SeededSearch, 11, 4).unwrap();
            let base = (p / q).powf(1.0 / q);
            assert!(k.c_up_witness >= base && k.c_low_witness >= 1.0 / base);
            assert!(k.c_low_witness * k.c_up_witness >= 1.0);
        }
    }

    #[test]
    fn seeded_search_is_deterministic() {
        let e = Exponents::new(2.0, 1.0).unwrap();
        let a = khintchine_estimate(e, 6, KhintchineMethod::SeededSearch, 42, 6).unwrap();
        let b = khintchine_estimate(e, 6, KhintchineMethod::SeededSearch, 42, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exhaustive_budget() {
        let e = Exponents::new(2.0, 1.0).unwrap();
        assert!(matches!(
            khintchine_estimate(e, 21, KhintchineMethod::ExhaustiveSigns, 0, 0),
            Err(crate::Error::Budget(_))
        ));
    }

    #[test]
    fn absorb_raises_witnesses() {
        let e = Exponents::new(2.0, 1.0).unwrap();
        let mut k = khintchine_estimate(e, 4, KhintchineMethod::ExhaustiveSigns, 0, 0).unwrap();
        let before = (k.c_low_witness, k.c_up_witness);
        k.absorb(&[1.0, 0.3, -0.2, 0.9]).unwrap();
        assert!(k.c_low_witness >= before.0 && k.c_up_witness >= before.1);
        assert!(k.absorb(&[1.0; 5]).is_err());
    }
}

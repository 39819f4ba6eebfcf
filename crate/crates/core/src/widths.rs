//! Lower bounds for the Bernstein numbers of `id: ℓ_{p,q} → ℓ_{p,r}`.
//!
//! For an explicit `n`-dimensional subspace `L` the quantity
//! `inf_{u∈L} ‖u‖_{p,r}/‖u‖_{p,q}` bounds `b_n` from below. The ratio is
//! scale invariant, so it is minimized over the unit sphere of coefficient
//! vectors, parameterized by hyperspherical angles and searched with
//! multi-start Nelder–Mead.
//!
//! On the Rademacher subspace `ℛ_n = span(r_{1,n}, …, r_{n,n})` the ratio
//! is bounded below by
//!
//! ```text
//! α = k(p,q) / (K(p,r) · C_low(p,r) · C_up(p,q))
//! ```
//!
//! where `(k, K)` are the transfer constants of
//! [`transfer_bounds`](crate::stepfun::transfer_bounds) (`K = 1` for
//! `r = ∞`) and `C_low`, `C_up` are Khintchine constants. [`alpha_bound`]
//! plugs in empirical witnesses, so it is an estimate of the true `α`;
//! [`bernstein_lower_curve`] feeds every minimizer it finds back into the
//! witnesses, which keeps `value ≥ alpha_bound` a theorem for the reported
//! rows rather than a hope.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::lorentz::{norm_of_sorted, quasi_norm};
use crate::numeric::stream_rng;
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::rademacher::{khintchine_estimate, rademacher_seq, KhintchineEstimate, KhintchineMethod};
use crate::seqspace::{sorted_moduli, Exponent, Exponents, Seq};
use crate::stepfun::transfer_bounds;

/// Largest dimension accepted by [`bernstein_lower_curve`].
pub const MAX_CURVE_DIM: usize = 12;

/// Relative rank tolerance for basis independence.
pub const RANK_TOL: f64 = 1e-10;

/// Linearly independent finitely supported sequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    vectors: Vec<Seq>,
}

impl SubspaceBasis {
    pub fn new(vectors: Vec<Seq>) -> Result<Self> {
        if vectors.is_empty() {
            return validation("basis must contain at least one vector");
        }
        let len = vectors.iter().map(Seq::len).max().unwrap_or(0);
        // modified Gram–Schmidt on the joint support
        let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
        for (k, v) in vectors.iter().enumerate() {
            let mut w = padded(v, len);
            let norm0 = l2(&w);
            for o in &ortho {
                let c: f64 = w.iter().zip(o).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(o).for_each(|(a, b)| *a -= c * b);
            }
            let norm = l2(&w);
            if norm0 == 0.0 || norm <= RANK_TOL * norm0 {
                return validation(format!("basis vector {} is linearly dependent on the others", k + 1));
            }
            w.iter_mut().for_each(|a| *a /= norm);
            ortho.push(w);
        }
        Ok(Self { vectors })
    }

    /// `{r_{1,n}, …, r_{n,n}}`.
    pub fn rademacher(n: u32) -> Result<Self> {
        let vectors = (1..=n).map(|i| rademacher_seq(i, n)).collect::<Result<Vec<_>>>()?;
        Self::new(vectors)
    }

    pub fn vectors(&self) -> &[Seq] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// `Σ a_i v_i`.
    pub fn combine(&self, a: &[f64]) -> Seq {
        Seq::from_finite(self.dense(a))
    }

    fn dense(&self, a: &[f64]) -> Vec<f64> {
        let len = self.vectors.iter().map(Seq::len).max().unwrap_or(0);
        let mut out = vec![0.0; len];
        for (ai, v) in a.iter().zip(&self.vectors) {
            for (o, x) in out.iter_mut().zip(v.values()) {
                *o += ai * x;
            }
        }
        out
    }
}

fn padded(v: &Seq, len: usize) -> Vec<f64> {
    let mut w = v.values().to_vec();
    w.resize(len, 0.0);
    w
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Search settings for [`min_ratio_on_subspace`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthConfig {
    pub seed: u64,
    pub restarts: usize,
    /// Nelder–Mead runs per restart; each rerun starts from the previous
    /// best point with a fresh simplex.
    pub polish_rounds: usize,
    pub nelder_mead: NelderMeadConfig,
}

impl Default for WidthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 64,
            polish_rounds: 3,
            nelder_mead: NelderMeadConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub n: usize,
    pub p: f64,
    pub q: Exponent,
    pub r: Exponent,
    /// Smallest `‖u‖_{p,r}/‖u‖_{p,q}` found.
    pub value: f64,
    /// Unit coefficient vector attaining `value`.
    pub argmin: Vec<f64>,
    /// Empirical `α`, attached by [`bernstein_lower_curve`].
    pub alpha_bound: Option<f64>,
    pub seed: u64,
    pub restarts: usize,
    /// Restart that produced `argmin`.
    pub best_restart: usize,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Point on the unit sphere of `R^{θ.len()+1}` with the given angles.
pub fn sphere_point(theta: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(theta.len() + 1);
    let mut s = 1.0;
    for t in theta {
        x.push(s * t.cos());
        s *= t.sin();
    }
    x.push(s);
    x
}

/// `‖u‖_{p,r}/‖u‖_{p,q}` for `u = Σ a_i v_i`; `+∞` if `u = 0`.
pub fn subspace_ratio(basis: &SubspaceBasis, a: &[f64], p: f64, q: Exponent, r: Exponent) -> f64 {
    let sorted = sorted_moduli(&basis.dense(a));
    let den = norm_of_sorted(&sorted, p, q);
    if den == 0.0 {
        return f64::INFINITY;
    }
    norm_of_sorted(&sorted, p, r) / den
}

struct RestartResult {
    value: f64,
    x: Vec<f64>,
    iterations: usize,
    evaluations: usize,
}

/// Minimizes `‖u‖_{p,r}/‖u‖_{p,q}` over the span of `basis`.
///
/// Restart 0 starts at the first basis vector; the others start at uniform
/// random angles drawn from their own stream of `config.seed`.
pub fn min_ratio_on_subspace(
    basis: &SubspaceBasis,
    p: f64,
    q: Exponent,
    r: Exponent,
    config: &WidthConfig,
) -> Result<WidthReport> {
    Exponents::with(p, q)?;
    Exponents::with(p, r)?;
    if q >= r {
        return domain(format!("need q < r, got q={q}, r={r}"));
    }
    if config.restarts == 0 {
        return validation("at least one restart is required");
    }
    let n = basis.dim();
    let objective = |theta: &[f64]| subspace_ratio(basis, &sphere_point(theta), p, q, r);

    let runs: Vec<RestartResult> = (0..config.restarts)
        .into_par_iter()
        .map(|k| {
            let mut theta: Vec<f64> = if k == 0 {
                vec![0.0; n - 1]
            } else {
                let mut rng = stream_rng(config.seed, k as u64);
                (0..n - 1).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect()
            };
            let mut best = f64::INFINITY;
            let mut iterations = 0;
            let mut evaluations = 0;
            for _ in 0..config.polish_rounds.max(1) {
                let m = nelder_mead(objective, &theta, &config.nelder_mead);
                iterations += m.iterations;
                evaluations += m.evaluations;
                let improved = m.value < best;
                if improved {
                    best = m.value;
                    theta = m.x;
                }
                if !improved || n == 1 {
                    break;
                }
            }
            RestartResult {
                value: best,
                x: sphere_point(&theta),
                iterations,
                evaluations,
            }
        })
        .collect();

    let mut best_restart = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.value < runs[best_restart].value {
            best_restart = k;
        }
    }
    Ok(WidthReport {
        n,
        p,
        q,
        r,
        value: runs[best_restart].value,
        argmin: runs[best_restart].x.clone(),
        alpha_bound: None,
        seed: config.seed,
        restarts: config.restarts,
        best_restart,
        iterations: runs.iter().map(|r| r.iterations).sum(),
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
    })
}

/// `k(p,q)/K(p,r)`: the transfer factor in the numerator of `α`.
pub fn alpha_transfer_factor(p: f64, q: f64, r: Exponent) -> f64 {
    let k_q = transfer_bounds(p, q).0;
    let big_k_r = match r {
        Exponent::Infinite => 1.0,
        Exponent::Finite(r) => transfer_bounds(p, r).1,
    };
    k_q / big_k_r
}

/// Empirical `α = k(p,q) / (K(p,r) · C_low(p,r) · C_up(p,q))`.
///
/// `kh_q` must be an estimate for `L^{p,q}` and `kh_r` one for `L^{p,r}`.
pub fn alpha_bound(
    p: f64,
    q: Exponent,
    r: Exponent,
    kh_q: &KhintchineEstimate,
    kh_r: &KhintchineEstimate,
) -> Result<f64> {
    if kh_q.p != p || kh_q.q != q {
        return validation(format!(
            "Khintchine estimate for (p={}, q={}) does not match (p={p}, q={q})",
            kh_q.p, kh_q.q
        ));
    }
    if kh_r.p != p || kh_r.q != r {
        return validation(format!(
            "Khintchine estimate for (p={}, q={}) does not match (p={p}, q={r})",
            kh_r.p, kh_r.q
        ));
    }
    let Exponent::Finite(qf) = q else {
        return domain("q must be finite");
    };
    if q >= r {
        return domain(format!("need q < r, got q={q}, r={r}"));
    }
    Ok(alpha_transfer_factor(p, qf, r) / (kh_r.c_low_witness * kh_q.c_up_witness))
}

/// Output of [`bernstein_lower_curve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinCurve {
    pub rows: Vec<WidthReport>,
    pub alpha_bound: f64,
    pub khintchine_q: KhintchineEstimate,
    pub khintchine_r: KhintchineEstimate,
}

/// Minimized ratios on `ℛ_1, …, ℛ_{n_max}` with the session's `α`.
///
/// The Khintchine witnesses start from the exhaustive class search in
/// dimension `n_max` and absorb every minimizer found, so all rows share
/// one `α`.
pub fn bernstein_lower_curve(
    n_max: usize,
    p: f64,
    q: Exponent,
    r: Exponent,
    config: &WidthConfig,
) -> Result<BernsteinCurve> {
    if n_max == 0 || n_max > MAX_CURVE_DIM {
        return domain(format!("n_max must lie in 1..={MAX_CURVE_DIM}, got {n_max}"));
    }
    let eq = Exponents::with(p, q)?;
    let er = Exponents::with(p, r)?;
    if q >= r {
        return domain(format!("need q < r, got q={q}, r={r}"));
    }
    let mut kh_q = khintchine_estimate(eq, n_max, KhintchineMethod::ExhaustiveSigns, config.seed, 0)?;
    let mut kh_r = khintchine_estimate(er, n_max, KhintchineMethod::ExhaustiveSigns, config.seed, 0)?;
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let basis = SubspaceBasis::rademacher(n as u32)?;
        let report = min_ratio_on_subspace(&basis, p, q, r, config)?;
        kh_q.absorb(&report.argmin)?;
        kh_r.absorb(&report.argmin)?;
        rows.push(report);
    }
    let alpha = alpha_bound(p, q, r, &kh_q, &kh_r)?;
    for row in &mut rows {
        row.alpha_bound = Some(alpha);
    }
    Ok(BernsteinCurve {
        rows,
        alpha_bound: alpha,
        khintchine_q: kh_q,
        khintchine_r: kh_r,
    })
}

/// `m^{1/p}/‖1_{{1..m}}‖_{p,q}`: the ratio on the span of a flat block
/// against the `ℓ_{p,∞}` target.
pub fn flat_block_ratio(m: usize, p: f64, q: Exponent) -> Result<f64> {
    let ones = Seq::flat(m, 1.0);
    Ok((m as f64).powf(1.0 / p) / quasi_norm(&ones, Exponents::with(p, q)?).value())
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: Exponent = Exponent::Infinite;

    fn quick() -> WidthConfig {
        WidthConfig {
            restarts: 8,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn dependent_basis_is_rejected() {
        let v = Seq::new(vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        let w = v.scale(-3.0);
        assert!(matches!(SubspaceBasis::new(vec![v.clone(), w]), Err(crate::Error::Validation(_))));
        assert!(SubspaceBasis::new(vec![]).is_err());
        assert!(SubspaceBasis::new(vec![Seq::zero()]).is_err());
        assert!(SubspaceBasis::new(vec![v, Seq::unit(2)]).is_ok());
    }

    #[test]
    fn single_unit_vector() {
        let b = SubspaceBasis::new(vec![Seq::unit(1)]).unwrap();
        let rep = min_ratio_on_subspace(&b, 2.0, Exponent::Finite(1.0), Exponent::Finite(2.0), &quick()).unwrap();
        assert!((rep.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_flat_vector() {
        for m in [1usize, 2, 5, 16] {
            let b = SubspaceBasis::new(vec![Seq::flat(m, 0.7)]).unwrap();
            let rep = min_ratio_on_subspace(&b, 2.0, Exponent::Finite(1.0), INF, &quick()).unwrap();
            let want = flat_block_ratio(m, 2.0, Exponent::Finite(1.0)).unwrap();
            assert!((rep.value - want).abs() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn first_rademacher_width() {
        let b = SubspaceBasis::rademacher(1).unwrap();
        let rep = min_ratio_on_subspace(&b, 2.0, Exponent::Finite(1.0), INF, &quick()).unwrap();
        let want = 2f64.sqrt() / (1.0 + 2f64.sqrt().recip());
        assert!((rep.value - want).abs() < 1e-14);
    }

    #[test]
    fn rescaling_basis_vectors_keeps_value() {
        let b = SubspaceBasis::rademacher(3).unwrap();
        let scaled = SubspaceBasis::new(
            b.vectors().iter().enumerate().map(|(i, v)| v.scale(1.0 + i as f64)).collect(),
        )
        .unwrap();
        let q = Exponent::Finite(1.0);
        let cfg = WidthConfig { restarts: 24, ..quick() };
        let v1 = min_ratio_on_subspace(&b, 2.0, q, INF, &cfg).unwrap().value;
        let v2 = min_ratio_on_subspace(&scaled, 2.0, q, INF, &cfg).unwrap().value;
        assert!((v1 - v2).abs() < 1e-6 * v1, "{v1} vs {v2}");
    }

    #[test]
    fn q_must_be_below_r() {
        let b = SubspaceBasis::rademacher(2).unwrap();
        let q = Exponent::Finite(2.0);
        assert!(matches!(
            min_ratio_on_subspace(&b, 2.0, q, q, &quick()),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn deterministic_reports() {
        let b = SubspaceBasis::rademacher(4).unwrap();
        let q = Exponent::Finite(1.0);
        let a = min_ratio_on_subspace(&b, 2.0, q, INF, &quick()).unwrap();
        let c = min_ratio_on_subspace(&b, 2.0, q, INF, &quick()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn alpha_bound_checks_parameters() {
        let eq = Exponents::new(2.0, 1.0).unwrap();
        let er = Exponents::new(2.0, f64::INFINITY).unwrap();
        let kq = khintchine_estimate(eq, 3, KhintchineMethod::ExhaustiveSigns, 0, 0).unwrap();
        let kr = khintchine_estimate(er, 3, KhintchineMethod::ExhaustiveSigns, 0, 0).unwrap();
        let q = Exponent::Finite(1.0);
        let a = alpha_bound(2.0, q, INF, &kq, &kr).unwrap();
        assert!(a > 0.0);
        assert!(matches!(alpha_bound(2.0, q, INF, &kr, &kq), Err(crate::Error::Validation(_))));
        let mut bigger = kq.clone();
        bigger.c_up_witness *= 2.0;
        assert!(alpha_bound(2.0, q, INF, &bigger, &kr).unwrap() < a);
    }

    #[test]
    fn transfer_factor_on_diagonal() {
        assert_eq!(alpha_transfer_factor(1.5, 1.5, INF), 1.0);
    }

    #[test]
    fn curve_values_dominate_alpha() {
        let curve = bernstein_lower_curve(4, 2.0, Exponent::Finite(1.0), INF, &quick()).unwrap();
        assert_eq!(curve.rows.len(), 4);
        for row in &curve.rows {
            assert!(row.value >= curve.alpha_bound, "{row:?}");
        }
    }
}

//! Finitely supported real sequences, their distribution function and
//! rearrangements, and the head/tail projections `P_m`, `R_m`.
//!
//! Indices are 1-based throughout the public API: `u.at(1)` is the first
//! entry. Entries past the stored length are zero.
//!
//! # Rearrangement index convention
//!
//! Two readings of the decreasing rearrangement exist in the literature:
//!
//! * the *minimum* form `u*(j) = min{λ > 0 : μ_u(λ) ≤ j}`, under which
//!   `u*(0)` would be the largest modulus and `u*(1)` the second largest;
//! * the *sorted* form, where `u*(1)` is the largest modulus and `u*(j)` the
//!   `j`-th largest.
//!
//! This crate uses the sorted form everywhere. The two differ by a shift of
//! one index, and only the sorted form makes the dyadic identity
//! `‖a‖_{p,∞} = 2^{n/p} ‖A‖_{L^{p,∞}}` exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A real sequence with finite support.
///
/// Stored densely up to the last nonzero entry; trailing zeros are trimmed
/// on construction so that structural equality is equality of sequences.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Seq {
    values: Vec<f64>,
}

impl Seq {
    /// Builds a sequence from its first entries. Fails on NaN or infinite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return domain(format!("entry {} is not finite ({v})", i + 1));
        }
        Ok(Self::from_finite(values))
    }

    /// Builds a sequence from values already known to be finite.
    pub(crate) fn from_finite(mut values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        for v in values.iter_mut() {
            // -0.0 -> +0.0 so that projections reassemble bitwise.
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        while values.last() == Some(&0.0) {
            values.pop();
        }
        Self { values }
    }

    pub fn zero() -> Self {
        Self { values: Vec::new() }
    }

    /// The unit vector `e_i` (1-based).
    pub fn unit(i: usize) -> Self {
        assert!(i >= 1, "sequence indices start at 1");
        let mut values = vec![0.0; i];
        values[i - 1] = 1.0;
        Self { values }
    }

    /// `len` copies of `value` starting at index 1.
    pub fn flat(len: usize, value: f64) -> Self {
        Self::from_finite(vec![value; len])
    }

    /// Entry at 1-based index `i`; zero beyond the stored length.
    pub fn at(&self, i: usize) -> f64 {
        assert!(i >= 1, "sequence indices start at 1");
        self.values.get(i - 1).copied().unwrap_or(0.0)
    }

    /// Stored entries; `values()[k]` is the entry at index `k + 1`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Index of the last nonzero entry (0 for the zero sequence).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// 1-based indices of the nonzero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Smallest index in the support, if any.
    pub fn min_support(&self) -> Option<usize> {
        self.values.iter().position(|v| *v != 0.0).map(|i| i + 1)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn abs(&self) -> Seq {
        Self::from_finite(self.values.iter().map(|v| v.abs()).collect())
    }

    pub fn scale(&self, alpha: f64) -> Seq {
        assert!(alpha.is_finite());
        Self::from_finite(self.values.iter().map(|v| v * alpha).collect())
    }

    pub fn add(&self, other: &Seq) -> Seq {
        let n = self.len().max(other.len());
        let values = (1..=n).map(|i| self.at(i) + other.at(i)).collect();
        Self::from_finite(values)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Seq) -> Seq {
        let n = self.len().max(other.len());
        let values = (1..=n).map(|i| self.at(i) + alpha * other.at(i)).collect();
        Self::from_finite(values)
    }

    /// Entrywise `|self| ≤ |other|`.
    pub fn dominated_by(&self, other: &Seq) -> bool {
        (1..=self.len()).all(|i| self.at(i).abs() <= other.at(i).abs())
    }

    /// True when the supports of `self` and `other` do not intersect.
    pub fn disjoint_from(&self, other: &Seq) -> bool {
        self.values
            .iter()
            .zip(other.values.iter())
            .all(|(a, b)| *a == 0.0 || *b == 0.0)
    }
}

impl TryFrom<Vec<f64>> for Seq {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Seq::new(values)
    }
}

impl From<Seq> for Vec<f64> {
    fn from(s: Seq) -> Self {
        s.values
    }
}

impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Second Lorentz index: a positive real or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    /// Accepts a positive real or `f64::INFINITY`.
    pub fn new(q: f64) -> Result<Self> {
        if q == f64::INFINITY {
            Ok(Exponent::Infinite)
        } else if q.is_finite() && q > 0.0 {
            Ok(Exponent::Finite(q))
        } else {
            domain(format!("exponent must be in (0, inf], got {q}"))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Finite(q) => q,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(q) => Some(q),
            Exponent::Infinite => None,
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

/// A validated `(p, q)` pair with `p ∈ (0, ∞)` and `q ∈ (0, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    p: f64,
    q: Exponent,
}

impl Exponents {
    /// `q` may be `f64::INFINITY`.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        Self::with(p, Exponent::new(q)?)
    }

    pub fn with(p: f64, q: Exponent) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return domain(format!("p must be in (0, inf), got {p}"));
        }
        if let Exponent::Finite(qv) = q {
            if !(qv.is_finite() && qv > 0.0) {
                return domain(format!("q must be in (0, inf], got {qv}"));
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> Exponent {
        self.q
    }

    /// Finite `q`, or a domain error naming `what`.
    pub fn finite_q(&self, what: &str) -> Result<f64> {
        match self.q {
            Exponent::Finite(q) => Ok(q),
            Exponent::Infinite => domain(format!("{what} requires q < inf")),
        }
    }
}

impl fmt::Display for Exponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, q={})", self.p, self.q)
    }
}

/// `μ_u(λ) = #{i : |u(i)| > λ}`.
pub fn distribution(u: &Seq, lambda: f64) -> Result<usize> {
    if !(lambda > 0.0) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    Ok(u.values.iter().filter(|v| v.abs() > lambda).count())
}

/// Moduli of the support sorted nonincreasing (stable in the original index).
pub(crate) fn sorted_moduli(values: &[f64]) -> Vec<f64> {
    let mut m: Vec<f64> = values
        .iter()
        .map(|v| v.abs())
        .filter(|v| *v != 0.0)
        .collect();
    m.sort_by(|a, b| b.total_cmp(a));
    m
}

/// Decreasing rearrangement `u*`, with `u*(1) = max |u(i)|`.
pub fn rearrange(u: &Seq) -> Seq {
    Seq::from_finite(sorted_moduli(&u.values))
}

/// Rearrangement on the support, `u⋄`: the sorted moduli written back onto
/// `supp u` in increasing index order.
pub fn rearrange_on_support(u: &Seq) -> Seq {
    let sorted = sorted_moduli(&u.values);
    let mut out = vec![0.0; u.len()];
    for (idx, value) in u.support().into_iter().zip(sorted) {
        out[idx - 1] = value;
    }
    Seq::from_finite(out)
}

/// `P_m u = (u(1), …, u(m), 0, …)`.
pub fn project_head(u: &Seq, m: usize) -> Seq {
    Seq::from_finite(u.values[..m.min(u.len())].to_vec())
}

/// `R_m u = u − P_m u = (0, …, 0, u(m+1), …)`.
pub fn project_tail(u: &Seq, m: usize) -> Seq {
    let mut values = u.values.clone();
    for v in values.iter_mut().take(m) {
        *v = 0.0;
    }
    Seq::from_finite(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Seq {
        Seq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distribution_examples() {
        assert_eq!(distribution(&s(&[3.0, 2.0, 1.0]), 1.5).unwrap(), 2);
        assert_eq!(distribution(&s(&[0.0, 0.0]), 1.0).unwrap(), 0);
        assert_eq!(distribution(&s(&[1.0, 1.0, 1.0]), 0.5).unwrap(), 3);
    }

    #[test]
    fn distribution_rejects_nonpositive_lambda() {
        let u = s(&[1.0]);
        assert!(matches!(distribution(&u, 0.0), Err(Error::Domain(_))));
        assert!(matches!(distribution(&u, -1.0), Err(Error::Domain(_))));
        assert!(matches!(distribution(&u, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn rearrange_examples() {
        assert_eq!(rearrange(&s(&[0.0, 3.0, -1.0, 2.0])), s(&[3.0, 2.0, 1.0, 0.0]));
        assert_eq!(rearrange(&s(&[5.0])), s(&[5.0]));
        assert_eq!(rearrange(&s(&[2.0, 2.0, 2.0])), s(&[2.0, 2.0, 2.0]));
    }

    #[test]
    fn rearrange_on_support_examples() {
        assert_eq!(
            rearrange_on_support(&s(&[0.0, 3.0, 0.0, 5.0])),
            s(&[0.0, 5.0, 0.0, 3.0])
        );
        assert_eq!(
            rearrange_on_support(&s(&[0.0, 5.0, 0.0, 3.0])),
            s(&[0.0, 5.0, 0.0, 3.0])
        );
        let u = s(&[0.0, 0.0, 0.0, 1.0, 9.0, 4.0]);
        let d = rearrange_on_support(&u);
        assert_eq!(d, s(&[0.0, 0.0, 0.0, 9.0, 4.0, 1.0]));
        // support is {n+1, ..., m} with n = 3: u⋄(j) = u*(j - n)
        let star = rearrange(&u);
        for j in 4..=6 {
            assert_eq!(d.at(j), star.at(j - 3));
        }
    }

    #[test]
    fn projection_examples() {
        let u = s(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(project_head(&u, 2), s(&[1.0, 2.0]));
        assert_eq!(project_tail(&u, 2), s(&[0.0, 0.0, 3.0, 4.0]));
        assert!(project_head(&u, 0).is_zero());
        assert_eq!(project_tail(&u, 0), u);
        assert_eq!(project_head(&u, 10), u);
        assert!(project_tail(&u, 10).is_zero());
    }

    #[test]
    fn trailing_zeros_and_negative_zero_are_normalized() {
        let u = s(&[1.0, -0.0, 0.0, 0.0]);
        assert_eq!(u.len(), 1);
        assert_eq!(u, s(&[1.0]));
        assert!(s(&[-0.0]).is_zero());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Seq::new(vec![1.0, f64::NAN]).is_err());
        assert!(Seq::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let u: Seq = serde_json::from_str("[1.5, -2, 0, 0]").unwrap();
        assert_eq!(u, s(&[1.5, -2.0]));
        assert_eq!(serde_json::to_string(&u).unwrap(), "[1.5,-2.0]");
        assert!(serde_json::from_str::<Seq>("[1, \"x\"]").is_err());
    }

    #[test]
    fn exponents_validation() {
        assert!(Exponents::new(2.0, 1.0).is_ok());
        assert!(Exponents::new(2.0, f64::INFINITY).unwrap().q().is_infinite());
        assert!(Exponents::new(0.0, 1.0).is_err());
        assert!(Exponents::new(f64::INFINITY, 1.0).is_err());
        assert!(Exponents::new(1.0, 0.0).is_err());
        assert!(Exponents::new(1.0, -2.0).is_err());
        assert!(Exponents::new(1.0, f64::NAN).is_err());
    }
}

//! Finite-state probability and utility primitives.
//!
//! Acts are utility profiles over `n` states, beliefs are points of the
//! probability simplex, and a [`UtilityInterval`] is the convex set of utility
//! levels acts may take values in.

use std::collections::HashSet;
use std::fmt;
use std::ops::Deref;

use serde::Serialize;

use crate::error::{check_dim, Error, Result};

/// Tolerance on `sum(weights) == 1` for a [`Belief`].
pub const BELIEF_SUM_TOL: f64 = 1e-12;

/// Interior shrink applied to open interval endpoints.
pub const OPEN_ENDPOINT_SHRINK: f64 = 1e-9;

/// Named, finite set of states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidStateSpace(
                "at least one state is required".into(),
            ));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidStateSpace(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { labels })
    }

    /// States labelled `s1 .. sn`.
    pub fn with_count(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| format!("s{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A probability vector over the states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidBelief("empty weight vector".into()));
        }
        for (s, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidBelief(format!("weight {w} at state {s}")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > BELIEF_SUM_TOL {
            return Err(Error::InvalidBelief(format!("weights sum to {sum}")));
        }
        Ok(Self(weights))
    }

    /// Rescales nonnegative weights with a positive sum onto the simplex.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidBelief(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidBelief("weights sum to zero".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    /// Caller guarantees the weights are a probability vector up to rounding.
    pub(crate) fn from_normalized_unchecked(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Point mass on state `s`.
    pub fn vertex(n: usize, s: usize) -> Self {
        let mut w = vec![0.0; n];
        w[s] = 1.0;
        Self(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Indices of states with positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(s, _)| s)
            .collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.0.iter().all(|&w| w > 0.0)
    }
}

impl Deref for Belief {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Utility profile over the states, in utility units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Act(Vec<f64>);

impl Act {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidAct("empty act".into()));
        }
        if let Some(s) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidAct(format!("non-finite value at state {s}")));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, k: f64) -> Self {
        Self(vec![k; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn shifted(&self, k: f64) -> Self {
        Self(self.0.iter().map(|v| v + k).collect())
    }

    pub fn scaled(&self, gamma: f64) -> Self {
        Self(self.0.iter().map(|v| v * gamma).collect())
    }

    /// `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &Act, alpha: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                .collect(),
        )
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &Act) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        self.max() - self.min() <= tol
    }
}

impl Deref for Act {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Act {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl<const N: usize> From<[f64; N]> for Act {
    fn from(values: [f64; N]) -> Self {
        Self(values.to_vec())
    }
}

/// Convex set `K` of utility levels, possibly unbounded or open at either end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl UtilityInterval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidInterval("NaN endpoint".into()));
        }
        if lo >= hi {
            return Err(Error::InvalidInterval(format!(
                "lo {lo} must be below hi {hi}"
            )));
        }
        if lo_closed && !lo.is_finite() {
            return Err(Error::InvalidInterval(
                "closed lower endpoint must be finite".into(),
            ));
        }
        if hi_closed && !hi.is_finite() {
            return Err(Error::InvalidInterval(
                "closed upper endpoint must be finite".into(),
            ));
        }
        Ok(Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    /// `[lo, hi]`.
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    /// `[lo, inf)`.
    pub fn at_least(lo: f64) -> Result<Self> {
        Self::new(lo, f64::INFINITY, true, false)
    }

    /// `[0, inf)`.
    pub fn nonnegative() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }

    pub fn contains_act(&self, act: &Act) -> bool {
        act.iter().all(|&v| self.contains(v))
    }

    pub fn check_act(&self, act: &Act) -> Result<()> {
        match act.iter().position(|&v| !self.contains(v)) {
            None => Ok(()),
            Some(state) => Err(Error::OutOfDomain {
                state,
                value: act[state],
                domain: self.to_string(),
            }),
        }
    }

    /// Smallest usable level: `lo` when closed, `lo + 1e-9` when open, `-inf` when unbounded.
    pub fn desk_lo(&self) -> f64 {
        if !self.lo.is_finite() || self.lo_closed {
            self.lo
        } else {
            self.lo + OPEN_ENDPOINT_SHRINK
        }
    }

    /// Largest usable level, mirroring [`desk_lo`](Self::desk_lo).
    pub fn desk_hi(&self) -> f64 {
        if !self.hi.is_finite() || self.hi_closed {
            self.hi
        } else {
            self.hi - OPEN_ENDPOINT_SHRINK
        }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.desk_lo()).min(self.desk_hi())
    }

    pub fn is_bounded_above(&self) -> bool {
        self.hi.is_finite()
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &UtilityInterval) -> bool {
        let lo_ok =
            self.lo > other.lo || (self.lo == other.lo && (other.lo_closed || !self.lo_closed));
        let hi_ok =
            self.hi < other.hi || (self.hi == other.hi && (other.hi_closed || !self.hi_closed));
        lo_ok && hi_ok
    }
}

impl fmt::Display for UtilityInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        let close = if self.hi_closed { ']' } else { ')' };
        write!(f, "{open}{}, {}{close}", self.lo, self.hi)
    }
}

/// A certainty-equivalent style map from acts to reals.
///
/// Implementations must be pure: repeated calls on the same act return the
/// same value and have no side effects.
pub trait Functional: Send + Sync {
    fn apply(&self, act: &Act) -> Result<f64>;
}

impl<F> Functional for F
where
    F: Fn(&Act) -> f64 + Send + Sync,
{
    fn apply(&self, act: &Act) -> Result<f64> {
        Ok(self(act))
    }
}

/// `sum_s p_s * act_s`.
pub fn expectation(act: &[f64], p: &Belief) -> Result<f64> {
    check_dim(p.len(), act.len())?;
    Ok(dot(act, p))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative entropy `R(p || q)` in nats; `+inf` unless `p` is absolutely
/// continuous with respect to `q`.
pub fn relative_entropy(p: &Belief, q: &Belief) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    Ok(relative_entropy_raw(p, q))
}

pub(crate) fn relative_entropy_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&ps, &qs) in p.iter().zip(q) {
        if ps <= 0.0 {
            continue;
        }
        if qs <= 0.0 {
            return f64::INFINITY;
        }
        total += ps * (ps / qs).ln();
    }
    total.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn belief_validation() {
        assert!(Belief::new(vec![0.5, 0.5]).is_ok());
        assert!(Belief::new(vec![0.5, 0.6]).is_err());
        assert!(Belief::new(vec![-0.1, 1.1]).is_err());
        assert!(Belief::new(vec![]).is_err());
        let b = Belief::from_unnormalized(vec![1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(b[1], 0.75);
        assert_eq!(Belief::vertex(3, 1).support(), vec![1]);
    }

    #[test]
    fn state_space_labels_unique() {
        assert!(StateSpace::new(["a", "b"]).is_ok());
        assert!(StateSpace::new(["a", "a"]).is_err());
        assert!(StateSpace::new(Vec::<String>::new()).is_err());
        assert_eq!(StateSpace::with_count(3).unwrap().labels()[2], "s3");
    }

    #[test]
    fn expectation_examples() {
        let half = Belief::uniform(2);
        assert_abs_diff_eq!(expectation(&[0.0, 1.0], &half).unwrap(), 0.5);
        let p = Belief::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_abs_diff_eq!(expectation(&[0.7; 3], &p).unwrap(), 0.7, epsilon = 1e-15);
        let p = Belief::from_unnormalized(vec![1.0, 8.0]).unwrap();
        assert_abs_diff_eq!(
            expectation(&[0.4, 0.6], &p).unwrap(),
            5.2 / 9.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            expectation(&[1.0], &half),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn relative_entropy_examples() {
        let half = Belief::uniform(2);
        assert_eq!(relative_entropy(&half, &half).unwrap(), 0.0);
        let point = Belief::vertex(2, 0);
        assert_eq!(relative_entropy(&half, &point).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(
            relative_entropy(&point, &half).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn interval_membership_and_desk_bounds() {
        let k = UtilityInterval::new(0.0, 1.0, false, true).unwrap();
        assert!(!k.contains(0.0));
        assert!(k.contains(1.0));
        assert_eq!(k.desk_lo(), OPEN_ENDPOINT_SHRINK);
        assert!(UtilityInterval::new(1.0, 1.0, true, true).is_err());
        assert!(UtilityInterval::new(f64::NEG_INFINITY, 0.0, true, true).is_err());
        let unit = UtilityInterval::closed(0.0, 1.0).unwrap();
        assert!(unit.is_subset_of(&UtilityInterval::nonnegative()));
        assert!(!UtilityInterval::nonnegative().is_subset_of(&unit));
        assert!(!UtilityInterval::real_line().is_subset_of(&UtilityInterval::nonnegative()));
        assert_eq!(unit.to_string(), "[0, 1]");
    }
}

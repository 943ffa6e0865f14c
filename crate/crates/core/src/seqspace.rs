//! Finitely supported real sequences indexed by `ℤ`.
//!
//! A [`FiniteSeq`] stores a window `start..start+len` of values; every
//! coordinate outside the window is zero. This is the concrete stand-in for
//! elements of `ℓ0` used throughout the crate: tail processes, spectral tail
//! processes, the sequence `Q`, blocks of a time series and max-stable paths.

use std::fmt;
use std::ops::{Bound, RangeBounds};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real sequence which is zero outside a finite window.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FiniteSeq {
    start: i64,
    values: Vec<f64>,
}

/// Result of the infargmax functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArgmaxResult {
    FiniteIndex(i64),
    MinusInfinity,
    PlusInfinity,
}

impl ArgmaxResult {
    pub fn index(self) -> Option<i64> {
        match self {
            ArgmaxResult::FiniteIndex(j) => Some(j),
            _ => None,
        }
    }

    pub fn is_at(self, j: i64) -> bool {
        self == ArgmaxResult::FiniteIndex(j)
    }
}

impl FiniteSeq {
    pub fn new(start: i64, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    /// The zero sequence.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The sequence with a single nonzero coordinate `value` at `at`.
    pub fn spike(at: i64, value: f64) -> Self {
        Self::new(at, vec![value])
    }

    /// Builds a sequence from `(index, value)` pairs; unspecified indices are zero.
    pub fn from_pairs(pairs: &[(i64, f64)]) -> Self {
        let Some(lo) = pairs.iter().map(|p| p.0).min() else {
            return Self::zero();
        };
        let hi = pairs.iter().map(|p| p.0).max().unwrap_or(lo);
        let mut values = vec![0.0; (hi - lo + 1) as usize];
        for &(j, v) in pairs {
            values[(j - lo) as usize] = v;
        }
        Self::new(lo, values)
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// One past the last stored index.
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `x_j`, zero outside the stored window.
    pub fn get(&self, j: i64) -> f64 {
        if j < self.start || j >= self.end() {
            0.0
        } else {
            self.values[(j - self.start) as usize]
        }
    }

    /// Iterates over `(j, x_j)` for the stored window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start + i as i64, v))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Drops leading and trailing exact zeros.
    pub fn trim(&self) -> Self {
        let Some(first) = self.values.iter().position(|&v| v != 0.0) else {
            return Self::zero();
        };
        let last = self.values.iter().rposition(|&v| v != 0.0).unwrap_or(first);
        Self::new(
            self.start + first as i64,
            self.values[first..=last].to_vec(),
        )
    }

    /// Index range `(first, last)` of the nonzero coordinates, `None` for the zero sequence.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.values.iter().position(|&v| v != 0.0)?;
        let last = self.values.iter().rposition(|&v| v != 0.0)?;
        Some((self.start + first as i64, self.start + last as i64))
    }

    /// Number of indices between the first and last nonzero coordinate, inclusive.
    pub fn span(&self) -> usize {
        self.support().map_or(0, |(a, b)| (b - a + 1) as usize)
    }

    /// Backshift `B^k`: `(B^k x)_j = x_{j-k}`.
    pub fn shift(&self, k: i64) -> Self {
        Self::new(self.start + k, self.values.clone())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `x / c`, exact at the coordinates where `|x_j| = c`.
    pub fn div(&self, c: f64) -> Self {
        self.map(|v| v / c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.start, self.values.iter().map(|&v| f(v)).collect())
    }

    /// The restriction `x_{s,t}` completed with zeros.
    pub fn window(&self, range: impl RangeBounds<i64>) -> Self {
        let (lo, hi) = self.clamp(range);
        if lo > hi {
            return Self::zero();
        }
        let a = (lo - self.start) as usize;
        let b = (hi - self.start) as usize;
        Self::new(lo, self.values[a..=b].to_vec())
    }

    /// `x*_{s,t} = max_{s ≤ j ≤ t} |x_j|`; infinite ends are clamped to the stored window.
    pub fn window_max(&self, range: impl RangeBounds<i64>) -> f64 {
        let (lo, hi) = self.clamp(range);
        if lo > hi {
            return 0.0;
        }
        let a = (lo - self.start) as usize;
        let b = (hi - self.start) as usize;
        self.values[a..=b].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `x* = sup_j |x_j|`.
    pub fn supnorm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖x‖_p = (Σ |x_j|^p)^{1/p}` for `p > 0`.
    pub fn pnorm(&self, p: f64) -> f64 {
        self.sum_abs_pow(p).powf(1.0 / p)
    }

    /// `Σ |x_j|^p`.
    pub fn sum_abs_pow(&self, p: f64) -> f64 {
        self.values
            .iter()
            .filter(|v| **v != 0.0)
            .map(|v| v.abs().powf(p))
            .sum()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// First index at which `|x_j|` attains `x*`.
    ///
    /// For a nonzero finitely supported sequence this is always a finite
    /// index; the zero sequence attains its supremum on every prefix and maps
    /// to [`ArgmaxResult::MinusInfinity`].
    pub fn infargmax(&self) -> ArgmaxResult {
        let mut best = 0.0;
        let mut at = None;
        for (j, v) in self.iter() {
            if v.abs() > best {
                best = v.abs();
                at = Some(j);
            }
        }
        match at {
            Some(j) => ArgmaxResult::FiniteIndex(j),
            None => ArgmaxResult::MinusInfinity,
        }
    }

    /// Coordinatewise `x - y`.
    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Coordinatewise maximum.
    pub fn max_with(&self, other: &Self) -> Self {
        self.zip_with(other, f64::max)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        if self.is_empty() && other.is_empty() {
            return Self::zero();
        }
        let lo = match (self.is_empty(), other.is_empty()) {
            (true, _) => other.start,
            (_, true) => self.start,
            _ => self.start.min(other.start),
        };
        let hi = match (self.is_empty(), other.is_empty()) {
            (true, _) => other.end(),
            (_, true) => self.end(),
            _ => self.end().max(other.end()),
        };
        let values = (lo..hi).map(|j| f(self.get(j), other.get(j))).collect();
        Self::new(lo, values)
    }

    fn clamp(&self, range: impl RangeBounds<i64>) -> (i64, i64) {
        let lo = match range.start_bound() {
            Bound::Included(&s) => s,
            Bound::Excluded(&s) => s + 1,
            Bound::Unbounded => i64::MIN,
        };
        let hi = match range.end_bound() {
            Bound::Included(&t) => t,
            Bound::Excluded(&t) => t - 1,
            Bound::Unbounded => i64::MAX,
        };
        (lo.max(self.start), hi.min(self.end() - 1))
    }
}

/// Sequence equality: same value at every index of `ℤ`.
impl PartialEq for FiniteSeq {
    fn eq(&self, other: &Self) -> bool {
        let a = self.trim();
        let b = other.trim();
        a.values == b.values && (a.values.is_empty() || a.start == b.start)
    }
}

impl fmt::Display for FiniteSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (j, v)) in self.trim().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "x_{j}={v}")?;
        }
        write!(f, "}}")
    }
}

/// Shift-minimised sup distance on `ℓ0`:
/// `inf_k sup_j |x_{j-k} - y_j|`.
///
/// Only relative shifts for which the supports overlap can beat the
/// non-overlapping candidate `max(x*, y*)`, so the infimum is a finite minimum.
pub fn tilde_distance(x: &FiniteSeq, y: &FiniteSeq) -> f64 {
    let (x, y) = (x.trim(), y.trim());
    let mut best = x.supnorm().max(y.supnorm());
    if x.is_empty() || y.is_empty() {
        return best;
    }
    for k in (y.start() - (x.end() - 1))..=(y.end() - 1 - x.start()) {
        let lo = (x.start() + k).min(y.start());
        let hi = (x.end() + k).max(y.end());
        let mut d: f64 = 0.0;
        for j in lo..hi {
            d = d.max((x.get(j - k) - y.get(j)).abs());
            if d >= best {
                break;
            }
        }
        best = best.min(d);
    }
    best
}

/// Canonical representative of the shift-equivalence class of `x`: the
/// shift placing the first maximal modulus at index 0.
pub fn canonical_anchor(x: &FiniteSeq) -> Result<FiniteSeq> {
    match x.infargmax() {
        ArgmaxResult::FiniteIndex(j) => Ok(x.trim().shift(-j)),
        _ => Err(Error::InvalidArgument(
            "canonical anchor of the zero sequence is undefined".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_examples() {
        assert_eq!(FiniteSeq::spike(0, 1.0).shift(1), FiniteSeq::spike(1, 1.0));
        let x = FiniteSeq::new(-2, vec![1.0, 0.0, 3.0]);
        assert_eq!(x.shift(0), x);
        assert_eq!(x.shift(2).shift(-2), x);
        assert_eq!(x.shift(3).get(3), 3.0);
    }

    #[test]
    fn norms() {
        let x = FiniteSeq::new(0, vec![3.0, 4.0]);
        assert!((x.pnorm(2.0) - 5.0).abs() < 1e-12);
        assert_eq!(FiniteSeq::zero().supnorm(), 0.0);
        let y = FiniteSeq::from_pairs(&[(0, 1.0), (2, 2.0)]);
        assert_eq!(y.window_max(1..=5), 2.0);
        assert_eq!(y.window_max(..), y.supnorm());
        assert_eq!(y.window_max(..=-1), 0.0);
        assert_eq!(y.window_max(1..=1), 0.0);
    }

    #[test]
    fn infargmax_examples() {
        assert_eq!(FiniteSeq::zero().infargmax(), ArgmaxResult::MinusInfinity);
        assert_eq!(
            FiniteSeq::new(0, vec![0.0, 0.0]).infargmax(),
            ArgmaxResult::MinusInfinity
        );
        assert_eq!(FiniteSeq::spike(0, 1.0).infargmax(), ArgmaxResult::FiniteIndex(0));
        let x = FiniteSeq::new(-1, vec![2.0, 5.0, 5.0]);
        assert_eq!(x.infargmax(), ArgmaxResult::FiniteIndex(0));
        let y = FiniteSeq::new(0, vec![1.0, -3.0]);
        assert_eq!(y.infargmax(), ArgmaxResult::FiniteIndex(1));
    }

    #[test]
    fn tilde_distance_examples() {
        let x = FiniteSeq::new(-1, vec![0.3, 1.0, 0.5]);
        assert_eq!(tilde_distance(&x, &x.shift(7)), 0.0);
        assert_eq!(
            tilde_distance(&FiniteSeq::spike(0, 1.0), &FiniteSeq::spike(0, 2.0)),
            1.0
        );
        assert_eq!(
            tilde_distance(&FiniteSeq::spike(0, 1.0), &FiniteSeq::zero()),
            1.0
        );
        assert_eq!(
            tilde_distance(&FiniteSeq::spike(4, 1.0), &FiniteSeq::spike(-3, 1.5)),
            0.5
        );
    }

    #[test]
    fn canonical_anchor_examples() {
        assert_eq!(
            canonical_anchor(&FiniteSeq::spike(3, 1.0)).unwrap(),
            FiniteSeq::spike(0, 1.0)
        );
        let x = FiniteSeq::new(1, vec![1.0, 1.0]);
        let a = canonical_anchor(&x).unwrap();
        assert_eq!(a, FiniteSeq::new(0, vec![1.0, 1.0]));
        assert_eq!(canonical_anchor(&a).unwrap(), a);
        assert!(canonical_anchor(&FiniteSeq::zero()).is_err());
    }

    #[test]
    fn equality_ignores_padding() {
        let a = FiniteSeq::new(-2, vec![0.0, 0.0, 1.0, 2.0, 0.0]);
        let b = FiniteSeq::new(0, vec![1.0, 2.0]);
        assert_eq!(a, b);
        assert_eq!(a.trim().start(), 0);
        assert_eq!(FiniteSeq::new(5, vec![0.0]), FiniteSeq::zero());
        assert_ne!(b, b.shift(1));
    }

    #[test]
    fn window_restricts_and_zero_completes() {
        let x = FiniteSeq::new(-2, vec![1.0, 2.0, 3.0, 4.0]);
        let w = x.window(0..);
        assert_eq!(w, FiniteSeq::new(0, vec![3.0, 4.0]));
        assert_eq!(x.window(..=-2), FiniteSeq::spike(-2, 1.0));
        assert!(x.window(5..).is_zero());
    }
}

//! Exact closed intervals and finite unions of them, up to measure zero.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, rat};
use crate::{Error, Rational, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::Invalid(format!(
                "interval [{}, {}] has lo > hi",
                rational::to_text(&lo),
                rational::to_text(&hi)
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval { lo: Rational::zero(), hi: Rational::one() }
    }

    /// The cell `I(k) = [(k−1)/K, k/K]`, `k` counted from one.
    pub fn cell(k: u64, big_k: u64) -> Self {
        Interval { lo: rat(k as i64 - 1, big_k as i64), hi: rat(k as i64, big_k as i64) }
    }

    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Length of the intersection (zero if disjoint).
    pub fn overlap(&self, other: &Interval) -> Rational {
        self.intersect(other).map(|i| i.len()).unwrap_or_else(Rational::zero)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

/// Sorted, pairwise disjoint union of intervals of positive length.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    /// Normalizes an arbitrary list: sorts, merges overlapping or touching
    /// parts and drops parts of length zero.
    pub fn from_intervals(mut parts: Vec<Interval>) -> Self {
        parts.retain(|p| p.lo < p.hi);
        parts.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi => {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                    }
                }
                _ => merged.push(p),
            }
        }
        IntervalSet { parts: merged }
    }

    pub fn single(i: Interval) -> Self {
        Self::from_intervals(vec![i])
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> Rational {
        rational::sum(&self.parts.iter().map(Interval::len).collect::<Vec<_>>())
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.parts.clone();
        all.extend(other.parts.iter().cloned());
        Self::from_intervals(all)
    }

    pub fn intersect_interval(&self, i: &Interval) -> IntervalSet {
        IntervalSet {
            parts: self
                .parts
                .iter()
                .filter_map(|p| p.intersect(i))
                .filter(|p| p.lo < p.hi)
                .collect(),
        }
    }

    /// Measure of the intersection with `i`.
    pub fn measure_in(&self, i: &Interval) -> Rational {
        rational::sum(&self.parts.iter().map(|p| p.overlap(i)).collect::<Vec<_>>())
    }

    /// `self ⊆ other` up to measure zero.
    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.parts.iter().all(|p| other.measure_in(p) == p.len())
    }

    pub fn within_unit(&self) -> bool {
        self.parts
            .first()
            .is_none_or(|p| p.lo >= Rational::zero())
            && self.parts.last().is_none_or(|p| p.hi <= Rational::one())
    }

    /// JSON form: list of `[lo, hi]` fraction strings.
    pub fn to_json(&self) -> IntervalSetJson {
        IntervalSetJson(
            self.parts
                .iter()
                .map(|p| [rational::to_text(&p.lo), rational::to_text(&p.hi)])
                .collect(),
        )
    }

    pub fn from_json(j: &IntervalSetJson) -> Result<Self> {
        let parts = j
            .0
            .iter()
            .map(|[lo, hi]| Interval::new(rational::parse(lo)?, rational::parse(hi)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_intervals(parts))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSetJson(pub Vec<[String; 2]>);

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: i64, b: i64, d: i64) -> Interval {
        Interval::new(rat(a, d), rat(b, d)).unwrap()
    }

    #[test]
    fn normalizes() {
        let s = IntervalSet::from_intervals(vec![iv(3, 4, 8), iv(0, 1, 8), iv(1, 2, 8), iv(5, 5, 8)]);
        assert_eq!(s.parts(), &[iv(0, 2, 8), iv(3, 4, 8)]);
        assert_eq!(s.measure(), rat(3, 8));
        assert!(Interval::new(rat(1, 2), rat(1, 3)).is_err());
    }

    #[test]
    fn subset_and_intersection() {
        let a = IntervalSet::from_intervals(vec![iv(1, 2, 8)]);
        let b = IntervalSet::from_intervals(vec![iv(0, 3, 8), iv(5, 6, 8)]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(b.measure_in(&iv(2, 6, 8)), rat(2, 8));
        assert_eq!(b.intersect_interval(&iv(2, 6, 8)).parts(), &[iv(2, 3, 8), iv(5, 6, 8)]);
    }

    #[test]
    fn json_round_trip() {
        let b = IntervalSet::from_intervals(vec![iv(0, 3, 8), iv(5, 6, 8)]);
        let j = b.to_json();
        assert_eq!(serde_json::to_string(&j).unwrap(), r#"[["0/1","3/8"],["5/8","3/4"]]"#);
        assert_eq!(IntervalSet::from_json(&j).unwrap(), b);
    }
}

//! The map family `Ψ = Ψ_𝒢 ∪ {ψ₊, ψ₋, id}` acting on subsets of `[0, 1]`.
//!
//! Every map is strictly increasing on its domain, so images of intervals
//! are computed from the endpoints alone.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::forge::GeneratorSet;
use crate::interval::{Interval, IntervalSet};
use crate::rational::{self, int, rat};
use crate::{Error, Mat2Q, Rational, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum MapKind {
    Mobius { g: Mat2Q },
    ShiftPlus { k: u64 },
    ShiftMinus { k: u64 },
    Identity,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseMap {
    pub kind: MapKind,
    pub domain: Interval,
}

impl PiecewiseMap {
    pub fn identity() -> Self {
        PiecewiseMap { kind: MapKind::Identity, domain: Interval::unit() }
    }

    pub fn shift_plus(k: u64) -> Self {
        PiecewiseMap {
            kind: MapKind::ShiftPlus { k },
            domain: Interval { lo: Rational::zero(), hi: rat(k as i64 - 1, k as i64) },
        }
    }

    pub fn shift_minus(k: u64) -> Self {
        PiecewiseMap {
            kind: MapKind::ShiftMinus { k },
            domain: Interval { lo: rat(1, k as i64), hi: Rational::one() },
        }
    }

    /// `ḡ` restricted to `ḡ⁻¹([0,1]) ∩ [0,1]`. `None` if that set has
    /// measure zero. The second value is `true` when the restricted set has
    /// two pieces (a pole inside `[0,1]`) and the shorter one was dropped.
    pub fn mobius(g: &Mat2Q) -> Option<(Self, bool)> {
        let (domain, split) = mobius_domain(g)?;
        Some((PiecewiseMap { kind: MapKind::Mobius { g: g.clone() }, domain }, split))
    }

    /// `ψ(x)` for `x` in the domain.
    pub fn eval(&self, x: &Rational) -> Rational {
        match &self.kind {
            MapKind::Mobius { g } => g.mobius_at(x).expect("pole outside the domain"),
            MapKind::ShiftPlus { k } => x + rat(1, *k as i64),
            MapKind::ShiftMinus { k } => x - rat(1, *k as i64),
            MapKind::Identity => x.clone(),
        }
    }

    pub fn derivative(&self, x: &Rational) -> Rational {
        match &self.kind {
            MapKind::Mobius { g } => g.mobius_derivative(x).expect("pole outside the domain"),
            _ => Rational::one(),
        }
    }

    /// `ψ(J ∩ domain)`, or `None` when the intersection has length zero.
    pub fn image(&self, j: &Interval) -> Option<Interval> {
        let p = j.intersect(&self.domain)?;
        (p.lo < p.hi).then(|| Interval { lo: self.eval(&p.lo), hi: self.eval(&p.hi) })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, MapKind::Identity)
    }
}

/// Restricted domain of a Möbius map on `[0,1]`.
fn mobius_domain(g: &Mat2Q) -> Option<(Interval, bool)> {
    let zero = Rational::zero();
    let one = Rational::one();
    let ginv = g.inv();
    let pre = |y: &Rational| ginv.mobius_at(y).expect("finite preimage");
    // On a pole-free piece ḡ is increasing: it tends to +∞ left of the pole
    // and to −∞ right of it.
    let mut pieces = Vec::new();
    let pole = g.pole().filter(|p| &zero <= p && p <= &one);
    match pole {
        None => {
            let (y0, y1) = (g.mobius_at(&zero).unwrap(), g.mobius_at(&one).unwrap());
            if y0 <= one && y1 >= zero {
                let lo = if y0 >= zero { zero.clone() } else { pre(&zero) };
                let hi = if y1 <= one { one.clone() } else { pre(&one) };
                pieces.push(Interval { lo, hi });
            }
        }
        Some(p) => {
            if p > zero {
                let y0 = g.mobius_at(&zero).unwrap();
                if y0 <= one {
                    let lo = if y0 >= zero { zero.clone() } else { pre(&zero) };
                    pieces.push(Interval { lo, hi: pre(&one) });
                }
            }
            if p < one {
                let y1 = g.mobius_at(&one).unwrap();
                if y1 >= zero {
                    let hi = if y1 <= one { one.clone() } else { pre(&one) };
                    pieces.push(Interval { lo: pre(&zero), hi });
                }
            }
        }
    }
    pieces.retain(|p| p.lo < p.hi);
    let split = pieces.len() > 1;
    let best = pieces.into_iter().reduce(|a, b| if b.len() > a.len() { b } else { a })?;
    Some((best, split))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapFamily {
    pub maps: Vec<PiecewiseMap>,
    pub epsilon: Rational,
    pub k: u64,
    pub warnings: Vec<String>,
}

/// Default `K`: the smallest power of two `≥ 4/ε`, and at least 2.
pub fn default_k(epsilon: &Rational) -> u64 {
    let target = int(4) / epsilon;
    let mut k = 2u64;
    while Rational::from_integer(BigInt::from(k)) < target {
        k *= 2;
    }
    k
}

/// `Ψ_𝒢 ∪ {ψ₊, ψ₋, id}` for the generator set.
pub fn build_family(gs: &GeneratorSet, k: u64) -> Result<MapFamily> {
    build_family_from(&gs.gens, gs.epsilon.clone(), k)
}

/// Same as [`build_family`] from a bare list of matrices. Each `g` and
/// `g⁻¹` contributes one map; repeated matrices are kept once.
pub fn build_family_from(gens: &[Mat2Q], epsilon: Rational, k: u64) -> Result<MapFamily> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let mut maps = vec![PiecewiseMap::identity(), PiecewiseMap::shift_plus(k), PiecewiseMap::shift_minus(k)];
    let mut warnings = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, g) in gens.iter().enumerate() {
        for (m, label) in [(g.clone(), format!("g{i}")), (g.inv(), format!("g{i}^-1"))] {
            if m.is_identity() || !seen.insert(m.clone()) {
                continue;
            }
            match PiecewiseMap::mobius(&m) {
                None => warnings.push(format!("{label}: empty domain, map dropped")),
                Some((map, split)) => {
                    if split {
                        warnings.push(format!("{label}: pole inside [0,1], kept the longer piece"));
                    }
                    maps.push(map);
                }
            }
        }
    }
    Ok(MapFamily { maps, epsilon, k, warnings })
}

impl MapFamily {
    /// A family from explicit maps.
    pub fn from_maps(maps: Vec<PiecewiseMap>, epsilon: Rational, k: u64) -> Self {
        MapFamily { maps, epsilon, k, warnings: Vec::new() }
    }

    pub fn mobius_count(&self) -> usize {
        self.maps.iter().filter(|m| matches!(m.kind, MapKind::Mobius { .. })).count()
    }
}

/// `Ψ(A) = ⋃ ψ(A)`.
pub fn apply_family(fam: &MapFamily, a: &IntervalSet) -> IntervalSet {
    let images = fam
        .maps
        .iter()
        .flat_map(|m| a.parts().iter().filter_map(move |p| m.image(p)))
        .collect();
    IntervalSet::from_intervals(images)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionRatio {
    pub ratio: Rational,
    pub image_measure: Rational,
    /// `|A| > 1/2`.
    pub too_large: bool,
}

/// `|Ψ(A)| / |A|`.
pub fn expansion_ratio(fam: &MapFamily, a: &IntervalSet) -> Result<ExpansionRatio> {
    let m = a.measure();
    if m.is_zero() {
        return Err(Error::EmptyInput("A has measure zero".into()));
    }
    let image_measure = apply_family(fam, a).measure();
    Ok(ExpansionRatio {
        ratio: &image_measure / &m,
        too_large: m > rat(1, 2),
        image_measure,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupDeviation {
    /// `sup |ψ(x) − x|`.
    #[serde(with = "rational::serde_text")]
    pub value: Rational,
    /// `sup |ψ′(x) − 1|`.
    #[serde(with = "rational::serde_text")]
    pub derivative: Rational,
    /// Extremes of `ψ′` over the Möbius maps (1 if there are none).
    #[serde(with = "rational::serde_text")]
    pub derivative_min: Rational,
    #[serde(with = "rational::serde_text")]
    pub derivative_max: Rational,
    /// `inf (ψ(x) − x)` over the Möbius maps (0 if there are none).
    #[serde(with = "rational::serde_text")]
    pub min_signed: Rational,
    /// Möbius maps (indices into `maps`) with `ψ(x) < x` somewhere.
    pub sign_violations: Vec<usize>,
}

impl SupDeviation {
    pub fn pair(&self) -> (Rational, Rational) {
        (self.value.clone(), self.derivative.clone())
    }
}

/// Exact sup norms of `ψ − id` and `ψ′ − 1` over the family.
///
/// For `ḡ(x) − x` the critical points solve `(cx + d)² = 1`, so they are
/// rational; `ḡ′` is monotone on a pole-free interval.
pub fn sup_deviation(fam: &MapFamily) -> SupDeviation {
    let mut out = SupDeviation {
        value: Rational::zero(),
        derivative: Rational::zero(),
        derivative_min: Rational::one(),
        derivative_max: Rational::one(),
        min_signed: Rational::zero(),
        sign_violations: Vec::new(),
    };
    for (idx, m) in fam.maps.iter().enumerate() {
        match &m.kind {
            MapKind::Identity => {}
            MapKind::ShiftPlus { k } | MapKind::ShiftMinus { k } => {
                out.value = out.value.max(rat(1, *k as i64));
            }
            MapKind::Mobius { g } => {
                let dom = &m.domain;
                let mut pts = vec![dom.lo.clone(), dom.hi.clone()];
                if !g.c().is_zero() {
                    for s in [int(1), int(-1)] {
                        let x = (s - g.d()) / g.c();
                        if dom.contains(&x) {
                            pts.push(x);
                        }
                    }
                }
                let devs: Vec<Rational> = pts.iter().map(|x| m.eval(x) - x).collect();
                let lo = devs.iter().min().unwrap().clone();
                let hi = devs.iter().max().unwrap().clone();
                if lo.is_negative() {
                    out.sign_violations.push(idx);
                }
                out.value = out.value.clone().max(lo.abs()).max(hi.abs());
                out.min_signed = out.min_signed.clone().min(lo);
                for x in [&dom.lo, &dom.hi] {
                    let d = m.derivative(x);
                    out.derivative = out.derivative.clone().max((&d - int(1)).abs());
                    out.derivative_min = out.derivative_min.clone().min(d.clone());
                    out.derivative_max = out.derivative_max.clone().max(d);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Balance {
    /// First `k` with `||A ∩ I(k+1)| − |A ∩ I(k)|| ≥ σ|A|`.
    Witness {
        k: u64,
        #[serde(with = "rational::serde_text")]
        difference: Rational,
    },
    /// No witness; `bound_verified` records `|K|A ∩ I(k)| − |A|| < σK²|A|` for all `k`.
    Balanced { bound_verified: bool },
}

/// Cell masses `|A ∩ I(k)|` for `k = 1..=K`.
pub fn cell_masses(a: &IntervalSet, k: u64) -> Vec<Rational> {
    (1..=k).map(|i| a.measure_in(&Interval::cell(i, k))).collect()
}

pub fn balance_test(a: &IntervalSet, k: u64, sigma: &Rational) -> Result<Balance> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let total = a.measure();
    if total.is_zero() {
        return Err(Error::EmptyInput("A has measure zero".into()));
    }
    let masses = cell_masses(a, k);
    let thresh = sigma * &total;
    for i in 0..masses.len() - 1 {
        let diff = (&masses[i + 1] - &masses[i]).abs();
        if diff >= thresh {
            return Ok(Balance::Witness { k: i as u64 + 1, difference: diff });
        }
    }
    let kk = Rational::from_integer(BigInt::from(k));
    let bound = sigma * &kk * &kk * &total;
    let bound_verified = masses.iter().all(|m| (&kk * m - &total).abs() < bound);
    Ok(Balance::Balanced { bound_verified })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(rat(a.0, a.1), rat(b.0, b.1)).unwrap()
    }

    #[test]
    fn default_k_values() {
        assert_eq!(default_k(&rat(1, 10)), 64);
        assert_eq!(default_k(&rat(1, 8)), 32);
        assert_eq!(default_k(&int(100)), 2);
    }

    #[test]
    fn empty_generators() {
        let fam = build_family_from(&[], rat(1, 10), 4).unwrap();
        assert_eq!(fam.maps.len(), 3);
        assert_eq!(build_family_from(&[], rat(1, 10), 1).unwrap_err(), Error::InvalidK(1));
    }

    #[test]
    fn translation_domain() {
        let g = Mat2Q::new(int(1), rat(1, 4), int(0), int(1)).unwrap();
        let (m, split) = PiecewiseMap::mobius(&g).unwrap();
        assert_eq!(m.domain, iv((0, 1), (3, 4)));
        assert!(!split);
        let (mi, _) = PiecewiseMap::mobius(&g.inv()).unwrap();
        assert_eq!(mi.domain, iv((1, 4), (1, 1)));
    }

    #[test]
    fn pole_inside_unit() {
        // x ↦ −1/(2x − 1): pole at 1/2
        let g = Mat2Q::from_ints(0, -1, 1, 0).unwrap();
        let g = &g * &Mat2Q::new(int(2), int(-1), int(0), rat(1, 2)).unwrap();
        let (m, _) = PiecewiseMap::mobius(&g).unwrap();
        let p = g.pole().unwrap();
        assert!(!(m.domain.lo < p && p < m.domain.hi));
        for x in [&m.domain.lo, &m.domain.hi] {
            let y = m.eval(x);
            assert!(y >= int(0) && y <= int(1));
        }
    }

    #[test]
    fn apply_examples() {
        let id_only = MapFamily::from_maps(vec![PiecewiseMap::identity()], rat(1, 4), 4);
        let a = IntervalSet::from_intervals(vec![iv((0, 1), (1, 5)), iv((1, 2), (2, 3))]);
        assert_eq!(apply_family(&id_only, &a), a);
        let fam = MapFamily::from_maps(
            vec![PiecewiseMap::identity(), PiecewiseMap::shift_plus(4)],
            rat(1, 4),
            4,
        );
        let a = IntervalSet::single(iv((0, 1), (1, 4)));
        assert_eq!(apply_family(&fam, &a), IntervalSet::single(iv((0, 1), (1, 2))));
        assert_eq!(expansion_ratio(&fam, &a).unwrap().ratio, int(2));
        assert!(apply_family(&fam, &IntervalSet::empty()).is_empty());
        assert!(expansion_ratio(&fam, &IntervalSet::empty()).is_err());
    }

    #[test]
    fn sup_examples() {
        let id_only = MapFamily::from_maps(vec![PiecewiseMap::identity()], rat(1, 4), 4);
        assert_eq!(sup_deviation(&id_only).pair(), (int(0), int(0)));
        let sh = MapFamily::from_maps(vec![PiecewiseMap::shift_plus(10)], rat(1, 4), 10);
        assert_eq!(sup_deviation(&sh).pair(), (rat(1, 10), int(0)));
    }

    #[test]
    fn balance_examples() {
        let a = IntervalSet::single(Interval::cell(1, 8));
        assert!(matches!(balance_test(&a, 8, &int(1)).unwrap(), Balance::Witness { k: 1, .. }));
        let even = IntervalSet::from_intervals(
            (1..=8).map(|k| iv((2 * k - 2, 16), (2 * k - 1, 16))).collect(),
        );
        assert_eq!(
            balance_test(&even, 8, &rat(1, 100)).unwrap(),
            Balance::Balanced { bound_verified: true }
        );
    }
}

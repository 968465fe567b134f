//! Unimodular 2×2 matrices, their Möbius action and the `ℝ⁴` identities
//! used by the trace arguments.
//!
//! Everything here is generic over [`Scalar`]. With [`Rational`] entries all
//! results are exact; the `Mat2<f64>` instantiation is only used for
//! measurements.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational;
use crate::{Error, Rational, Result, Scalar};

/// `[[a, b], [c, d]]` with `a·d − b·c = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2<T> {
    a: T,
    b: T,
    c: T,
    d: T,
}

/// A point of the projective line `T ∪ {∞}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Projective<T> {
    Finite(T),
    Infinity,
}

impl<T> Projective<T> {
    pub fn finite(&self) -> Option<&T> {
        match self {
            Projective::Finite(x) => Some(x),
            Projective::Infinity => None,
        }
    }
}

impl<T: Scalar> Mat2<T> {
    /// Row-major constructor; rejects matrices whose determinant is not one.
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let m = Mat2 { a, b, c, d };
        let det = m.det();
        if T::is_unit_det(&det) {
            Ok(m)
        } else {
            Err(Error::NotUnimodular(format!("{det:?}")))
        }
    }

    pub fn identity() -> Self {
        Mat2 { a: T::one(), b: T::zero(), c: T::zero(), d: T::one() }
    }

    pub fn a(&self) -> &T {
        &self.a
    }
    pub fn b(&self) -> &T {
        &self.b
    }
    pub fn c(&self) -> &T {
        &self.c
    }
    pub fn d(&self) -> &T {
        &self.d
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> [&T; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn det(&self) -> T {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// `[[d, −b], [−c, a]]`.
    pub fn inv(&self) -> Self {
        Mat2 {
            a: self.d.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: self.a.clone(),
        }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Squared entrywise `L²` distance.
    pub fn dist_sq(&self, other: &Self) -> T {
        self.entries()
            .into_iter()
            .zip(other.entries())
            .map(|(x, y)| {
                let t = x.clone() - y.clone();
                t.clone() * t
            })
            .fold(T::zero(), |s, t| s + t)
    }

    /// Squared entrywise `L²` norm.
    pub fn norm_sq(&self) -> T {
        self.entries()
            .into_iter()
            .map(|x| x.clone() * x.clone())
            .fold(T::zero(), |s, t| s + t)
    }

    pub fn trace(&self) -> T {
        self.a.clone() + self.d.clone()
    }

    /// `g′ = [[d, −c], [−b, a]]`, so that `Tr(h⁻¹ g) = ⟨g, h′⟩`.
    pub fn flip(&self) -> Self {
        Mat2 {
            a: self.d.clone(),
            b: -self.c.clone(),
            c: -self.b.clone(),
            d: self.a.clone(),
        }
    }

    /// Standard inner product of the entry vectors in `ℝ⁴`.
    pub fn inner4(&self, other: &Self) -> T {
        self.entries()
            .into_iter()
            .zip(other.entries())
            .map(|(x, y)| x.clone() * y.clone())
            .fold(T::zero(), |s, t| s + t)
    }

    /// `x ↦ (a·x + b)/(c·x + d)` on the projective line.
    pub fn mobius_apply(&self, x: &Projective<T>) -> Projective<T> {
        match x {
            Projective::Infinity => {
                if self.c.is_zero() {
                    Projective::Infinity
                } else {
                    Projective::Finite(self.a.clone() / self.c.clone())
                }
            }
            Projective::Finite(x) => {
                let den = self.c.clone() * x.clone() + self.d.clone();
                if den.is_zero() {
                    Projective::Infinity
                } else {
                    Projective::Finite((self.a.clone() * x.clone() + self.b.clone()) / den)
                }
            }
        }
    }

    /// Möbius image of a finite point; `None` at the pole.
    pub fn mobius_at(&self, x: &T) -> Option<T> {
        match self.mobius_apply(&Projective::Finite(x.clone())) {
            Projective::Finite(y) => Some(y),
            Projective::Infinity => None,
        }
    }

    /// `1/(c·x + d)²`.
    pub fn mobius_derivative(&self, x: &T) -> Result<T> {
        let den = self.c.clone() * x.clone() + self.d.clone();
        if den.is_zero() {
            return Err(Error::Pole(format!("{x:?}")));
        }
        Ok(T::one() / (den.clone() * den))
    }

    /// The pole `−d/c`, if `c ≠ 0`.
    pub fn pole(&self) -> Option<T> {
        if self.c.is_zero() {
            None
        } else {
            Some(-self.d.clone() / self.c.clone())
        }
    }
}

impl<T: Scalar> Mul for &Mat2<T> {
    type Output = Mat2<T>;

    fn mul(self, h: &Mat2<T>) -> Mat2<T> {
        let g = self;
        Mat2 {
            a: g.a.clone() * h.a.clone() + g.b.clone() * h.c.clone(),
            b: g.a.clone() * h.b.clone() + g.b.clone() * h.d.clone(),
            c: g.c.clone() * h.a.clone() + g.d.clone() * h.c.clone(),
            d: g.c.clone() * h.b.clone() + g.d.clone() * h.d.clone(),
        }
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Mat2<T>;

    fn mul(self, h: Mat2<T>) -> Mat2<T> {
        &self * &h
    }
}

/// Determinant of the 4×4 matrix whose rows are the entry vectors of the
/// four arguments.
pub fn det4<T: Scalar>(g0: &Mat2<T>, g1: &Mat2<T>, g2: &Mat2<T>, g3: &Mat2<T>) -> T {
    let rows: Vec<[T; 4]> = [g0, g1, g2, g3]
        .into_iter()
        .map(|g| g.entries().map(|x| x.clone()))
        .collect();
    // Laplace expansion along the first two rows by complementary 2×2 minors.
    let minor = |r: usize, i: usize, j: usize| {
        rows[r][i].clone() * rows[r + 1][j].clone() - rows[r][j].clone() * rows[r + 1][i].clone()
    };
    const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut det = T::zero();
    for &(i, j) in &PAIRS {
        let (k, l) = complement(i, j);
        let term = minor(0, i, j) * minor(2, k, l);
        // sign of the permutation (i, j, k, l)
        if (i + j + 1) % 2 == 0 {
            det = det + term;
        } else {
            det = det - term;
        }
    }
    det
}

fn complement(i: usize, j: usize) -> (usize, usize) {
    let mut rest = (0..4).filter(|&x| x != i && x != j);
    (rest.next().unwrap(), rest.next().unwrap())
}

impl Mat2<Rational> {
    /// Lossy descent to double precision; fails if rounding breaks `det ≈ 1`.
    pub fn to_float(&self) -> Result<Mat2<f64>> {
        let [a, b, c, d] = self.entries().map(Scalar::to_f64_lossy);
        Mat2::new(a, b, c, d)
    }

    /// Builds from integer entries.
    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Mat2::new(rational::int(a), rational::int(b), rational::int(c), rational::int(d))
    }
}

impl fmt::Display for Mat2<Rational> {
    /// Canonical `a/b a/b a/b a/b` text, row-major.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.entries().map(rational::to_text);
        write!(f, "{a} {b} {c} {d}")
    }
}

impl FromStr for Mat2<Rational> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("expected four fractions, got {s:?}")));
        }
        let v = parts
            .into_iter()
            .map(rational::parse)
            .collect::<Result<Vec<_>>>()?;
        let [a, b, c, d]: [Rational; 4] = v.try_into().unwrap();
        Mat2::new(a, b, c, d)
    }
}

impl Serialize for Mat2<Rational> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Mat2<Rational> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use num_traits::Signed;
    use crate::Mat2Q;

    fn h1(q: i64) -> Mat2Q {
        Mat2::new(int(1), rat(1, q), int(0), int(1)).unwrap()
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(Mat2Q::from_ints(1, 1, 1, 1).is_err());
        assert!(Mat2Q::from_ints(2, 1, 1, 1).is_ok());
        assert!(Mat2::new(2.0, 0.0, 0.0, 0.5).is_ok());
        assert!(Mat2::new(2.0, 0.0, 0.0, 0.6).is_err());
    }

    #[test]
    fn products() {
        let id = Mat2Q::identity();
        let g = Mat2Q::from_ints(2, 3, 1, 2).unwrap();
        assert_eq!(&id * &g, g);
        let q = 7;
        assert_eq!(&h1(q) * &h1(q), Mat2::new(int(1), rat(2, q), int(0), int(1)).unwrap());
        assert_eq!(h1(q).pow(q as u64), Mat2Q::from_ints(1, 1, 0, 1).unwrap());
    }

    #[test]
    fn inverses() {
        assert_eq!(Mat2Q::identity().inv(), Mat2Q::identity());
        assert_eq!(
            Mat2Q::from_ints(1, 1, 0, 1).unwrap().inv(),
            Mat2Q::from_ints(1, -1, 0, 1).unwrap()
        );
        let g = Mat2Q::from_ints(3, 5, 1, 2).unwrap();
        assert!((&g * &g.inv()).is_identity());
        assert_eq!(g.inv().inv(), g);
    }

    #[test]
    fn distances() {
        let g = Mat2Q::from_ints(3, 5, 1, 2).unwrap();
        assert_eq!(g.dist_sq(&g), int(0));
        assert_eq!(h1(5).dist_sq(&Mat2Q::identity()), rat(1, 25));
        assert_eq!(Mat2Q::from_ints(1, 1, 0, 1).unwrap().dist_sq(&Mat2Q::identity()), int(1));
    }

    #[test]
    fn mobius() {
        let x = Projective::Finite(rat(2, 7));
        assert_eq!(Mat2Q::identity().mobius_apply(&x), x);
        assert_eq!(h1(4).mobius_apply(&x), Projective::Finite(rat(2, 7) + rat(1, 4)));
        let g = Mat2Q::from_ints(1, 1, 1, 2).unwrap();
        assert_eq!(g.mobius_apply(&Projective::Finite(int(-2))), Projective::Infinity);
        assert_eq!(g.mobius_apply(&Projective::Infinity), Projective::Finite(int(1)));
        assert_eq!(h1(3).mobius_apply(&Projective::Infinity), Projective::Infinity);
        assert_eq!(g.pole(), Some(int(-2)));
    }

    #[test]
    fn derivative() {
        assert_eq!(Mat2Q::identity().mobius_derivative(&rat(3, 5)).unwrap(), int(1));
        let diag = Mat2::new(int(2), int(0), int(0), rat(1, 2)).unwrap();
        assert_eq!(diag.mobius_derivative(&int(0)).unwrap(), int(4));
        let g = Mat2Q::from_ints(1, 1, 1, 2).unwrap();
        assert!(matches!(g.mobius_derivative(&int(-2)), Err(Error::Pole(_))));
    }

    #[test]
    fn trace_flip_inner() {
        let id = Mat2Q::identity();
        assert_eq!(id.trace(), int(2));
        assert_eq!(id.flip(), id);
        let g = Mat2Q::from_ints(3, 5, 1, 2).unwrap();
        assert_eq!(g.inner4(&id.flip()), g.trace());
        assert_eq!(g.flip().flip(), g);
        let a = h1(3);
        let b = Mat2::new(int(1), int(0), rat(1, 3), int(1)).unwrap();
        assert_eq!((&a.inv() * &b).trace(), b.inner4(&a.flip()));
    }

    #[test]
    fn det4_examples() {
        let id = Mat2Q::identity();
        let g1 = Mat2::new(int(2), int(0), int(0), rat(1, 2)).unwrap();
        let g2 = Mat2Q::from_ints(1, 1, 1, 2).unwrap();
        let g3 = &g1 * &g2;
        assert_eq!(det4(&g1, &g1, &g2, &g3), int(0));
        // Hand expansion: rows (1,0,0,1), (2,0,0,1/2), (1,1,1,2), (2,2,1/2,1).
        assert_eq!(det4(&id, &g1, &g2, &g3), rat(9, 4));
        // (λ − 1/λ)² · b₂ · c₂ with λ = 2 and b₂ = c₂ = 1.
        assert_eq!(det4(&id, &g1, &g2, &g3).abs(), rat(9, 4));
        assert_eq!(det4(&g1, &id, &g2, &g3), rat(-9, 4));
        let u1 = Mat2Q::from_ints(1, 1, 0, 1).unwrap();
        let u2 = Mat2::new(int(2), int(3), int(0), rat(1, 2)).unwrap();
        let u3 = &u1 * &u2;
        assert_eq!(det4(&id, &u1, &u2, &u3), int(0));
    }

    #[test]
    fn canonical_text() {
        let g = Mat2::new(int(1), rat(1, 3), int(0), int(1)).unwrap();
        assert_eq!(g.to_string(), "1/1 1/3 0/1 1/1");
        assert_eq!("1 1/3 0 1".parse::<Mat2Q>().unwrap(), g);
        assert!("1 1 1 1".parse::<Mat2Q>().is_err());
        assert!("1 2 3".parse::<Mat2Q>().is_err());
    }
}

//! Helpers around [`Rational`]: construction, canonical text, bounds.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Rational, Result};

/// `n / d` in lowest terms. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Canonical `p/q` text, always with a slash.
pub fn to_text(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or a bare integer. Accepts the unicode minus sign.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim().replace('\u{2212}', "-");
    let bad = || Error::Parse(format!("not a fraction: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Smallest integer `m` with `m² ≥ x` (for `x ≥ 0`).
pub fn ceil_sqrt(x: &Rational) -> BigInt {
    let c = x.ceil().to_integer();
    if c.sign() != Sign::Plus {
        return BigInt::zero();
    }
    let r = c.sqrt();
    if &r * &r >= c {
        r
    } else {
        r + 1
    }
}

/// `⌊log₂ x⌋` for `x > 0`.
pub fn floor_log2(x: &Rational) -> i64 {
    assert!(x.is_positive());
    let mut e = x.numer().bits() as i64 - x.denom().bits() as i64;
    // 2^e is within a factor two of x; correct the off-by-one.
    while pow2(e) > *x {
        e -= 1;
    }
    while pow2(e + 1) <= *x {
        e += 1;
    }
    e
}

/// `2^e` for any integer `e`.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// `x^e` for `e ≥ 0`.
pub fn powi(x: &Rational, e: u64) -> Rational {
    num_traits::pow::pow(x.clone(), e as usize)
}

/// Natural log of a positive rational, accurate for very large or small values.
pub fn ln(x: &Rational) -> f64 {
    assert!(x.is_positive(), "ln of non-positive rational");
    ln_big(x.numer()) - ln_big(x.denom())
}

fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 60;
    let top = (n >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Least common multiple of the denominators.
pub fn lcm_denominators<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Exact `⌊x⌋` as an integer.
pub fn floor(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

/// Exact sum by pairwise reduction of unreduced fractions, normalized once.
/// Sequential addition is quadratic when the denominators are unrelated.
pub fn sum(xs: &[Rational]) -> Rational {
    fn tree(xs: &[Rational]) -> (BigInt, BigInt) {
        match xs {
            [] => (BigInt::zero(), BigInt::one()),
            [x] => (x.numer().clone(), x.denom().clone()),
            _ => {
                let (a, b) = xs.split_at(xs.len() / 2);
                let ((n1, d1), (n2, d2)) = (tree(a), tree(b));
                if d1 == d2 {
                    (n1 + n2, d1)
                } else {
                    (n1 * &d2 + n2 * &d1, d1 * d2)
                }
            }
        }
    }
    let (n, d) = tree(xs);
    Rational::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for x in [rat(3, 4), rat(-7, 2), int(5), int(0)] {
            assert_eq!(parse(&to_text(&x)).unwrap(), x);
        }
        assert_eq!(parse("\u{2212}1/3").unwrap(), rat(-1, 3));
        assert_eq!(parse("6/8").unwrap(), rat(3, 4));
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn ceil_sqrt_bounds() {
        assert_eq!(ceil_sqrt(&int(16)), BigInt::from(4));
        assert_eq!(ceil_sqrt(&int(17)), BigInt::from(5));
        assert_eq!(ceil_sqrt(&rat(1, 4)), BigInt::from(1));
        assert_eq!(ceil_sqrt(&int(0)), BigInt::from(0));
    }

    #[test]
    fn floor_log2_exact() {
        assert_eq!(floor_log2(&int(1)), 0);
        assert_eq!(floor_log2(&int(8)), 3);
        assert_eq!(floor_log2(&int(9)), 3);
        assert_eq!(floor_log2(&rat(1, 3)), -2);
        assert_eq!(floor_log2(&rat(1, 4)), -2);
        assert_eq!(floor_log2(&rat(1, 5)), -3);
    }

    #[test]
    fn ln_huge() {
        let x = powi(&int(10), 400);
        assert!((ln(&x) - 400.0 * 10f64.ln()).abs() < 1e-9);
        assert!((ln(&x.recip()) + 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn tree_sum() {
        let xs: Vec<Rational> = (1..40).map(|k| rat(1, k * k + 1)).collect();
        let seq = xs.iter().fold(Rational::zero(), |s, x| s + x);
        assert_eq!(sum(&xs), seq);
        assert_eq!(sum(&[]), int(0));
    }
}

/// Serde adapter storing a [`Rational`] as canonical `p/q` text.
pub mod serde_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::to_text(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a `BigInt` as decimal text.
pub mod serde_bigint {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

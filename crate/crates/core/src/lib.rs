//! Explicit monotone expanders built from the Möbius action of `SL₂`.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`forge`] picks a seed pair of free generators and converts it into a
//!    large set `𝒢` of unimodular rational matrices close to the identity.
//! 2. [`family`] turns `𝒢` into a finite family of monotone maps of `[0,1]`
//!    (Möbius maps restricted to `[0,1]`, two shifts and the identity).
//! 3. [`discretize`] cuts `[0,1]` into `n` cells and produces a bipartite
//!    graph whose edges split into partial monotone maps.
//! 4. [`measure`] and [`growth`] measure expansion, spectral gap and the
//!    growth statements behind the construction.
//!
//! Matrix code is generic over the scalar type (see [`Scalar`]); exact work
//! uses [`Rational`] and measurements use `f64`.

pub mod discretize;
pub mod error;
pub mod family;
pub mod forge;
pub mod growth;
pub mod interval;
pub mod measure;
pub mod rational;
pub mod scalar;
pub mod sl2;
pub mod words;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use sl2::{Mat2, Projective};

/// Arbitrary-precision exact rational, always kept in lowest terms.
pub type Rational = num_rational::BigRational;

/// Unimodular 2×2 matrix over the exact rationals.
pub type Mat2Q = Mat2<Rational>;

/// Unimodular 2×2 matrix in double precision.
pub type FloatMat = Mat2<f64>;

/// A point of the projective line over the rationals.
pub type ExtendedRational = Projective<Rational>;

/// Default node budget for word enumeration.
pub const DEFAULT_WORD_BUDGET: u64 = 10_000_000;

/// Environment variable that overrides [`DEFAULT_WORD_BUDGET`].
pub const WORD_BUDGET_ENV: &str = "MONEX_WORD_BUDGET";

/// Word budget from the environment, falling back to the default.
pub fn word_budget_from_env() -> u64 {
    std::env::var(WORD_BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_WORD_BUDGET)
}

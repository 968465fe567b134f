use std::fmt::Debug;

use num_traits::{Signed, ToPrimitive};

use crate::Rational;

/// Field element usable as a matrix entry.
///
/// Exact types compare determinants exactly; floating point types accept a
/// small tolerance.
pub trait Scalar: Signed + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// Whether `det` counts as one for this scalar type.
    fn is_unit_det(det: &Self) -> bool;

    /// Lossy conversion used for reporting.
    fn to_f64_lossy(&self) -> f64;

    /// Exact types never round.
    const EXACT: bool;
}

impl Scalar for Rational {
    fn is_unit_det(det: &Self) -> bool {
        num_traits::One::is_one(det)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    const EXACT: bool = true;
}

impl Scalar for f64 {
    fn is_unit_det(det: &Self) -> bool {
        (det - 1.0).abs() <= 1e-9
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    const EXACT: bool = false;
}

impl Scalar for f32 {
    fn is_unit_det(det: &Self) -> bool {
        (det - 1.0).abs() <= 1e-4
    }

    fn to_f64_lossy(&self) -> f64 {
        f64::from(*self)
    }

    const EXACT: bool = false;
}

//! Scalar abstraction used by the sensing and control math.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point type the controller and detector math is written against.
///
/// Implemented for every `Float + FromPrimitive` type, so `f32` and `f64`
/// both work out of the box.
pub trait Scalar:
    Float + FromPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Converts a count into `Self`.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Default + Debug + Display + Send + Sync + 'static
{
}

/// Clamps `v` into `[lo, hi]`. NaN propagates.
pub fn clamp<T: Scalar>(v: T, lo: T, hi: T) -> T {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_is_idempotent() {
        for v in [-3.0_f64, 0.0, 0.5, 1.0, 7.0] {
            let once = clamp(v, 0.0, 1.0);
            assert_eq!(clamp(once, 0.0, 1.0), once);
        }
    }

    #[test]
    fn lit_round_trips_for_f32() {
        assert_eq!(<f32 as Scalar>::lit(0.25), 0.25_f32);
        assert_eq!(<f64 as Scalar>::count(48), 48.0);
    }
}

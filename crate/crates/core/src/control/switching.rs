use serde::{Deserialize, Serialize};

use crate::scalar::{clamp, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchingKind {
    #[default]
    Sign,
    Saturation,
    Tanh,
}

/// Switching function together with its boundary-layer width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Switching<T> {
    pub kind: SwitchingKind,
    pub boundary_width: T,
}

impl<T: Scalar> Switching<T> {
    pub fn sign() -> Self {
        Self {
            kind: SwitchingKind::Sign,
            boundary_width: T::one(),
        }
    }

    pub fn eval(&self, s: T) -> T {
        switching(s, self.kind, self.boundary_width)
    }
}

/// Evaluates the switching function; the result always lies in `[-1, 1]`.
///
/// `sign(0)` is defined as 0.
pub fn switching<T: Scalar>(s: T, kind: SwitchingKind, boundary_width: T) -> T {
    match kind {
        SwitchingKind::Sign => {
            if s > T::zero() {
                T::one()
            } else if s < T::zero() {
                -T::one()
            } else {
                T::zero()
            }
        }
        SwitchingKind::Saturation => clamp(s / boundary_width, -T::one(), T::one()),
        SwitchingKind::Tanh => (s / boundary_width).tanh(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const KINDS: [SwitchingKind; 3] = [
        SwitchingKind::Sign,
        SwitchingKind::Saturation,
        SwitchingKind::Tanh,
    ];

    #[test]
    fn fixed_points() {
        assert_eq!(switching(0.0, SwitchingKind::Sign, 1.0), 0.0);
        assert_eq!(switching(-3.0, SwitchingKind::Sign, 1.0), -1.0);
        assert_eq!(switching(2.0, SwitchingKind::Saturation, 4.0), 0.5);
        assert_eq!(switching(9.0, SwitchingKind::Saturation, 4.0), 1.0);
        assert_eq!(switching(0.0, SwitchingKind::Tanh, 4.0), 0.0);
    }

    #[test]
    fn tanh_monotone_on_grid() {
        let vals: Vec<f64> = (-200..=200)
            .map(|i| switching(i as f64 * 0.05, SwitchingKind::Tanh, 1.5))
            .collect();
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn saturation_tends_to_sign() {
        for s in [-2.0, -0.01, 0.003, 5.0] {
            let sat = switching(s, SwitchingKind::Saturation, 1e-6);
            assert_eq!(sat, switching(s, SwitchingKind::Sign, 1.0));
        }
    }

    proptest! {
        #[test]
        fn odd_and_bounded(s in -1e3f64..1e3, w in 1e-3f64..1e2) {
            for kind in KINDS {
                let v = switching(s, kind, w);
                prop_assert!(v.abs() <= 1.0);
                prop_assert_eq!(switching(-s, kind, w), -v);
            }
        }

        #[test]
        fn monotone(a in -1e3f64..1e3, b in -1e3f64..1e3, w in 1e-3f64..1e2) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for kind in KINDS {
                prop_assert!(switching(lo, kind, w) <= switching(hi, kind, w));
            }
        }
    }
}

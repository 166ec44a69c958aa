use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Phase space of a system: the unit interval `[0,1]` or the circle `ℝ/ℤ`
/// represented on `[0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Interval,
    Circle,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Interval => "interval",
            Space::Circle => "circle",
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Space::Interval => Metric::IntervalAbsolute,
            Space::Circle => Metric::CircleArc,
        }
    }

    pub fn contains<T: Scalar>(self, x: T) -> bool {
        match self {
            Space::Interval => x >= T::zero() && x <= T::one(),
            Space::Circle => x >= T::zero() && x < T::one(),
        }
    }

    pub fn check<T: Scalar>(self, x: T) -> Result<T> {
        if self.contains(x) {
            Ok(x)
        } else {
            Err(Error::Domain {
                value: x.to_f64().unwrap_or(f64::NAN),
                space: self.name(),
            })
        }
    }

    /// Brings a map output back into the space: wraps on the circle, clamps on the
    /// interval (where it only absorbs rounding past the endpoints).
    #[inline]
    pub fn canonicalize<T: Scalar>(self, x: T) -> T {
        match self {
            Space::Interval => x.max(T::zero()).min(T::one()),
            Space::Circle => wrap(x),
        }
    }
}

/// Representative of `x mod 1` in `[0,1)`.
#[inline]
pub fn wrap<T: Scalar>(x: T) -> T {
    let r = x - x.floor();
    // a tiny negative x rounds to exactly 1 after subtracting floor
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    IntervalAbsolute,
    CircleArc,
}

impl Metric {
    #[inline]
    pub fn distance<T: Scalar>(self, x: T, y: T) -> T {
        let d = (x - y).abs();
        match self {
            Metric::IntervalAbsolute => d,
            Metric::CircleArc => {
                let d = d - d.floor();
                d.min(T::one() - d)
            }
        }
    }
}

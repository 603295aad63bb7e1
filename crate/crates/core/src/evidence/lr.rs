use std::fmt;

use serde::Serialize;

/// A likelihood ratio with explicit degenerate states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Lr {
    Finite(f64),
    /// Positive numerator over a zero denominator.
    Infinite,
    /// 0/0, or a combination of zero and infinite factors.
    Undefined,
}

impl Lr {
    pub const ONE: Lr = Lr::Finite(1.0);

    /// `num / den` for two likelihoods.
    pub fn from_likelihoods(num: f64, den: f64) -> Lr {
        if num.is_nan() || den.is_nan() || num < 0.0 || den < 0.0 {
            return Lr::Undefined;
        }
        if den == 0.0 {
            return if num > 0.0 {
                Lr::Infinite
            } else {
                Lr::Undefined
            };
        }
        Lr::from_value(num / den)
    }

    /// Wraps a nonnegative value, mapping +inf to [`Lr::Infinite`].
    pub fn from_value(x: f64) -> Lr {
        if x.is_nan() || x < 0.0 {
            Lr::Undefined
        } else if x.is_infinite() {
            Lr::Infinite
        } else {
            Lr::Finite(x)
        }
    }

    /// The opposite orientation.
    pub fn inverse(self) -> Lr {
        match self {
            Lr::Finite(0.0) => Lr::Infinite,
            Lr::Finite(x) => Lr::from_value(1.0 / x),
            Lr::Infinite => Lr::Finite(0.0),
            Lr::Undefined => Lr::Undefined,
        }
    }

    /// Numeric value; `+inf` for [`Lr::Infinite`], `None` when undefined.
    pub fn value(self) -> Option<f64> {
        match self {
            Lr::Finite(x) => Some(x),
            Lr::Infinite => Some(f64::INFINITY),
            Lr::Undefined => None,
        }
    }

    pub fn is_zero(self) -> bool {
        self == Lr::Finite(0.0)
    }

    pub fn is_flagged(self) -> bool {
        !matches!(self, Lr::Finite(_))
    }

    /// Product under the flag algebra.
    pub fn times(self, other: Lr) -> Lr {
        match (self, other) {
            (Lr::Undefined, _) | (_, Lr::Undefined) => Lr::Undefined,
            (Lr::Infinite, x) | (x, Lr::Infinite) if x.is_zero() => Lr::Undefined,
            (Lr::Infinite, _) | (_, Lr::Infinite) => Lr::Infinite,
            (Lr::Finite(a), Lr::Finite(b)) => Lr::from_value(a * b),
        }
    }
}

impl fmt::Display for Lr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lr::Finite(x) => write!(f, "{x}"),
            Lr::Infinite => f.write_str("+infinity"),
            Lr::Undefined => f.write_str("undefined"),
        }
    }
}

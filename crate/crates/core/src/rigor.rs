//! Outward-rounded interval arithmetic.
//!
//! Every operation rounds to nearest and then widens the result by one ulp
//! on each side. Round-to-nearest is off by at most half an ulp, so the
//! widened result always contains the exact real result.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A closed interval `[lo, hi]` guaranteed to contain some exact real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted enclosure [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// The degenerate enclosure of an exactly representable number.
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// The enclosure `[x - r, x + r]`, rounded outward.
    pub fn around(x: f64, radius: f64) -> Self {
        Self::new((x - radius).next_down(), (x + radius).next_up())
    }

    /// Widen a value computed in round-to-nearest by `ulps` on both sides.
    pub fn ulps(x: f64, ulps: u32) -> Self {
        let (mut lo, mut hi) = (x, x);
        for _ in 0..ulps {
            lo = lo.next_down();
            hi = hi.next_up();
        }
        Self { lo, hi }
    }

    pub fn mid(self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(self, other: Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// `self` lies strictly inside `other`.
    pub fn interior_of(self, other: Self) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn hull(self, other: Self) -> Self {
        Self::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Certainly positive (every member is > 0).
    pub fn is_positive(self) -> bool {
        self.lo > 0.0
    }

    pub fn is_negative(self) -> bool {
        self.hi < 0.0
    }

    pub fn contains_zero(self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    /// Smallest absolute value over the enclosure.
    pub fn mag_lower(self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn abs(self) -> Self {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Self::new(0.0, (-self.lo).max(self.hi))
        }
    }

    pub fn recip(self) -> Self {
        assert!(!self.contains_zero(), "reciprocal of an enclosure containing zero");
        Self::new((1.0 / self.hi).next_down(), (1.0 / self.lo).next_up())
    }

    pub fn intersect(self, other: Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Self { lo, hi })
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl From<f64> for Enclosure {
    fn from(x: f64) -> Self {
        Self::point(x)
    }
}

impl Neg for Enclosure {
    type Output = Self;
    fn neg(self) -> Self {
        Self { lo: -self.hi, hi: -self.lo }
    }
}

impl Add for Enclosure {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new((self.lo + rhs.lo).next_down(), (self.hi + rhs.hi).next_up())
    }
}

impl Sub for Enclosure {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new((self.lo - rhs.hi).next_down(), (self.hi - rhs.lo).next_up())
    }
}

impl Mul for Enclosure {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(lo.next_down(), hi.next_up())
    }
}

impl Div for Enclosure {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.contains_zero(), "division by an enclosure containing zero");
        let q = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(lo.next_down(), hi.next_up())
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<f64> for Enclosure {
            type Output = Enclosure;
            fn $m(self, rhs: f64) -> Enclosure {
                $tr::$m(self, Enclosure::point(rhs))
            }
        }
        impl $tr<Enclosure> for f64 {
            type Output = Enclosure;
            fn $m(self, rhs: Enclosure) -> Enclosure {
                $tr::$m(Enclosure::point(self), rhs)
            }
        }
    )*};
}

scalar_ops!(Add add, Sub sub, Mul mul, Div div);

/// First-order jet `value + deriv·ε` with enclosure coefficients. Used for
/// interval Newton in the slope variable.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub value: Enclosure,
    pub deriv: Enclosure,
}

impl Jet {
    pub fn constant(x: Enclosure) -> Self {
        Self { value: x, deriv: Enclosure::point(0.0) }
    }

    pub fn variable(x: Enclosure) -> Self {
        Self { value: x, deriv: Enclosure::point(1.0) }
    }
}

impl Add for Jet {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { value: self.value + rhs.value, deriv: self.deriv + rhs.deriv }
    }
}

impl Sub for Jet {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { value: self.value - rhs.value, deriv: self.deriv - rhs.deriv }
    }
}

impl Mul for Jet {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self {
            value: self.value * rhs.value,
            deriv: self.deriv * rhs.value + self.value * rhs.deriv,
        }
    }
}

impl Div for Jet {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let value = self.value / rhs.value;
        Self {
            value,
            deriv: (self.deriv - value * rhs.deriv) / rhs.value,
        }
    }
}

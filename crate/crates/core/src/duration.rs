//! Exact rational durations measured in whole notes.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A non-negative rational number of whole notes, always kept in lowest terms.
///
/// `Duration::new(1, 4)` is a quarter note, `Duration::new(3, 8)` a dotted quarter.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Duration {
    num: u64,
    den: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DurationError {
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("expected `<p>/<q>`, got `{0}`")]
    Syntax(String),
    #[error("duration overflows 64-bit rational")]
    Overflow,
}

impl Duration {
    pub const ZERO: Duration = Duration { num: 0, den: 1 };
    pub const WHOLE: Duration = Duration { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, DurationError> {
        if den == 0 {
            return Err(DurationError::ZeroDenominator);
        }
        Self::reduced(num as u128, den as u128).ok_or(DurationError::Overflow)
    }

    /// Const constructor for compile-time constants; `None` on a zero denominator.
    pub const fn new_const(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let (mut a, mut b) = (num, den);
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        if num == 0 {
            return Some(Self { num: 0, den: 1 });
        }
        Some(Self {
            num: num / a,
            den: den / a,
        })
    }

    fn reduced(num: u128, den: u128) -> Option<Self> {
        let g = num.gcd(&den);
        let (num, den) = match (num.checked_div(g), den.checked_div(g)) {
            (Some(n), Some(d)) => (n, d),
            _ => (0, 1),
        };
        let den = if num == 0 { 1 } else { den };
        Some(Self {
            num: u64::try_from(num).ok()?,
            den: u64::try_from(den).ok()?,
        })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        let den = self.den as u128 * rhs.den as u128;
        let num = self.num as u128 * rhs.den as u128 + rhs.num as u128 * self.den as u128;
        Self::reduced(num, den)
    }

    /// `self - rhs`, or `None` when the result would be negative.
    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        let lhs = self.num as u128 * rhs.den as u128;
        let rhs_n = rhs.num as u128 * self.den as u128;
        let num = lhs.checked_sub(rhs_n)?;
        Self::reduced(num, self.den as u128 * rhs.den as u128)
    }

    pub fn checked_mul_int(self, k: u64) -> Option<Self> {
        Self::reduced(self.num as u128 * k as u128, self.den as u128)
    }

    pub fn halve(self) -> Self {
        Self::reduced(self.num as u128, self.den as u128 * 2).expect("halving overflowed denominator")
    }

    /// Absolute difference.
    pub fn abs_diff(self, rhs: Self) -> Self {
        if self >= rhs {
            self - rhs
        } else {
            rhs - self
        }
    }

    /// Number of whole `grid` units in `self` when `self` is an exact multiple of `grid`.
    pub fn units_of(self, grid: Duration) -> Option<u64> {
        if grid.is_zero() {
            return None;
        }
        // self / grid = (a/b) / (c/d) = a*d / (b*c)
        let n = self.num as u128 * grid.den as u128;
        let d = self.den as u128 * grid.num as u128;
        if n.is_multiple_of(d) {
            u64::try_from(n / d).ok()
        } else {
            None
        }
    }

    /// Nearest whole number of `grid` units, rounding exact halves up.
    pub fn round_to_units(self, grid: Duration) -> u64 {
        assert!(!grid.is_zero(), "grid must be positive");
        let n = self.num as u128 * grid.den as u128;
        let d = self.den as u128 * grid.num as u128;
        // floor((2n + d) / 2d)
        let q = (2 * n + d) / (2 * d);
        u64::try_from(q).expect("unit count overflow")
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("duration overflow")
    }
}

impl Sub for Duration {
    type Output = Duration;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs).expect("negative duration")
    }
}

impl std::iter::Sum for Duration {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Duration::ZERO, |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Duration> for Duration {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

impl Ord for Duration {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Duration {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Duration {
    type Err = DurationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || DurationError::Syntax(s.to_string());
        let (p, q) = s.split_once('/').ok_or_else(syntax)?;
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits(p) || !digits(q) {
            return Err(syntax());
        }
        let p: u64 = p.parse().map_err(|_| DurationError::Overflow)?;
        let q: u64 = q.parse().map_err(|_| DurationError::Overflow)?;
        Duration::new(p, q)
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

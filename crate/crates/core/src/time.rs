//! Exact rational time points and durations.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A time point or duration, stored as an exact fraction.
///
/// Interval reasoning compares endpoints for strict inequality, so floating
/// point is never used for time.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(Rational64);

impl Time {
    pub const ZERO: Time = Time(Rational64::new_raw(0, 1));

    pub fn new(numer: i64, denom: i64) -> Time {
        Time(Rational64::new(numer, denom))
    }

    pub fn from_int(value: i64) -> Time {
        Time(Rational64::from_integer(value))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Lossy conversion, only for display.
    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Decimal rendering with at most `digits` fractional digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        if self.is_integer() {
            return self.numer().to_string();
        }
        format!("{:.*}", digits, self.to_f64())
    }
}

impl From<i64> for Time {
    fn from(value: i64) -> Time {
        Time::from_int(value)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        // Integer times are by far the most common; skip the gcd then.
        if *self.0.denom() == 1 && *rhs.0.denom() == 1 {
            return Time(Rational64::new_raw(self.0.numer() + rhs.0.numer(), 1));
        }
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        if *self.0.denom() == 1 && *rhs.0.denom() == 1 {
            return Time(Rational64::new_raw(self.0.numer() - rhs.0.numer(), 1));
        }
        Time(self.0 - rhs.0)
    }
}

impl Neg for Time {
    type Output = Time;
    fn neg(self) -> Time {
        Time(-self.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid time literal `{0}`")]
pub struct ParseTimeError(pub String);

impl FromStr for Time {
    type Err = ParseTimeError;

    /// Accepts integers (`25`), decimals (`2.5`) and fractions (`5/2`).
    fn from_str(s: &str) -> Result<Time, ParseTimeError> {
        let err = || ParseTimeError(s.to_string());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| err())?;
            let d: i64 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            return Ok(Time::new(n, d));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 12 {
                return Err(err());
            }
            let negative = int.starts_with('-');
            let int_val: i64 = if int.is_empty() || int == "-" || int == "+" {
                0
            } else {
                int.parse().map_err(|_| err())?
            };
            let denom = 10i64.pow(frac.len() as u32);
            let frac_val: i64 = frac.parse().map_err(|_| err())?;
            let magnitude = int_val.abs() * denom + frac_val;
            let numer = if negative { -magnitude } else { magnitude };
            return Ok(Time::new(numer, denom));
        }
        s.parse::<i64>().map(Time::from_int).map_err(|_| err())
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Time, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

//! Exact score arithmetic in hundredths of a point.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

/// A score in centipoints (integer hundredths of a point).
///
/// Rubric values such as `0.1` must sum exactly, so scores never pass through
/// floating point until they are aggregated across runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Centipoints(pub i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid score `{text}`: {reason}")]
pub struct ParsePointsError {
    pub text: String,
    pub reason: &'static str,
}

impl Centipoints {
    pub const ZERO: Centipoints = Centipoints(0);

    pub fn new(hundredths: i64) -> Self {
        Centipoints(hundredths)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    /// Score in points as a real number, for statistics and display only.
    pub fn as_points(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl FromStr for Centipoints {
    type Err = ParsePointsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParsePointsError {
            text: s.to_string(),
            reason,
        };
        let trimmed = s.trim();
        let (negative, body) = match trimmed.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
        };
        let (whole, frac) = match body.split_once('.') {
            Some((w, f)) => (w, f),
            None => (body, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("expected decimal digits before the point"));
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("expected decimal digits after the point"));
        }
        if body.contains('.') && frac.is_empty() {
            return Err(err("expected decimal digits after the point"));
        }
        if frac.len() > 2 {
            return Err(err("at most two fractional digits are representable"));
        }
        let whole: i64 = whole.parse().map_err(|_| err("value out of range"))?;
        let mut cents: i64 = 0;
        for (i, b) in frac.bytes().enumerate() {
            let digit = i64::from(b - b'0');
            cents += if i == 0 { digit * 10 } else { digit };
        }
        let magnitude = whole
            .checked_mul(100)
            .and_then(|w| w.checked_add(cents))
            .ok_or_else(|| err("value out of range"))?;
        Ok(Centipoints(if negative { -magnitude } else { magnitude }))
    }
}

impl fmt::Display for Centipoints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl Add for Centipoints {
    type Output = Centipoints;
    fn add(self, rhs: Self) -> Self {
        Centipoints(self.0 + rhs.0)
    }
}

impl AddAssign for Centipoints {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for Centipoints {
    type Output = Centipoints;
    fn sub(self, rhs: Self) -> Self {
        Centipoints(self.0 - rhs.0)
    }
}

impl Sum for Centipoints {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Centipoints::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Centipoints> for Centipoints {
    fn sum<I: Iterator<Item = &'a Centipoints>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

impl Serialize for Centipoints {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Centipoints {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

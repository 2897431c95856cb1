use super::{decimal_serde, ScoreError};
use crate::points::Centipoints;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

/// Mean and sample standard deviation, in points.
pub fn aggregate(scores: &[Centipoints]) -> Result<RunStats, ScoreError> {
    if scores.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    let n = scores.len();
    let sum: i64 = scores.iter().map(|s| s.0).sum();
    let mean_c = sum as f64 / n as f64;
    let std_c = if n == 1 {
        0.0
    } else {
        let ss: f64 = scores.iter().map(|s| (s.0 as f64 - mean_c).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    Ok(RunStats {
        n,
        mean: mean_c / 100.0,
        std: std_c / 100.0,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(with = "decimal_serde")]
    pub gold_min: Decimal,
    #[serde(with = "decimal_serde")]
    pub gold_median: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Distribution {
    pub label: String,
    #[serde(default, with = "decimal_serde::vec")]
    pub scores: Vec<Decimal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
}

pub fn load_distribution(path: impl AsRef<Path>) -> Result<Distribution, ScoreError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScoreError::Io(format!("{}: {e}", path.display())))?;
    let dist: Distribution =
        toml::from_str(&text).map_err(|e| ScoreError::Parse(format!("{}: {e}", path.display())))?;
    if let Some(t) = &dist.thresholds {
        if t.gold_min > t.gold_median {
            return Err(ScoreError::Parse(format!(
                "{}: gold_min {} exceeds gold_median {}",
                path.display(),
                t.gold_min,
                t.gold_median
            )));
        }
    }
    Ok(dist)
}

/// Competition rank: one more than the number of strictly higher scores.
pub fn rank(score: Decimal, dist: &Distribution) -> Result<usize, ScoreError> {
    if dist.scores.is_empty() {
        return Err(ScoreError::NoScores);
    }
    Ok(1 + dist.scores.iter().filter(|s| **s > score).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MedalClass {
    AboveGoldMedian,
    GoldRange,
    BelowGoldMin,
}

impl fmt::Display for MedalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MedalClass::AboveGoldMedian => "above gold median",
            MedalClass::GoldRange => "gold range",
            MedalClass::BelowGoldMin => "below gold min",
        })
    }
}

/// Above the median is strictly greater; the minimum is inclusive.
pub fn medal_class(score: Decimal, dist: &Distribution) -> Result<MedalClass, ScoreError> {
    let t = dist.thresholds.as_ref().ok_or(ScoreError::MissingThresholds)?;
    Ok(if score > t.gold_median {
        MedalClass::AboveGoldMedian
    } else if score >= t.gold_min {
        MedalClass::GoldRange
    } else {
        MedalClass::BelowGoldMin
    })
}

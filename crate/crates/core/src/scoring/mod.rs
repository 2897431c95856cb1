//! Rubric grading, repeated-run statistics, ranking, and accuracy metrics.

mod bench;
mod digits;
mod judge;
mod report;
mod stats;

pub use bench::{flag_outliers, mae, parse_decimal, parse_readings};
pub use digits::{count_accurate, digit_accurate, load_expert_qa, ExpertRecord, SciValue, MAX_DIGITS};
pub use judge::{judge_grade, parse_verdict, JUDGE_SYSTEM_PROMPT};
pub use report::{render_table, ReportRow, ReportSection};
pub use stats::{aggregate, load_distribution, medal_class, rank, Distribution, MedalClass, RunStats, Thresholds};

use crate::points::Centipoints;
use crate::problem::{PartRubric, Rubric};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("UnknownPointId: `{0}` is not a scoring point of the rubric")]
    UnknownPointId(String),
    #[error("grade is for problem `{grade}` but the rubric is for `{rubric}`")]
    ProblemMismatch { grade: String, rubric: String },
    #[error("EmptyInput: at least one value is required")]
    EmptyInput,
    #[error("distribution has no scores to rank against")]
    NoScores,
    #[error("MissingThresholds: distribution carries no gold thresholds")]
    MissingThresholds,
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("digit count must be between 1 and {max}, got {n}")]
    DigitsOutOfRange { n: usize, max: usize },
    #[error("tolerance must be positive")]
    NonPositiveTolerance,
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grader {
    HumanFile,
    /// Automated grading by a model; never official.
    JudgeModel,
}

impl Grader {
    pub fn is_official(self) -> bool {
        self == Grader::HumanFile
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradeRecord {
    pub run_id: String,
    pub problem_id: String,
    pub grader: Grader,
    #[serde(default)]
    pub addressed: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl GradeRecord {
    /// Check every addressed id against the rubric.
    pub fn validate(&self, rubric: &Rubric) -> Result<(), ScoreError> {
        if self.problem_id != rubric.problem_id {
            return Err(ScoreError::ProblemMismatch {
                grade: self.problem_id.clone(),
                rubric: rubric.problem_id.clone(),
            });
        }
        let known: BTreeSet<&str> = rubric.point_ids().collect();
        match self.addressed.iter().find(|id| !known.contains(id.as_str())) {
            Some(id) => Err(ScoreError::UnknownPointId(id.clone())),
            None => Ok(()),
        }
    }
}

/// Load a grade file (TOML when the extension is `.toml`, JSON otherwise)
/// and validate it against `rubric`.
pub fn load_grade(path: impl AsRef<Path>, rubric: &Rubric) -> Result<GradeRecord, ScoreError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScoreError::Io(format!("{}: {e}", path.display())))?;
    let grade: GradeRecord = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| ScoreError::Parse(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| ScoreError::Parse(format!("{}: {e}", path.display())))?
    };
    grade.validate(rubric)?;
    Ok(grade)
}

/// Sum of the values of addressed points in one part.
pub fn part_score(part: &PartRubric, grade: &GradeRecord) -> Centipoints {
    part.points
        .iter()
        .filter(|p| grade.addressed.contains(&p.id))
        .map(|p| p.value)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartScore {
    pub part: String,
    pub score: Centipoints,
    pub max: Centipoints,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub run_id: String,
    pub problem_id: String,
    pub grader: Grader,
    pub official: bool,
    pub per_part: Vec<PartScore>,
    pub total: Centipoints,
}

impl ScoreReport {
    pub fn part(&self, id: &str) -> Option<Centipoints> {
        self.per_part.iter().find(|p| p.part == id).map(|p| p.score)
    }
}

pub fn score_solution(rubric: &Rubric, grade: &GradeRecord) -> Result<ScoreReport, ScoreError> {
    grade.validate(rubric)?;
    let per_part: Vec<PartScore> = rubric
        .parts
        .iter()
        .map(|part| PartScore {
            part: part.id.clone(),
            score: part_score(part, grade),
            max: part.total,
        })
        .collect();
    let total = per_part.iter().map(|p| p.score).sum();
    Ok(ScoreReport {
        run_id: grade.run_id.clone(),
        problem_id: grade.problem_id.clone(),
        grader: grade.grader,
        official: grade.grader.is_official(),
        per_part,
        total,
    })
}

/// Serde adapter for decimals written as strings or plain numbers.
pub(crate) mod decimal_serde {
    use rust_decimal::Decimal;
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Str(String),
        Int(i64),
        Float(f64),
    }

    fn to_decimal<'de, D: Deserializer<'de>>(raw: Raw) -> Result<Decimal, D::Error> {
        let text = match raw {
            Raw::Str(s) => s,
            Raw::Int(i) => i.to_string(),
            Raw::Float(f) => f.to_string(),
        };
        super::parse_decimal(&text).map_err(de::Error::custom)
    }

    pub fn serialize<S: Serializer>(d: &Decimal, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&d.normalize().to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Decimal, D::Error> {
        to_decimal::<D>(Raw::deserialize(d)?)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Decimal], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for d in v {
                seq.serialize_element(&d.normalize().to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Decimal>, D::Error> {
            Vec::<Raw>::deserialize(d)?
                .into_iter()
                .map(to_decimal::<D>)
                .collect()
        }
    }
}

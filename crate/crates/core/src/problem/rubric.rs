use crate::points::Centipoints;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringPoint {
    pub id: String,
    pub description: String,
    pub value: Centipoints,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartRubric {
    pub id: String,
    pub total: Centipoints,
    pub points: Vec<ScoringPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rubric {
    pub problem_id: String,
    pub parts: Vec<PartRubric>,
}

impl Rubric {
    pub fn total(&self) -> Centipoints {
        self.parts.iter().map(|p| p.total).sum()
    }

    pub fn part(&self, id: &str) -> Option<&PartRubric> {
        self.parts.iter().find(|p| p.id == id)
    }

    pub fn point_ids(&self) -> impl Iterator<Item = &str> {
        self.parts
            .iter()
            .flat_map(|p| p.points.iter().map(|pt| pt.id.as_str()))
    }

    pub fn point_count(&self) -> usize {
        self.parts.iter().map(|p| p.points.len()).sum()
    }

    /// Check every structural invariant of an in-memory rubric.
    pub fn validate(&self) -> Result<(), RubricError> {
        let mut part_ids = HashSet::new();
        let mut point_ids = HashSet::new();
        for part in &self.parts {
            if !part_ids.insert(part.id.as_str()) {
                return Err(RubricError::DuplicatePartId(part.id.clone()));
            }
            if part.points.is_empty() {
                return Err(RubricError::EmptyPart(part.id.clone()));
            }
            for pt in &part.points {
                if pt.value <= Centipoints::ZERO {
                    return Err(RubricError::NonPositivePoint(pt.id.clone()));
                }
                if !point_ids.insert(pt.id.as_str()) {
                    return Err(RubricError::DuplicatePointId(pt.id.clone()));
                }
            }
            let computed: Centipoints = part.points.iter().map(|p| p.value).sum();
            if computed != part.total {
                return Err(RubricError::TotalMismatch {
                    part: part.id.clone(),
                    declared: part.total,
                    computed,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RubricError {
    #[error("cannot read rubric {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed rubric {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("part `{part}` declares {declared} but its points sum to {computed}")]
    TotalMismatch {
        part: String,
        declared: Centipoints,
        computed: Centipoints,
    },
    #[error("part `{0}` has no scoring points")]
    EmptyPart(String),
    #[error("duplicate part id `{0}`")]
    DuplicatePartId(String),
    #[error("duplicate scoring point id `{0}`")]
    DuplicatePointId(String),
    #[error("scoring point `{0}` must be worth more than zero")]
    NonPositivePoint(String),
}

/// Load a rubric file and check that every part total matches its points.
pub fn load_rubric(path: impl AsRef<Path>) -> Result<Rubric, RubricError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| RubricError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let rubric = parse_rubric(&text).map_err(|message| RubricError::Malformed {
        path: path.to_path_buf(),
        message,
    })?;
    rubric.validate()?;
    Ok(rubric)
}

fn parse_rubric(text: &str) -> Result<Rubric, String> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct File {
        problem_id: String,
        #[serde(default)]
        parts: Vec<PartFile>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct PartFile {
        id: String,
        total: Centipoints,
        #[serde(default)]
        points: Vec<ScoringPoint>,
    }
    let file: File = toml::from_str(text).map_err(|e| e.to_string())?;
    Ok(Rubric {
        problem_id: file.problem_id,
        parts: file
            .parts
            .into_iter()
            .map(|p| PartRubric {
                id: p.id,
                total: p.total,
                points: p.points,
            })
            .collect(),
    })
}

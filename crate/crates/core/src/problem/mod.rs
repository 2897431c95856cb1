//! Multi-part problems, their image assets, and scoring rubrics.
//!
//! A problem lives in a directory holding a `problem.toml` manifest, one
//! markdown file per subpart statement, and the declared asset files:
//!
//! ```toml
//! id = "T1"
//! title = "..."
//!
//! [[assets]]
//! id = "fig_c1"
//! path = "fig_c1.png"
//! media_kind = "png"        # png | jpeg | pdf-page
//! caption = "..."
//!
//! [[subparts]]
//! id = "T1.C.1"
//! statement = "c1.md"
//! asset_refs = ["fig_c1"]
//! max_points = "0.4"
//!
//! [[constants]]
//! symbol = "c"
//! value = "2.99792458e8"
//! unit = "m/s"
//! ```
//!
//! Statements refer to images only through declared asset ids.

mod rubric;

pub use rubric::{load_rubric, PartRubric, Rubric, RubricError, ScoringPoint};

use crate::points::Centipoints;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "problem.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MediaKind {
    Png,
    Jpeg,
    PdfPage,
}

impl MediaKind {
    pub fn mime_type(self) -> &'static str {
        match self {
            MediaKind::Png => "image/png",
            MediaKind::Jpeg => "image/jpeg",
            MediaKind::PdfPage => "application/pdf",
        }
    }

    /// Whether `bytes` start with this kind's file signature.
    pub fn matches_magic(self, bytes: &[u8]) -> bool {
        match self {
            MediaKind::Png => bytes.starts_with(b"\x89PNG\r\n\x1a\n"),
            MediaKind::Jpeg => bytes.starts_with(&[0xFF, 0xD8, 0xFF]),
            MediaKind::PdfPage => bytes.starts_with(b"%PDF"),
        }
    }
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MediaKind::Png => "png",
            MediaKind::Jpeg => "jpeg",
            MediaKind::PdfPage => "pdf-page",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageAsset {
    pub id: String,
    /// Resolved against the problem directory at load time.
    pub path: PathBuf,
    pub media_kind: MediaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

impl ImageAsset {
    pub fn read_bytes(&self) -> std::io::Result<Vec<u8>> {
        std::fs::read(&self.path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubPart {
    /// Hierarchical id such as `T1.C.1`.
    pub id: String,
    pub statement: String,
    pub asset_refs: Vec<String>,
    pub max_points: Centipoints,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constant {
    pub symbol: String,
    pub value: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub title: String,
    pub subparts: Vec<SubPart>,
    pub assets: Vec<ImageAsset>,
    pub constants: Vec<Constant>,
}

impl Problem {
    pub fn asset(&self, id: &str) -> Option<&ImageAsset> {
        self.assets.iter().find(|a| a.id == id)
    }

    pub fn subpart(&self, id: &str) -> Option<&SubPart> {
        self.subparts.iter().find(|s| s.id == id)
    }

    pub fn subpart_ids(&self) -> impl Iterator<Item = &str> {
        self.subparts.iter().map(|s| s.id.as_str())
    }

    /// Subparts belonging to a rubric part (`T1.A` owns `T1.A` and `T1.A.*`).
    pub fn subparts_under<'a>(&'a self, part_id: &'a str) -> impl Iterator<Item = &'a SubPart> {
        self.subparts
            .iter()
            .filter(move |s| id_has_prefix(&s.id, part_id))
    }

    /// Problem text as markdown: title, constants, and every subpart with its
    /// asset references.
    pub fn render_markdown(&self) -> String {
        let mut out = format!("# {} ({})\n", self.title, self.id);
        if !self.constants.is_empty() {
            out.push_str("\n## Constants\n\n");
            for c in &self.constants {
                out.push_str(&format!("- {} = {} {}\n", c.symbol, c.value, c.unit));
            }
        }
        for sub in &self.subparts {
            out.push_str(&format!(
                "\n## {} [{} pt]\n\n{}\n",
                sub.id,
                sub.max_points,
                sub.statement.trim_end()
            ));
            for asset_id in &sub.asset_refs {
                if let Some(asset) = self.asset(asset_id) {
                    out.push_str(&format!("\n[asset `{}` ({})", asset.id, asset.media_kind));
                    if let Some(caption) = &asset.caption {
                        out.push_str(&format!(": {caption}"));
                    }
                    out.push_str("]\n");
                }
            }
        }
        out
    }
}

/// Segment-aware prefix match on dotted ids: `T1.A` is a prefix of `T1.A.2`
/// but not of `T1.AB`.
pub fn id_has_prefix(id: &str, prefix: &str) -> bool {
    id == prefix
        || id
            .strip_prefix(prefix)
            .is_some_and(|rest| rest.starts_with('.'))
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("no {MANIFEST_FILE} in {0}")]
    MissingManifest(PathBuf),
    #[error("failed to parse {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("subpart `{subpart}` references unknown asset `{asset}`")]
    DanglingAssetRef { subpart: String, asset: String },
    #[error("duplicate subpart id `{0}`")]
    DuplicateSubpartId(String),
    #[error("duplicate asset id `{0}`")]
    DuplicateAssetId(String),
    #[error("problem has no subparts")]
    NoSubparts,
    #[error("invalid {what} `{value}`")]
    InvalidField { what: &'static str, value: String },
    #[error("subpart `{0}` has an empty statement")]
    EmptyStatement(String),
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    id: String,
    title: String,
    #[serde(default)]
    assets: Vec<ManifestAsset>,
    #[serde(default)]
    subparts: Vec<ManifestSubpart>,
    #[serde(default)]
    constants: Vec<Constant>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestAsset {
    id: String,
    path: PathBuf,
    media_kind: MediaKind,
    caption: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestSubpart {
    id: String,
    statement: PathBuf,
    #[serde(default)]
    asset_refs: Vec<String>,
    max_points: Centipoints,
}

/// Load and validate a problem directory.
pub fn load_problem(dir: impl AsRef<Path>) -> Result<Problem, ProblemError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(ProblemError::MissingManifest(dir.to_path_buf()));
    }
    let text = read_text(&manifest_path)?;
    let manifest: ManifestFile = toml::from_str(&text).map_err(|e| ProblemError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;

    if manifest.id.trim().is_empty() {
        return Err(ProblemError::InvalidField {
            what: "problem id",
            value: manifest.id,
        });
    }

    let mut asset_ids = HashSet::new();
    let mut assets = Vec::with_capacity(manifest.assets.len());
    for a in manifest.assets {
        if a.id.trim().is_empty() {
            return Err(ProblemError::InvalidField {
                what: "asset id",
                value: a.id,
            });
        }
        if !asset_ids.insert(a.id.clone()) {
            return Err(ProblemError::DuplicateAssetId(a.id));
        }
        let path = dir.join(&a.path);
        std::fs::File::open(&path).map_err(|source| ProblemError::Unreadable {
            path: path.clone(),
            source,
        })?;
        assets.push(ImageAsset {
            id: a.id,
            path,
            media_kind: a.media_kind,
            caption: a.caption,
        });
    }

    if manifest.subparts.is_empty() {
        return Err(ProblemError::NoSubparts);
    }
    let mut seen = HashSet::new();
    let mut subparts = Vec::with_capacity(manifest.subparts.len());
    for s in manifest.subparts {
        if s.id.trim().is_empty() {
            return Err(ProblemError::InvalidField {
                what: "subpart id",
                value: s.id,
            });
        }
        if !seen.insert(s.id.clone()) {
            return Err(ProblemError::DuplicateSubpartId(s.id));
        }
        if let Some(missing) = s.asset_refs.iter().find(|r| !asset_ids.contains(*r)) {
            return Err(ProblemError::DanglingAssetRef {
                subpart: s.id,
                asset: missing.clone(),
            });
        }
        if s.max_points < Centipoints::ZERO {
            return Err(ProblemError::InvalidField {
                what: "max_points",
                value: s.max_points.to_string(),
            });
        }
        let statement = read_text(&dir.join(&s.statement))?;
        if statement.trim().is_empty() {
            return Err(ProblemError::EmptyStatement(s.id));
        }
        subparts.push(SubPart {
            id: s.id,
            statement,
            asset_refs: s.asset_refs,
            max_points: s.max_points,
        });
    }

    for c in &manifest.constants {
        if c.value.trim().parse::<f64>().is_err() {
            return Err(ProblemError::InvalidField {
                what: "constant value",
                value: c.value.clone(),
            });
        }
    }

    Ok(Problem {
        id: manifest.id,
        title: manifest.title,
        subparts,
        assets,
        constants: manifest.constants,
    })
}

fn read_text(path: &Path) -> Result<String, ProblemError> {
    std::fs::read_to_string(path).map_err(|source| ProblemError::Unreadable {
        path: path.to_path_buf(),
        source,
    })
}

/// A consistency problem between a problem and its rubric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Issue {
    ProblemIdMismatch { problem: String, rubric: String },
    UnmatchedRubricPart { part: String },
    UnreadableAsset { asset: String, path: PathBuf },
    /// Subpart `max_points` under a part do not add up to the part total.
    PointsMismatch {
        part: String,
        rubric_total: Centipoints,
        subpart_total: Centipoints,
    },
    DanglingAssetRef { subpart: String, asset: String },
    DuplicateSubpartId { subpart: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::ProblemIdMismatch { problem, rubric } => {
                write!(f, "rubric is for `{rubric}` but problem is `{problem}`")
            }
            Issue::UnmatchedRubricPart { part } => {
                write!(f, "rubric part `{part}` matches no subpart")
            }
            Issue::UnreadableAsset { asset, path } => {
                write!(f, "asset `{asset}` at {} is unreadable", path.display())
            }
            Issue::PointsMismatch {
                part,
                rubric_total,
                subpart_total,
            } => write!(
                f,
                "part `{part}`: rubric total {rubric_total} but subparts carry {subpart_total}"
            ),
            Issue::DanglingAssetRef { subpart, asset } => {
                write!(f, "subpart `{subpart}` references unknown asset `{asset}`")
            }
            Issue::DuplicateSubpartId { subpart } => write!(f, "duplicate subpart `{subpart}`"),
        }
    }
}

/// Cross-check a problem against a rubric. Returns every issue found.
pub fn validate_problem(problem: &Problem, rubric: &Rubric) -> Vec<Issue> {
    let mut issues = Vec::new();
    if problem.id != rubric.problem_id {
        issues.push(Issue::ProblemIdMismatch {
            problem: problem.id.clone(),
            rubric: rubric.problem_id.clone(),
        });
    }

    let mut seen = HashSet::new();
    for sub in &problem.subparts {
        if !seen.insert(sub.id.as_str()) {
            issues.push(Issue::DuplicateSubpartId {
                subpart: sub.id.clone(),
            });
        }
        for asset in &sub.asset_refs {
            if problem.asset(asset).is_none() {
                issues.push(Issue::DanglingAssetRef {
                    subpart: sub.id.clone(),
                    asset: asset.clone(),
                });
            }
        }
    }

    for asset in &problem.assets {
        if std::fs::File::open(&asset.path).is_err() {
            issues.push(Issue::UnreadableAsset {
                asset: asset.id.clone(),
                path: asset.path.clone(),
            });
        }
    }

    for part in &rubric.parts {
        let under: Vec<&SubPart> = problem.subparts_under(&part.id).collect();
        if under.is_empty() {
            issues.push(Issue::UnmatchedRubricPart {
                part: part.id.clone(),
            });
            continue;
        }
        let subpart_total: Centipoints = under.iter().map(|s| s.max_points).sum();
        // All-zero max_points means the manifest leaves allocation to the rubric.
        if subpart_total != Centipoints::ZERO && subpart_total != part.total {
            issues.push(Issue::PointsMismatch {
                part: part.id.clone(),
                rubric_total: part.total,
                subpart_total,
            });
        }
    }
    issues
}

use super::{aggregate, RunStats, ScoreError, ScoreReport};
use crate::points::Centipoints;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub stats: RunStats,
    pub max: Centipoints,
}

/// Per-part and total statistics for one problem over its scored runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSection {
    pub problem_id: String,
    pub runs: Vec<String>,
    pub parts: Vec<ReportRow>,
    pub total: ReportRow,
    /// True when any run was graded by a judge model.
    pub includes_model_grades: bool,
}

impl ReportSection {
    pub fn from_reports(problem_id: &str, reports: &[ScoreReport]) -> Result<Self, ScoreError> {
        let first = reports.first().ok_or(ScoreError::EmptyInput)?;
        let mut parts = Vec::new();
        for p in &first.per_part {
            let scores: Vec<Centipoints> = reports
                .iter()
                .map(|r| r.part(&p.part).unwrap_or(Centipoints::ZERO))
                .collect();
            let label = p
                .part
                .strip_prefix(problem_id)
                .and_then(|s| s.strip_prefix('.'))
                .unwrap_or(&p.part);
            parts.push(ReportRow {
                label: format!("Part {label}"),
                stats: aggregate(&scores)?,
                max: p.max,
            });
        }
        let totals: Vec<Centipoints> = reports.iter().map(|r| r.total).collect();
        Ok(ReportSection {
            problem_id: problem_id.into(),
            runs: reports.iter().map(|r| r.run_id.clone()).collect(),
            total: ReportRow {
                label: "Total".into(),
                stats: aggregate(&totals)?,
                max: first.per_part.iter().map(|p| p.max).sum(),
            },
            parts,
            includes_model_grades: reports.iter().any(|r| !r.official),
        })
    }
}

/// Aligned text table: one section per problem with `mean ± std` per part
/// and for the total.
pub fn render_table(sections: &[ReportSection]) -> String {
    let mut out = String::new();
    for (i, s) in sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Problem {} ({} runs)", s.problem_id, s.runs.len()));
        if s.includes_model_grades {
            out.push_str(" [includes judge-model grades, not official]");
        }
        out.push('\n');
        let rows: Vec<&ReportRow> = s.parts.iter().chain(std::iter::once(&s.total)).collect();
        let w = rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(4);
        let cells: Vec<String> = rows.iter().map(|r| r.stats.to_string()).collect();
        let cw = cells.iter().map(|c| c.chars().count()).max().unwrap_or(0).max("Score".len());
        out.push_str(&format!("{:<w$}  {:>cw$}  {:>6}\n", "Part", "Score", "Full"));
        for (row, cell) in rows.iter().zip(&cells) {
            out.push_str(&format!("{:<w$}  {:>cw$}  {:>6}\n", row.label, cell, row.max.to_string()));
        }
    }
    out
}

use super::ScoreError;
use rust_decimal::Decimal;
use std::str::FromStr;

/// Parse plain or scientific decimal text exactly.
pub fn parse_decimal(text: &str) -> Result<Decimal, String> {
    let t = text.trim();
    Decimal::from_str(t)
        .or_else(|_| Decimal::from_scientific(t))
        .map_err(|_| format!("`{t}` is not a decimal number"))
}

/// One reading per line; blank lines and `#` comments are skipped.
pub fn parse_readings(text: &str) -> Result<Vec<Decimal>, ScoreError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_decimal(l).map_err(|e| ScoreError::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Mean absolute error, computed exactly.
pub fn mae(readings: &[Decimal], gt: Decimal) -> Result<Decimal, ScoreError> {
    if readings.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    let sum: Decimal = readings.iter().map(|r| (*r - gt).abs()).sum();
    Ok(sum / Decimal::from(readings.len()))
}

/// Indices whose reading differs from `gt` by strictly more than `tol`.
pub fn flag_outliers(readings: &[Decimal], gt: Decimal, tol: Decimal) -> Result<Vec<usize>, ScoreError> {
    if tol <= Decimal::ZERO {
        return Err(ScoreError::NonPositiveTolerance);
    }
    Ok(readings
        .iter()
        .enumerate()
        .filter(|(_, r)| (**r - gt).abs() > tol)
        .map(|(i, _)| i)
        .collect())
}

use super::ScoreError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Largest digit count the shipped answer data can support.
pub const MAX_DIGITS: usize = 5;

/// A nonzero number as sign, significant digits, and the decimal exponent of
/// the first digit. `2.8686E+3` is `+`, `28686`, `3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SciValue {
    pub negative: bool,
    pub mantissa_digits: String,
    pub exponent: i32,
}

impl FromStr for SciValue {
    type Err = ScoreError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |why: &str| ScoreError::Parse(format!("`{text}`: {why}"));
        let s = text.trim();
        let (negative, s) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => {
                let exp: i32 = s[i + 1..]
                    .parse()
                    .map_err(|_| err("exponent is not an integer"))?;
                (&s[..i], exp)
            }
            None => (s, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err("no digits"));
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err("mantissa must be decimal digits"));
        }
        let all = format!("{int_part}{frac_part}");
        let zeros = all.bytes().take_while(|b| *b == b'0').count();
        if zeros == all.len() {
            return Err(err("zero has no significant digits"));
        }
        Ok(SciValue {
            negative,
            mantissa_digits: all[zeros..].to_string(),
            exponent: int_part.len() as i32 - 1 - zeros as i32 + exp,
        })
    }
}

impl fmt::Display for SciValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negative { "-" } else { "" };
        let (lead, rest) = self.mantissa_digits.split_at(1);
        let dot = if rest.is_empty() { "" } else { "." };
        write!(f, "{sign}{lead}{dot}{rest}E{:+}", self.exponent)
    }
}

/// First `k` significant digits as an integer, zero-padded. `None` when the
/// prefix would not fit in a u128.
fn prefix(digits: &str, k: i64) -> Option<u128> {
    if k <= 0 {
        return Some(0);
    }
    if k > 38 {
        return None;
    }
    let mut v: u128 = 0;
    for i in 0..k as usize {
        let d = digits.as_bytes().get(i).map_or(0, |b| b - b'0');
        v = v * 10 + d as u128;
    }
    Some(v)
}

/// Whether `answer` matches `gt` to within ±1 on the `n`-th significant
/// digit. Both are truncated to integers at the scale of gt's `n`-th digit.
pub fn digit_accurate(answer: &SciValue, gt: &SciValue, n: usize) -> Result<bool, ScoreError> {
    if !(1..=MAX_DIGITS).contains(&n) {
        return Err(ScoreError::DigitsOutOfRange { n, max: MAX_DIGITS });
    }
    if answer.negative != gt.negative {
        return Ok(false);
    }
    let k = n as i64 + (answer.exponent as i64 - gt.exponent as i64);
    let b = prefix(&gt.mantissa_digits, n as i64).expect("n is small");
    Ok(match prefix(&answer.mantissa_digits, k) {
        Some(a) => a.abs_diff(b) <= 1,
        None => false,
    })
}

pub fn count_accurate(pairs: &[(SciValue, SciValue)], n: usize) -> Result<usize, ScoreError> {
    if !(1..=MAX_DIGITS).contains(&n) {
        return Err(ScoreError::DigitsOutOfRange { n, max: MAX_DIGITS });
    }
    let mut count = 0;
    for (answer, gt) in pairs {
        if digit_accurate(answer, gt, n)? {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertRecord {
    pub id: String,
    pub query: String,
    pub gt: String,
    pub answer_without_tool: String,
    pub answer_with_tool: String,
}

impl ExpertRecord {
    pub fn gt(&self) -> Result<SciValue, ScoreError> {
        self.gt.parse().map_err(|e| self.tag(e))
    }

    pub fn without_tool(&self) -> Result<SciValue, ScoreError> {
        self.answer_without_tool.parse().map_err(|e| self.tag(e))
    }

    pub fn with_tool(&self) -> Result<SciValue, ScoreError> {
        self.answer_with_tool.parse().map_err(|e| self.tag(e))
    }

    fn tag(&self, e: ScoreError) -> ScoreError {
        ScoreError::Parse(format!("record {}: {e}", self.id))
    }
}

/// Load the expert QA file and check that every value parses.
pub fn load_expert_qa(path: impl AsRef<Path>) -> Result<Vec<ExpertRecord>, ScoreError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct File {
        records: Vec<ExpertRecord>,
    }
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScoreError::Io(format!("{}: {e}", path.display())))?;
    let file: File = toml::from_str(&text).map_err(|e| ScoreError::Parse(format!("{}: {e}", path.display())))?;
    for r in &file.records {
        r.gt()?;
        r.without_tool()?;
        r.with_tool()?;
    }
    Ok(file.records)
}

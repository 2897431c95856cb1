use super::ast::{write_string_literal, ValueExpr};
use std::collections::BTreeMap;
use std::fmt;

/// A runtime value produced by evaluating a [`ValueExpr`].
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Num(String),
    Bool(bool),
    Null,
    List(Vec<Value>),
    Map(Vec<(String, Value)>),
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Text form: strings verbatim, everything else in literal syntax.
    pub fn to_text(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            other => other.to_string(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Str(s) => serde_json::Value::String(s.clone()),
            Value::Num(n) => serde_json::from_str::<serde_json::Number>(n.trim_start_matches('+'))
                .map(serde_json::Value::Number)
                .unwrap_or_else(|_| serde_json::Value::String(n.clone())),
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Null => serde_json::Value::Null,
            Value::List(items) => items.iter().map(Value::to_json).collect(),
            Value::Map(entries) => entries
                .iter()
                .map(|(k, v)| (k.clone(), v.to_json()))
                .collect::<serde_json::Map<_, _>>()
                .into(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write_string_literal(f, s),
            Value::Num(n) => f.write_str(n),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Null => f.write_str("null"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            Value::Map(entries) => {
                f.write_str("{")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_string_literal(f, k)?;
                    write!(f, ": {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Keyword arguments handed to a tool.
pub type ToolArgs = BTreeMap<String, Value>;

/// Evaluate an expression against script-local bindings. Returns the name of
/// the first unbound variable on failure.
pub fn evaluate(expr: &ValueExpr, bindings: &BTreeMap<String, Value>) -> Result<Value, String> {
    Ok(match expr {
        ValueExpr::Str(s) => Value::Str(s.clone()),
        ValueExpr::Num(n) => Value::Num(n.clone()),
        ValueExpr::Bool(b) => Value::Bool(*b),
        ValueExpr::Null => Value::Null,
        ValueExpr::Var(name) => bindings.get(name).cloned().ok_or_else(|| name.clone())?,
        ValueExpr::List(items) => Value::List(
            items
                .iter()
                .map(|i| evaluate(i, bindings))
                .collect::<Result<_, _>>()?,
        ),
        ValueExpr::Map(entries) => Value::Map(
            entries
                .iter()
                .map(|(k, v)| Ok((k.clone(), evaluate(v, bindings)?)))
                .collect::<Result<_, String>>()?,
        ),
    })
}

use std::fmt;

/// A parsed action script. Equality ignores `source_text`.
#[derive(Debug, Clone)]
pub struct ActionScript {
    pub statements: Vec<Statement>,
    pub source_text: String,
}

impl PartialEq for ActionScript {
    fn eq(&self, other: &Self) -> bool {
        self.statements == other.statements
    }
}

impl ActionScript {
    pub fn final_answer(&self) -> Option<&[(String, ValueExpr)]> {
        match self.statements.last() {
            Some(Statement::FinalAnswer(args)) => Some(args),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Let { name: String, call: Call },
    Expr(Call),
    FinalAnswer(Vec<(String, ValueExpr)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub tool: String,
    /// Keyword arguments in source order; names are unique.
    pub args: Vec<(String, ValueExpr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueExpr {
    Str(String),
    /// Decimal literal kept verbatim so rendering is lossless.
    Num(String),
    Bool(bool),
    Null,
    Var(String),
    List(Vec<ValueExpr>),
    Map(Vec<(String, ValueExpr)>),
}

pub const KEYWORDS: [&str; 5] = ["let", "final_answer", "true", "false", "null"];

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for ActionScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for stmt in &self.statements {
            writeln!(f, "{stmt}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Let { name, call } => write!(f, "let {name} = {call}"),
            Statement::Expr(call) => write!(f, "{call}"),
            Statement::FinalAnswer(args) => {
                f.write_str("final_answer(")?;
                write_args(f, args)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.tool)?;
        write_args(f, &self.args)?;
        f.write_str(")")
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[(String, ValueExpr)]) -> fmt::Result {
    for (i, (name, value)) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{name}={value}")?;
    }
    Ok(())
}

impl fmt::Display for ValueExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueExpr::Str(s) => write_string_literal(f, s),
            ValueExpr::Num(n) => f.write_str(n),
            ValueExpr::Bool(b) => write!(f, "{b}"),
            ValueExpr::Null => f.write_str("null"),
            ValueExpr::Var(name) => f.write_str(name),
            ValueExpr::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            ValueExpr::Map(entries) => {
                f.write_str("{")?;
                for (i, (key, value)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_string_literal(f, key)?;
                    write!(f, ": {value}")?;
                }
                f.write_str("}")
            }
        }
    }
}

pub(crate) fn write_string_literal(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c if c.is_control() => write!(f, "\\u{:04x}", c as u32)?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

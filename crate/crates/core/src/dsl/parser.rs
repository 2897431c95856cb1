//! Lexer and recursive-descent parser for action scripts.

use super::ast::{is_identifier, ActionScript, Call, Statement, ValueExpr, KEYWORDS};
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("`{0}` is bound more than once")]
    DuplicateBinding(String),
    #[error("final_answer must be the last statement")]
    FinalAnswerNotLast,
    #[error("argument `{0}` given more than once")]
    DuplicateArgument(String),
    #[error("map key {0:?} given more than once")]
    DuplicateKey(String),
    #[error("`{0}` is not bound by an earlier let")]
    UndefinedVariable(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Eq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Eof => "end of script".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, col: usize, expected: &str, found: String) -> ParseError {
        ParseError::Syntax {
            line,
            col,
            expected: expected.to_string(),
            found,
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(&c) = self.chars.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '#' {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(&c) = self.chars.peek() else {
                out.push(Spanned {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = match c {
                '(' | ')' | '[' | ']' | '{' | '}' | ',' | ':' | '=' => {
                    self.bump();
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        _ => Tok::Eq,
                    }
                }
                '"' => Tok::Str(self.string(line, col)?),
                c if c.is_ascii_digit() || c == '-' || c == '+' => Tok::Num(self.number(line, col)?),
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut ident = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            ident.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(ident)
                }
                other => {
                    return Err(self.error(line, col, "a token", format!("character {other:?}")))
                }
            };
            out.push(Spanned { tok, line, col });
        }
    }

    fn string(&mut self, line: usize, col: usize) -> Result<String, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            let (l, c) = (self.line, self.col);
            match self.bump() {
                None => {
                    return Err(self.error(line, col, "closing `\"`", "end of script".into()))
                }
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('/') => s.push('/'),
                    Some('n') => s.push('\n'),
                    Some('r') => s.push('\r'),
                    Some('t') => s.push('\t'),
                    Some('u') => {
                        let mut hex = String::new();
                        for _ in 0..4 {
                            match self.bump() {
                                Some(h) if h.is_ascii_hexdigit() => hex.push(h),
                                _ => {
                                    return Err(self.error(l, c, "4 hex digits after \\u", hex))
                                }
                            }
                        }
                        let code = u32::from_str_radix(&hex, 16).expect("validated hex");
                        match char::from_u32(code) {
                            Some(ch) => s.push(ch),
                            None => {
                                return Err(self.error(
                                    l,
                                    c,
                                    "a unicode scalar value",
                                    format!("\\u{hex}"),
                                ))
                            }
                        }
                    }
                    other => {
                        return Err(self.error(
                            l,
                            c,
                            "an escape sequence",
                            other.map_or("end of script".into(), |ch| format!("\\{ch}")),
                        ))
                    }
                },
                Some(ch) => s.push(ch),
            }
        }
    }

    fn number(&mut self, line: usize, col: usize) -> Result<String, ParseError> {
        let mut text = String::new();
        if let Some(&sign) = self.chars.peek() {
            if sign == '-' || sign == '+' {
                text.push(sign);
                self.bump();
            }
        }
        let digits = |lex: &mut Self, text: &mut String| -> usize {
            let mut n = 0;
            while let Some(&c) = lex.chars.peek() {
                if c.is_ascii_digit() {
                    text.push(c);
                    lex.bump();
                    n += 1;
                } else {
                    break;
                }
            }
            n
        };
        if digits(self, &mut text) == 0 {
            return Err(self.error(line, col, "digits", text));
        }
        if self.chars.peek() == Some(&'.') {
            text.push('.');
            self.bump();
            if digits(self, &mut text) == 0 {
                return Err(self.error(line, col, "digits after `.`", text));
            }
        }
        if let Some(&e) = self.chars.peek() {
            if e == 'e' || e == 'E' {
                text.push(e);
                self.bump();
                if let Some(&sign) = self.chars.peek() {
                    if sign == '-' || sign == '+' {
                        text.push(sign);
                        self.bump();
                    }
                }
                if digits(self, &mut text) == 0 {
                    return Err(self.error(line, col, "exponent digits", text));
                }
            }
        }
        Ok(text)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: expected.to_string(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                let name = name.clone();
                self.next();
                Ok(name)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn script(&mut self) -> Result<Vec<Statement>, ParseError> {
        let mut statements = Vec::new();
        while self.peek().tok != Tok::Eof {
            statements.push(self.statement()?);
        }
        if statements.is_empty() {
            return Err(self.unexpected("at least one statement"));
        }
        Ok(statements)
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        match &self.peek().tok {
            Tok::Ident(kw) if kw == "let" => {
                self.next();
                let name = self.ident("a binding name")?;
                self.expect(Tok::Eq, "`=`")?;
                let call = self.call()?;
                Ok(Statement::Let { name, call })
            }
            Tok::Ident(kw) if kw == "final_answer" => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let args = self.args()?;
                self.expect(Tok::RParen, "`)` or `,`")?;
                Ok(Statement::FinalAnswer(args))
            }
            Tok::Ident(_) => Ok(Statement::Expr(self.call()?)),
            _ => Err(self.unexpected("a statement")),
        }
    }

    fn call(&mut self) -> Result<Call, ParseError> {
        let tool = self.ident("a tool name")?;
        self.expect(Tok::LParen, "`(`")?;
        let args = self.args()?;
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(Call { tool, args })
    }

    fn args(&mut self) -> Result<Vec<(String, ValueExpr)>, ParseError> {
        let mut args: Vec<(String, ValueExpr)> = Vec::new();
        if self.peek().tok == Tok::RParen {
            return Ok(args);
        }
        loop {
            let name = self.ident("a keyword argument name")?;
            self.expect(Tok::Eq, "`=` (arguments are keyword-only)")?;
            let value = self.expr()?;
            if args.iter().any(|(n, _)| *n == name) {
                return Err(ParseError::DuplicateArgument(name));
            }
            args.push((name, value));
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                return Ok(args);
            }
        }
    }

    fn expr(&mut self) -> Result<ValueExpr, ParseError> {
        let tok = self.peek().tok.clone();
        let value = match tok {
            Tok::Str(s) => ValueExpr::Str(s),
            Tok::Num(n) => ValueExpr::Num(n),
            Tok::Ident(id) => match id.as_str() {
                "true" => ValueExpr::Bool(true),
                "false" => ValueExpr::Bool(false),
                "null" => ValueExpr::Null,
                "let" | "final_answer" => return Err(self.unexpected("a value")),
                _ => ValueExpr::Var(id),
            },
            Tok::LBracket => {
                self.next();
                let mut items = Vec::new();
                if self.peek().tok != Tok::RBracket {
                    loop {
                        items.push(self.expr()?);
                        if self.peek().tok == Tok::Comma {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket, "`]` or `,`")?;
                return Ok(ValueExpr::List(items));
            }
            Tok::LBrace => {
                self.next();
                let mut entries: Vec<(String, ValueExpr)> = Vec::new();
                if self.peek().tok != Tok::RBrace {
                    loop {
                        let Tok::Str(key) = self.peek().tok.clone() else {
                            return Err(self.unexpected("a string map key"));
                        };
                        self.next();
                        self.expect(Tok::Colon, "`:`")?;
                        let value = self.expr()?;
                        if entries.iter().any(|(k, _)| *k == key) {
                            return Err(ParseError::DuplicateKey(key));
                        }
                        entries.push((key, value));
                        if self.peek().tok == Tok::Comma {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace, "`}` or `,`")?;
                return Ok(ValueExpr::Map(entries));
            }
            _ => return Err(self.unexpected("a value")),
        };
        self.next();
        Ok(value)
    }
}

/// Parse an action script and check its binding rules.
pub fn parse_script(src: &str) -> Result<ActionScript, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    let statements = Parser { toks, pos: 0 }.script()?;
    check_bindings(&statements)?;
    Ok(ActionScript {
        statements,
        source_text: src.to_string(),
    })
}

fn check_bindings(statements: &[Statement]) -> Result<(), ParseError> {
    let mut bound: HashSet<&str> = HashSet::new();
    for (i, stmt) in statements.iter().enumerate() {
        let args = match stmt {
            Statement::Let { call, .. } | Statement::Expr(call) => &call.args,
            Statement::FinalAnswer(args) => {
                if i + 1 != statements.len() {
                    return Err(ParseError::FinalAnswerNotLast);
                }
                args
            }
        };
        for (_, value) in args {
            check_vars(value, &bound)?;
        }
        if let Statement::Let { name, .. } = stmt {
            debug_assert!(is_identifier(name));
            if !bound.insert(name) {
                return Err(ParseError::DuplicateBinding(name.clone()));
            }
        }
    }
    Ok(())
}

fn check_vars(value: &ValueExpr, bound: &HashSet<&str>) -> Result<(), ParseError> {
    match value {
        ValueExpr::Var(name) if !bound.contains(name.as_str()) => {
            Err(ParseError::UndefinedVariable(name.clone()))
        }
        ValueExpr::List(items) => items.iter().try_for_each(|v| check_vars(v, bound)),
        ValueExpr::Map(entries) => entries.iter().try_for_each(|(_, v)| check_vars(v, bound)),
        _ => Ok(()),
    }
}

//! Tokenizer and s-expression reader with line/column tracking.

use std::fmt;

use super::error::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    /// `[a-z][a-z0-9_-]*`
    Ident(String),
    /// `?name`, stored without the `?`.
    Var(String),
    /// `:name`, stored without the `:`.
    Keyword(String),
    Number(f64),
    /// One of `< <= > >= = + - *`.
    Symbol(&'static str),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Var(s) => write!(f, "`?{s}`"),
            Token::Keyword(s) => write!(f, "`:{s}`"),
            Token::Number(n) => write!(f, "`{n}`"),
            Token::Symbol(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Leaf(Token, Span),
    List(Vec<Sexp>, Span),
}

impl Sexp {
    pub fn span(&self) -> Span {
        match self {
            Sexp::Leaf(_, s) | Sexp::List(_, s) => *s,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Sexp::Leaf(t, _) => t.to_string(),
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Leaf(t, _)) => format!("list starting with {t}"),
                _ => "list".to_string(),
            },
        }
    }
}

const SYMBOLS: [&str; 8] = ["<=", ">=", "<", ">", "=", "+", "-", "*"];

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

enum Lexeme {
    Open(Span),
    Close(Span),
    Token(Token, Span),
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.column,
        }
    }

    fn error(&self, span: Span, expected: &[&str], found: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: span.line,
            column: span.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.into(),
        }
    }

    fn take_word(&mut self) -> String {
        let mut out = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-' {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        out
    }

    fn take_number(&mut self, span: Span) -> Result<f64, SyntaxError> {
        let mut raw = String::new();
        if self.chars.peek() == Some(&'-') {
            raw.push('-');
            self.bump();
        }
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() || c == '.' {
                raw.push(c);
                self.bump();
            } else {
                break;
            }
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() && !raw.ends_with('.') && !raw.starts_with('.') => Ok(v),
            _ => Err(self.error(span, &["number"], format!("`{raw}`"))),
        }
    }

    fn next_lexeme(&mut self) -> Result<Option<Lexeme>, SyntaxError> {
        loop {
            match self.chars.peek() {
                None => return Ok(None),
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some(';') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
            }
        }
        let span = self.span();
        let c = *self.chars.peek().expect("peeked above");
        let lexeme = match c {
            '(' => {
                self.bump();
                Lexeme::Open(span)
            }
            ')' => {
                self.bump();
                Lexeme::Close(span)
            }
            '?' | ':' => {
                self.bump();
                let word = self.take_word();
                if !word.starts_with(|c: char| c.is_ascii_lowercase()) {
                    let what = if c == '?' { "variable name" } else { "keyword" };
                    return Err(self.error(span, &[what], format!("`{c}{word}`")));
                }
                if c == '?' {
                    Lexeme::Token(Token::Var(word), span)
                } else {
                    Lexeme::Token(Token::Keyword(word), span)
                }
            }
            c if c.is_ascii_digit() => Lexeme::Token(Token::Number(self.take_number(span)?), span),
            '-' => {
                // A minus directly followed by a digit is a negative literal.
                let mut probe = self.chars.clone();
                probe.next();
                if probe.peek().is_some_and(|c| c.is_ascii_digit()) {
                    Lexeme::Token(Token::Number(self.take_number(span)?), span)
                } else {
                    self.bump();
                    Lexeme::Token(Token::Symbol("-"), span)
                }
            }
            '<' | '>' | '=' | '+' | '*' => {
                self.bump();
                let sym = if (c == '<' || c == '>') && self.chars.peek() == Some(&'=') {
                    self.bump();
                    if c == '<' {
                        "<="
                    } else {
                        ">="
                    }
                } else {
                    SYMBOLS
                        .iter()
                        .copied()
                        .find(|s| s.len() == 1 && s.starts_with(c))
                        .expect("single-char symbol")
                };
                Lexeme::Token(Token::Symbol(sym), span)
            }
            c if c.is_ascii_lowercase() => Lexeme::Token(Token::Ident(self.take_word()), span),
            other => {
                return Err(self.error(span, &["`(`", "`)`", "identifier"], format!("`{other}`")))
            }
        };
        Ok(Some(lexeme))
    }
}

/// Reads exactly one top-level s-expression list from `text`.
pub fn read_one(text: &str) -> Result<Sexp, SyntaxError> {
    let mut all = read_all(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        0 => Err(SyntaxError {
            line: 1,
            column: 1,
            expected: vec!["`(`".into()],
            found: "end of input".into(),
        }),
        _ => {
            let span = all[1].span();
            Err(SyntaxError {
                line: span.line,
                column: span.column,
                expected: vec!["end of input".into()],
                found: all[1].describe(),
            })
        }
    }
}

/// Reads every top-level s-expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let mut lexer = Lexer::new(text);
    let mut stack: Vec<(Vec<Sexp>, Span)> = Vec::new();
    let mut top = Vec::new();
    while let Some(lexeme) = lexer.next_lexeme()? {
        match lexeme {
            Lexeme::Open(span) => stack.push((Vec::new(), span)),
            Lexeme::Close(span) => {
                let (items, open) = stack
                    .pop()
                    .ok_or_else(|| lexer.error(span, &["`(`", "end of input"], "`)`"))?;
                let list = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            Lexeme::Token(tok, span) => match stack.last_mut() {
                Some((parent, _)) => parent.push(Sexp::Leaf(tok, span)),
                None => return Err(lexer.error(span, &["`(`"], tok.to_string())),
            },
        }
    }
    if !stack.is_empty() {
        let span = lexer.span();
        return Err(lexer.error(span, &["`)`"], "end of input"));
    }
    Ok(top)
}

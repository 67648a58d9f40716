//! Reader and writer for the Python-literal dictionaries exchanged with the
//! model. Entries keep their order and duplicate keys survive.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PyValue {
    Str(String),
    Int(i64),
    None,
    List(Vec<PyValue>),
    Dict(Vec<(PyValue, PyValue)>),
}

impl PyValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            PyValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            PyValue::Int(i) => Some(*i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("python literal parse error at byte {offset}: {message}")]
pub struct PyParseError {
    pub offset: usize,
    pub message: String,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, PyParseError> {
        Err(PyParseError { offset: self.pos, message: message.into() })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn expect(&mut self, want: char) -> Result<(), PyParseError> {
        self.skip_ws();
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => self.err(format!("expected '{want}', found '{c}'")),
            None => self.err(format!("expected '{want}', found end of input")),
        }
    }

    fn value(&mut self) -> Result<PyValue, PyParseError> {
        self.skip_ws();
        match self.peek() {
            Some('{') => self.dict(),
            Some('[') => self.list('[', ']'),
            Some('(') => self.list('(', ')'),
            Some('\'' | '"') => self.string().map(PyValue::Str),
            Some(c) if c == '-' || c.is_ascii_digit() => self.int(),
            Some(c) if c.is_alphabetic() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                    self.bump();
                }
                match &self.src[start..self.pos] {
                    "None" | "null" => Ok(PyValue::None),
                    word => {
                        self.pos = start;
                        self.err(format!("unexpected word '{word}'"))
                    }
                }
            }
            Some(c) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }

    fn int(&mut self) -> Result<PyValue, PyParseError> {
        let start = self.pos;
        if self.peek() == Some('-') {
            self.bump();
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        match self.src[start..self.pos].parse() {
            Ok(v) => Ok(PyValue::Int(v)),
            Err(_) => {
                self.pos = start;
                self.err("bad integer")
            }
        }
    }

    fn string(&mut self) -> Result<String, PyParseError> {
        let quote = self.bump().expect("caller checked the quote");
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return self.err("unterminated string"),
                Some(c) if c == quote => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c) => out.push(c),
                    None => return self.err("unterminated escape"),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn list(&mut self, open: char, close: char) -> Result<PyValue, PyParseError> {
        self.expect(open)?;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(close) {
                self.bump();
                return Ok(PyValue::List(items));
            }
            items.push(self.value()?);
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some(c) if c == close => return Ok(PyValue::List(items)),
                _ => return self.err(format!("expected ',' or '{close}'")),
            }
        }
    }

    fn dict(&mut self) -> Result<PyValue, PyParseError> {
        self.expect('{')?;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some('}') {
                self.bump();
                return Ok(PyValue::Dict(items));
            }
            let key = self.value()?;
            self.expect(':')?;
            let value = self.value()?;
            items.push((key, value));
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some('}') => return Ok(PyValue::Dict(items)),
                _ => return self.err("expected ',' or '}'"),
            }
        }
    }
}

/// Parses one literal. Text around the outermost braces is ignored.
pub fn parse(input: &str) -> Result<PyValue, PyParseError> {
    let start = input.find('{').ok_or(PyParseError { offset: 0, message: "no dictionary found".into() })?;
    let mut p = Parser { src: input, pos: start };
    let v = p.value()?;
    Ok(v)
}

/// Single-quoted Python string literal.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

pub fn format(value: &PyValue) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut String, value: &PyValue) {
    match value {
        PyValue::Str(s) => out.push_str(&quote(s)),
        PyValue::Int(i) => {
            let _ = write!(out, "{i}");
        }
        PyValue::None => out.push_str("None"),
        PyValue::List(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, v);
            }
            out.push(']');
        }
        PyValue::Dict(items) => {
            out.push('{');
            for (i, (k, v)) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, k);
                out.push_str(" : ");
                write_value(out, v);
            }
            out.push('}');
        }
    }
}

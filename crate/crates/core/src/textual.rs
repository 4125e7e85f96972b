//! Call-expression syntax shared by every spec's textual form.
//!
//! ```text
//! expr  := ident [ '(' [ arg { ',' arg } ] ')' ]
//! arg   := ident '=' value | value
//! value := number | expr
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Call(Call),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Option<String>,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub name: String,
    pub args: Vec<Arg>,
}

pub fn parse(text: &str) -> Result<Call> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
    };
    let call = p.call()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("trailing input"));
    }
    Ok(call)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> Error {
        Error::parse(self.src, format!("{reason} at column {}", self.pos + 1))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos || self.bytes[start].is_ascii_digit() {
            self.pos = start;
            return Err(self.error("expected identifier"));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E') {
            self.pos += 1;
        }
        self.src[start..self.pos]
            .parse::<f64>().map_err(|_| {
            self.pos = start;
            self.error("expected number")
        })
    }

    fn call(&mut self) -> Result<Call> {
        let name = self.ident()?;
        let mut args = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            if self.peek() == Some(b')') {
                self.pos += 1;
                return Ok(Call { name, args });
            }
            loop {
                args.push(self.arg()?);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected `,` or `)`")),
                }
            }
        }
        Ok(Call { name, args })
    }

    fn value(&mut self) -> Result<Value> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'-' || c == b'+' || c == b'.' => {
                Ok(Value::Number(self.number()?))
            }
            Some(_) => Ok(Value::Call(self.call()?)),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn arg(&mut self) -> Result<Arg> {
        let save = self.pos;
        if let Some(c) = self.peek() {
            if c.is_ascii_alphabetic() || c == b'_' {
                let name = self.ident()?;
                if self.peek() == Some(b'=') {
                    self.pos += 1;
                    return Ok(Arg {
                        name: Some(name),
                        value: self.value()?,
                    });
                }
                self.pos = save;
            }
        }
        Ok(Arg {
            name: None,
            value: self.value()?,
        })
    }
}

/// Argument accessor with uniform error messages.
pub struct Args<'a> {
    call: &'a Call,
    used: Vec<bool>,
}

impl<'a> Args<'a> {
    pub fn new(call: &'a Call) -> Self {
        Self {
            call,
            used: vec![false; call.args.len()],
        }
    }

    fn err(&self, reason: String) -> Error {
        Error::parse(self.call.name.clone(), reason)
    }

    pub fn number(&mut self, name: &str) -> Result<f64> {
        self.opt_number(name)?
            .ok_or_else(|| self.err(format!("missing argument `{name}`")))
    }

    pub fn opt_number(&mut self, name: &str) -> Result<Option<f64>> {
        for (i, a) in self.call.args.iter().enumerate() {
            if a.name.as_deref() == Some(name) {
                self.used[i] = true;
                return match &a.value {
                    Value::Number(v) => Ok(Some(*v)),
                    Value::Call(_) => Err(self.err(format!("argument `{name}` must be a number"))),
                };
            }
        }
        Ok(None)
    }

    /// The next unused nested call, positional or named `name`.
    pub fn call(&mut self, name: &str) -> Result<&'a Call> {
        for (i, a) in self.call.args.iter().enumerate() {
            if self.used[i] {
                continue;
            }
            if a.name.is_none() || a.name.as_deref() == Some(name) {
                if let Value::Call(c) = &a.value {
                    self.used[i] = true;
                    return Ok(c);
                }
            }
        }
        Err(self.err(format!("missing nested argument `{name}`")))
    }

    /// Like [`Args::call`], but absent is not an error.
    pub fn opt_call(&mut self, name: &str) -> Option<&'a Call> {
        self.call(name).ok()
    }

    pub fn finish(self) -> Result<()> {
        if let Some(i) = self.used.iter().position(|u| !u) {
            let a = &self.call.args[i];
            let what = a.name.clone().unwrap_or_else(|| format!("positional #{}", i + 1));
            return Err(self.err(format!("unexpected argument `{what}`")));
        }
        Ok(())
    }
}

/// Implements `Display`-backed serde for a type with `FromStr`.
macro_rules! serde_via_text {
    ($ty:ty, $what:literal) => {
        impl serde::Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> serde::Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                struct V;
                impl serde::de::Visitor<'_> for V {
                    type Value = $ty;
                    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                        f.write_str($what)
                    }
                    fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<$ty, E> {
                        v.parse().map_err(E::custom)
                    }
                }
                d.deserialize_str(V)
            }
        }
    };
}
pub(crate) use serde_via_text;

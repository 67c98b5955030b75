//! Tokenizer for the `name(key=value,...)` text used to describe distributions
//! and censoring on the command line.
//!
//! ```text
//! call   := ident [ '(' [ param { ',' param } ] ')' ]
//! param  := ident '=' number { '|' number }
//! ```
//!
//! Whitespace is allowed between tokens. Positions are zero-based byte offsets.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Param {
    pub key: String,
    pub key_pos: usize,
    pub values: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Call {
    pub name: String,
    pub name_pos: usize,
    pub params: Vec<Param>,
    pub end: usize,
}

pub(crate) fn error(position: usize, message: impl Into<String>) -> Error {
    Error::Parse { position, message: message.into() }
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, expected: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(expected) {
            self.pos += expected.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, usize)> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos || !self.text[start..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            return Err(error(start, "expected a name"));
        }
        Ok((self.text[start..self.pos].to_ascii_lowercase(), start))
    }

    fn number(&mut self) -> Result<(f64, usize)> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let token = &self.text[start..self.pos];
        if token.is_empty() {
            return Err(error(start, "expected a number"));
        }
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((v, start)),
            _ => Err(error(start, format!("invalid number `{token}`"))),
        }
    }
}

pub(crate) fn parse_call(text: &str) -> Result<Call> {
    let mut cur = Cursor { text, pos: 0 };
    let (name, name_pos) = cur.ident()?;
    let mut params = Vec::new();
    if cur.eat('(') {
        cur.skip_ws();
        if !cur.eat(')') {
            loop {
                let (key, key_pos) = cur.ident()?;
                if params.iter().any(|p: &Param| p.key == key) {
                    return Err(error(key_pos, format!("duplicate parameter `{key}`")));
                }
                if !cur.eat('=') {
                    return Err(error(cur.pos, "expected `=`"));
                }
                let mut values = vec![cur.number()?];
                while cur.eat('|') {
                    values.push(cur.number()?);
                }
                params.push(Param { key, key_pos, values });
                if cur.eat(',') {
                    continue;
                }
                if cur.eat(')') {
                    break;
                }
                cur.skip_ws();
                return Err(error(cur.pos, "expected `,` or `)`"));
            }
        }
    }
    cur.skip_ws();
    if cur.pos != text.len() {
        return Err(error(cur.pos, "unexpected trailing input"));
    }
    Ok(Call { name, name_pos, params, end: text.len() })
}

impl Call {
    /// Takes a single-valued parameter; errors if missing or list-valued.
    pub fn scalar(&self, key: &str) -> Result<(f64, usize)> {
        let param = self.param(key)?;
        match param.values.as_slice() {
            [single] => Ok(*single),
            _ => Err(error(param.key_pos, format!("`{key}` takes a single value"))),
        }
    }

    pub fn list(&self, key: &str) -> Result<&Param> {
        self.param(key)
    }

    fn param(&self, key: &str) -> Result<&Param> {
        self.params
            .iter()
            .find(|p| p.key == key)
            .ok_or_else(|| error(self.end, format!("missing parameter `{key}` for `{}`", self.name)))
    }

    /// Rejects parameters outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for p in &self.params {
            if !allowed.contains(&p.key.as_str()) {
                return Err(error(p.key_pos, format!("unknown parameter `{}` for `{}`", p.key, self.name)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn position(text: &str) -> usize {
        match parse_call(text) {
            Err(Error::Parse { position, .. }) => position,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parses_lists_and_whitespace() {
        let call = parse_call(" pwexp( breaks = 1|2 , rates=1 | 2|0.5 ) ").unwrap();
        assert_eq!(call.name, "pwexp");
        assert_eq!(call.params.len(), 2);
        let rates: Vec<f64> = call.params[1].values.iter().map(|v| v.0).collect();
        assert_eq!(rates, vec![1.0, 2.0, 0.5]);
    }

    #[test]
    fn bare_name() {
        assert!(parse_call("none").unwrap().params.is_empty());
        assert!(parse_call("none()").unwrap().params.is_empty());
    }

    #[test]
    fn error_positions() {
        assert_eq!(position("exp(rate=)"), 9);
        assert_eq!(position("exp(rate=abc)"), 9);
        assert_eq!(position("exp(rate 1)"), 9);
        assert_eq!(position("exp(rate=1"), 10);
        assert_eq!(position("exp(rate=1) x"), 12);
        assert_eq!(position("(rate=1)"), 0);
        assert_eq!(position("exp(rate=1,rate=2)"), 11);
    }
}

//! Text grammar for expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' integer)?
//! atom   := integer | variable | '(' expr ')'
//! ```
//!
//! Variables are `x1..xN`; when `N <= 4` the aliases `x, y, z` name
//! `x1..x3` and `t` names `xN`. Rational literals are written `p/q` and fold to constants.
//! Whitespace is insignificant.

use num_bigint::BigInt;
use thiserror::Error;

use super::{e_add, e_const, e_div, e_mul, e_neg, e_pow, e_sub, mk, Expr, Node, Rational, SymFn};

const ALIASES: [&str; 4] = ["x", "y", "z", "t"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

/// Canonical printed name of variable `i` for a function of `arity` variables.
pub fn variable_name(i: usize, arity: usize) -> String {
    if arity <= ALIASES.len() {
        ALIASES[i].to_string()
    } else {
        format!("x{}", i + 1)
    }
}

pub fn parse(text: &str, arity: usize) -> Result<SymFn, ParseError> {
    let mut p = Parser::new(text, arity);
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(SymFn::from_expr(e, arity))
}

pub(crate) struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    arity: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &'a str, arity: usize) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            arity,
        }
    }

    pub(crate) fn error(&self, message: &str) -> ParseError {
        ParseError {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    pub(crate) fn arity(&self) -> usize {
        self.arity
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    pub(crate) fn set_pos(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub(crate) fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    /// Consume `token` if the remaining input starts with it.
    pub(crate) fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// Consume a keyword that is not followed by an identifier character.
    pub(crate) fn eat_keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(word.as_bytes())
            && !rest
                .get(word.len())
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat("+") {
                acc = e_add(&acc, &self.term()?);
            } else if self.peek() == Some(b'-') {
                self.pos += 1;
                acc = e_sub(&acc, &self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat("*") {
                acc = e_mul(&acc, &self.unary()?);
            } else if self.peek() == Some(b'/') {
                self.pos += 1;
                let at = self.pos;
                let rhs = self.unary()?;
                acc = e_div(&acc, &rhs).map_err(|_| ParseError {
                    pos: at,
                    message: "denominator is identically zero".into(),
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(e_neg(&self.unary()?));
        }
        if self.peek() == Some(b'+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat("^") {
            let exp = if self.eat("(") {
                let k = self.integer()?;
                if !self.eat(")") {
                    return Err(self.error("expected ')' after exponent"));
                }
                k
            } else {
                self.integer()?
            };
            let k = u32::try_from(exp)
                .map_err(|_| self.error("exponent must be a non-negative integer"))?;
            return Ok(e_pow(&base, k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a non-negative integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError {
                pos: start,
                message: "integer too large".into(),
            })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(")") {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let n: BigInt = digits.parse().expect("digits");
                Ok(e_const(Rational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                self.variable(name).ok_or(ParseError {
                    pos: start,
                    message: format!("unknown variable '{name}' for arity {}", self.arity),
                })
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn variable(&self, name: &str) -> Option<Expr> {
        let index = if let Some(digits) = name.strip_prefix('x').filter(|d| !d.is_empty()) {
            let k: usize = digits.parse().ok()?;
            k.checked_sub(1)?
        } else if self.arity <= ALIASES.len() {
            // `t` always names the last variable (the time slot of a homotopy)
            if name == "t" {
                self.arity.checked_sub(1)?
            } else {
                ALIASES[..3].iter().position(|a| *a == name)?
            }
        } else {
            return None;
        };
        (index < self.arity).then(|| mk(Node::Var(index)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{int, rat};

    fn ev(s: &str, n: usize, pt: &[Rational]) -> Rational {
        parse(s, n).unwrap().eval(pt).unwrap()
    }

    #[test]
    fn precedence_and_literals() {
        assert_eq!(ev("1 + 2*3^2", 0, &[]), int(19));
        assert_eq!(ev("-x^2", 1, &[int(3)]), int(-9));
        assert_eq!(ev("3/4 - 1/4", 0, &[]), rat(1, 2));
        assert_eq!(ev("2^(3)", 0, &[]), int(8));
        assert_eq!(ev("x1 - x2 / x3", 3, &[int(1), int(4), int(2)]), int(-1));
        assert_eq!(
            ev(" ( x+ y ) * t ", 4, &[int(1), int(2), int(0), int(5)]),
            int(15)
        );
    }

    #[test]
    fn aliases_only_for_small_arity() {
        assert!(parse("y", 2).is_ok());
        assert!(parse("y", 5).is_err());
        assert!(parse("x5", 5).is_ok());
        assert!(parse("x3", 2).is_err());
        assert!(parse("z", 2).is_err());
        assert_eq!(ev("t", 2, &[int(1), int(7)]), int(7));
        assert_eq!(ev("x*t", 3, &[int(2), int(0), int(5)]), int(10));
    }

    #[test]
    fn malformed_inputs() {
        for bad in ["", "x +", "(x", "x ^ -1", "x^y", "2 $ 3", "x y", "x/0"] {
            assert!(parse(bad, 2).is_err(), "{bad:?} should fail");
        }
    }
}

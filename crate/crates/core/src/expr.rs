//! Expression grammar shared by the harness, the weight diagnostics and the
//! growth-function specs.
//!
//! Grammar (EBNF):
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' number)?
//! base   := number | var | '|x|' | func '(' expr ')' | '(' expr ')'
//! var    := 'x1'..'x9' | 't'
//! func   := 'exp'|'log'|'ln'|'abs'|'cos'|'sin'|'min'|'max'|'sqrt'
//! ```
//! `ln` and `log` are both the natural log, `e` and `pi` are literals,
//! whitespace is insignificant, `min`/`max` take two comma-separated
//! arguments. A leading `-` is accepted on terms and on exponents.

use crate::error::{MhError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    /// Coordinate x_k, 1-based.
    Var(u8),
    /// The time/height variable `t`.
    TVar,
    /// Euclidean norm |x|.
    NormX,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Abs(Box<Expr>),
    Cos(Box<Expr>),
    Sin(Box<Expr>),
    Sqrt(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        p.skip_ws();
        if p.pos >= p.src.len() {
            return Err(p.err("empty expression"));
        }
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }

    /// Evaluates at the point `x` with time value `t`.
    ///
    /// Callers validate variable usage with [`Expr::check_vars`] first; out of
    /// range coordinates read as 0 in release builds.
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var(k) => {
                debug_assert!((*k as usize) <= x.len());
                x.get(*k as usize - 1).copied().unwrap_or(0.0)
            }
            Expr::TVar => t,
            Expr::NormX => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Expr::Neg(a) => -a.eval(x, t),
            Expr::Add(a, b) => a.eval(x, t) + b.eval(x, t),
            Expr::Sub(a, b) => a.eval(x, t) - b.eval(x, t),
            Expr::Mul(a, b) => a.eval(x, t) * b.eval(x, t),
            Expr::Div(a, b) => a.eval(x, t) / b.eval(x, t),
            Expr::Pow(a, p) => a.eval(x, t).powf(*p),
            Expr::Exp(a) => a.eval(x, t).exp(),
            Expr::Ln(a) => a.eval(x, t).ln(),
            Expr::Abs(a) => a.eval(x, t).abs(),
            Expr::Cos(a) => a.eval(x, t).cos(),
            Expr::Sin(a) => a.eval(x, t).sin(),
            Expr::Sqrt(a) => a.eval(x, t).sqrt(),
            Expr::Min(a, b) => a.eval(x, t).min(b.eval(x, t)),
            Expr::Max(a, b) => a.eval(x, t).max(b.eval(x, t)),
        }
    }

    /// Highest coordinate index referenced (0 if none).
    pub fn max_var(&self) -> u8 {
        match self {
            Expr::Var(k) => *k,
            Expr::NormX | Expr::TVar | Expr::Num(_) => 0,
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Exp(a)
            | Expr::Ln(a)
            | Expr::Abs(a)
            | Expr::Cos(a)
            | Expr::Sin(a)
            | Expr::Sqrt(a) => a.max_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn uses_t(&self) -> bool {
        match self {
            Expr::TVar => true,
            Expr::Var(_) | Expr::NormX | Expr::Num(_) => false,
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Exp(a)
            | Expr::Ln(a)
            | Expr::Abs(a)
            | Expr::Cos(a)
            | Expr::Sin(a)
            | Expr::Sqrt(a) => a.uses_t(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => a.uses_t() || b.uses_t(),
        }
    }

    /// Fails when the expression references a coordinate above `dim`, or uses
    /// `t` while `allow_t` is false.
    pub fn check_vars(&self, dim: usize, allow_t: bool) -> Result<()> {
        if self.max_var() as usize > dim {
            return Err(MhError::Name(format!("x{}", self.max_var())));
        }
        if !allow_t && self.uses_t() {
            return Err(MhError::Name("t".into()));
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> MhError {
        MhError::Expression { position: self.pos, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = if self.eat(b'-') { Expr::Neg(Box::new(self.term()?)) } else { self.term()? };
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let neg = self.eat(b'-');
        let base = self.base()?;
        let e = if self.eat(b'^') {
            let p = self.number()?;
            Expr::Pow(Box::new(base), p)
        } else {
            base
        };
        Ok(if neg { Expr::Neg(Box::new(e)) } else { e })
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'|') => {
                self.pos += 1;
                if self.src[self.pos..].starts_with(b"x|") {
                    self.pos += 2;
                    Ok(Expr::NormX)
                } else {
                    Err(self.err("expected `|x|`"))
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn ident(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "t" => Ok(Expr::TVar),
            "e" => Ok(Expr::Num(std::f64::consts::E)),
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            "exp" => Ok(Expr::Exp(Box::new(self.paren_arg()?))),
            "ln" | "log" => Ok(Expr::Ln(Box::new(self.paren_arg()?))),
            "abs" => Ok(Expr::Abs(Box::new(self.paren_arg()?))),
            "cos" => Ok(Expr::Cos(Box::new(self.paren_arg()?))),
            "sin" => Ok(Expr::Sin(Box::new(self.paren_arg()?))),
            "sqrt" => Ok(Expr::Sqrt(Box::new(self.paren_arg()?))),
            "min" => {
                let (a, b) = self.paren_args2()?;
                Ok(Expr::Min(Box::new(a), Box::new(b)))
            }
            "max" => {
                let (a, b) = self.paren_args2()?;
                Ok(Expr::Max(Box::new(a), Box::new(b)))
            }
            _ if name.len() == 2 && name.starts_with('x') => {
                let d = name.as_bytes()[1];
                if d.is_ascii_digit() && d != b'0' {
                    Ok(Expr::Var(d - b'0'))
                } else {
                    Err(MhError::Name(name.to_string()))
                }
            }
            _ => Err(MhError::Name(name.to_string())),
        }
    }

    fn paren_arg(&mut self) -> Result<Expr> {
        self.expect(b'(')?;
        let e = self.expr()?;
        self.expect(b')')?;
        Ok(e)
    }

    fn paren_args2(&mut self) -> Result<(Expr, Expr)> {
        self.expect(b'(')?;
        let a = self.expr()?;
        self.expect(b',')?;
        let b = self.expr()?;
        self.expect(b')')?;
        Ok((a, b))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.src.len() && self.src[self.pos] == b'-' {
            self.pos += 1;
        }
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit()
                || self.src[self.pos] == b'.'
                || self.src[self.pos] == b'e'
                || self.src[self.pos] == b'E'
                || ((self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                    && matches!(self.src[self.pos - 1], b'e' | b'E')))
        {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse::<f64>().map_err(|_| MhError::Expression {
            position: start,
            message: format!("bad number `{s}`"),
        })
    }
}

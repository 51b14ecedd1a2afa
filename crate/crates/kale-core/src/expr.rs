//! A minimal closed-form expression language for radial profiles.
//!
//! Grammar (documented verbatim in the repo docs; whitespace is free):
//!
//! ```text
//! expr     := term { ("+" | "-") term }
//! term     := unary { ("*" | "/") unary }
//! unary    := "-" unary | power
//! power    := atom [ "^" unary ]          (right-associative)
//! atom     := number | "z" | function "(" expr ")" | "(" expr ")"
//! function := "log" | "exp" | "sqrt"
//! number   := digits [ "." digits ] [ ("e" | "E") [sign] digits ]
//! ```
//!
//! `log` is the natural logarithm. Expressions evaluate to degree-4 Taylor
//! polynomials in the radial variable, so every profile read from text
//! carries exact derivatives to order 4.

use crate::series::Taylor5;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("evaluation error: {0}")]
    Eval(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Variable,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Log(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Variable => write!(f, "z"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError::Parse { position: self.pos, message: message.into() }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Token)>, ExprError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let start = self.pos;
            match c {
                b' ' | b'\t' => {
                    self.pos += 1;
                }
                b'+' => {
                    out.push((start, Token::Plus));
                    self.pos += 1;
                }
                b'-' => {
                    out.push((start, Token::Minus));
                    self.pos += 1;
                }
                b'*' => {
                    out.push((start, Token::Star));
                    self.pos += 1;
                }
                b'/' => {
                    out.push((start, Token::Slash));
                    self.pos += 1;
                }
                b'^' => {
                    out.push((start, Token::Caret));
                    self.pos += 1;
                }
                b'(' => {
                    out.push((start, Token::LParen));
                    self.pos += 1;
                }
                b')' => {
                    out.push((start, Token::RParen));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'.' => {
                    let mut end = self.pos;
                    while end < self.src.len()
                        && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
                    {
                        end += 1;
                    }
                    if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                        let mut exp_end = end + 1;
                        if exp_end < self.src.len()
                            && (self.src[exp_end] == b'+' || self.src[exp_end] == b'-')
                        {
                            exp_end += 1;
                        }
                        if exp_end < self.src.len() && self.src[exp_end].is_ascii_digit() {
                            while exp_end < self.src.len() && self.src[exp_end].is_ascii_digit() {
                                exp_end += 1;
                            }
                            end = exp_end;
                        }
                    }
                    let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    let value: f64 = text
                        .parse()
                        .map_err(|_| self.error(format!("invalid number `{text}`")))?;
                    out.push((start, Token::Number(value)));
                    self.pos = end;
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let mut end = self.pos;
                    while end < self.src.len()
                        && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                    {
                        end += 1;
                    }
                    let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    out.push((start, Token::Ident(text.to_string())));
                    self.pos = end;
                }
                other => {
                    return Err(self.error(format!("unexpected character `{}`", other as char)));
                }
            }
        }
        Ok(out)
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    index: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.index).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.index).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.index).map(|(_, t)| t.clone());
        if t.is_some() {
            self.index += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError::Parse { position: self.position(), message: message.into() }
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), ExprError> {
        match self.advance() {
            Some(t) if t == token => Ok(()),
            Some(t) => Err(self.error(format!("expected {what}, found {t:?}"))),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.advance();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Minus) => {
                    self.advance();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.advance();
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Slash) => {
                    self.advance();
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.advance();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.advance();
            let exponent = self.unary()?; // right-associative; allows z^-2
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.advance() {
            Some(Token::Number(v)) => Ok(Expr::Number(v)),
            Some(Token::Ident(name)) => match name.as_str() {
                "z" => Ok(Expr::Variable),
                "log" | "exp" | "sqrt" => {
                    self.expect(Token::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "`)` closing function argument")?;
                    Ok(match name.as_str() {
                        "log" => Expr::Log(Box::new(arg)),
                        "exp" => Expr::Exp(Box::new(arg)),
                        _ => Expr::Sqrt(Box::new(arg)),
                    })
                }
                other => Err(ExprError::Parse {
                    position: self.position(),
                    message: format!("unknown identifier `{other}` (variable is `z`)"),
                }),
            },
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some(t) => Err(self.error(format!("unexpected token {t:?}"))),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Parse a closed-form expression in the variable `z`.
pub fn parse(source: &str) -> Result<Expr, ExprError> {
    let tokens = Lexer::new(source).tokens()?;
    let mut parser = Parser { tokens, index: 0, end: source.len() };
    let expr = parser.expr()?;
    if parser.index != parser.tokens.len() {
        return Err(parser.error("trailing input after expression"));
    }
    Ok(expr)
}

impl Expr {
    /// Does the expression mention the variable?
    pub fn uses_variable(&self) -> bool {
        match self {
            Expr::Number(_) => false,
            Expr::Variable => true,
            Expr::Neg(a) | Expr::Log(a) | Expr::Exp(a) | Expr::Sqrt(a) => a.uses_variable(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.uses_variable() || b.uses_variable(),
        }
    }

    /// Evaluate to a degree-4 Taylor polynomial around the given point.
    pub fn eval_taylor(&self, z: f64) -> Result<Taylor5, ExprError> {
        self.eval_jet(&Taylor5::variable(z))
    }

    /// Evaluate the value alone.
    pub fn eval_value(&self, z: f64) -> Result<f64, ExprError> {
        Ok(self.eval_taylor(z)?.value())
    }

    fn eval_jet(&self, z: &Taylor5) -> Result<Taylor5, ExprError> {
        match self {
            Expr::Number(v) => Ok(Taylor5::constant(*v)),
            Expr::Variable => Ok(*z),
            Expr::Neg(a) => Ok(a.eval_jet(z)?.neg()),
            Expr::Add(a, b) => Ok(a.eval_jet(z)?.add(&b.eval_jet(z)?)),
            Expr::Sub(a, b) => Ok(a.eval_jet(z)?.sub(&b.eval_jet(z)?)),
            Expr::Mul(a, b) => Ok(a.eval_jet(z)?.mul(&b.eval_jet(z)?)),
            Expr::Div(a, b) => {
                let den = b.eval_jet(z)?;
                if den.value() == 0.0 {
                    return Err(ExprError::Eval(format!(
                        "division by zero in `{self}` at z = {}",
                        z.value()
                    )));
                }
                Ok(a.eval_jet(z)?.div(&den))
            }
            Expr::Pow(a, b) => {
                let base = a.eval_jet(z)?;
                if b.uses_variable() {
                    if base.value() <= 0.0 {
                        return Err(ExprError::Eval(format!(
                            "power with non-constant exponent needs positive base in `{self}` \
                             at z = {}",
                            z.value()
                        )));
                    }
                    let expo = b.eval_jet(z)?;
                    return Ok(expo.mul(&base.ln()).exp());
                }
                let e = b.eval_jet(&Taylor5::constant(0.0))?.value();
                if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                    let k = e as i32;
                    if k < 0 && base.value() == 0.0 {
                        return Err(ExprError::Eval(format!(
                            "zero raised to negative power in `{self}` at z = {}",
                            z.value()
                        )));
                    }
                    Ok(base.powi(k))
                } else {
                    if base.value() <= 0.0 {
                        return Err(ExprError::Eval(format!(
                            "fractional power of non-positive value in `{self}` at z = {}",
                            z.value()
                        )));
                    }
                    Ok(base.powf(e))
                }
            }
            Expr::Log(a) => {
                let arg = a.eval_jet(z)?;
                if arg.value() <= 0.0 {
                    return Err(ExprError::Eval(format!(
                        "log of non-positive value in `{self}` at z = {}",
                        z.value()
                    )));
                }
                Ok(arg.ln())
            }
            Expr::Exp(a) => Ok(a.eval_jet(z)?.exp()),
            Expr::Sqrt(a) => {
                let arg = a.eval_jet(z)?;
                if arg.value() <= 0.0 {
                    return Err(ExprError::Eval(format!(
                        "sqrt of non-positive value in `{self}` at z = {}",
                        z.value()
                    )));
                }
                Ok(arg.sqrt())
            }
        }
    }
}

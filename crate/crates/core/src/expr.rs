//! Small complex-valued expression language for custom slices and
//! command-line complex literals.
//!
//! Variables are `x` and `z` (alias `zeta`); constants `i` and `pi`;
//! functions `sqrt`, `exp`, `log` use principal branches. A number
//! directly followed by `i` is imaginary, so `1.3+0.4i` parses.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("unexpected character {found:?} at offset {at}")]
    BadChar { found: char, at: usize },
    #[error("unexpected {found} at offset {at}")]
    Unexpected { found: String, at: usize },
    #[error("unknown name {0:?}")]
    UnknownName(String),
    #[error("expression uses variable {0}, which is not allowed here")]
    NotConstant(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    X,
    Zeta,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: Complex64, zeta: Complex64) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::X => x,
            Expr::Zeta => zeta,
            Expr::Neg(a) => -a.eval(x, zeta),
            Expr::Add(a, b) => a.eval(x, zeta) + b.eval(x, zeta),
            Expr::Sub(a, b) => a.eval(x, zeta) - b.eval(x, zeta),
            Expr::Mul(a, b) => a.eval(x, zeta) * b.eval(x, zeta),
            Expr::Div(a, b) => a.eval(x, zeta) / b.eval(x, zeta),
            Expr::Pow(a, b) => {
                let base = a.eval(x, zeta);
                let exp = b.eval(x, zeta);
                // exact repeated multiplication for small integer powers
                if exp.im == 0.0 && exp.re.fract() == 0.0 && exp.re.abs() <= 64.0 {
                    base.powi(exp.re as i32)
                } else {
                    base.powc(exp)
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(x, zeta);
                match f {
                    Func::Sqrt => v.sqrt(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                }
            }
        }
    }

    fn variable(&self) -> Option<&'static str> {
        match self {
            Expr::Const(_) => None,
            Expr::X => Some("x"),
            Expr::Zeta => Some("z"),
            Expr::Neg(a) | Expr::Call(_, a) => a.variable(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.variable().or_else(|| b.variable())
            }
        }
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, ExprError> {
        let tokens = tokenize(s)?;
        let mut parser = Parser { tokens, pos: 0 };
        let e = parser.expr()?;
        match parser.peek() {
            None => Ok(e),
            Some((t, at)) => Err(ExprError::Unexpected {
                found: t.to_string(),
                at,
            }),
        }
    }
}

/// Parses a constant such as `-1.5+2i` or `sqrt(3)*i`.
pub fn parse_complex(s: &str) -> Result<Complex64, ExprError> {
    let e: Expr = s.parse()?;
    if let Some(v) = e.variable() {
        return Err(ExprError::NotConstant(v));
    }
    Ok(e.eval(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)))
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    Open,
    Close,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Imag(v) => write!(f, "number {v}i"),
            Token::Ident(s) => write!(f, "name {s:?}"),
            Token::Op(c) => write!(f, "operator {c:?}"),
            Token::Open => f.write_str("'('"),
            Token::Close => f.write_str("')'"),
        }
    }
}

fn tokenize(s: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        let start = k;
        if c.is_ascii_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            while k < bytes.len() && (bytes[k].is_ascii_digit() || bytes[k] == b'.') {
                k += 1;
            }
            // exponent, only if digits follow
            if k < bytes.len() && (bytes[k] == b'e' || bytes[k] == b'E') {
                let mut j = k + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    k = j;
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let v: f64 = s[start..k].parse().map_err(|_| ExprError::Unexpected {
                found: s[start..k].to_string(),
                at: start,
            })?;
            let imaginary = k < bytes.len()
                && bytes[k] == b'i'
                && !bytes.get(k + 1).is_some_and(|b| b.is_ascii_alphanumeric());
            if imaginary {
                k += 1;
                out.push((Token::Imag(v), start));
            } else {
                out.push((Token::Num(v), start));
            }
        } else if c.is_ascii_alphabetic() {
            while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_') {
                k += 1;
            }
            out.push((Token::Ident(s[start..k].to_string()), start));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                '(' => Token::Open,
                ')' => Token::Close,
                _ => {
                    let found = s[k..].chars().next().unwrap_or(c);
                    return Err(ExprError::BadChar { found, at: k });
                }
            };
            k += 1;
            out.push((t, start));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<(&Token, usize)> {
        self.tokens.get(self.pos).map(|(t, at)| (t, *at))
    }

    fn end_offset(&self) -> usize {
        self.tokens.last().map_or(0, |(_, at)| at + 1)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some((Token::Op(c), _)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Expr::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some((tok, at)) = self.tokens.get(self.pos).cloned() else {
            return Err(ExprError::Unexpected {
                found: "end of input".into(),
                at: self.end_offset(),
            });
        };
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Const(Complex64::new(v, 0.0))),
            Token::Imag(v) => Ok(Expr::Const(Complex64::new(0.0, v))),
            Token::Open => {
                let e = self.expr()?;
                self.close()?;
                Ok(e)
            }
            Token::Ident(name) => {
                let func = match name.as_str() {
                    "x" => return Ok(Expr::X),
                    "z" | "zeta" => return Ok(Expr::Zeta),
                    "i" => return Ok(Expr::Const(Complex64::i())),
                    "pi" => return Ok(Expr::Const(Complex64::new(PI, 0.0))),
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "log" | "ln" => Func::Log,
                    _ => return Err(ExprError::UnknownName(name)),
                };
                match self.tokens.get(self.pos) {
                    Some((Token::Open, _)) => self.pos += 1,
                    other => {
                        return Err(ExprError::Unexpected {
                            found: other.map_or("end of input".into(), |(t, _)| t.to_string()),
                            at: other.map_or(self.end_offset(), |(_, at)| *at),
                        })
                    }
                }
                let arg = self.expr()?;
                self.close()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            other => Err(ExprError::Unexpected {
                found: other.to_string(),
                at,
            }),
        }
    }

    fn close(&mut self) -> Result<(), ExprError> {
        match self.tokens.get(self.pos) {
            Some((Token::Close, _)) => {
                self.pos += 1;
                Ok(())
            }
            other => Err(ExprError::Unexpected {
                found: other.map_or("end of input".into(), |(t, _)| t.to_string()),
                at: other.map_or(self.end_offset(), |(_, at)| *at),
            }),
        }
    }
}

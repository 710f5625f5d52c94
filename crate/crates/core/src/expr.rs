//! Small arithmetic expressions in `x` and `t`, used for prescribed phases.
//!
//! Grammar: numbers, `x`, `t`, `pi`, `e`, caller-supplied constants,
//! `sin`, `cos`, `exp`, `+ - * / ^`, unary minus and parentheses. `^`
//! binds tightest and is right-associative.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Var {
    X,
    T,
}

use Expr::*;

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        Self::parse_with(src, &BTreeMap::new())
    }

    pub fn parse_with(src: &str, constants: &BTreeMap<String, f64>) -> Result<Expr> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0, constants };
        let e = p.sum()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expr(format!("unexpected {:?} at token {}", p.toks[p.pos], p.pos)));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Num(v) => *v,
            X => x,
            T => t,
            Neg(a) => -a.eval(x, t),
            Add(a, c) => a.eval(x, t) + c.eval(x, t),
            Sub(a, c) => a.eval(x, t) - c.eval(x, t),
            Mul(a, c) => a.eval(x, t) * c.eval(x, t),
            Div(a, c) => a.eval(x, t) / c.eval(x, t),
            Pow(a, c) => a.eval(x, t).powf(c.eval(x, t)),
            Sin(a) => a.eval(x, t).sin(),
            Cos(a) => a.eval(x, t).cos(),
            Exp(a) => a.eval(x, t).exp(),
            Ln(a) => a.eval(x, t).ln(),
        }
    }

    fn depends_on(&self, v: Var) -> bool {
        match self {
            Num(_) => false,
            X => v == Var::X,
            T => v == Var::T,
            Neg(a) | Sin(a) | Cos(a) | Exp(a) | Ln(a) => a.depends_on(v),
            Add(a, c) | Sub(a, c) | Mul(a, c) | Div(a, c) | Pow(a, c) => a.depends_on(v) || c.depends_on(v),
        }
    }

    /// Symbolic partial derivative, lightly simplified.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Num(0.0);
        }
        let d = match self {
            Num(_) => Num(0.0),
            X => Num(if v == Var::X { 1.0 } else { 0.0 }),
            T => Num(if v == Var::T { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(v)),
            Add(a, c) => add(a.diff(v), c.diff(v)),
            Sub(a, c) => sub(a.diff(v), c.diff(v)),
            Mul(a, c) => add(mul(a.diff(v), (**c).clone()), mul((**a).clone(), c.diff(v))),
            Div(a, c) => Div(
                b(sub(mul(a.diff(v), (**c).clone()), mul((**a).clone(), c.diff(v)))),
                b(Pow(c.clone(), b(Num(2.0)))),
            ),
            Pow(a, c) if !c.depends_on(v) => {
                mul(mul((**c).clone(), Pow(a.clone(), b(sub((**c).clone(), Num(1.0))))), a.diff(v))
            }
            Pow(a, c) => {
                // a^c = exp(c ln a)
                mul(self.clone(), add(mul(c.diff(v), Ln(a.clone())), Div(b(mul((**c).clone(), a.diff(v))), a.clone())))
            }
            Sin(a) => mul(Cos(a.clone()), a.diff(v)),
            Cos(a) => neg(mul(Sin(a.clone()), a.diff(v))),
            Exp(a) => mul(self.clone(), a.diff(v)),
            Ln(a) => Div(b(a.diff(v)), a.clone()),
        };
        d
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Num(v) if *v == 1.0)
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(v) => Num(-v),
        a => Neg(b(a)),
    }
}

fn add(a: Expr, c: Expr) -> Expr {
    if is_zero(&a) {
        c
    } else if is_zero(&c) {
        a
    } else {
        Add(b(a), b(c))
    }
}

fn sub(a: Expr, c: Expr) -> Expr {
    if is_zero(&c) {
        a
    } else if is_zero(&a) {
        neg(c)
    } else {
        Sub(b(a), b(c))
    }
}

fn mul(a: Expr, c: Expr) -> Expr {
    if is_zero(&a) || is_zero(&c) {
        Num(0.0)
    } else if is_one(&a) {
        c
    } else if is_one(&c) {
        a
    } else {
        Mul(b(a), b(c))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            X => write!(f, "x"),
            T => write!(f, "t"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, c) => write!(f, "({a} + {c})"),
            Sub(a, c) => write!(f, "({a} - {c})"),
            Mul(a, c) => write!(f, "({a} * {c})"),
            Div(a, c) => write!(f, "({a} / {c})"),
            Pow(a, c) => write!(f, "({a} ^ {c})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
            Ln(a) => write!(f, "ln({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| Error::Expr(format!("bad number '{s}'")))?;
            out.push(Tok::Num(v));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(ch) {
            out.push(Tok::Op(ch));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character '{ch}' at {i}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    constants: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expr(format!("expected '{c}' at token {}", self.pos)))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut e = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let r = self.product()?;
            e = if op == '+' { Add(b(e), b(r)) } else { Sub(b(e), b(r)) };
        }
        Ok(e)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let r = self.unary()?;
            e = if op == '*' { Mul(b(e), b(r)) } else { Div(b(e), b(r)) };
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Neg(b(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Pow(b(base), b(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.toks.get(self.pos).cloned().ok_or_else(|| Error::Expr("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Num(v)),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => Err(Error::Expr(format!("unexpected '{c}'"))),
            Tok::Ident(name) => {
                if self.peek_op() == Some('(') {
                    self.pos += 1;
                    let arg = self.sum()?;
                    self.expect(')')?;
                    return match name.as_str() {
                        "sin" => Ok(Sin(b(arg))),
                        "cos" => Ok(Cos(b(arg))),
                        "exp" => Ok(Exp(b(arg))),
                        _ => Err(Error::Expr(format!("unknown function '{name}'"))),
                    };
                }
                match name.as_str() {
                    "x" => Ok(X),
                    "t" => Ok(T),
                    "pi" => Ok(Num(std::f64::consts::PI)),
                    "e" => Ok(Num(std::f64::consts::E)),
                    _ => self
                        .constants
                        .get(&name)
                        .map(|v| Num(*v))
                        .ok_or_else(|| Error::Expr(format!("unknown identifier '{name}'"))),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = Expr::parse("1 + 2 * 3 ^ 2 - -4 / 2").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 1.0 + 18.0 + 2.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0.0, 0.0), 512.0);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(0.0, 0.0), -4.0);
        assert_eq!(Expr::parse("1.5e-3*2").unwrap().eval(0.0, 0.0), 3e-3);
    }

    #[test]
    fn constants_and_functions() {
        let mut c = BTreeMap::new();
        c.insert("eps".to_string(), 1e-3);
        c.insert("X".to_string(), 10.0);
        let e = Expr::parse_with("eps*sin(2*pi*x/X)*exp(-t)", &c).unwrap();
        let want = 1e-3 * (2.0 * std::f64::consts::PI * 2.5 / 10.0).sin() * (-0.5f64).exp();
        assert!((e.eval(2.5, 0.5) - want).abs() < 1e-16);
    }

    #[test]
    fn derivatives() {
        let e = Expr::parse("sin(3*x)*exp(-2*t) + x^2/(1+t) + 2^x").unwrap();
        let dx = e.diff(Var::X);
        let dt = e.diff(Var::T);
        let (x, t) = (0.7, 0.3);
        let h = 1e-6;
        let fx = (e.eval(x + h, t) - e.eval(x - h, t)) / (2.0 * h);
        let ft = (e.eval(x, t + h) - e.eval(x, t - h)) / (2.0 * h);
        assert!((dx.eval(x, t) - fx).abs() < 1e-8);
        assert!((dt.eval(x, t) - ft).abs() < 1e-8);
        assert_eq!(Expr::parse("t").unwrap().diff(Var::X), Num(0.0));
    }

    #[test]
    fn errors() {
        for bad in ["sin x", "1 +", "foo", "tan(x)", "(1", "3 $ 4", "1 2"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
    }
}

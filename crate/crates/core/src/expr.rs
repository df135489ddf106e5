//! Holomorphic expression language for potential entries.
//!
//! Grammar (lowest to highest precedence):
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            right associative
//! atom    := number | number 'i' | 'i' | 'z' | 'pi' | 'e' | func '(' sum ')' | '(' sum ')'
//! func    := exp | log | sin | cos | sqrt
//! ```

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const MAX_DEPTH: usize = 200;
const POLE_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn prec(&self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
    fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Expression tree. Literals produced by the parser are nonnegative reals or
/// nonnegative multiples of i.
#[derive(Clone, Debug, PartialEq)]
pub enum HoloExpr {
    Num(C64),
    Z,
    Pi,
    E,
    Neg(Box<HoloExpr>),
    Bin(BinOp, Box<HoloExpr>, Box<HoloExpr>),
    Call(Func, Box<HoloExpr>),
}

const UNARY_PREC: u8 = 3;

impl HoloExpr {
    pub fn real(v: f64) -> HoloExpr {
        if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
            HoloExpr::Neg(Box::new(HoloExpr::Num(C64::new(-v, 0.0))))
        } else {
            HoloExpr::Num(C64::new(v, 0.0))
        }
    }
    pub fn bin(op: BinOp, a: HoloExpr, b: HoloExpr) -> HoloExpr {
        HoloExpr::Bin(op, Box::new(a), Box::new(b))
    }
    pub fn negate(a: HoloExpr) -> HoloExpr {
        HoloExpr::Neg(Box::new(a))
    }

    fn prec(&self) -> u8 {
        match self {
            HoloExpr::Bin(op, _, _) => op.prec(),
            HoloExpr::Neg(_) => UNARY_PREC,
            HoloExpr::Num(v) if v.re != 0.0 && v.im != 0.0 => 1,
            _ => 5,
        }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let v = match self {
            HoloExpr::Num(v) => *v,
            HoloExpr::Z => z,
            HoloExpr::Pi => C64::new(std::f64::consts::PI, 0.0),
            HoloExpr::E => C64::new(std::f64::consts::E, 0.0),
            HoloExpr::Neg(a) => -a.eval(z)?,
            HoloExpr::Bin(op, a, b) => {
                let x = a.eval(z)?;
                let y = b.eval(z)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.norm() < POLE_EPS {
                            return Err(Error::Pole(format!("division by {y} at z = {z}")));
                        }
                        x / y
                    }
                    BinOp::Pow => pow(x, y, z)?,
                }
            }
            HoloExpr::Call(f, a) => {
                let x = a.eval(z)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x.norm() < POLE_EPS {
                            return Err(Error::Pole(format!("log of {x} at z = {z}")));
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        };
        Ok(v)
    }

    /// The expression for conj(h(conj z)): conjugates every constant.
    pub fn conj_reflect(&self) -> HoloExpr {
        match self {
            HoloExpr::Num(v) => {
                if v.im != 0.0 && v.re == 0.0 {
                    HoloExpr::negate(HoloExpr::Num(*v))
                } else {
                    HoloExpr::Num(v.conj())
                }
            }
            HoloExpr::Z | HoloExpr::Pi | HoloExpr::E => self.clone(),
            HoloExpr::Neg(a) => HoloExpr::negate(a.conj_reflect()),
            HoloExpr::Bin(op, a, b) => HoloExpr::bin(*op, a.conj_reflect(), b.conj_reflect()),
            HoloExpr::Call(f, a) => HoloExpr::Call(*f, Box::new(a.conj_reflect())),
        }
    }

    fn depth(&self) -> usize {
        match self {
            HoloExpr::Neg(a) | HoloExpr::Call(_, a) => 1 + a.depth(),
            HoloExpr::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
            _ => 1,
        }
    }
}

fn pow(x: C64, y: C64, z: C64) -> Result<C64> {
    if y.im == 0.0 && y.re.fract() == 0.0 && y.re.abs() <= i32::MAX as f64 {
        let k = y.re as i32;
        if k < 0 && x.norm() < POLE_EPS {
            return Err(Error::Pole(format!("negative power of {x} at z = {z}")));
        }
        return Ok(x.powi(k));
    }
    if x.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok((y * x.ln()).exp())
}

fn write_num(f: &mut fmt::Formatter<'_>, v: C64) -> fmt::Result {
    if v.im == 0.0 {
        write!(f, "{}", v.re)
    } else if v.re == 0.0 {
        if v.im == 1.0 {
            write!(f, "i")
        } else {
            write!(f, "{}i", v.im)
        }
    } else {
        write!(f, "{} + {}i", v.re, v.im)
    }
}

impl fmt::Display for HoloExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HoloExpr::Num(v) => write_num(f, *v),
            HoloExpr::Z => write!(f, "z"),
            HoloExpr::Pi => write!(f, "pi"),
            HoloExpr::E => write!(f, "e"),
            HoloExpr::Neg(a) => {
                if a.prec() < UNARY_PREC || matches!(**a, HoloExpr::Neg(_)) {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            HoloExpr::Bin(op, a, b) => {
                let p = op.prec();
                let left_paren = if *op == BinOp::Pow { a.prec() <= p } else { a.prec() < p };
                let right_paren = if *op == BinOp::Pow { b.prec() < UNARY_PREC } else { b.prec() <= p };
                if left_paren {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, "{}", op.symbol())?;
                if right_paren {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            HoloExpr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

fn perr(pos: usize, msg: &str, expected: &[&str]) -> Error {
    Error::Parse { pos, msg: msg.to_string(), expected: expected.iter().map(|s| s.to_string()).collect() }
}

const ATOM_START: &[&str] = &["number", "i", "z", "pi", "e", "function", "(", "-"];

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }
    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }
    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(perr(self.pos, "expression nested too deeply", &[]));
        }
        Ok(())
    }

    fn sum(&mut self) -> Result<HoloExpr> {
        self.enter()?;
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = HoloExpr::bin(op, lhs, rhs);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn product(&mut self) -> Result<HoloExpr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = HoloExpr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<HoloExpr> {
        self.enter()?;
        let r = if self.peek() == Some(b'-') {
            self.pos += 1;
            HoloExpr::negate(self.unary()?)
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(r)
    }

    fn power(&mut self) -> Result<HoloExpr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(HoloExpr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn number(&mut self) -> Result<HoloExpr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > b
        };
        let mut p = self.pos;
        let int = digits(&mut p);
        let mut frac = false;
        if p < s.len() && s[p] == b'.' {
            p += 1;
            frac = digits(&mut p);
        }
        if !int && !frac {
            return Err(perr(start, "malformed number", &["digit"]));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                p = q;
            }
        }
        let text = std::str::from_utf8(&s[start..p]).unwrap_or("");
        let v: f64 = text.parse().map_err(|_| perr(start, "malformed number", &["digit"]))?;
        if !v.is_finite() {
            return Err(perr(start, "number out of range", &[]));
        }
        self.pos = p;
        if self.pos < s.len() && s[self.pos] == b'i' {
            let next = s.get(self.pos + 1).copied();
            if !next.map(|c| c.is_ascii_alphanumeric() || c == b'_').unwrap_or(false) {
                self.pos += 1;
                return Ok(HoloExpr::Num(C64::new(0.0, v)));
            }
        }
        Ok(HoloExpr::Num(C64::new(v, 0.0)))
    }

    fn atom(&mut self) -> Result<HoloExpr> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(perr(self.pos, "unexpected end of input", ATOM_START)),
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.sum()?;
            if self.peek() != Some(b')') {
                return Err(perr(self.pos, "unclosed parenthesis", &[")"]));
            }
            self.pos += 1;
            return Ok(e);
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            let name = self.ident();
            return match name {
                "z" => Ok(HoloExpr::Z),
                "i" => Ok(HoloExpr::Num(C64::new(0.0, 1.0))),
                "pi" => Ok(HoloExpr::Pi),
                "e" => Ok(HoloExpr::E),
                _ => match Func::from_name(name) {
                    Some(f) => {
                        if self.peek() != Some(b'(') {
                            return Err(perr(self.pos, "function needs an argument", &["("]));
                        }
                        self.pos += 1;
                        let arg = self.sum()?;
                        if self.peek() != Some(b')') {
                            return Err(perr(self.pos, "unclosed function call", &[")"]));
                        }
                        self.pos += 1;
                        Ok(HoloExpr::Call(f, Box::new(arg)))
                    }
                    None => Err(perr(start, &format!("unknown identifier '{name}'"), &["z", "i", "pi", "e", "exp", "log", "sin", "cos", "sqrt"])),
                },
            };
        }
        Err(perr(self.pos, &format!("unexpected character '{}'", c as char), ATOM_START))
    }
}

pub fn parse_expr(src: &str) -> Result<HoloExpr> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, depth: 0 };
    let e = p.sum()?;
    if p.peek().is_some() {
        return Err(perr(p.pos, "trailing input", &["+", "-", "*", "/", "^", "end of input"]));
    }
    if e.depth() > 4 * MAX_DEPTH {
        return Err(perr(0, "expression nested too deeply", &[]));
    }
    Ok(e)
}

pub fn eval_expr(e: &HoloExpr, z: C64) -> Result<C64> {
    e.eval(z)
}

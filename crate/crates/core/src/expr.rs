//! Closed-form expressions in the radial variable `r`.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?            (right-associative)
//! atom  := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers match `[a-zA-Z_][a-zA-Z0-9_]*`. `r` is the radial variable,
//! the names `sqrt exp log sin cos tanh` are functions, and every other
//! identifier is a parameter that must be bound at evaluation time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parameter values keyed by identifier.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Sqrt,
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Var,
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at byte {offset}: {message} (expected {})", .expected.join(" | "))]
pub struct ParseError {
    /// 0-based byte offset into the input.
    pub offset: usize,
    pub expected: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} of non-positive argument {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("power with base {base} and exponent {exponent} is undefined (exponent must be constant or base positive)")]
    InvalidPower { base: f64, exponent: f64 },
    #[error("non-finite result {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error(
        "cannot differentiate `{0}`: exponent depends on r and the base is not a positive constant"
    )]
    NonConstantExponent(String),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        Parser::new(text)?.parse_all()
    }

    /// True when `r` occurs anywhere in the tree.
    pub fn depends_on_r(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Param(_) => false,
            Expr::Var => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_r(),
            Expr::Binary(_, a, b) => a.depends_on_r() || b.depends_on_r(),
        }
    }

    /// Parameter identifiers referenced by the tree.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) | Expr::Var => {}
            Expr::Param(p) => {
                out.insert(p.clone());
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    pub fn evaluate(&self, r: f64, bindings: &Bindings) -> Result<f64, EvalError> {
        let v = self.eval_node(r, bindings)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(v))
        }
    }

    fn eval_node(&self, r: f64, b: &Bindings) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var => r,
            Expr::Param(p) => *b
                .get(p)
                .ok_or_else(|| EvalError::UnboundParameter(p.clone()))?,
            Expr::Neg(a) => -a.eval_node(r, b)?,
            Expr::Binary(op, lhs, rhs) => {
                let x = lhs.eval_node(r, b)?;
                let y = rhs.eval_node(r, b)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        x / y
                    }
                    BinOp::Pow => power(x, y, !rhs.depends_on_r())?,
                }
            }
            Expr::Call(func, a) => {
                let x = a.eval_node(r, b)?;
                match func {
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::Domain {
                                func: "sqrt",
                                arg: x,
                            });
                        }
                        x.sqrt()
                    }
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(EvalError::Domain {
                                func: "log",
                                arg: x,
                            });
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tanh => x.tanh(),
                }
            }
        })
    }

    /// Symbolic d/dr. Only constant subtrees are folded; the result is
    /// otherwise unreduced.
    pub fn differentiate(&self) -> Result<Expr, DiffError> {
        use Expr::*;
        Ok(match self {
            Const(_) | Param(_) => Const(0.0),
            Var => Const(1.0),
            Neg(a) => neg(a.differentiate()?),
            Binary(op, a, b) => {
                let (a, b) = (a.as_ref(), b.as_ref());
                match op {
                    BinOp::Add => bin(BinOp::Add, a.differentiate()?, b.differentiate()?),
                    BinOp::Sub => bin(BinOp::Sub, a.differentiate()?, b.differentiate()?),
                    BinOp::Mul => bin(
                        BinOp::Add,
                        bin(BinOp::Mul, a.differentiate()?, b.clone()),
                        bin(BinOp::Mul, a.clone(), b.differentiate()?),
                    ),
                    BinOp::Div => bin(
                        BinOp::Div,
                        bin(
                            BinOp::Sub,
                            bin(BinOp::Mul, a.differentiate()?, b.clone()),
                            bin(BinOp::Mul, a.clone(), b.differentiate()?),
                        ),
                        bin(BinOp::Mul, b.clone(), b.clone()),
                    ),
                    BinOp::Pow if !b.depends_on_r() => {
                        // c * a^(c-1) * a'
                        let reduced = bin(BinOp::Sub, b.clone(), Const(1.0));
                        bin(
                            BinOp::Mul,
                            bin(BinOp::Mul, b.clone(), bin(BinOp::Pow, a.clone(), reduced)),
                            a.differentiate()?,
                        )
                    }
                    BinOp::Pow => match a {
                        Const(c) if *c > 0.0 => bin(
                            BinOp::Mul,
                            bin(BinOp::Mul, self.clone(), Const(c.ln())),
                            b.differentiate()?,
                        ),
                        _ => return Err(DiffError::NonConstantExponent(self.to_string())),
                    },
                }
            }
            Call(func, a) => {
                let inner = a.differentiate()?;
                let a = a.as_ref().clone();
                let outer = match func {
                    Func::Sqrt => bin(
                        BinOp::Div,
                        Const(1.0),
                        bin(BinOp::Mul, Const(2.0), call(Func::Sqrt, a)),
                    ),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => bin(BinOp::Div, Const(1.0), a),
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Tanh => bin(
                        BinOp::Sub,
                        Const(1.0),
                        bin(BinOp::Pow, call(Func::Tanh, a), Const(2.0)),
                    ),
                };
                bin(BinOp::Mul, outer, inner)
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn power(base: f64, exponent: f64, constant_exponent: bool) -> Result<f64, EvalError> {
    let invalid = EvalError::InvalidPower { base, exponent };
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if constant_exponent || base > 0.0 {
            return Ok(base.powi(exponent as i32));
        }
        return Err(invalid);
    }
    if base < 0.0 || (!constant_exponent && base <= 0.0) {
        return Err(invalid);
    }
    Ok(base.powf(exponent))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        a => Expr::Neg(Box::new(a)),
    }
}

fn call(func: Func, a: Expr) -> Expr {
    Expr::Call(func, Box::new(a))
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        let folded = match op {
            BinOp::Add => Some(x + y),
            BinOp::Sub => Some(x - y),
            BinOp::Mul => Some(x * y),
            BinOp::Div if *y != 0.0 => Some(x / y),
            BinOp::Pow => power(*x, *y, true).ok(),
            _ => None,
        };
        if let Some(v) = folded.filter(|v| v.is_finite()) {
            return Expr::Const(v);
        }
    }
    Expr::Binary(op, Box::new(a), Box::new(b))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => f.write_str("r"),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                if *op == BinOp::Pow {
                    wrap(f, a, a.precedence() <= p)?;
                    f.write_str(sym)?;
                    wrap(f, b, b.precedence() < 3)
                } else {
                    wrap(f, a, a.precedence() < p)?;
                    f.write_str(sym)?;
                    wrap(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn err(offset: usize, expected: &[&str], message: impl Into<String>) -> ParseError {
    ParseError {
        offset,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        message: message.into(),
    }
}

const OPERAND: &[&str] = &["number", "identifier", "'('", "'-'"];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if !c.is_ascii() {
            return Err(err(i, &["ASCII character"], "non-ASCII input"));
        }
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                toks.push((Tok::Op(c as char), i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value = lit
                    .parse::<f64>()
                    .map_err(|_| err(start, &["number"], format!("malformed number `{lit}`")))?;
                toks.push((Tok::Num(value), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(err(
                    i,
                    OPERAND,
                    format!("unexpected character `{}`", c as char),
                ))
            }
        }
    }
    toks.push((Tok::End, text.len()));
    Ok(toks)
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        if text.trim().is_empty() {
            return Err(err(0, OPERAND, "empty input"));
        }
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if t.0 != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn parse_all(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        match self.peek() {
            (Tok::End, _) => Ok(e),
            (Tok::RParen, off) => Err(err(*off, &["operator", "end of input"], "unbalanced ')'")),
            (_, off) => Err(err(*off, &["operator", "end of input"], "unexpected token")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let (Tok::Op(c @ ('+' | '-')), _) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let (Tok::Op(c @ ('*' | '/')), _) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let (Tok::Op('-'), _) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let (Tok::Op('^'), _) = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Ident(name) => {
                let is_call = matches!(self.peek(), (Tok::LParen, _));
                if is_call {
                    let func = Func::from_name(&name).ok_or_else(|| {
                        err(
                            off,
                            &["function name"],
                            format!("unknown function `{name}`"),
                        )
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if Func::from_name(&name).is_some() {
                    let next = self.peek().1;
                    Err(err(
                        next,
                        &["'('"],
                        format!("function `{name}` requires an argument"),
                    ))
                } else if name == "r" {
                    Ok(Expr::Var)
                } else {
                    Ok(Expr::Param(name))
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::End => Err(err(off, OPERAND, "unexpected end of input")),
            Tok::RParen => Err(err(off, OPERAND, "unexpected ')'")),
            Tok::Op(c) => Err(err(off, OPERAND, format!("unexpected operator `{c}`"))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            (Tok::RParen, _) => {
                self.bump();
                Ok(())
            }
            (_, off) => Err(err(*off, &["')'"], "unbalanced '('")),
        }
    }
}

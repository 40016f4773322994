//! Expression language used for custom rate laws, interaction series and
//! translation series.
//!
//! Grammar (highest binding first):
//!
//! ```text
//! expr    := or
//! or      := and ("||" and)*
//! and     := eq ("&&" eq)*
//! eq      := cmp (("==" | "!=") cmp)*
//! cmp     := add (("<" | "<=" | ">" | ">=") add)*
//! add     := mul (("+" | "-") mul)*
//! mul     := unary (("*" | "/" | "%") unary)*
//! unary   := ("-" | "!") unary | power
//! power   := atom ("^" unary)?
//! atom    := number | ident | ident "(" args? ")" | "(" expr ")"
//! ```
//!
//! Values are IEEE doubles; comparisons and logic produce `1.0` or `0.0` and
//! any nonzero value is truthy. `if`, `&&` and `||` evaluate lazily, so
//! random draws in an untaken branch are never consumed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Random stream owned by a single simulation run.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Seeds a [`SimRng`] from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Pow => "^",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
            BinaryOp::Pow => PREC_POW,
        }
    }
}

const PREC_UNARY: u8 = 7;
const PREC_POW: u8 = 8;
const PREC_ATOM: u8 = 9;

/// Builtin functions. The set is closed; user-defined functions do not exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Abs,
    Min,
    Max,
    Exp,
    Log,
    Sqrt,
    Pow,
    Floor,
    Ceil,
    If,
    Rand,
    Uniform,
    Gauss,
    Coin,
}

impl Builtin {
    pub const ALL: [Builtin; 14] = [
        Builtin::Abs,
        Builtin::Min,
        Builtin::Max,
        Builtin::Exp,
        Builtin::Log,
        Builtin::Sqrt,
        Builtin::Pow,
        Builtin::Floor,
        Builtin::Ceil,
        Builtin::If,
        Builtin::Rand,
        Builtin::Uniform,
        Builtin::Gauss,
        Builtin::Coin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Abs => "abs",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Sqrt => "sqrt",
            Builtin::Pow => "pow",
            Builtin::Floor => "floor",
            Builtin::Ceil => "ceil",
            Builtin::If => "if",
            Builtin::Rand => "rand",
            Builtin::Uniform => "uniform",
            Builtin::Gauss => "gauss",
            Builtin::Coin => "coin",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Rand => 0,
            Builtin::Abs
            | Builtin::Exp
            | Builtin::Log
            | Builtin::Sqrt
            | Builtin::Floor
            | Builtin::Ceil
            | Builtin::Coin => 1,
            Builtin::Min | Builtin::Max | Builtin::Pow | Builtin::Uniform | Builtin::Gauss => 2,
            Builtin::If => 3,
        }
    }

    /// True for builtins that consume the random stream.
    pub fn is_random(self) -> bool {
        matches!(
            self,
            Builtin::Rand | Builtin::Uniform | Builtin::Gauss | Builtin::Coin
        )
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.iter().copied().find(|b| b.name() == name)
    }
}

/// Expression syntax tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Ident(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function '{name}' expects {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound identifier '{0}'")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("function '{0}' needs a random stream but none is available")]
    NoRandomStream(&'static str),
}

/// A single problem found by [`Expr::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprViolation {
    UnknownIdentifier(String),
    Nondeterministic(&'static str),
}

impl fmt::Display for ExprViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprViolation::UnknownIdentifier(name) => write!(f, "unknown identifier '{name}'"),
            ExprViolation::Nondeterministic(func) => {
                write!(f, "nondeterministic function in rate: {func}()")
            }
        }
    }
}

/// Name resolution for evaluation.
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for std::collections::HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl<F: Fn(&str) -> Option<f64>> Bindings for F {
    fn lookup(&self, name: &str) -> Option<f64> {
        self(name)
    }
}

/// Evaluation environment: named values plus the run's random stream.
#[derive(Clone, Debug)]
pub struct Env {
    pub bindings: BTreeMap<String, f64>,
    pub rng: SimRng,
}

impl Env {
    pub fn new(seed: u64) -> Self {
        Env {
            bindings: BTreeMap::new(),
            rng: seeded_rng(seed),
        }
    }

    pub fn with_bindings(bindings: BTreeMap<String, f64>, seed: u64) -> Self {
        Env {
            bindings,
            rng: seeded_rng(seed),
        }
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.bindings.insert(name.into(), value);
    }

    pub fn eval(&mut self, expr: &Expr) -> Result<f64, EvalError> {
        expr.eval(&self.bindings, Some(&mut self.rng))
    }
}

/// Parses an expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        len: text.len(),
    };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::Syntax {
            offset: tok.offset,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(expr)
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr::Number(value)
    }

    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(name.into())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Free identifiers in first-appearance order, without duplicates.
    pub fn identifiers(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Ident(name) = e {
                if seen.insert(name.clone()) {
                    out.push(name.clone());
                }
            }
        });
        out
    }

    /// True if any random builtin appears anywhere in the tree.
    pub fn is_random(&self) -> bool {
        let mut random = false;
        self.visit(&mut |e| {
            if let Expr::Call(b, _) = e {
                random |= b.is_random();
            }
        });
        random
    }

    fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Number(_) | Expr::Ident(_) => {}
            Expr::Unary(_, inner) => inner.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
        }
    }

    /// Returns a copy with every identifier passed through `rename`.
    pub fn rename(&self, rename: &dyn Fn(&str) -> String) -> Expr {
        match self {
            Expr::Number(v) => Expr::Number(*v),
            Expr::Ident(name) => Expr::Ident(rename(name)),
            Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(inner.rename(rename))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.rename(rename)), Box::new(b.rename(rename)))
            }
            Expr::Call(b, args) => Expr::Call(*b, args.iter().map(|a| a.rename(rename)).collect()),
        }
    }

    /// Checks identifiers against `allowed`; with `deterministic` set, random
    /// builtins are reported too.
    pub fn validate(&self, allowed: &BTreeSet<String>, deterministic: bool) -> Vec<ExprViolation> {
        let mut out = Vec::new();
        for name in self.identifiers() {
            if !allowed.contains(&name) {
                out.push(ExprViolation::UnknownIdentifier(name));
            }
        }
        if deterministic {
            let mut seen = BTreeSet::new();
            self.visit(&mut |e| {
                if let Expr::Call(b, _) = e {
                    if b.is_random() && seen.insert(b.name()) {
                        out.push(ExprViolation::Nondeterministic(b.name()));
                    }
                }
            });
        }
        out
    }

    /// Evaluates the expression. Random builtins fail with
    /// [`EvalError::NoRandomStream`] when `rng` is `None`.
    pub fn eval<B: Bindings + ?Sized>(
        &self,
        bindings: &B,
        mut rng: Option<&mut SimRng>,
    ) -> Result<f64, EvalError> {
        self.eval_inner(bindings, &mut rng)
    }

    fn eval_inner<B: Bindings + ?Sized>(
        &self,
        env: &B,
        rng: &mut Option<&mut SimRng>,
    ) -> Result<f64, EvalError> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::Ident(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Unary(op, inner) => {
                let v = inner.eval_inner(env, rng)?;
                Ok(match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Not => truth(v == 0.0),
                })
            }
            Expr::Binary(BinaryOp::And, a, b) => {
                if a.eval_inner(env, rng)? == 0.0 {
                    return Ok(0.0);
                }
                Ok(truth(b.eval_inner(env, rng)? != 0.0))
            }
            Expr::Binary(BinaryOp::Or, a, b) => {
                if a.eval_inner(env, rng)? != 0.0 {
                    return Ok(1.0);
                }
                Ok(truth(b.eval_inner(env, rng)? != 0.0))
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval_inner(env, rng)?;
                let y = b.eval_inner(env, rng)?;
                let v = match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::Domain("division by zero".into()));
                        }
                        x / y
                    }
                    BinaryOp::Rem => {
                        if y == 0.0 {
                            return Err(EvalError::Domain("remainder by zero".into()));
                        }
                        x % y
                    }
                    BinaryOp::Pow => x.powf(y),
                    BinaryOp::Lt => truth(x < y),
                    BinaryOp::Le => truth(x <= y),
                    BinaryOp::Gt => truth(x > y),
                    BinaryOp::Ge => truth(x >= y),
                    BinaryOp::Eq => truth(x == y),
                    BinaryOp::Ne => truth(x != y),
                    BinaryOp::And | BinaryOp::Or => unreachable!(),
                };
                finite(v, op.symbol())
            }
            Expr::Call(Builtin::If, args) => {
                if args[0].eval_inner(env, rng)? != 0.0 {
                    args[1].eval_inner(env, rng)
                } else {
                    args[2].eval_inner(env, rng)
                }
            }
            Expr::Call(func, args) => {
                let mut vals = [0.0; 3];
                for (slot, arg) in vals.iter_mut().zip(args) {
                    *slot = arg.eval_inner(env, rng)?;
                }
                call(*func, &vals[..args.len()], rng)
            }
        }
    }
}

fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn finite(v: f64, what: &str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain(format!("'{what}' produced a non-finite value")))
    }
}

fn draw<'a>(rng: &'a mut Option<&mut SimRng>, func: Builtin) -> Result<&'a mut SimRng, EvalError> {
    rng.as_deref_mut()
        .ok_or(EvalError::NoRandomStream(func.name()))
}

fn call(func: Builtin, a: &[f64], rng: &mut Option<&mut SimRng>) -> Result<f64, EvalError> {
    let v = match func {
        Builtin::Abs => a[0].abs(),
        Builtin::Min => a[0].min(a[1]),
        Builtin::Max => a[0].max(a[1]),
        Builtin::Exp => a[0].exp(),
        Builtin::Log => {
            if a[0] <= 0.0 {
                return Err(EvalError::Domain(format!("log of nonpositive value {}", a[0])));
            }
            a[0].ln()
        }
        Builtin::Sqrt => {
            if a[0] < 0.0 {
                return Err(EvalError::Domain(format!("sqrt of negative value {}", a[0])));
            }
            a[0].sqrt()
        }
        Builtin::Pow => a[0].powf(a[1]),
        Builtin::Floor => a[0].floor(),
        Builtin::Ceil => a[0].ceil(),
        Builtin::If => unreachable!("if is evaluated lazily"),
        Builtin::Rand => draw(rng, func)?.random::<f64>(),
        Builtin::Uniform => {
            let (lo, hi) = (a[0], a[1]);
            if lo > hi {
                return Err(EvalError::Domain(format!("uniform({lo}, {hi}) with lo > hi")));
            }
            let u: f64 = draw(rng, func)?.random();
            lo + (hi - lo) * u
        }
        Builtin::Gauss => {
            let (mu, sigma) = (a[0], a[1]);
            let normal = Normal::new(mu, sigma)
                .map_err(|_| EvalError::Domain(format!("gauss({mu}, {sigma}) with sigma < 0")))?;
            normal.sample(draw(rng, func)? as &mut dyn RngCore)
        }
        Builtin::Coin => {
            let p = a[0];
            if !(0.0..=1.0).contains(&p) {
                return Err(EvalError::Domain(format!("coin({p}) outside [0, 1]")));
            }
            let u: f64 = draw(rng, func)?.random();
            truth(u < p)
        }
    };
    finite(v, func.name())
}

// ---------------------------------------------------------------------------
// printing

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Number(_) | Expr::Ident(_) | Expr::Call(..) => PREC_ATOM,
        Expr::Unary(..) => PREC_UNARY,
        Expr::Binary(op, ..) => op.precedence(),
    }
}

/// Shortest decimal that reads back as the identical value, with an
/// exponent for very large or small magnitudes (`2`, `0.5`, `1e-300`).
pub fn fmt_number(v: f64) -> String {
    let s = format!("{v:?}");
    match s.strip_suffix(".0") {
        Some(int) => int.to_string(),
        None => s,
    }
}

impl Expr {
    /// Writes the expression with every identifier mapped through `ident`.
    pub fn write_with(
        &self,
        out: &mut String,
        ident: &dyn Fn(&str) -> String,
    ) {
        match self {
            Expr::Number(v) => {
                if v.is_sign_negative() && *v != 0.0 {
                    out.push('(');
                    out.push_str(&fmt_number(*v));
                    out.push(')');
                } else {
                    out.push_str(&fmt_number(*v));
                }
            }
            Expr::Ident(name) => out.push_str(&ident(name)),
            Expr::Unary(op, inner) => {
                out.push(match op {
                    UnaryOp::Neg => '-',
                    UnaryOp::Not => '!',
                });
                wrap(inner, PREC_UNARY, out, ident);
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let (left_min, right_min) = if *op == BinaryOp::Pow {
                    (PREC_ATOM, PREC_UNARY)
                } else {
                    (p, p + 1)
                };
                wrap(a, left_min, out, ident);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                wrap(b, right_min, out, ident);
            }
            Expr::Call(func, args) => {
                out.push_str(func.name());
                out.push('(');
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    arg.write_with(out, ident);
                }
                out.push(')');
            }
        }
    }
}

fn wrap(e: &Expr, min_prec: u8, out: &mut String, ident: &dyn Fn(&str) -> String) {
    if expr_prec(e) < min_prec {
        out.push('(');
        e.write_with(out, ident);
        out.push(')');
    } else {
        e.write_with(out, ident);
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_with(&mut s, &|name| name.to_string());
        f.write_str(&s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// lexing

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Op(s) => format!("'{s}'"),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::Comma => "','".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

/// Identifier characters beyond the first: letters, digits, `_`, `.`
/// (compartment prefixes) and `'` (primed species such as `X1'`).
pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

pub(crate) fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '\'' || c == '$'
}

/// True if `name` lexes as a single identifier token.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if is_ident_start(c) => {}
        _ => return false,
    }
    chars.all(is_ident_continue) && Builtin::from_name(name).is_none()
}

const OPERATORS: [&str; 18] = [
    "&&", "||", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "^", "!", "(", ")",
    ",",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = text[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let value: f64 = text[start..i].parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number '{}'", &text[start..i]),
            })?;
            out.push(Token {
                kind: TokenKind::Number(value),
                offset: start,
            });
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < text.len() {
                let ch = text[i..].chars().next().unwrap();
                if !is_ident_continue(ch) {
                    break;
                }
                i += ch.len_utf8();
            }
            out.push(Token {
                kind: TokenKind::Ident(text[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let op = OPERATORS
            .iter()
            .find(|op| text[i..].starts_with(**op))
            .ok_or_else(|| ParseError::Syntax {
                offset: i,
                message: format!("unexpected character '{c}'"),
            })?;
        let kind = match *op {
            "(" => TokenKind::LParen,
            ")" => TokenKind::RParen,
            "," => TokenKind::Comma,
            other => TokenKind::Op(other),
        };
        out.push(Token { kind, offset: i });
        i += op.len();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// parsing

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.len, |t| t.offset)
    }

    fn eat_op(&mut self, ops: &[&'static str]) -> Option<&'static str> {
        if let Some(Token {
            kind: TokenKind::Op(op),
            ..
        }) = self.peek()
        {
            if let Some(found) = ops.iter().find(|o| *o == op) {
                self.pos += 1;
                return Some(found);
            }
        }
        None
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        match self.peek() {
            Some(tok) if tok.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("expected {}, found {}", kind.describe(), tok.kind.describe()),
            }),
            None => Err(ParseError::Syntax {
                offset: self.len,
                message: format!("expected {}, found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(1)
    }

    fn binary_level(&mut self, level: u8) -> Result<Expr, ParseError> {
        if level > 6 {
            return self.unary();
        }
        let ops: &[&'static str] = match level {
            1 => &["||"],
            2 => &["&&"],
            3 => &["==", "!="],
            4 => &["<=", ">=", "<", ">"],
            5 => &["+", "-"],
            _ => &["*", "/", "%"],
        };
        let mut lhs = self.binary_level(level + 1)?;
        while let Some(op) = self.eat_op(ops) {
            let rhs = self.binary_level(level + 1)?;
            lhs = Expr::binary(binary_op(op), lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(op) = self.eat_op(&["-", "!"]) {
            let inner = self.unary()?;
            let op = if op == "-" { UnaryOp::Neg } else { UnaryOp::Not };
            return Ok(Expr::Unary(op, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat_op(&["^"]).is_some() {
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::Syntax {
                offset: self.len,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Number(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if self.peek().map(|t| &t.kind) != Some(&TokenKind::LParen) {
                    return Ok(Expr::Ident(name));
                }
                self.pos += 1;
                let func = Builtin::from_name(&name).ok_or(ParseError::UnknownFunction {
                    name: name.clone(),
                    offset: tok.offset,
                })?;
                let mut args = Vec::new();
                if self.peek().map(|t| &t.kind) == Some(&TokenKind::RParen) {
                    self.pos += 1;
                } else {
                    loop {
                        args.push(self.expr()?);
                        match self.peek().map(|t| &t.kind) {
                            Some(TokenKind::Comma) => self.pos += 1,
                            _ => {
                                self.expect(TokenKind::RParen)?;
                                break;
                            }
                        }
                    }
                }
                if args.len() != func.arity() {
                    return Err(ParseError::Arity {
                        name,
                        expected: func.arity(),
                        found: args.len(),
                        offset: tok.offset,
                    });
                }
                Ok(Expr::Call(func, args))
            }
            other => Err(ParseError::Syntax {
                offset: tok.offset.min(self.offset()),
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

fn binary_op(symbol: &str) -> BinaryOp {
    match symbol {
        "||" => BinaryOp::Or,
        "&&" => BinaryOp::And,
        "==" => BinaryOp::Eq,
        "!=" => BinaryOp::Ne,
        "<" => BinaryOp::Lt,
        "<=" => BinaryOp::Le,
        ">" => BinaryOp::Gt,
        ">=" => BinaryOp::Ge,
        "+" => BinaryOp::Add,
        "-" => BinaryOp::Sub,
        "*" => BinaryOp::Mul,
        "/" => BinaryOp::Div,
        "%" => BinaryOp::Rem,
        _ => unreachable!("lexer only produces known operators"),
    }
}

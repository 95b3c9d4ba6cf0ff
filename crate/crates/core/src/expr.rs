//! Scalar expression language used to define metrics, distributions,
//! symmetry generators and potentials in plain text.
//!
//! Grammar (whitespace is ignored between tokens):
//!
//! ```text
//! expr    = term   { ("+" | "-") term } ;
//! term    = unary  { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | ident | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "tan" | "sqrt" | "exp" | "log" | "abs" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!         | "." digits [ exponent ] ;
//! ident   = (letter | "_") { letter | digit | "_" } ;
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2` is `-(x^2)`) and is
//! right-associative; the other binary operators are left-associative.

// Unused when std is linked into the build graph.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;


use crate::error::{Error, Result};
use crate::fd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }

    fn apply(self, a: f64, b: f64) -> Result<f64> {
        match self {
            BinaryOp::Add => Ok(a + b),
            BinaryOp::Sub => Ok(a - b),
            BinaryOp::Mul => Ok(a * b),
            BinaryOp::Div => {
                if b == 0.0 {
                    Err(Error::Domain(format!("division by zero ({a} / 0)")))
                } else {
                    Ok(a / b)
                }
            }
            BinaryOp::Pow => {
                if a < 0.0 && b.fract() != 0.0 {
                    return Err(Error::Domain(format!(
                        "negative base {a} with non-integer exponent {b}"
                    )));
                }
                if a == 0.0 && b < 0.0 {
                    return Err(Error::Domain(format!("zero raised to negative power {b}")));
                }
                Ok(a.powf(b))
            }
        }
    }
}

/// The fixed set of unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Sqrt,
    Exp,
    Log,
    Abs,
}

impl Function {
    pub const ALL: [Function; 7] = [
        Function::Sin,
        Function::Cos,
        Function::Tan,
        Function::Sqrt,
        Function::Exp,
        Function::Log,
        Function::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Sqrt => "sqrt",
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Function> {
        Function::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64> {
        match self {
            Function::Sin => Ok(x.sin()),
            Function::Cos => Ok(x.cos()),
            Function::Tan => Ok(x.tan()),
            Function::Sqrt => {
                if x < 0.0 {
                    Err(Error::Domain(format!("sqrt of negative value {x}")))
                } else {
                    Ok(x.sqrt())
                }
            }
            Function::Exp => Ok(x.exp()),
            Function::Log => {
                if x <= 0.0 {
                    Err(Error::Domain(format!("log of non-positive value {x}")))
                } else {
                    Ok(x.ln())
                }
            }
            Function::Abs => Ok(x.abs()),
        }
    }
}

/// Parsed scalar formula.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Constant(f64),
    Variable(String),
    Neg(Box<Expression>),
    Binary {
        op: BinaryOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
    Call {
        func: Function,
        arg: Box<Expression>,
    },
}

/// Source of variable values for [`Expression::evaluate`].
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

impl<B: Bindings + ?Sized> Bindings for &B {
    fn lookup(&self, name: &str) -> Option<f64> {
        (**self).lookup(name)
    }
}

/// Bindings with a single variable overridden; used by the FD stencil.
struct Override<'a, B: ?Sized> {
    base: &'a B,
    name: &'a str,
    value: f64,
}

impl<B: Bindings + ?Sized> Bindings for Override<'_, B> {
    fn lookup(&self, name: &str) -> Option<f64> {
        if name == self.name {
            Some(self.value)
        } else {
            self.base.lookup(name)
        }
    }
}

/// Parse `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expression> {
    Expression::parse(source)
}

/// Evaluate `e` with the given variable bindings.
pub fn evaluate<B: Bindings + ?Sized>(e: &Expression, bindings: &B) -> Result<f64> {
    e.evaluate(bindings)
}

/// Central-difference gradient of `e` with respect to `names`.
pub fn gradient<B: Bindings + ?Sized>(
    e: &Expression,
    bindings: &B,
    names: &[&str],
) -> Result<Vec<f64>> {
    e.gradient(bindings, names)
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression> {
        if source.trim().is_empty() {
            return Err(Error::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: source.len(),
        };
        let e = parser.expr()?;
        match parser.peek() {
            None => Ok(e),
            Some(tok) => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind),
            }),
        }
    }

    pub fn constant(value: f64) -> Expression {
        Expression::Constant(value)
    }

    pub fn variable(name: impl Into<String>) -> Expression {
        Expression::Variable(name.into())
    }

    pub fn evaluate<B: Bindings + ?Sized>(&self, bindings: &B) -> Result<f64> {
        let value = self.eval_inner(bindings)?;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite(format!("`{self}` evaluated to {value}")))
        }
    }

    fn eval_inner<B: Bindings + ?Sized>(&self, b: &B) -> Result<f64> {
        match self {
            Expression::Constant(c) => Ok(*c),
            Expression::Variable(name) => match b.lookup(name) {
                Some(v) if v.is_finite() => Ok(v),
                Some(v) => Err(Error::NonFinite(format!("variable `{name}` = {v}"))),
                None => Err(Error::UnboundVariable(name.clone())),
            },
            Expression::Neg(x) => Ok(-x.eval_inner(b)?),
            Expression::Binary { op, lhs, rhs } => op.apply(lhs.eval_inner(b)?, rhs.eval_inner(b)?),
            Expression::Call { func, arg } => func.apply(arg.eval_inner(b)?),
        }
    }

    pub fn gradient<B: Bindings + ?Sized>(&self, bindings: &B, names: &[&str]) -> Result<Vec<f64>> {
        let vars = self.variables();
        names
            .iter()
            .map(|&name| {
                let x = bindings
                    .lookup(name)
                    .ok_or_else(|| Error::UnboundVariable(name.to_string()))?;
                if !vars.contains(name) {
                    return Ok(0.0);
                }
                fd::central_derivative(
                    |value| {
                        self.evaluate(&Override {
                            base: bindings,
                            name,
                            value,
                        })
                    },
                    x,
                )
            })
            .collect()
    }

    /// Names of all variables referenced by the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expression::Constant(_) => {}
            Expression::Variable(n) => {
                out.insert(n.clone());
            }
            Expression::Neg(x) | Expression::Call { arg: x, .. } => x.collect_vars(out),
            Expression::Binary { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
        }
    }

    /// Replace every variable named in `params` by its numeric value.
    pub fn substitute(&self, params: &BTreeMap<String, f64>) -> Expression {
        match self {
            Expression::Constant(c) => Expression::Constant(*c),
            Expression::Variable(n) => match params.get(n) {
                Some(v) => Expression::Constant(*v),
                None => Expression::Variable(n.clone()),
            },
            Expression::Neg(x) => Expression::Neg(Box::new(x.substitute(params))),
            Expression::Binary { op, lhs, rhs } => Expression::Binary {
                op: *op,
                lhs: Box::new(lhs.substitute(params)),
                rhs: Box::new(rhs.substitute(params)),
            },
            Expression::Call { func, arg } => Expression::Call {
                func: *func,
                arg: Box::new(arg.substitute(params)),
            },
        }
    }

    /// Resolve variables against a fixed ordered list of names for fast
    /// repeated evaluation.
    pub fn compile<S: AsRef<str>>(&self, names: &[S]) -> Result<CompiledExpr> {
        let node = CNode::build(self, names)?;
        let mut deps = alloc::vec![false; names.len()];
        node.mark_deps(&mut deps);
        Ok(CompiledExpr { node, deps })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Binary { op, .. } => op.precedence(),
            Expression::Neg(_) => 3,
            Expression::Constant(c) if c.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Constant(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{}", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expression::Variable(n) => f.write_str(n),
            Expression::Neg(x) => {
                if x.precedence() >= 3 {
                    write!(f, "-{x}")
                } else {
                    write!(f, "-({x})")
                }
            }
            Expression::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                let (lhs_paren, rhs_paren) = if *op == BinaryOp::Pow {
                    (lhs.precedence() <= p, rhs.precedence() < 3)
                } else {
                    (lhs.precedence() < p, rhs.precedence() <= p)
                };
                write_operand(f, lhs, lhs_paren)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, rhs, rhs_paren)
            }
            Expression::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expression, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Op(c) => write!(f, "`{c}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push(Token {
                    kind: TokenKind::Op(c as char),
                    offset: i,
                });
                i += 1;
            }
            b'(' => {
                out.push(Token {
                    kind: TokenKind::LParen,
                    offset: i,
                });
                i += 1;
            }
            b')' => {
                out.push(Token {
                    kind: TokenKind::RParen,
                    offset: i,
                });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
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
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Recursive-descent parser

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn peek_op(&self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) if ops.contains(c) => Some(*c),
            _ => None,
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.next() {
            Some(Token {
                kind: TokenKind::RParen,
                ..
            }) => Ok(()),
            Some(t) => Err(Error::Syntax {
                offset: t.offset,
                message: format!("expected `)`, found {}", t.kind),
            }),
            None => Err(Error::Syntax {
                offset: self.end,
                message: "expected `)`, found end of input".into(),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek_op(&['+', '-']) {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek_op(&['*', '/']) {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expression> {
        if self.peek_op(&['-']).is_some() {
            self.pos += 1;
            return Ok(Expression::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression> {
        let base = self.primary()?;
        if self.peek_op(&['^']).is_some() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expression::Binary {
                op: BinaryOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exponent),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expression> {
        let tok = match self.next() {
            Some(t) => t,
            None => {
                return Err(Error::Syntax {
                    offset: self.end,
                    message: "unexpected end of input".into(),
                })
            }
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Expression::Constant(v)),
            TokenKind::Ident(name) => {
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        kind: TokenKind::LParen,
                        ..
                    })
                );
                if !is_call {
                    return Ok(Expression::Variable(name));
                }
                let func = Function::from_name(&name).ok_or(Error::UnknownFunction {
                    name,
                    offset: tok.offset,
                })?;
                self.pos += 1;
                let arg = self.expr()?;
                self.expect_rparen()?;
                Ok(Expression::Call {
                    func,
                    arg: Box::new(arg),
                })
            }
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            other => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {other}"),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Compiled form

#[derive(Debug, Clone)]
enum CNode {
    Const(f64),
    Var(usize),
    Neg(Box<CNode>),
    Bin(BinaryOp, Box<CNode>, Box<CNode>),
    Call(Function, Box<CNode>),
}

impl CNode {
    fn build<S: AsRef<str>>(e: &Expression, names: &[S]) -> Result<CNode> {
        Ok(match e {
            Expression::Constant(c) => CNode::Const(*c),
            Expression::Variable(n) => {
                let idx = names
                    .iter()
                    .position(|s| s.as_ref() == n)
                    .ok_or_else(|| Error::UnboundVariable(n.clone()))?;
                CNode::Var(idx)
            }
            Expression::Neg(x) => match CNode::build(x, names)? {
                CNode::Const(c) => CNode::Const(-c),
                inner => CNode::Neg(Box::new(inner)),
            },
            Expression::Binary { op, lhs, rhs } => {
                let l = CNode::build(lhs, names)?;
                let r = CNode::build(rhs, names)?;
                match (&l, &r) {
                    (CNode::Const(a), CNode::Const(b)) => CNode::Const(op.apply(*a, *b)?),
                    _ => CNode::Bin(*op, Box::new(l), Box::new(r)),
                }
            }
            Expression::Call { func, arg } => match CNode::build(arg, names)? {
                CNode::Const(c) => CNode::Const(func.apply(c)?),
                inner => CNode::Call(*func, Box::new(inner)),
            },
        })
    }

    fn mark_deps(&self, deps: &mut [bool]) {
        match self {
            CNode::Const(_) => {}
            CNode::Var(i) => deps[*i] = true,
            CNode::Neg(x) | CNode::Call(_, x) => x.mark_deps(deps),
            CNode::Bin(_, l, r) => {
                l.mark_deps(deps);
                r.mark_deps(deps);
            }
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            CNode::Const(c) => Ok(*c),
            CNode::Var(i) => Ok(x[*i]),
            CNode::Neg(a) => Ok(-a.eval(x)?),
            CNode::Bin(op, l, r) => op.apply(l.eval(x)?, r.eval(x)?),
            CNode::Call(func, a) => func.apply(a.eval(x)?),
        }
    }
}

/// An expression whose variables are resolved to positions in a fixed
/// coordinate list.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    node: CNode,
    deps: Vec<bool>,
}

impl CompiledExpr {
    pub fn arity(&self) -> usize {
        self.deps.len()
    }

    /// `Some(c)` when the expression folded to a constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.node {
            CNode::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn depends_on(&self, index: usize) -> bool {
        self.deps[index]
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        debug_assert_eq!(x.len(), self.deps.len());
        let v = self.node.eval(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("compiled expression evaluated to {v}")))
        }
    }

    /// Partial derivative with respect to coordinate `index`; exactly zero
    /// when the expression does not reference it.
    pub fn partial(&self, x: &[f64], index: usize) -> Result<f64> {
        if !self.deps[index] {
            return Ok(0.0);
        }
        let mut work: Vec<f64> = x.to_vec();
        fd::central_derivative(
            |value| {
                work[index] = value;
                self.eval(&work)
            },
            x[index],
        )
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..x.len()).map(|i| self.partial(x, i)).collect()
    }
}

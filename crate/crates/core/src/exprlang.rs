//! A small deterministic expression language in the variables `x1..xn`.
//!
//! This is the sole ingestion path for scalar fields: tensor components,
//! conformal factors and generator functions all arrive as expression text.
//! Grammar (whitespace insignificant, no implicit multiplication):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?          // right-associative
//! atom   := number | x<idx> | func '(' expr ')' | '(' expr ')'
//! func   := exp | log | sin | cos | sinh | cosh | tanh | sqrt | abs
//! ```
//!
//! Numeric literals are decimal with optional fraction and exponent
//! (`2`, `0.5`, `1e-3`, `2.5e+10`). Constant subexpressions are kept
//! verbatim: no folding happens at parse time, so evaluation and
//! differentiation see exactly the tree the user wrote.

use crate::error::{DomainKind, Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
    Abs,
}

impl Func {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Expression tree node. Variables are stored zero-based; the text form is
/// one-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Node<T> {
    Const(T),
    Var(usize),
    Neg(Box<Node<T>>),
    Bin(BinOp, Box<Node<T>>, Box<Node<T>>),
    Call(Func, Box<Node<T>>),
}

/// A parsed multivariate expression in `x1..x{dim}`, immutable after
/// construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr<T> {
    dim: usize,
    root: Node<T>,
}

impl<T: Real> ScalarExpr<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node<T> {
        &self.root
    }

    /// Zero-based indices of the variables that actually occur in the tree,
    /// sorted ascending.
    pub fn free_vars(&self) -> Vec<usize> {
        let mut seen = vec![false; self.dim];
        collect_vars(&self.root, &mut seen);
        seen.iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    pub fn eval(&self, p: &[T]) -> Result<T> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        eval_node(&self.root, p)
    }

    /// Canonical, fully parenthesised text form. Re-parsing it yields a
    /// structurally identical tree.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        write_node(&self.root, &mut out);
        out
    }
}

fn collect_vars<T>(node: &Node<T>, seen: &mut [bool]) {
    match node {
        Node::Const(_) => {}
        Node::Var(i) => seen[*i] = true,
        Node::Neg(a) => collect_vars(a, seen),
        Node::Bin(_, a, b) => {
            collect_vars(a, seen);
            collect_vars(b, seen);
        }
        Node::Call(_, a) => collect_vars(a, seen),
    }
}

fn write_node<T: Real>(node: &Node<T>, out: &mut String) {
    match node {
        Node::Const(c) => out.push_str(&format!("{c:?}")),
        Node::Var(i) => out.push_str(&format!("x{}", i + 1)),
        Node::Neg(a) => {
            out.push_str("(-");
            write_node(a, out);
            out.push(')');
        }
        Node::Bin(op, a, b) => {
            out.push('(');
            write_node(a, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_node(b, out);
            out.push(')');
        }
        Node::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_node(a, out);
            out.push(')');
        }
    }
}

pub(crate) fn eval_node<T: Real>(node: &Node<T>, p: &[T]) -> Result<T> {
    match node {
        Node::Const(c) => Ok(*c),
        Node::Var(i) => Ok(p[*i]),
        Node::Neg(a) => Ok(-eval_node(a, p)?),
        Node::Bin(op, a, b) => {
            let x = eval_node(a, p)?;
            let y = eval_node(b, p)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div => {
                    if y == T::zero() {
                        Err(Error::domain(DomainKind::DivisionByZero))
                    } else {
                        Ok(x / y)
                    }
                }
                BinOp::Pow => pow_value(x, y),
            }
        }
        Node::Call(f, a) => {
            let x = eval_node(a, p)?;
            apply_func(*f, x)
        }
    }
}

pub(crate) fn pow_value<T: Real>(base: T, exponent: T) -> Result<T> {
    if base < T::zero() && exponent.fract() != T::zero() {
        return Err(Error::domain(DomainKind::NegativeBaseFractionalExponent));
    }
    if base == T::zero() && exponent < T::zero() {
        return Err(Error::domain(DomainKind::DivisionByZero));
    }
    Ok(base.powf(exponent))
}

fn apply_func<T: Real>(f: Func, x: T) -> Result<T> {
    match f {
        Func::Exp => Ok(x.exp()),
        Func::Log => {
            if x <= T::zero() {
                Err(Error::domain(DomainKind::LogNonPositive))
            } else {
                Ok(x.ln())
            }
        }
        Func::Sin => Ok(x.sin()),
        Func::Cos => Ok(x.cos()),
        Func::Sinh => Ok(x.sinh()),
        Func::Cosh => Ok(x.cosh()),
        Func::Tanh => Ok(x.tanh()),
        Func::Sqrt => {
            if x < T::zero() {
                Err(Error::domain(DomainKind::SqrtNegative))
            } else {
                Ok(x.sqrt())
            }
        }
        Func::Abs => Ok(x.abs()),
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token plus the byte offset where it starts.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, start));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() {
            return self.lex_number(start);
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return Ok((Tok::Ident(text.to_string()), start));
        }
        Err(Error::Parse {
            offset: start,
            expected: format!("a token, found byte {:?}", c as char),
        })
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let frac_start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == frac_start {
                return Err(Error::Parse {
                    offset: self.pos,
                    expected: "digits after decimal point".to_string(),
                });
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len()
                && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == exp_start {
                // not an exponent after all (e.g. `2exp(...)` is an error later)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            expected: "a numeric literal".to_string(),
        })?;
        Ok((Tok::Num(value), start))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    lexer: Lexer<'a>,
    look: (Tok, usize),
    dim: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, dim: usize) -> Result<Self> {
        let mut lexer = Lexer::new(src);
        let look = lexer.next()?;
        Ok(Parser { lexer, look, dim })
    }

    fn advance(&mut self) -> Result<(Tok, usize)> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.look, next))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.look.0 == tok {
            self.advance()?;
            Ok(())
        } else {
            Err(Error::Parse {
                offset: self.look.1,
                expected: what.to_string(),
            })
        }
    }

    fn expr<T: Real>(&mut self) -> Result<Node<T>> {
        let mut node = self.term()?;
        loop {
            let op = match self.look.0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance()?;
            let rhs = self.term()?;
            node = Node::Bin(op, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn term<T: Real>(&mut self) -> Result<Node<T>> {
        let mut node = self.factor()?;
        loop {
            let op = match self.look.0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.advance()?;
            let rhs = self.factor()?;
            node = Node::Bin(op, Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn factor<T: Real>(&mut self) -> Result<Node<T>> {
        if self.look.0 == Tok::Minus {
            self.advance()?;
            let inner = self.factor()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power<T: Real>(&mut self) -> Result<Node<T>> {
        let base = self.atom()?;
        if self.look.0 == Tok::Caret {
            self.advance()?;
            let exponent = self.factor()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom<T: Real>(&mut self) -> Result<Node<T>> {
        let (tok, offset) = self.advance()?;
        match tok {
            Tok::Num(v) => Ok(Node::Const(T::of(v))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(idx) = parse_var_name(&name) {
                    if idx == 0 || idx > self.dim {
                        return Err(Error::Parse {
                            offset,
                            expected: format!("a variable in x1..x{}", self.dim),
                        });
                    }
                    return Ok(Node::Var(idx - 1));
                }
                Err(Error::Parse {
                    offset,
                    expected: format!("a known function or variable, found `{name}`"),
                })
            }
            _ => Err(Error::Parse {
                offset,
                expected: "a number, variable, function call or `(`".to_string(),
            }),
        }
    }
}

/// `x` followed by a decimal index without leading zeros.
fn parse_var_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parse `text` as an expression in the variables `x1..x{dim}`.
pub fn parse<T: Real>(text: &str, dim: usize) -> Result<ScalarExpr<T>> {
    let mut parser = Parser::new(text, dim)?;
    let root = parser.expr()?;
    if parser.look.0 != Tok::End {
        return Err(Error::Parse {
            offset: parser.look.1,
            expected: "an operator or end of input".to_string(),
        });
    }
    Ok(ScalarExpr { dim, root })
}

//! Univariate expression trees.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'x' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | ln | sinh | cosh | sqrt
//! ```
//!
//! Implicit multiplication (`2x`) is a syntax error. A unary minus applied
//! directly to a numeric literal is folded into the literal, so `-2` parses
//! to `Num(-2.0)` while `-(2)` parses to `Neg(Num(2.0))`.
//!
//! The `Display` implementation is the serializer: it parenthesizes every
//! compound node so that parsing the output reproduces the same tree.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Ln,
        Func::Sinh,
        Func::Cosh,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

/// Expression tree for a real function of the single variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(Constant),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at {arg}")]
    Domain { op: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite intermediate result in {op}")]
    NonFinite { op: &'static str },
    #[error("{x} lies outside the domain ({lo}, {hi})")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// Does the tree mention `x`?
    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_x(),
            Expr::Bin(_, a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    /// Evaluates at `x`. Any non-finite intermediate is an error, never a
    /// returned NaN or infinity.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Const(c) => c.value(),
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => pow(a, b)?,
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(x)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(EvalError::Domain { op: "ln", arg: a });
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::Domain { op: "sqrt", arg: a });
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { op: self.kind() })
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Expr::Num(_) => "literal",
            Expr::Var => "x",
            Expr::Const(_) => "constant",
            Expr::Neg(_) => "negation",
            Expr::Bin(BinOp::Add, ..) => "addition",
            Expr::Bin(BinOp::Sub, ..) => "subtraction",
            Expr::Bin(BinOp::Mul, ..) => "multiplication",
            Expr::Bin(BinOp::Div, ..) => "division",
            Expr::Bin(BinOp::Pow, ..) => "power",
            Expr::Call(f, _) => f.name(),
        }
    }

    /// Symbolic derivative with respect to `x`. Only trivial zero/one folding
    /// is applied; the result is meant to be evaluated, not read.
    pub fn differentiate(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Const(_) => Expr::Num(0.0),
            Expr::Var => Expr::Num(1.0),
            Expr::Neg(a) => neg(a.differentiate()),
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.differentiate(), b.differentiate());
                let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, b), mul(a, db)),
                    BinOp::Div => div(
                        sub(mul(da, b.clone()), mul(a, db)),
                        Expr::bin(BinOp::Pow, b, Expr::Num(2.0)),
                    ),
                    BinOp::Pow if !b.depends_on_x() => power_rule(a, b, da),
                    BinOp::Pow => {
                        // d(a^b) = a^b * (b' ln a + b a'/a)
                        let whole = Expr::bin(BinOp::Pow, a.clone(), b.clone());
                        let log_part = mul(db, Expr::call(Func::Ln, a.clone()));
                        let base_part = div(mul(b, da), a);
                        mul(whole, add(log_part, base_part))
                    }
                }
            }
            Expr::Call(f, a) => {
                let da = a.differentiate();
                let a = a.as_ref().clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, a),
                    Func::Cos => neg(Expr::call(Func::Sin, a)),
                    Func::Exp => Expr::call(Func::Exp, a),
                    Func::Ln => div(Expr::Num(1.0), a),
                    Func::Sinh => Expr::call(Func::Cosh, a),
                    Func::Cosh => Expr::call(Func::Sinh, a),
                    Func::Sqrt => div(
                        Expr::Num(1.0),
                        mul(Expr::Num(2.0), Expr::call(Func::Sqrt, a)),
                    ),
                };
                mul(outer, da)
            }
        }
    }
}

fn pow(a: f64, b: f64) -> Result<f64, EvalError> {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        if a == 0.0 && b < 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(a.powi(b as i32))
    } else if a > 0.0 {
        Ok((b * a.ln()).exp())
    } else {
        Err(EvalError::Domain { op: "^", arg: a })
    }
}

fn power_rule(base: Expr, exponent: Expr, dbase: Expr) -> Expr {
    let lowered = match exponent {
        Expr::Num(0.0) => return Expr::Num(0.0),
        Expr::Num(n) => Expr::Num(n - 1.0),
        ref e => sub(e.clone(), Expr::Num(1.0)),
    };
    mul(
        mul(exponent, Expr::bin(BinOp::Pow, base, lowered)),
        dbase,
    )
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(n) if *n == v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        Expr::bin(BinOp::Add, a, b)
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        neg(b)
    } else {
        Expr::bin(BinOp::Sub, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        Expr::bin(BinOp::Mul, a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 1.0) {
        a
    } else {
        Expr::bin(BinOp::Div, a, b)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var => f.write_str("x"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Neg(a) => write!(f, "(-({a}))"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Parses expression text into a tree.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, idx: 0 };
    if p.peek().kind == Tok::End {
        return Err(ParseError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let e = p.expr()?;
    let t = p.peek();
    match t.kind {
        Tok::End => Ok(e),
        Tok::Num(_) | Tok::Ident(_) | Tok::LParen => Err(ParseError::Syntax {
            pos: t.pos,
            msg: "missing operator (implicit multiplication is not supported)".into(),
        }),
        _ => Err(ParseError::Syntax {
            pos: t.pos,
            msg: format!("unexpected {}", t.kind.describe()),
        }),
    }
}

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

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // exponent only when digits follow, otherwise `e` is the constant
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
                let v = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
                out.push(Token {
                    kind: Tok::Num(v),
                    pos: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: Tok::Ident(src[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push(Token { kind, pos: start });
        i += 1;
    }
    out.push(Token {
        kind: Tok::End,
        pos: src.len(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.idx + offset).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.idx].clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let t = self.bump();
        if t.kind == want {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: t.pos,
                msg: format!("expected {}, found {}", want.describe(), t.kind.describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().kind != Tok::Minus {
            return self.power();
        }
        self.bump();
        if let Tok::Num(v) = *self.peek_at(0) {
            if *self.peek_at(1) != Tok::Caret {
                self.bump();
                return Ok(Expr::Num(-v));
            }
        }
        Ok(Expr::Neg(Box::new(self.unary()?)))
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek().kind == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.bump();
        match t.kind {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var),
                "pi" => Ok(Expr::Const(Constant::Pi)),
                "e" => Ok(Expr::Const(Constant::E)),
                other => match Func::from_name(other) {
                    Some(func) => {
                        self.expect(Tok::LParen)?;
                        let arg = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::call(func, arg))
                    }
                    None => Err(ParseError::UnknownIdentifier { pos: t.pos, name }),
                },
            },
            other => Err(ParseError::Syntax {
                pos: t.pos,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(
            p("x^2"),
            Expr::bin(BinOp::Pow, Expr::Var, Expr::Num(2.0))
        );
        assert_eq!(
            p("sin(3*x) + 1"),
            Expr::bin(
                BinOp::Add,
                Expr::call(Func::Sin, Expr::bin(BinOp::Mul, Expr::Num(3.0), Expr::Var)),
                Expr::Num(1.0)
            )
        );
        assert!(matches!(parse("2x"), Err(ParseError::Syntax { pos: 1, .. })));
    }

    #[test]
    fn precedence() {
        // ^ binds tighter than unary minus
        assert_eq!(p("-x^2").eval(3.0).unwrap(), -9.0);
        assert_eq!(p("-2^2").eval(0.0).unwrap(), -4.0);
        // right associative
        assert_eq!(p("2^3^2").eval(0.0).unwrap(), 512.0);
        assert_eq!(p("2^-1").eval(0.0).unwrap(), 0.5);
        assert_eq!(p("1 - 2 - 3").eval(0.0).unwrap(), -4.0);
        assert_eq!(p("8 / 4 / 2").eval(0.0).unwrap(), 1.0);
        assert_eq!(p("1 + 2 * 3").eval(0.0).unwrap(), 7.0);
        assert_eq!(p("2 * -x").eval(4.0).unwrap(), -8.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse("foo(x)"),
            Err(ParseError::UnknownIdentifier { pos: 0, .. })
        ));
        assert!(matches!(
            parse("abs(x)"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(parse("").is_err());
        assert!(parse("   ").is_err());
        assert!(parse("(x").is_err());
        assert!(parse("x)").is_err());
        assert!(parse("sin x").is_err());
        assert!(parse("x(2)").is_err());
        assert!(parse("2e").is_err());
        assert!(parse("3 $ 4").is_err());
    }

    #[test]
    fn literals() {
        assert_eq!(p("1e-3"), Expr::Num(1e-3));
        assert_eq!(p(".5"), Expr::Num(0.5));
        assert_eq!(p("-2"), Expr::Num(-2.0));
        assert_eq!(p("-(2)"), Expr::Neg(Box::new(Expr::Num(2.0))));
        assert_eq!(p("pi").eval(0.0).unwrap(), std::f64::consts::PI);
        assert_eq!(p("e").eval(0.0).unwrap(), std::f64::consts::E);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("x^2").eval(3.0).unwrap(), 9.0);
        assert_eq!(p("exp(0)").eval(0.0).unwrap(), 1.0);
        assert!(matches!(
            p("ln(x)").eval(-1.0),
            Err(EvalError::Domain { op: "ln", .. })
        ));
        assert_eq!(p("1/x").eval(0.0), Err(EvalError::DivisionByZero));
        assert!(p("sqrt(x)").eval(-1.0).is_err());
        assert!(p("exp(x)").eval(1000.0).is_err());
        // non-integer exponent needs a positive base
        assert!(p("x^0.5").eval(-4.0).is_err());
        assert_eq!(p("x^0.5").eval(4.0).unwrap(), 2.0);
        assert_eq!(p("x^3").eval(-2.0).unwrap(), -8.0);
        assert_eq!(p("x^-1").eval(0.0), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p("x^2").differentiate().eval(3.0).unwrap(), 6.0);
        assert_eq!(p("sin(3*x)").differentiate().eval(0.0).unwrap(), 3.0);
        assert_eq!(Expr::Num(5.0).differentiate().eval(17.0).unwrap(), 0.0);
        let d = p("x^x").differentiate();
        // d/dx x^x = x^x (ln x + 1)
        let x: f64 = 1.7;
        assert!((d.eval(x).unwrap() - x.powf(x) * (x.ln() + 1.0)).abs() < 1e-12);
        let d = p("2^x").differentiate();
        assert!((d.eval(1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        let d = p("x^0").differentiate();
        assert_eq!(d.eval(0.0).unwrap(), 0.0);
        let d = p("sqrt(x)/cosh(x)").differentiate();
        let x: f64 = 0.8;
        let exact = (0.5 / x.sqrt()) / x.cosh() - x.sqrt() * x.sinh() / x.cosh().powi(2);
        assert!((d.eval(x).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn serialization_round_trip() {
        for s in [
            "x^2",
            "-x^2",
            "-2",
            "-(2)",
            "--2",
            "(-x)^2",
            "2^-3",
            "sin(3*x) + 1",
            "exp(-x/3) - pi*e",
            "1e-7 * x - 0.1",
            "sqrt(cosh(x)) / ln(x + 2)",
        ] {
            let e = p(s);
            let back = p(&e.to_string());
            assert_eq!(e, back, "{s} -> {e}");
        }
    }
}

//! A small expression language for perturbations and remainders.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := literal | coord | call | '(' expr (',' expr)* ')' | '-' factor
//! ```
//!
//! Literals are decimals (real fields), `p:v:u` or integers (p-adic
//! fields). `x1 .. xd` are coordinates and `x` is the whole vector; a
//! parenthesized list of two or more scalars is a vector. Calls: `abs`,
//! `min`, `max`, `clamp(e, lo, hi)`, `norm(v)`, and the field-gated `tanh`,
//! `sin` (real) and `ball(r)` (p-adic: 1 on `||x|| <= r`, else 0).
//!
//! Over p-adic fields `min`, `max` and `clamp` compare absolute values,
//! and `abs`, `norm` return the power of `p` with the same absolute value.

use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::linspace::Vector;
use crate::maps::{Certificate, Perturbation};
use crate::scalars::{FieldSpec, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("type error at {line}:{col}: {msg}")]
    Type { line: usize, col: usize, msg: String },
    #[error("field error at {line}:{col}: {msg}")]
    FieldGate { line: usize, col: usize, msg: String },
}

impl From<ExprError> for Error {
    fn from(e: ExprError) -> Self {
        Error::InvalidArgument(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Clamp,
    Norm,
    Tanh,
    Sin,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Clamp => "clamp",
            Func::Norm => "norm",
            Func::Tanh => "tanh",
            Func::Sin => "sin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Scalar),
    /// Zero-based coordinate.
    Coord(usize),
    Whole,
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Tuple(Vec<Expr>),
    Ball(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Scalar,
    Vector(usize),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(s) => write!(f, "{s}"),
            Expr::Coord(i) => write!(f, "x{}", i + 1),
            Expr::Whole => write!(f, "x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Abs(e) => write!(f, "abs({e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Tuple(items) => {
                write!(f, "(")?;
                for (i, a) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Ball(r) => write!(f, "ball({r:?})"),
        }
    }
}

/// A parsed, type-checked expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    pub root: Expr,
    pub ty: Ty,
    pub dim: usize,
    pub field: FieldSpec,
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> std::result::Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            // p-adic triple p:v:u
            if i < chars.len() && chars[i] == ':' {
                for _ in 0..2 {
                    if i >= chars.len() || chars[i] != ':' {
                        let c = col + (i - start);
                        return Err(ExprError::Syntax { line, col: c, msg: "incomplete p-adic literal".into() });
                    }
                    i += 1;
                    if i < chars.len() && chars[i] == '-' {
                        i += 1;
                    }
                    let ds = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if ds == i {
                        let c = col + (i - start);
                        return Err(ExprError::Syntax { line, col: c, msg: "expected digits in p-adic literal".into() });
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Num(s), line: start_line, col: start_col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(s), line: start_line, col: start_col });
            continue;
        }
        if "+-*/(),".contains(c) {
            out.push(Token { tok: Tok::Sym(c), line, col });
            i += 1;
            col += 1;
            continue;
        }
        return Err(ExprError::Syntax { line, col, msg: format!("unexpected character '{c}'") });
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    dim: usize,
    field: &'a FieldSpec,
}

type Typed = (Expr, Ty);
type PResult<T> = std::result::Result<T, ExprError>;

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(t: &Token, msg: impl Into<String>) -> ExprError {
        ExprError::Syntax { line: t.line, col: t.col, msg: msg.into() }
    }

    fn type_err(t: &Token, msg: impl Into<String>) -> ExprError {
        ExprError::Type { line: t.line, col: t.col, msg: msg.into() }
    }

    fn gate(t: &Token, msg: impl Into<String>) -> ExprError {
        ExprError::FieldGate { line: t.line, col: t.col, msg: msg.into() }
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            Err(Self::syntax(&t, format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> PResult<Typed> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let t = self.next();
            let rhs = self.term()?;
            lhs = Self::binary(&t, op, lhs, rhs)?;
        }
    }

    fn term(&mut self) -> PResult<Typed> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            let t = self.next();
            let rhs = self.factor()?;
            lhs = Self::binary(&t, op, lhs, rhs)?;
        }
    }

    fn binary(t: &Token, op: BinOp, (a, ta): Typed, (b, tb): Typed) -> PResult<Typed> {
        let ty = match (op, ta, tb) {
            (_, Ty::Scalar, Ty::Scalar) => Ty::Scalar,
            (BinOp::Add | BinOp::Sub, Ty::Vector(m), Ty::Vector(n)) if m == n => Ty::Vector(m),
            (BinOp::Mul, Ty::Scalar, Ty::Vector(n)) | (BinOp::Mul, Ty::Vector(n), Ty::Scalar) => Ty::Vector(n),
            (BinOp::Div, Ty::Vector(n), Ty::Scalar) => Ty::Vector(n),
            _ => {
                return Err(Self::type_err(t, format!("operator '{}' not defined for {ta:?} and {tb:?}", op.symbol())))
            }
        };
        Ok((Expr::Bin(op, Box::new(a), Box::new(b)), ty))
    }

    fn factor(&mut self) -> PResult<Typed> {
        let t = self.next();
        match &t.tok {
            Tok::Num(s) => {
                let ultra = self.field.is_ultrametric();
                let lit = self.field.parse_literal(s).map_err(|e| {
                    if s.contains(':') && !ultra {
                        Self::gate(&t, format!("p-adic literal `{s}` in a real field"))
                    } else if ultra && s.contains(':') && s.split(':').next().and_then(|p| p.parse::<u64>().ok()).is_some_and(|p| {
                        !matches!(self.field, FieldSpec::PAdic { prime, .. } if *prime == p)
                    }) {
                        Self::gate(&t, format!("literal `{s}` belongs to a different p-adic field"))
                    } else if !s.contains(':') && ultra && s.contains(['.', 'e', 'E']) {
                        Self::gate(&t, format!("decimal literal `{s}` needs a real field"))
                    } else {
                        Self::syntax(&t, e.to_string())
                    }
                })?;
                Ok((Expr::Lit(lit), Ty::Scalar))
            }
            Tok::Sym('-') => {
                let (e, ty) = self.factor()?;
                Ok((Expr::Neg(Box::new(e)), ty))
            }
            Tok::Sym('(') => {
                let first = self.expr()?;
                if self.peek().tok != Tok::Sym(',') {
                    self.expect(')')?;
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.peek().tok == Tok::Sym(',') {
                    self.next();
                    items.push(self.expr()?);
                }
                self.expect(')')?;
                if items.iter().any(|(_, ty)| *ty != Ty::Scalar) {
                    return Err(Self::type_err(&t, "tuple entries must be scalars"));
                }
                let n = items.len();
                Ok((Expr::Tuple(items.into_iter().map(|(e, _)| e).collect()), Ty::Vector(n)))
            }
            Tok::Ident(name) => self.ident(&t, name.clone()),
            Tok::End => Err(Self::syntax(&t, "unexpected end of input")),
            Tok::Sym(c) => Err(Self::syntax(&t, format!("unexpected '{c}'"))),
        }
    }

    fn args(&mut self) -> PResult<Vec<Typed>> {
        self.expect('(')?;
        let mut out = vec![self.expr()?];
        while self.peek().tok == Tok::Sym(',') {
            self.next();
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn ident(&mut self, t: &Token, name: String) -> PResult<Typed> {
        if name == "x" {
            return Ok((Expr::Whole, Ty::Vector(self.dim)));
        }
        if let Some(idx) = name.strip_prefix('x').filter(|r| !r.is_empty() && r.chars().all(|c| c.is_ascii_digit())) {
            let i: usize = idx.parse().map_err(|_| Self::syntax(t, "bad coordinate"))?;
            if i == 0 || i > self.dim {
                return Err(Self::type_err(t, format!("coordinate x{i} outside 1..{}", self.dim)));
            }
            return Ok((Expr::Coord(i - 1), Ty::Scalar));
        }
        let real = !self.field.is_ultrametric();
        match name.as_str() {
            "ball" => {
                if real {
                    return Err(Self::gate(t, "ball(r) needs a p-adic field"));
                }
                self.expect('(')?;
                let r = self.radius()?;
                self.expect(')')?;
                Ok((Expr::Ball(r), Ty::Scalar))
            }
            "tanh" | "sin" => {
                if !real {
                    return Err(Self::gate(t, format!("{name} needs a real field")));
                }
                let args = self.args()?;
                let func = if name == "tanh" { Func::Tanh } else { Func::Sin };
                self.scalar_call(t, func, args, 1)
            }
            "abs" => {
                let mut args = self.args()?;
                if args.len() != 1 {
                    return Err(Self::type_err(t, "abs takes one argument"));
                }
                let (e, ty) = args.pop().unwrap();
                if ty != Ty::Scalar {
                    return Err(Self::type_err(t, "abs takes a scalar"));
                }
                Ok((Expr::Abs(Box::new(e)), Ty::Scalar))
            }
            "min" | "max" => {
                let args = self.args()?;
                if args.len() < 2 {
                    return Err(Self::type_err(t, format!("{name} takes at least two arguments")));
                }
                let n = args.len();
                self.scalar_call(t, if name == "min" { Func::Min } else { Func::Max }, args, n)
            }
            "clamp" => {
                let args = self.args()?;
                self.scalar_call(t, Func::Clamp, args, 3)
            }
            "norm" => {
                let args = self.args()?;
                if args.len() != 1 || !matches!(args[0].1, Ty::Vector(_)) {
                    return Err(Self::type_err(t, "norm takes one vector"));
                }
                Ok((Expr::Call(Func::Norm, vec![args.into_iter().next().unwrap().0]), Ty::Scalar))
            }
            _ => Err(Self::syntax(t, format!("unknown name `{name}`"))),
        }
    }

    fn scalar_call(&self, t: &Token, func: Func, args: Vec<Typed>, arity: usize) -> PResult<Typed> {
        if args.len() != arity {
            return Err(Self::type_err(t, format!("{} takes {arity} arguments", func.name())));
        }
        if args.iter().any(|(_, ty)| *ty != Ty::Scalar) {
            return Err(Self::type_err(t, format!("{} takes scalars", func.name())));
        }
        Ok((Expr::Call(func, args.into_iter().map(|(e, _)| e).collect()), Ty::Scalar))
    }

    /// Numeric radius: a decimal, or `a/b` with integers.
    fn radius(&mut self) -> PResult<f64> {
        let t = self.next();
        let Tok::Num(a) = &t.tok else {
            return Err(Self::syntax(&t, "ball radius must be a number"));
        };
        let mut r: f64 = a.parse().map_err(|_| Self::syntax(&t, "bad radius"))?;
        if self.peek().tok == Tok::Sym('/') {
            self.next();
            let t2 = self.next();
            let Tok::Num(b) = &t2.tok else {
                return Err(Self::syntax(&t2, "bad radius denominator"));
            };
            let b: f64 = b.parse().map_err(|_| Self::syntax(&t2, "bad radius"))?;
            r /= b;
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Self::syntax(&t, "ball radius must be positive"));
        }
        Ok(r)
    }
}

/// Parses and type-checks `text` for dimension `dim` over `field`.
pub fn parse_expr(text: &str, dim: usize, field: FieldSpec) -> std::result::Result<ExprAst, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, dim, field: &field };
    let (root, ty) = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return Err(Parser::syntax(&t, "trailing input"));
    }
    Ok(ExprAst { root, ty, dim, field })
}

#[derive(Debug, Clone)]
enum Value {
    S(Scalar),
    V(Vector),
}

fn cmp_key(field: &FieldSpec, s: &Scalar) -> f64 {
    match s {
        Scalar::Real(v) => *v,
        Scalar::PAdic(_) => field.abs(s),
    }
}

impl ExprAst {
    /// Evaluates at `x`; vector-typed results keep their dimension and
    /// scalar results are returned as one-element vectors.
    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        match self.eval_node(&self.root, x)? {
            Value::V(v) => Ok(v),
            Value::S(s) => Ok(Vector::new(self.field, vec![s])),
        }
    }

    fn scalar(&self, e: &Expr, x: &Vector) -> Result<Scalar> {
        match self.eval_node(e, x)? {
            Value::S(s) => Ok(s),
            Value::V(_) => Err(Error::Evaluation("expected a scalar".into())),
        }
    }

    fn real_fn(&self, s: Scalar, f: fn(f64) -> f64) -> Result<Scalar> {
        s.as_real().map(|v| Scalar::Real(f(v))).ok_or_else(|| Error::Evaluation("real function on p-adic value".into()))
    }

    fn eval_node(&self, e: &Expr, x: &Vector) -> Result<Value> {
        let field = self.field;
        Ok(match e {
            Expr::Lit(s) => Value::S(*s),
            Expr::Coord(i) => Value::S(x.get(*i)),
            Expr::Whole => Value::V(x.clone()),
            Expr::Neg(a) => match self.eval_node(a, x)? {
                Value::S(s) => Value::S(-s),
                Value::V(v) => Value::V(-&v),
            },
            Expr::Abs(a) => {
                let s = self.scalar(a, x)?;
                Value::S(match s {
                    Scalar::Real(v) => Scalar::Real(v.abs()),
                    Scalar::PAdic(_) => field.element_with_abs(field.abs(&s)),
                })
            }
            Expr::Bin(op, a, b) => {
                let (va, vb) = (self.eval_node(a, x)?, self.eval_node(b, x)?);
                match (op, va, vb) {
                    (BinOp::Add, Value::S(p), Value::S(q)) => Value::S(p + q),
                    (BinOp::Sub, Value::S(p), Value::S(q)) => Value::S(p - q),
                    (BinOp::Mul, Value::S(p), Value::S(q)) => Value::S(p * q),
                    (BinOp::Div, Value::S(p), Value::S(q)) => Value::S(div(p, q)?),
                    (BinOp::Add, Value::V(p), Value::V(q)) => Value::V(&p + &q),
                    (BinOp::Sub, Value::V(p), Value::V(q)) => Value::V(&p - &q),
                    (BinOp::Mul, Value::S(s), Value::V(v)) | (BinOp::Mul, Value::V(v), Value::S(s)) => Value::V(v.scale(s)),
                    (BinOp::Div, Value::V(v), Value::S(s)) => Value::V(v.scale(div(field.one(), s)?)),
                    _ => return Err(Error::Evaluation("ill-typed operation".into())),
                }
            }
            Expr::Call(func, args) => match func {
                Func::Norm => {
                    let Value::V(v) = self.eval_node(&args[0], x)? else {
                        return Err(Error::Evaluation("norm of a scalar".into()));
                    };
                    Value::S(match field {
                        FieldSpec::RealPower { .. } => {
                            Scalar::Real(v.to_f64().unwrap().iter().fold(0.0f64, |m, c| m.max(c.abs())))
                        }
                        FieldSpec::PAdic { .. } => field.element_with_abs(v.max_abs()),
                    })
                }
                Func::Tanh => Value::S(self.real_fn(self.scalar(&args[0], x)?, f64::tanh)?),
                Func::Sin => Value::S(self.real_fn(self.scalar(&args[0], x)?, f64::sin)?),
                Func::Min | Func::Max => {
                    let vals = args.iter().map(|a| self.scalar(a, x)).collect::<Result<Vec<_>>>()?;
                    let pick_min = *func == Func::Min;
                    let mut best = vals[0];
                    for v in &vals[1..] {
                        let (kb, kv) = (cmp_key(&field, &best), cmp_key(&field, v));
                        if (pick_min && kv < kb) || (!pick_min && kv > kb) {
                            best = *v;
                        }
                    }
                    Value::S(best)
                }
                Func::Clamp => {
                    let v = self.scalar(&args[0], x)?;
                    let lo = self.scalar(&args[1], x)?;
                    let hi = self.scalar(&args[2], x)?;
                    let r = if cmp_key(&field, &v) < cmp_key(&field, &lo) { lo } else { v };
                    Value::S(if cmp_key(&field, &r) > cmp_key(&field, &hi) { hi } else { r })
                }
            },
            Expr::Tuple(items) => {
                let coords = items.iter().map(|i| self.scalar(i, x)).collect::<Result<Vec<_>>>()?;
                Value::V(Vector::new(field, coords))
            }
            Expr::Ball(r) => Value::S(if x.max_abs() <= *r { field.one() } else { field.zero() }),
        })
    }

    /// Wraps the expression as a perturbation with user-certified bounds.
    pub fn into_perturbation(self, sup: f64, lip: f64) -> Result<Perturbation> {
        let out_dim = match self.ty {
            Ty::Vector(n) => n,
            Ty::Scalar => 1,
        };
        if out_dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: out_dim });
        }
        let zero = Vector::zeros(self.field, self.dim);
        let vanishes = self.eval(&zero).map(|v| v.is_zero()).unwrap_or(false);
        let name = format!("expr({self})");
        let (field, dim) = (self.field, self.dim);
        Perturbation::new(name, field, dim, Certificate::uniform(sup, lip), vanishes, move |x: &Vector| self.eval(x))
    }
}

fn div(p: Scalar, q: Scalar) -> Result<Scalar> {
    p.checked_div(&q).map_err(|_| Error::Evaluation("division by zero".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r1() -> FieldSpec {
        FieldSpec::real(1.0).unwrap()
    }

    fn q3() -> FieldSpec {
        FieldSpec::padic(3, 24).unwrap()
    }

    #[test]
    fn grammar_instance() {
        let ast = parse_expr("x1 + 2*x2", 2, r1()).unwrap();
        let expected = Expr::Bin(
            BinOp::Add,
            Box::new(Expr::Coord(0)),
            Box::new(Expr::Bin(BinOp::Mul, Box::new(Expr::Lit(Scalar::Real(2.0))), Box::new(Expr::Coord(1)))),
        );
        assert_eq!(ast.root, expected);
        assert_eq!(ast.ty, Ty::Scalar);
    }

    #[test]
    fn padic_ball_literal() {
        let ast = parse_expr("ball(1) * 3:0:1", 1, q3()).unwrap();
        let Expr::Bin(BinOp::Mul, a, b) = &ast.root else { panic!() };
        assert_eq!(**a, Expr::Ball(1.0));
        assert_eq!(**b, Expr::Lit(q3().one()));
        assert_eq!(ast.eval(&Vector::from_i64(q3(), &[3])).unwrap(), Vector::from_i64(q3(), &[1]));
        assert!(ast.eval(&Vector::new(q3(), vec![q3().from_ratio(1, 3).unwrap()])).unwrap().is_zero());
    }

    #[test]
    fn field_gate() {
        assert!(matches!(parse_expr("tanh(x1)", 1, q3()), Err(ExprError::FieldGate { .. })));
        assert!(matches!(parse_expr("ball(1)", 1, r1()), Err(ExprError::FieldGate { .. })));
    }

    #[test]
    fn positions_reported() {
        match parse_expr("x1 +\n  * x2", 2, r1()) {
            Err(ExprError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn evaluation() {
        let ast = parse_expr("(x2 * x2, min(x1, 0.5) - tanh(x2) / 2)", 2, r1()).unwrap();
        let v = ast.eval(&Vector::from_f64(r1(), &[0.7, 0.3]).unwrap()).unwrap().to_f64().unwrap();
        assert!((v[0] - 0.09).abs() < 1e-15);
        assert!((v[1] - (0.5 - 0.3f64.tanh() / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        for text in ["-x1 * (x2 - 3)", "(x1, -x2) * 2 + x", "clamp(x1, -1, 1)", "norm(x) * sin(x1 / 7)"] {
            let a = parse_expr(text, 2, r1()).unwrap();
            let b = parse_expr(&a.to_string(), 2, r1()).unwrap();
            assert_eq!(a, b, "{text} -> {a}");
        }
    }

    #[test]
    fn division_by_zero_at_evaluation() {
        let ast = parse_expr("1 / x1", 1, r1()).unwrap();
        assert!(matches!(ast.eval(&Vector::zeros(r1(), 1)), Err(Error::Evaluation(_))));
    }

    #[test]
    fn as_perturbation() {
        let g = parse_expr("(0.1 * sin(x2), 0.1 * sin(x1))", 2, r1()).unwrap().into_perturbation(0.1, 0.1).unwrap();
        assert!(g.vanishes_at_zero());
        assert!(parse_expr("x1", 2, r1()).unwrap().into_perturbation(1.0, 1.0).is_err());
    }
}

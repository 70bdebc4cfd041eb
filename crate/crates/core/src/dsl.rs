//! The equation language.
//!
//! ```text
//! equation := expr '=' expr
//! expr     := term (('+'|'-') term)*
//! term     := unary (('*'|'/') unary)*
//! unary    := '-' unary | power
//! power    := atom ['^' ['-'] integer]
//! atom     := number | 'I' | 'w' | ident | ident '(' expr ')' | 'conj(' expr ')' | '(' expr ')'
//! ```
//!
//! `I` is ζ₄ and `w` is ζ₃. `t`, `x`, `z` and `zbar` are domain variables;
//! any other identifier is a symbolic parameter. The first function name
//! applied on the left is the unknown.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use thiserror::Error;

use crate::actions::{
    build_domain_action, conjugate_name, DomainAction, ImageAction, MoebiusMap, VariableModel,
};
use crate::exactnum::{rat, Cyc, NumError, Rat};
use crate::groups::GroupError;
use crate::polyfunc::{PolyError, RatFunc};
use crate::solver::{EquationSpec, Rhs};

const MAX_DEPTH: usize = 200;
const MAX_EXPONENT: i64 = 64;
const MAX_DEGREE: u32 = 512;
const CLOSURE_BOUND: usize = 64;
const DOMAIN_VARS: [&str; 4] = ["t", "x", "z", "zbar"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    SyntaxError { offset: usize, expected: String },
    #[error("argument {arg} is not a Möbius map of the domain variable")]
    NonMoebiusArgument { arg: String },
    #[error("unknown symbol {name} at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },
    #[error("equation is not linear in the unknown: {detail}")]
    NonLinear { detail: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression degree exceeds {MAX_DEGREE}")]
    TooLarge,
    #[error("mixed variable models: {detail}")]
    AmbiguousVariableModel { detail: String },
    #[error("closure of the argument maps exceeded {bound} elements")]
    BoundExceeded { bound: usize },
}

impl From<PolyError> for DslError {
    fn from(e: PolyError) -> DslError {
        match e {
            PolyError::DivisionByZero | PolyError::Num(NumError::DivisionByZero) => DslError::DivisionByZero,
            other => DslError::NonLinear { detail: other.to_string() },
        }
    }
}

impl From<NumError> for DslError {
    fn from(_: NumError) -> DslError {
        DslError::DivisionByZero
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number {n}"),
        Tok::Ident(s) => format!("identifier {s}"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Eq => "'='".into(),
        Tok::End => "end of input".into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, DslError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
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
            b'=' => Tok::Eq,
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = text[start..i].parse().expect("ascii digits");
                out.push((Tok::Num(n), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(DslError::SyntaxError { offset: start, expected: "an operator, number or name".into() })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// Expression tree with constant subtrees folded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Cyc),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Call(String, Box<Expr>),
    Conj(Box<Expr>),
}

impl Expr {
    fn int(n: i64) -> Expr {
        Expr::Const(Cyc::from_int(n))
    }

    fn as_const(&self) -> Option<&Cyc> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    fn has_call(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Call(..) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Conj(a) => a.has_call(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.has_call() || b.has_call(),
        }
    }

    fn walk(&self, visit: &mut dyn FnMut(&Expr)) {
        visit(self);
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Conj(a) | Expr::Call(_, a) => a.walk(visit),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
        }
    }

    fn level(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 0,
            Expr::Mul(..) | Expr::Div(..) => 1,
            Expr::Neg(_) => 2,
            Expr::Pow(..) => 3,
            Expr::Const(c) => {
                let s = render_cyc(c);
                if s.bytes().all(|b| b.is_ascii_digit()) || s == "I" || s == "w" {
                    4
                } else {
                    0
                }
            }
            Expr::Var(_) | Expr::Call(..) | Expr::Conj(_) => 4,
        }
    }

    fn write(&self, out: &mut String, ctx: u8) {
        let wrap = self.level() < ctx;
        if wrap {
            out.push('(');
        }
        match self {
            Expr::Const(c) => out.push_str(&render_cyc(c)),
            Expr::Var(v) => out.push_str(v),
            Expr::Neg(a) => {
                out.push('-');
                a.write(out, 2);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write(out, 0);
                out.push(if matches!(self, Expr::Add(..)) { '+' } else { '-' });
                b.write(out, 1);
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write(out, 1);
                out.push(if matches!(self, Expr::Mul(..)) { '*' } else { '/' });
                b.write(out, 2);
            }
            Expr::Pow(a, e) => {
                a.write(out, 4);
                out.push_str(&format!("^{e}"));
            }
            Expr::Call(name, a) => {
                out.push_str(name);
                out.push('(');
                a.write(out, 0);
                out.push(')');
            }
            Expr::Conj(a) => {
                out.push_str("conj(");
                a.write(out, 0);
                out.push(')');
            }
        }
        if wrap {
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, 0);
        f.write_str(&s)
    }
}

fn neg_expr(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        other => Expr::Neg(Box::new(other)),
    }
}

fn mul_expr(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(&x * &y),
        (Expr::Const(x), b) if x.is_one() => b,
        (a, Expr::Const(y)) if y.is_one() => a,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div_expr(a: Expr, b: Expr) -> Result<Expr, DslError> {
    Ok(match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x.checked_div(&y)?),
        (a, Expr::Const(y)) if y.is_one() => a,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    })
}

fn conj_expr(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(c.conj()),
        other => Expr::Conj(Box::new(other)),
    }
}

/// Render a cyclotomic constant in the expression language using `I` and `w`.
/// Values outside ℚ(ζ₁₂) fall back to the `zeta` notation.
pub fn render_cyc(c: &Cyc) -> String {
    if let Some(r) = c.as_rat() {
        return r.to_string();
    }
    if 12 % c.order() != 0 {
        return c.to_string();
    }
    let v = c.embed(12).expect("order divides 12");
    // basis 1, I = ζ¹²³, w = ζ¹²⁴, I*w = ζ¹²⁷ in ζ₁₂ power coordinates
    let basis: Vec<Vec<Rat>> = [0i64, 3, 4, 7]
        .iter()
        .map(|&k| Cyc::zeta_pow(12, k).unwrap().embed(12).unwrap().coeffs().to_vec())
        .collect();
    let coords = solve_rational(&basis, v.coeffs());
    let labels = ["", "I", "w", "I*w"];
    let items: Vec<(Rat, String)> = [3usize, 2, 1, 0]
        .iter()
        .filter(|&&i| coords[i] != rat(0))
        .map(|&i| (coords[i].clone(), labels[i].to_string()))
        .collect();
    crate::exactnum::render_combination(&items)
}

/// Solve `Σ x_i · cols[i] = target` for a square invertible system.
fn solve_rational(cols: &[Vec<Rat>], target: &[Rat]) -> Vec<Rat> {
    let n = cols.len();
    let mut m: Vec<Vec<Rat>> = (0..n)
        .map(|r| {
            let mut row: Vec<Rat> = (0..n).map(|c| cols[c][r].clone()).collect();
            row.push(target[r].clone());
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| m[r][c] != rat(0)).expect("basis is invertible");
        m.swap(c, p);
        let piv = m[c][c].clone();
        for x in m[c].iter_mut() {
            *x = &*x / &piv;
        }
        for r in 0..n {
            if r != c && m[r][c] != rat(0) {
                let f = m[r][c].clone();
                for k in 0..=n {
                    let sub = &f * &m[c][k];
                    m[r][k] -= sub;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n].clone()).collect()
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    depth: usize,
    func: Option<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T, DslError> {
        Err(DslError::SyntaxError {
            offset: self.offset(),
            expected: format!("{expected}, found {}", describe(self.peek())),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), DslError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(what)
        }
    }

    fn enter(&mut self) -> Result<(), DslError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.fail("shallower nesting");
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = self.peek().clone();
            if op != Tok::Plus && op != Tok::Minus {
                return Ok(lhs);
            }
            self.bump();
            let rhs = self.term()?;
            lhs = match (op, &lhs, &rhs) {
                (Tok::Plus, Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
                (Tok::Minus, Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
                (Tok::Plus, ..) => Expr::Add(Box::new(lhs), Box::new(rhs)),
                _ => Expr::Sub(Box::new(lhs), Box::new(rhs)),
            };
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = self.peek().clone();
            if op != Tok::Star && op != Tok::Slash {
                return Ok(lhs);
            }
            self.bump();
            let rhs = self.unary()?;
            lhs = match (op, lhs, rhs) {
                (Tok::Star, Expr::Const(a), Expr::Const(b)) => Expr::Const(&a * &b),
                (Tok::Slash, Expr::Const(a), Expr::Const(b)) => Expr::Const(a.checked_div(&b)?),
                (Tok::Star, a, b) => Expr::Mul(Box::new(a), Box::new(b)),
                (_, a, b) => Expr::Div(Box::new(a), Box::new(b)),
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if *self.peek() == Tok::Minus {
            self.enter()?;
            self.bump();
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(neg_expr(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let e = self.exponent()?;
        Ok(match base {
            Expr::Const(c) => Expr::Const(c.pow(e)?),
            b => Expr::Pow(Box::new(b), e),
        })
    }

    fn exponent(&mut self) -> Result<i64, DslError> {
        let paren = *self.peek() == Tok::LParen;
        if paren {
            self.bump();
        }
        let neg = *self.peek() == Tok::Minus;
        if neg {
            self.bump();
        }
        let at = self.offset();
        let e = match self.peek() {
            Tok::Num(n) => {
                let v = i64::try_from(n).ok().filter(|v| *v <= MAX_EXPONENT);
                match v {
                    Some(v) => v,
                    None => {
                        return Err(DslError::SyntaxError { offset: at, expected: "an exponent of at most 64".into() })
                    }
                }
            }
            _ => return self.fail("an integer exponent"),
        };
        self.bump();
        if paren {
            self.expect(Tok::RParen, "')'")?;
        }
        Ok(if neg { -e } else { e })
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Const(Cyc::from_rat(Rat::from_integer(n))))
            }
            Tok::LParen => {
                self.enter()?;
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                self.depth -= 1;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.enter()?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    self.depth -= 1;
                    if name == "conj" {
                        return Ok(conj_expr(arg));
                    }
                    match &self.func {
                        None => self.func = Some(name.clone()),
                        Some(f) if *f == name => {}
                        Some(_) => return Err(DslError::UnknownSymbol { name, offset: at }),
                    }
                    return Ok(Expr::Call(name, Box::new(arg)));
                }
                Ok(match name.as_str() {
                    "I" => Expr::Const(Cyc::zeta(4).unwrap()),
                    "w" => Expr::Const(Cyc::zeta(3).unwrap()),
                    "conj" => return Err(DslError::SyntaxError { offset: self.offset(), expected: "'(' after conj".into() }),
                    _ => Expr::Var(name),
                })
            }
            _ => self.fail("a number, name or '('"),
        }
    }
}

/// Parse a standalone expression (no `=`, no function calls).
pub fn parse_expr(text: &str) -> Result<Expr, DslError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks: &toks, pos: 0, depth: 0, func: None };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("end of input");
    }
    Ok(e)
}

/// Parse and evaluate an expression to a rational function.
pub fn parse_ratfunc(text: &str) -> Result<RatFunc, DslError> {
    let e = parse_expr(text)?;
    let mut call = None;
    e.walk(&mut |n| {
        if let Expr::Call(name, _) = n {
            call.get_or_insert(name.clone());
        }
    });
    if let Some(name) = call {
        return Err(DslError::UnknownSymbol { name, offset: 0 });
    }
    eval(&e)
}

/// Conjugation on functions: σ₋₁ on coefficients and `v ↔ vbar`.
fn conjugate_rf(f: &RatFunc) -> Result<RatFunc, DslError> {
    let g = f.galois(-1)?;
    let map: HashMap<String, String> = g.vars().into_iter().map(|v| (v.clone(), conjugate_name(&v))).collect();
    Ok(g.rename(&map))
}

fn check_size(f: &RatFunc) -> Result<(), DslError> {
    if f.num().total_degree() > MAX_DEGREE || f.den().total_degree() > MAX_DEGREE {
        return Err(DslError::TooLarge);
    }
    Ok(())
}

/// Evaluate a call-free expression.
pub fn eval(e: &Expr) -> Result<RatFunc, DslError> {
    let out = match e {
        Expr::Const(c) => RatFunc::constant(c.clone()),
        Expr::Var(v) => RatFunc::var(v),
        Expr::Neg(a) => -eval(a)?,
        Expr::Add(a, b) => eval(a)? + eval(b)?,
        Expr::Sub(a, b) => eval(a)? - eval(b)?,
        Expr::Mul(a, b) => eval(a)? * eval(b)?,
        Expr::Div(a, b) => eval(a)?.try_div(&eval(b)?)?,
        Expr::Pow(a, k) => {
            let base = eval(a)?;
            let d = base.num().total_degree().max(base.den().total_degree());
            if u64::from(d) * k.unsigned_abs() > u64::from(MAX_DEGREE) {
                return Err(DslError::TooLarge);
            }
            base.pow(*k)?
        }
        Expr::Conj(a) => conjugate_rf(&eval(a)?)?,
        Expr::Call(name, _) => {
            return Err(DslError::NonLinear { detail: format!("{name}(...) inside a coefficient or argument") })
        }
    };
    check_size(&out)?;
    Ok(out)
}

/// One summand `coeff · [conj] f(arg)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: Expr,
    pub conj: bool,
    pub arg: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RhsAst {
    Expr(Expr),
    /// An unspecified right-hand side written `F` or `F(t)`.
    Opaque { name: String, arg: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationAst {
    pub func: String,
    pub terms: Vec<Term>,
    pub rhs: RhsAst,
}

impl fmt::Display for EquationAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            let mut call = format!("{}(", self.func);
            t.arg.write(&mut call, 0);
            call.push(')');
            if t.conj {
                call = format!("conj({call})");
            }
            let neg_rat = t.coeff.as_const().and_then(|c| c.as_rat().filter(|r| *r < &rat(0)).cloned());
            match neg_rat {
                Some(r) => {
                    s.push_str(if i == 0 { "-" } else { " - " });
                    if r != rat(-1) {
                        s.push_str(&format!("{}*", -r));
                    }
                }
                None => {
                    if i > 0 {
                        s.push_str(" + ");
                    }
                    if t.coeff != Expr::int(1) {
                        t.coeff.write(&mut s, 1);
                        s.push('*');
                    }
                }
            }
            s.push_str(&call);
        }
        s.push_str(" = ");
        match &self.rhs {
            RhsAst::Expr(e) => e.write(&mut s, 0),
            RhsAst::Opaque { name, arg: None } => s.push_str(name),
            RhsAst::Opaque { name, arg: Some(a) } => s.push_str(&format!("{name}({a})")),
        }
        f.write_str(&s)
    }
}

/// Split a left-hand side into terms linear in the unknown; call-free parts
/// are returned separately.
fn linearize(e: &Expr, terms: &mut Vec<Term>, free: &mut Vec<Expr>) -> Result<(), DslError> {
    fn scaled(e: &Expr, f: &dyn Fn(Expr) -> Result<Expr, DslError>, terms: &mut Vec<Term>, free: &mut Vec<Expr>) -> Result<(), DslError> {
        let (mut t, mut fr) = (Vec::new(), Vec::new());
        linearize(e, &mut t, &mut fr)?;
        for mut term in t {
            term.coeff = f(term.coeff)?;
            terms.push(term);
        }
        for x in fr {
            free.push(f(x)?);
        }
        Ok(())
    }
    if !e.has_call() {
        free.push(e.clone());
        return Ok(());
    }
    let nonlinear = || DslError::NonLinear { detail: format!("{e}") };
    match e {
        Expr::Call(_, arg) => {
            if arg.has_call() {
                return Err(DslError::NonMoebiusArgument { arg: arg.to_string() });
            }
            terms.push(Term { coeff: Expr::int(1), conj: false, arg: (**arg).clone() });
        }
        Expr::Add(a, b) => {
            linearize(a, terms, free)?;
            linearize(b, terms, free)?;
        }
        Expr::Sub(a, b) => {
            linearize(a, terms, free)?;
            scaled(b, &|c| Ok(neg_expr(c)), terms, free)?;
        }
        Expr::Neg(a) => scaled(a, &|c| Ok(neg_expr(c)), terms, free)?,
        Expr::Mul(a, b) => match (a.has_call(), b.has_call()) {
            (true, false) => scaled(a, &|c| Ok(mul_expr(c, (**b).clone())), terms, free)?,
            (false, true) => scaled(b, &|c| Ok(mul_expr((**a).clone(), c)), terms, free)?,
            _ => return Err(nonlinear()),
        },
        Expr::Div(a, b) if !b.has_call() => scaled(a, &|c| div_expr(c, (**b).clone()), terms, free)?,
        Expr::Conj(a) => {
            let (mut t, mut fr) = (Vec::new(), Vec::new());
            linearize(a, &mut t, &mut fr)?;
            for mut term in t {
                term.coeff = conj_expr(term.coeff);
                term.conj = !term.conj;
                terms.push(term);
            }
            free.extend(fr.into_iter().map(conj_expr));
        }
        Expr::Pow(a, 1) => linearize(a, terms, free)?,
        _ => return Err(nonlinear()),
    }
    Ok(())
}

fn opaque_rhs(toks: &[(Tok, usize)], func: &Option<String>) -> Option<RhsAst> {
    match toks {
        [(Tok::Ident(n), _), (Tok::End, _)] if !is_reserved(n) && n.starts_with(|c: char| c.is_ascii_uppercase()) => {
            Some(RhsAst::Opaque { name: n.clone(), arg: None })
        }
        [(Tok::Ident(n), _), (Tok::LParen, _), (Tok::Ident(a), _), (Tok::RParen, _), (Tok::End, _)]
            if !is_reserved(n) && Some(n) != func.as_ref() && DOMAIN_VARS.contains(&a.as_str()) =>
        {
            Some(RhsAst::Opaque { name: n.clone(), arg: Some(a.clone()) })
        }
        _ => None,
    }
}

fn is_reserved(n: &str) -> bool {
    matches!(n, "I" | "w" | "conj") || DOMAIN_VARS.contains(&n)
}

/// Parse `lhs = rhs` into terms and a right-hand side.
pub fn parse_equation(text: &str) -> Result<EquationAst, DslError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks: &toks, pos: 0, depth: 0, func: None };
    let lhs = p.expr()?;
    p.expect(Tok::Eq, "'='")?;
    let func = match p.func.clone() {
        Some(f) => f,
        None => {
            return Err(DslError::NonLinear { detail: "the left side never applies an unknown function".into() })
        }
    };
    let rest = &toks[p.pos..];
    let rhs = match opaque_rhs(rest, &p.func) {
        Some(r) => r,
        None => {
            let start = p.pos;
            let e = p.expr()?;
            if *p.peek() != Tok::End {
                return p.fail("end of input");
            }
            if let Some(pos) = (start..p.pos).find(|&i| matches!(&toks[i].0, Tok::Ident(n) if *n == func) && toks[i + 1].0 == Tok::LParen) {
                return Err(DslError::NonLinear { detail: format!("{func} on the right side at byte {}", toks[pos].1) });
            }
            RhsAst::Expr(e)
        }
    };
    let mut terms = Vec::new();
    let mut free = Vec::new();
    linearize(&lhs, &mut terms, &mut free)?;
    let rhs = match rhs {
        RhsAst::Expr(mut e) => {
            for x in free {
                e = match (e, x) {
                    (Expr::Const(a), Expr::Const(b)) => Expr::Const(&a - &b),
                    (e, x) => Expr::Sub(Box::new(e), Box::new(x)),
                };
            }
            RhsAst::Expr(e)
        }
        opaque if free.is_empty() => opaque,
        _ => {
            return Err(DslError::NonLinear { detail: "call-free terms on the left with an unspecified right side".into() })
        }
    };
    for t in &terms {
        check_argument(&t.arg)?;
    }
    Ok(EquationAst { func, terms, rhs })
}

/// Domain variable of an argument if it is a Möbius map (or z, zbar).
fn check_argument(arg: &Expr) -> Result<String, DslError> {
    let bad = || DslError::NonMoebiusArgument { arg: arg.to_string() };
    let f = eval(arg).map_err(|_| bad())?;
    let vars = f.vars();
    if vars.len() != 1 || !DOMAIN_VARS.contains(&vars[0].as_str()) {
        return Err(bad());
    }
    let v = vars[0].clone();
    MoebiusMap::from_ratfunc(&f, &v).ok_or_else(bad)?;
    Ok(v)
}

fn lcm_order(ast: &EquationAst) -> u32 {
    let mut n = 1u32;
    let mut visit = |e: &Expr| {
        if let Expr::Const(c) = e {
            if !c.is_rational() {
                n = n.lcm(&c.order());
            }
        }
    };
    for t in &ast.terms {
        t.coeff.walk(&mut visit);
        t.arg.walk(&mut visit);
    }
    if let RhsAst::Expr(e) = &ast.rhs {
        e.walk(&mut visit);
    }
    n
}

/// Build the equation spec: the argument maps generate G, conj generates H.
pub fn infer_spec(ast: &EquationAst) -> Result<EquationSpec, DslError> {
    let mut domain_vars = BTreeSet::new();
    let mut collect = |e: &Expr| {
        e.walk(&mut |n| {
            if let Expr::Var(v) = n {
                if DOMAIN_VARS.contains(&v.as_str()) {
                    domain_vars.insert(v.clone());
                }
            }
        })
    };
    let mut conj_anywhere = ast.terms.iter().any(|t| t.conj);
    for t in &ast.terms {
        collect(&t.arg);
        collect(&t.coeff);
    }
    if let RhsAst::Expr(e) = &ast.rhs {
        collect(e);
    }
    if let RhsAst::Opaque { arg: Some(a), .. } = &ast.rhs {
        domain_vars.insert(a.clone());
    }
    let mut conj_nodes = false;
    let mut any_conj = |e: &Expr| e.walk(&mut |n| conj_nodes |= matches!(n, Expr::Conj(_)));
    for t in &ast.terms {
        any_conj(&t.arg);
    }
    if conj_nodes || domain_vars.contains("zbar") {
        conj_anywhere = true;
    }

    let field_order = lcm_order(ast);
    let pair = conj_anywhere;
    if pair {
        if let Some(v) = domain_vars.iter().find(|v| *v != "z" && *v != "zbar") {
            return Err(DslError::AmbiguousVariableModel {
                detail: format!("{v} used together with conjugation or zbar"),
            });
        }
    } else if domain_vars.len() > 1 {
        let names: Vec<&str> = domain_vars.iter().map(String::as_str).collect();
        return Err(DslError::AmbiguousVariableModel { detail: format!("variables {}", names.join(", ")) });
    }

    let args: Vec<RatFunc> = ast.terms.iter().map(|t| eval(&t.arg)).collect::<Result<_, _>>()?;
    let (domain, elem_of): (DomainAction, Vec<usize>) = if pair {
        let mut swaps = Vec::new();
        for (t, f) in ast.terms.iter().zip(&args) {
            if *f == RatFunc::var("z") {
                swaps.push(false);
            } else if *f == RatFunc::var("zbar") {
                swaps.push(true);
            } else {
                return Err(DslError::AmbiguousVariableModel {
                    detail: format!("argument {} is not z or zbar under conjugation", t.arg),
                });
            }
        }
        let act = if swaps.iter().any(|&s| s) { DomainAction::swap("z") } else { DomainAction::trivial(VariableModel::pair("z")) };
        let idx = swaps.iter().map(|&s| usize::from(s && act.group().order() == 2)).collect();
        (act, idx)
    } else {
        let var = domain_vars.iter().next().cloned().unwrap_or_else(|| "t".to_string());
        let maps: Vec<MoebiusMap> = args
            .iter()
            .zip(&ast.terms)
            .map(|(f, t)| MoebiusMap::from_ratfunc(f, &var).ok_or_else(|| DslError::NonMoebiusArgument { arg: t.arg.to_string() }))
            .collect::<Result<_, _>>()?;
        let (_, act, _) = build_domain_action(&maps, &var, CLOSURE_BOUND).map_err(|e| match e {
            crate::actions::ActionError::Group(GroupError::BoundExceeded { bound }) => DslError::BoundExceeded { bound },
            other => DslError::NonLinear { detail: other.to_string() },
        })?;
        let idx = maps
            .iter()
            .map(|m| (0..act.group().order()).find(|&g| act.moebius(g) == Some(m)).expect("generator is in its closure"))
            .collect();
        (act, idx)
    };
    let image = if ast.terms.iter().any(|t| t.conj) { ImageAction::conjugation() } else { ImageAction::trivial() };

    let mut coeffs = vec![vec![RatFunc::zero(); image.group().order()]; domain.group().order()];
    for (t, &g) in ast.terms.iter().zip(&elem_of) {
        let h = usize::from(t.conj);
        coeffs[g][h] = &coeffs[g][h] + &eval(&t.coeff)?;
    }
    let rhs = match &ast.rhs {
        RhsAst::Expr(e) => Rhs::Known(eval(e)?),
        RhsAst::Opaque { name, .. } => Rhs::Opaque(name.clone()),
    };
    Ok(EquationSpec::new(domain, image, coeffs, rhs, field_order.max(1)))
}

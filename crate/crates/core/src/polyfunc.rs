//! Sparse multivariate polynomials and rational functions over [`Cyc`],
//! plus dense matrices of rational functions and their exact determinants.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

use crate::exactnum::{Cyc, NumError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("denominator vanishes at the evaluation point")]
    PoleAtPoint,
    #[error("no value given for variable `{0}`")]
    MissingVariable(String),
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimensions do not match")]
    DimensionMismatch,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Natural ordering of variable names: `b2 < b10`, `a < abar < b`.
pub fn var_order(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let cut = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, digits) = s.split_at(cut);
        (head, digits.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then(a.cmp(b))
}

/// Exponent vector ordered graded-lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct Monomial(Vec<u32>);

impl Monomial {
    fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn div(&self, other: &Monomial) -> Option<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type Terms = BTreeMap<Monomial, Cyc>;

/// Sparse polynomial. Variables are kept sorted by [`var_order`] and unused
/// ones are dropped, so structural equality is mathematical equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MPoly {
    vars: Arc<[String]>,
    terms: Terms,
}

fn add_term(terms: &mut Terms, m: Monomial, c: Cyc) {
    if c.is_zero() {
        return;
    }
    match terms.entry(m) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let sum = o.get() + &c;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

impl MPoly {
    pub fn zero() -> MPoly {
        MPoly { vars: Arc::from(Vec::new()), terms: Terms::new() }
    }

    pub fn one() -> MPoly {
        MPoly::constant(Cyc::one())
    }

    pub fn constant(c: Cyc) -> MPoly {
        let mut terms = Terms::new();
        add_term(&mut terms, Monomial(vec![]), c);
        MPoly { vars: Arc::from(Vec::new()), terms }
    }

    pub fn var(name: &str) -> MPoly {
        let mut terms = Terms::new();
        terms.insert(Monomial(vec![1]), Cyc::one());
        MPoly { vars: Arc::from(vec![name.to_string()]), terms }
    }

    /// Build from `(exponents, coefficient)` pairs over the given variables.
    pub fn from_terms(vars: &[&str], terms: impl IntoIterator<Item = (Vec<u32>, Cyc)>) -> MPoly {
        let mut idx: Vec<usize> = (0..vars.len()).collect();
        idx.sort_by(|&a, &b| var_order(vars[a], vars[b]));
        let sorted: Vec<String> = idx.iter().map(|&i| vars[i].to_string()).collect();
        let mut out = Terms::new();
        for (exps, c) in terms {
            assert_eq!(exps.len(), vars.len(), "exponent vector length");
            add_term(&mut out, Monomial(idx.iter().map(|&i| exps[i]).collect()), c);
        }
        MPoly { vars: Arc::from(sorted), terms: out }.pruned()
    }

    fn from_parts(vars: Arc<[String]>, terms: Terms) -> MPoly {
        MPoly { vars, terms }.pruned()
    }

    /// Drop variables that no term uses.
    fn pruned(self) -> MPoly {
        let n = self.vars.len();
        let mut used = vec![false; n];
        for m in self.terms.keys() {
            for (u, e) in used.iter_mut().zip(&m.0) {
                *u |= *e > 0;
            }
        }
        if used.iter().all(|&u| u) {
            return self;
        }
        let keep: Vec<usize> = (0..n).filter(|&i| used[i]).collect();
        let vars: Vec<String> = keep.iter().map(|&i| self.vars[i].clone()).collect();
        let terms = self
            .terms
            .into_iter()
            .map(|(m, c)| (Monomial(keep.iter().map(|&i| m.0[i]).collect()), c))
            .collect();
        MPoly { vars: Arc::from(vars), terms }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    pub fn constant_value(&self) -> Option<Cyc> {
        if !self.is_constant() {
            return None;
        }
        Some(self.terms.values().next().cloned().unwrap_or_else(Cyc::zero))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Monomial::degree)
    }

    pub fn is_homogeneous(&self) -> bool {
        let d = self.total_degree();
        self.terms.keys().all(|m| m.degree() == d)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        match self.vars.iter().position(|v| v == var) {
            Some(i) => self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0),
            None => 0,
        }
    }

    /// Terms in descending graded-lex order as `(exponents, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Cyc)> {
        self.terms.iter().rev().map(|(m, c)| (m.0.as_slice(), c))
    }

    /// Coefficient of the graded-lex leading term (zero for the zero polynomial).
    pub fn leading_coeff(&self) -> Cyc {
        self.terms.values().next_back().cloned().unwrap_or_else(Cyc::zero)
    }

    /// Coefficient of the monomial given by `(variable, exponent)` pairs.
    pub fn coeff_of(&self, mono: &[(&str, u32)]) -> Cyc {
        let mut exps = vec![0u32; self.vars.len()];
        for (name, e) in mono {
            match self.vars.iter().position(|v| v == name) {
                Some(i) => exps[i] += e,
                None if *e == 0 => {}
                None => return Cyc::zero(),
            }
        }
        self.terms.get(&Monomial(exps)).cloned().unwrap_or_else(Cyc::zero)
    }

    /// Rewrite both operands over the union of their variables.
    fn unify(&self, other: &MPoly) -> (Arc<[String]>, Terms, Terms) {
        if self.vars == other.vars {
            return (self.vars.clone(), self.terms.clone(), other.terms.clone());
        }
        let mut all: Vec<String> = self.vars.iter().chain(other.vars.iter()).cloned().collect();
        all.sort_by(|a, b| var_order(a, b));
        all.dedup();
        let vars: Arc<[String]> = Arc::from(all);
        (vars.clone(), self.remap(&vars), other.remap(&vars))
    }

    fn remap(&self, target: &[String]) -> Terms {
        let pos: Vec<usize> = self
            .vars
            .iter()
            .map(|v| target.iter().position(|t| t == v).expect("target contains all variables"))
            .collect();
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut e = vec![0u32; target.len()];
                for (i, &p) in pos.iter().enumerate() {
                    e[p] = m.0[i];
                }
                (Monomial(e), c.clone())
            })
            .collect()
    }

    fn add_impl(&self, other: &MPoly, negate: bool) -> MPoly {
        let (vars, mut a, b) = self.unify(other);
        for (m, c) in b {
            add_term(&mut a, m, if negate { -c } else { c });
        }
        MPoly::from_parts(vars, a)
    }

    fn mul_impl(&self, other: &MPoly) -> MPoly {
        if self.is_zero() || other.is_zero() {
            return MPoly::zero();
        }
        if let Some(c) = other.constant_value() {
            return self.scale(&c);
        }
        if let Some(c) = self.constant_value() {
            return other.scale(&c);
        }
        let (vars, a, b) = self.unify(other);
        let mut out = Terms::new();
        for (ma, ca) in &a {
            for (mb, cb) in &b {
                add_term(&mut out, ma.mul(mb), ca * cb);
            }
        }
        MPoly::from_parts(vars, out)
    }

    pub fn scale(&self, c: &Cyc) -> MPoly {
        if c.is_zero() {
            return MPoly::zero();
        }
        let terms = self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect();
        MPoly { vars: self.vars.clone(), terms }
    }

    pub fn pow(&self, mut e: u32) -> MPoly {
        let mut acc = MPoly::one();
        let mut sq = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        acc
    }

    /// Exact quotient `self / d` if `d` divides `self`, otherwise `None`.
    pub fn div_exact(&self, d: &MPoly) -> Option<MPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(MPoly::zero());
        }
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.inv().ok()?));
        }
        let (vars, mut rem, dt) = self.unify(d);
        let (dlead_m, dlead_c) = dt.iter().next_back().map(|(m, c)| (m.clone(), c.clone()))?;
        let dlead_inv = dlead_c.inv().ok()?;
        let mut quot = Terms::new();
        while let Some((rm, rc)) = rem.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
            let qm = rm.div(&dlead_m)?;
            let qc = &rc * &dlead_inv;
            for (m, c) in &dt {
                add_term(&mut rem, m.mul(&qm), -(c * &qc));
            }
            add_term(&mut quot, qm, qc);
        }
        Some(MPoly::from_parts(vars, quot))
    }

    pub fn eval(&self, point: &HashMap<String, Cyc>) -> Result<Cyc, PolyError> {
        let vals: Vec<&Cyc> = self
            .vars
            .iter()
            .map(|v| point.get(v).ok_or_else(|| PolyError::MissingVariable(v.clone())))
            .collect::<Result<_, _>>()?;
        let mut acc = Cyc::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, &e) in vals.iter().zip(&m.0) {
                if e > 0 {
                    t = &t * &v.pow(e as i64)?;
                }
            }
            acc = &acc + &t;
        }
        Ok(acc)
    }

    /// Apply `f` to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&Cyc) -> Cyc) -> MPoly {
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            add_term(&mut terms, m.clone(), f(c));
        }
        MPoly { vars: self.vars.clone(), terms }
    }

    pub fn galois(&self, k: i64) -> Result<MPoly, NumError> {
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            add_term(&mut terms, m.clone(), c.galois(k)?);
        }
        Ok(MPoly { vars: self.vars.clone(), terms })
    }

    /// Rename variables; names missing from `map` are kept.
    pub fn rename(&self, map: &HashMap<String, String>) -> MPoly {
        let new_names: Vec<&str> = self
            .vars
            .iter()
            .map(|v| map.get(v).map_or(v.as_str(), String::as_str))
            .collect();
        let mut uniq: Vec<&str> = new_names.clone();
        uniq.sort_by(|a, b| var_order(a, b));
        uniq.dedup();
        let pos: Vec<usize> = new_names.iter().map(|n| uniq.iter().position(|u| u == n).unwrap()).collect();
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            let mut e = vec![0u32; uniq.len()];
            for (i, &p) in pos.iter().enumerate() {
                e[p] += m.0[i];
            }
            add_term(&mut terms, Monomial(e), c.clone());
        }
        let vars: Vec<String> = uniq.into_iter().map(str::to_string).collect();
        MPoly::from_parts(Arc::from(vars), terms)
    }

    /// Simultaneous substitution `v ↦ subst[v]`; other variables stay put.
    pub fn substitute(&self, subst: &HashMap<String, RatFunc>) -> Result<RatFunc, PolyError> {
        // Homogenise each substituted variable: x^e ↦ P^e Q^(D-e) over Q^D.
        let mut num_parts: Vec<Vec<MPoly>> = Vec::new();
        let mut den_parts: Vec<Vec<MPoly>> = Vec::new();
        let mut max_deg = Vec::new();
        for (i, v) in self.vars.iter().enumerate() {
            let d = self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0);
            max_deg.push(d);
            let (p, q) = match subst.get(v) {
                Some(r) => (r.num.clone(), r.den.clone()),
                None => (MPoly::var(v), MPoly::one()),
            };
            let mut pp = vec![MPoly::one()];
            let mut qq = vec![MPoly::one()];
            for k in 1..=d as usize {
                pp.push(&pp[k - 1] * &p);
                qq.push(&qq[k - 1] * &q);
            }
            num_parts.push(pp);
            den_parts.push(qq);
        }
        let mut num = MPoly::zero();
        for (m, c) in &self.terms {
            let mut t = MPoly::constant(c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                let (e, d) = (e as usize, max_deg[i] as usize);
                t = &t * &num_parts[i][e];
                if d > e {
                    t = &t * &den_parts[i][d - e];
                }
            }
            num = &num + &t;
        }
        let mut den = MPoly::one();
        for (i, d) in max_deg.iter().enumerate() {
            den = &den * &den_parts[i][*d as usize];
        }
        RatFunc::new(num, den)
    }

    /// Dense coefficients if at most one variable occurs.
    pub fn to_univariate(&self) -> Option<(Option<String>, Vec<Cyc>)> {
        match self.vars.len() {
            0 => Some((None, vec![self.constant_value().unwrap()])),
            1 => {
                let d = self.total_degree() as usize;
                let mut out = vec![Cyc::zero(); d + 1];
                for (m, c) in &self.terms {
                    out[m.0[0] as usize] = c.clone();
                }
                Some((Some(self.vars[0].clone()), out))
            }
            _ => None,
        }
    }

    pub fn from_univariate(var: &str, coeffs: &[Cyc]) -> MPoly {
        let mut terms = Terms::new();
        for (i, c) in coeffs.iter().enumerate() {
            add_term(&mut terms, Monomial(vec![i as u32]), c.clone());
        }
        MPoly::from_parts(Arc::from(vec![var.to_string()]), terms)
    }

    /// Scale so the leading coefficient is 1 (zero stays zero).
    pub fn monic(&self) -> MPoly {
        if self.is_zero() {
            return MPoly::zero();
        }
        self.scale(&self.leading_coeff().inv().expect("nonzero leading coefficient"))
    }

    /// Render with a custom scalar formatter.
    pub fn render_with(&self, cyc_fmt: &dyn Fn(&Cyc) -> String) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let mono: Vec<String> = self
                .vars
                .iter()
                .zip(&m.0)
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| if e == 1 { v.clone() } else { format!("{v}^{e}") })
                .collect();
            let mono = mono.join("*");
            let (neg, body) = match (c.as_rat(), c.single_term_negative()) {
                (Some(r), _) => {
                    let neg = r < &num_rational::BigRational::from_integer(0.into());
                    let mag = if neg { -r } else { r.clone() };
                    let body = if mono.is_empty() {
                        mag.to_string()
                    } else if num_traits::One::is_one(&mag) {
                        mono.clone()
                    } else {
                        format!("{mag}*{mono}")
                    };
                    (neg, body)
                }
                (None, Some(neg)) => {
                    let mag = if neg { cyc_fmt(&-c) } else { cyc_fmt(c) };
                    let body = if mono.is_empty() { mag } else { format!("{mag}*{mono}") };
                    (neg, body)
                }
                (None, None) => {
                    let s = format!("({})", cyc_fmt(c));
                    let body = if mono.is_empty() { s } else { format!("{s}*{mono}") };
                    (false, body)
                }
            };
            if neg {
                out.push('-');
            } else if idx > 0 {
                out.push('+');
            }
            out.push_str(&body);
        }
        out
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|c: &Cyc| c.to_string()))
    }
}

macro_rules! forward_binop {
    ($ty:ident, $trait:ident, $method:ident, $imp:expr) => {
        impl<'a, 'b> $trait<&'b $ty> for &'a $ty {
            type Output = $ty;
            fn $method(self, rhs: &'b $ty) -> $ty {
                $imp(self, rhs)
            }
        }
        impl $trait<$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                $imp(&self, &rhs)
            }
        }
        impl<'a> $trait<&'a $ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: &'a $ty) -> $ty {
                $imp(&self, rhs)
            }
        }
    };
}

forward_binop!(MPoly, Add, add, |a: &MPoly, b: &MPoly| a.add_impl(b, false));
forward_binop!(MPoly, Sub, sub, |a: &MPoly, b: &MPoly| a.add_impl(b, true));
forward_binop!(MPoly, Mul, mul, |a: &MPoly, b: &MPoly| a.mul_impl(b));

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.map_coeffs(|c| -c)
    }
}

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        -&self
    }
}

fn jointly_univariate(p: &MPoly, q: &MPoly) -> bool {
    match (p.vars.len(), q.vars.len()) {
        (0, _) | (_, 0) => p.vars.len() + q.vars.len() <= 1,
        (1, 1) => p.vars[0] == q.vars[0],
        _ => false,
    }
}

fn dense_rem(a: &[Cyc], b: &[Cyc]) -> Vec<Cyc> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let inv = b[db].inv().expect("trimmed divisor");
    while r.len() > db {
        let top = r.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let q = &top * &inv;
        let shift = r.len() - db;
        for (j, bj) in b[..db].iter().enumerate() {
            r[shift + j] = &r[shift + j] - &(&q * bj);
        }
    }
    while r.last().is_some_and(Cyc::is_zero) {
        r.pop();
    }
    r
}

/// Monic gcd for univariate inputs (Euclid over the coefficient field).
/// Multivariate inputs yield 1 unless one side is zero.
pub fn poly_gcd(p: &MPoly, q: &MPoly) -> MPoly {
    if p.is_zero() {
        return q.monic();
    }
    if q.is_zero() {
        return p.monic();
    }
    if !jointly_univariate(p, q) {
        return MPoly::one();
    }
    let var = p.vars.first().or(q.vars.first()).cloned().unwrap_or_default();
    let strip = |mut v: Vec<Cyc>| {
        while v.last().is_some_and(Cyc::is_zero) {
            v.pop();
        }
        v
    };
    let mut a = strip(p.to_univariate().unwrap().1);
    let mut b = strip(q.to_univariate().unwrap().1);
    // monic remainders keep the coefficients from swelling
    let monic = |v: Vec<Cyc>| match v.last() {
        Some(lc) if !lc.is_one() => {
            let inv = lc.inv().expect("trimmed");
            v.iter().map(|c| c * &inv).collect()
        }
        _ => v,
    };
    b = monic(b);
    while !b.is_empty() {
        let r = monic(dense_rem(&a, &b));
        a = std::mem::replace(&mut b, r);
    }
    if a.len() <= 1 {
        return MPoly::one();
    }
    MPoly::from_univariate(&var, &a).monic()
}

pub(crate) fn poly_lcm(a: &MPoly, b: &MPoly) -> MPoly {
    if a == b || a.div_exact(b).is_some() {
        return a.clone();
    }
    if b.div_exact(a).is_some() {
        return b.clone();
    }
    let g = poly_gcd(a, b);
    (a * b).div_exact(&g).expect("gcd divides the product")
}

/// Quotient of polynomials. The denominator is nonzero with leading
/// coefficient 1; univariate quotients are fully reduced.
#[derive(Clone, Debug)]
pub struct RatFunc {
    num: MPoly,
    den: MPoly,
}

impl RatFunc {
    pub fn new(num: MPoly, den: MPoly) -> Result<RatFunc, PolyError> {
        if den.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        Ok(RatFunc::normalized(num, den))
    }

    fn normalized(num: MPoly, den: MPoly) -> RatFunc {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return RatFunc::zero();
        }
        if let Some(c) = den.constant_value() {
            let inv = c.inv().expect("nonzero constant");
            return RatFunc { num: num.scale(&inv), den: MPoly::one() };
        }
        let (num, den) = if jointly_univariate(&num, &den) {
            let g = poly_gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
            }
        } else if let Some(q) = num.div_exact(&den) {
            (q, MPoly::one())
        } else if let Some(q) = den.div_exact(&num) {
            (MPoly::one(), q)
        } else {
            (num, den)
        };
        let lc = den.leading_coeff();
        if lc.is_one() {
            RatFunc { num, den }
        } else {
            let inv = lc.inv().expect("nonzero leading coefficient");
            RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn zero() -> RatFunc {
        RatFunc { num: MPoly::zero(), den: MPoly::one() }
    }

    pub fn one() -> RatFunc {
        RatFunc::from_poly(MPoly::one())
    }

    pub fn constant(c: Cyc) -> RatFunc {
        RatFunc::from_poly(MPoly::constant(c))
    }

    pub fn from_int(n: i64) -> RatFunc {
        RatFunc::constant(Cyc::from_int(n))
    }

    pub fn var(name: &str) -> RatFunc {
        RatFunc::from_poly(MPoly::var(name))
    }

    pub fn from_poly(p: MPoly) -> RatFunc {
        RatFunc { num: p, den: MPoly::one() }
    }

    pub fn num(&self) -> &MPoly {
        &self.num
    }

    pub fn den(&self) -> &MPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Cyc> {
        self.num.constant_value().filter(|_| self.den.is_one())
    }

    /// Variables appearing in numerator or denominator.
    pub fn vars(&self) -> Vec<String> {
        let mut v: Vec<String> = self.num.vars().iter().chain(self.den.vars()).cloned().collect();
        v.sort_by(|a, b| var_order(a, b));
        v.dedup();
        v
    }

    /// Normalise again; a no-op on values built through the public API.
    pub fn renormalized(&self) -> RatFunc {
        RatFunc::normalized(self.num.clone(), self.den.clone())
    }

    pub fn try_div(&self, other: &RatFunc) -> Result<RatFunc, PolyError> {
        if other.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        if let Some(c) = other.as_constant() {
            return Ok(self.scale(&c.inv().expect("nonzero constant")));
        }
        if henrici_applies(self, other) {
            let inv = other.num.leading_coeff().inv().expect("nonzero leading coefficient");
            let recip = RatFunc { num: other.den.scale(&inv), den: other.num.scale(&inv) };
            return Ok(rf_mul(self, &recip));
        }
        Ok(RatFunc::normalized(&self.num * &other.den, &self.den * &other.num))
    }

    pub fn inv(&self) -> Result<RatFunc, PolyError> {
        RatFunc::one().try_div(self)
    }

    pub fn pow(&self, e: i64) -> Result<RatFunc, PolyError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let e = u32::try_from(e.unsigned_abs()).map_err(|_| PolyError::DimensionMismatch)?;
        Ok(RatFunc::normalized(base.num.pow(e), base.den.pow(e)))
    }

    pub fn scale(&self, c: &Cyc) -> RatFunc {
        if c.is_zero() {
            return RatFunc::zero();
        }
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Simultaneous substitution; variables absent from `subst` are fixed.
    pub fn compose(&self, subst: &HashMap<String, RatFunc>) -> Result<RatFunc, PolyError> {
        let n = self.num.substitute(subst)?;
        let d = self.den.substitute(subst)?;
        n.try_div(&d)
    }

    pub fn eval(&self, point: &HashMap<String, Cyc>) -> Result<Cyc, PolyError> {
        let d = self.den.eval(point)?;
        if d.is_zero() {
            return Err(PolyError::PoleAtPoint);
        }
        let n = self.num.eval(point)?;
        Ok(n.checked_div(&d)?)
    }

    pub fn galois(&self, k: i64) -> Result<RatFunc, NumError> {
        Ok(RatFunc::normalized(self.num.galois(k)?, self.den.galois(k)?))
    }

    pub fn rename(&self, map: &HashMap<String, String>) -> RatFunc {
        RatFunc::normalized(self.num.rename(map), self.den.rename(map))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Cyc) -> Cyc) -> RatFunc {
        let den = self.den.map_coeffs(&f);
        let num = self.num.map_coeffs(&f);
        RatFunc::normalized(num, den)
    }

    pub fn render_with(&self, cyc_fmt: &dyn Fn(&Cyc) -> String) -> String {
        let num = self.num.render_with(cyc_fmt);
        if self.den.is_one() {
            return num;
        }
        let num = if self.num.num_terms() > 1 { format!("({num})") } else { num };
        let den = self.den.render_with(cyc_fmt);
        let simple_den = self.den.num_terms() == 1
            && self.den.vars().len() == 1
            && self.den.leading_coeff().is_one();
        if simple_den {
            format!("{num}/{den}")
        } else {
            format!("{num}/({den})")
        }
    }
}

impl PartialEq for RatFunc {
    fn eq(&self, other: &RatFunc) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        &self.num * &other.den == &other.num * &self.den
    }
}

impl Eq for RatFunc {}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|c: &Cyc| c.to_string()))
    }
}

impl From<MPoly> for RatFunc {
    fn from(p: MPoly) -> RatFunc {
        RatFunc::from_poly(p)
    }
}

impl From<Cyc> for RatFunc {
    fn from(c: Cyc) -> RatFunc {
        RatFunc::constant(c)
    }
}

fn rf_add(a: &RatFunc, b: &RatFunc, negate: bool) -> RatFunc {
    let combine = |x: &MPoly, y: &MPoly| if negate { x - y } else { x + y };
    if b.is_zero() {
        return a.clone();
    }
    if a.is_zero() {
        return if negate { -b } else { b.clone() };
    }
    if a.den == b.den {
        return RatFunc::normalized(combine(&a.num, &b.num), a.den.clone());
    }
    if henrici_applies(a, b) {
        // both sides reduced: only a factor of gcd(den_a, den_b) can cancel
        let g = poly_gcd(&a.den, &b.den);
        let (ra, rb) = (a.den.div_exact(&g).unwrap(), b.den.div_exact(&g).unwrap());
        let num = combine(&(&a.num * &rb), &(&b.num * &ra));
        if num.is_zero() {
            return RatFunc::zero();
        }
        let den = &(&ra * &rb) * &g;
        if g.is_one() {
            return RatFunc { num, den };
        }
        let h = poly_gcd(&num, &g);
        return if h.is_one() {
            RatFunc { num, den }
        } else {
            RatFunc { num: num.div_exact(&h).unwrap(), den: den.div_exact(&h).unwrap() }
        };
    }
    RatFunc::normalized(combine(&(&a.num * &b.den), &(&b.num * &a.den)), &a.den * &b.den)
}

/// Univariate and reduced on both sides, with monic denominators.
fn henrici_applies(a: &RatFunc, b: &RatFunc) -> bool {
    let vars: Vec<&String> = [&a.num, &a.den, &b.num, &b.den].iter().flat_map(|p| p.vars.iter()).collect();
    vars.windows(2).all(|w| w[0] == w[1])
}

fn rf_mul(a: &RatFunc, b: &RatFunc) -> RatFunc {
    if a.is_zero() || b.is_zero() {
        return RatFunc::zero();
    }
    if let Some(c) = a.as_constant() {
        return b.scale(&c);
    }
    if let Some(c) = b.as_constant() {
        return a.scale(&c);
    }
    if henrici_applies(a, b) {
        let g1 = poly_gcd(&a.num, &b.den);
        let g2 = poly_gcd(&b.num, &a.den);
        let num = &a.num.div_exact(&g1).unwrap() * &b.num.div_exact(&g2).unwrap();
        let den = &a.den.div_exact(&g2).unwrap() * &b.den.div_exact(&g1).unwrap();
        return RatFunc { num, den };
    }
    RatFunc::normalized(&a.num * &b.num, &a.den * &b.den)
}

forward_binop!(RatFunc, Add, add, |a: &RatFunc, b: &RatFunc| rf_add(a, b, false));
forward_binop!(RatFunc, Sub, sub, |a: &RatFunc, b: &RatFunc| rf_add(a, b, true));
forward_binop!(RatFunc, Mul, mul, |a: &RatFunc, b: &RatFunc| rf_mul(a, b));

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        -&self
    }
}

/// Operation selector for [`rf_arith`].
pub use crate::exactnum::ArithOp;

pub fn rf_arith(op: ArithOp, f: &RatFunc, g: &RatFunc) -> Result<RatFunc, PolyError> {
    Ok(match op {
        ArithOp::Add => f + g,
        ArithOp::Sub => f - g,
        ArithOp::Mul => f * g,
        ArithOp::Div => f.try_div(g)?,
    })
}

/// Dense row-major matrix of rational functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RatFunc>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> PolyMatrix {
        PolyMatrix { rows, cols, entries: vec![RatFunc::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> PolyMatrix {
        let mut m = PolyMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, RatFunc::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<RatFunc>>) -> Result<PolyMatrix, PolyError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(PolyError::DimensionMismatch);
        }
        Ok(PolyMatrix { rows: r, cols: c, entries: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RatFunc {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: RatFunc) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[RatFunc] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> PolyMatrix {
        let mut t = PolyMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &PolyMatrix) -> Result<PolyMatrix, PolyError> {
        if self.cols != other.rows {
            return Err(PolyError::DimensionMismatch);
        }
        let mut out = PolyMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = RatFunc::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if !a.is_zero() {
                        acc = &acc + &(a * other.get(k, j));
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Reorder rows and columns simultaneously: `out[i][j] = self[p[i]][p[j]]`.
    pub fn permuted(&self, p: &[usize]) -> PolyMatrix {
        let mut out = PolyMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(p[i], p[j]).clone());
            }
        }
        out
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        let width = cells.iter().map(String::len).max().unwrap_or(1);
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:>width$}", cells[i * self.cols + j]))
                .collect();
            writeln!(f, "[ {} ]", row.join("  "))?;
        }
        Ok(())
    }
}

/// Exact determinant. Row denominators are cleared first, then the
/// polynomial matrix goes through fraction-free Bareiss elimination.
pub fn mat_det(m: &PolyMatrix) -> Result<RatFunc, PolyError> {
    if m.rows != m.cols {
        return Err(PolyError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    let mut scale = MPoly::one();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let row = m.row(i);
        let mut l = MPoly::one();
        for e in row {
            if !e.is_zero() && !e.den.is_one() {
                l = poly_lcm(&l, &e.den);
            }
        }
        let prow: Vec<MPoly> = row
            .iter()
            .map(|e| {
                if e.is_zero() {
                    MPoly::zero()
                } else {
                    &e.num * &l.div_exact(&e.den).expect("row lcm is a multiple")
                }
            })
            .collect();
        scale = &scale * &l;
        rows.push(prow);
    }
    RatFunc::new(bareiss_det(rows), scale)
}

/// Fraction-free Gaussian elimination; every division is exact.
pub fn bareiss_det(mut m: Vec<Vec<MPoly>>) -> MPoly {
    let n = m.len();
    if n == 0 {
        return MPoly::one();
    }
    let mut sign_flip = false;
    let mut prev = MPoly::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign_flip = !sign_flip;
                }
                None => return MPoly::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = t.div_exact(&prev).expect("Bareiss step divides exactly");
            }
            m[i][k] = MPoly::zero();
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign_flip {
        -d
    } else {
        d
    }
}

/// Division-free Laplace expansion with memoised minors over column subsets.
/// Cheap when entries are monomials, as in group matrices; `n <= 24`.
pub fn expansion_det(m: &[Vec<MPoly>]) -> MPoly {
    let n = m.len();
    assert!(n <= 24, "expansion_det supports at most 24 rows");
    let mut level: HashMap<u32, MPoly> = HashMap::new();
    level.insert(0, MPoly::one());
    for row in m {
        let mut next: HashMap<u32, MPoly> = HashMap::new();
        for (&mask, minor) in &level {
            if minor.is_zero() {
                continue;
            }
            // expand along the newest row; the cofactor sign is the parity of
            // the number of chosen columns to the right of j
            for (j, entry) in row.iter().enumerate() {
                let bit = 1u32 << j;
                if mask & bit != 0 || entry.is_zero() {
                    continue;
                }
                let above = (mask & !(bit - 1) & !bit).count_ones();
                let term = entry * minor;
                let term = if above % 2 == 1 { -term } else { term };
                let slot = next.entry(mask | bit).or_insert_with(MPoly::zero);
                *slot = &*slot + &term;
            }
        }
        level = next;
    }
    level.remove(&((1u32 << n) - 1)).unwrap_or_else(MPoly::zero)
}

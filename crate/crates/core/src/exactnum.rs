//! Exact scalars: arbitrary-precision rationals and elements of the
//! cyclotomic fields ℚ(ζ_N).
//!
//! A [`Cyc`] stores its coordinates in the power basis `1, ζ, …, ζ^{φ(N)-1}`
//! and is always kept reduced modulo the cyclotomic polynomial Φ_N, so two
//! elements of the same field are equal exactly when their coordinate vectors
//! are. Elements of different orders are compared and combined by embedding
//! both into ℚ(ζ_lcm); a rational value lives in every field at once.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Reduced fraction with a positive denominator.
pub type Rat = BigRational;

/// Shorthand for the integer `n` as a [`Rat`].
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Shorthand for `n/d` as a [`Rat`]. Panics if `d == 0`.
pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Default field order: ℚ(ζ₁₂) contains both `i` and a primitive cube root of unity.
pub const DEFAULT_ORDER: u32 = 12;

/// Orders above this are rejected to keep the per-order tables small.
pub const MAX_ORDER: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cyclotomic orders differ: {left} vs {right}")]
    OrderMismatch { left: u32, right: u32 },
    #[error("galois exponent {k} is not coprime to the field order {order}")]
    NotCoprime { k: i64, order: u32 },
    #[error("unsupported cyclotomic order {0}")]
    InvalidOrder(u32),
}

/// Per-order tables: Φ_N and the reduced powers ζ^k for `0 <= k < N`.
struct CycloData {
    phi: usize,
    /// Φ_N low to high, monic, length `phi + 1`.
    modulus: Vec<Rat>,
    powers: Vec<Vec<Rat>>,
}

thread_local! {
    static TABLES: RefCell<HashMap<u32, Rc<CycloData>>> = RefCell::new(HashMap::new());
}

/// Integer coefficients of Φ_n, low to high.
fn cyclotomic_poly(n: u32) -> Vec<i64> {
    // x^n - 1 divided by Φ_d for every proper divisor d of n.
    let mut p = vec![0i64; n as usize + 1];
    p[0] = -1;
    p[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            p = div_monic_int(&p, &cyclotomic_poly(d));
        }
    }
    p
}

fn div_monic_int(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let qlen = num.len() - dd;
    let mut q = vec![0i64; qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dd];
        q[i] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i + j] -= c * dj;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    q
}

fn tables(n: u32) -> Rc<CycloData> {
    if let Some(t) = TABLES.with(|c| c.borrow().get(&n).cloned()) {
        return t;
    }
    let modulus: Vec<Rat> = cyclotomic_poly(n).into_iter().map(rat).collect();
    let phi = modulus.len() - 1;
    let mut powers = Vec::with_capacity(n as usize);
    let mut cur = vec![Rat::zero(); phi];
    cur[0] = Rat::one();
    for _ in 0..n {
        powers.push(cur.clone());
        // multiply by ζ: shift up, then fold x^phi back with Φ_N
        let top = cur[phi - 1].clone();
        for i in (1..phi).rev() {
            cur[i] = cur[i - 1].clone();
        }
        cur[0] = Rat::zero();
        if !top.is_zero() {
            for i in 0..phi {
                cur[i] -= &top * &modulus[i];
            }
        }
    }
    let data = Rc::new(CycloData { phi, modulus, powers });
    TABLES.with(|c| c.borrow_mut().insert(n, data.clone()));
    data
}

/// Euler's totient φ(n).
pub fn totient(n: u32) -> usize {
    (1..=n).filter(|k| k.gcd(&n) == 1).count()
}

fn check_order(n: u32) -> Result<(), NumError> {
    if n == 0 || n > MAX_ORDER {
        Err(NumError::InvalidOrder(n))
    } else {
        Ok(())
    }
}

/// Reduce a dense polynomial in ζ modulo Φ_N in place, leaving `phi` coordinates.
fn reduce_mod(p: &mut Vec<Rat>, data: &CycloData) {
    let phi = data.phi;
    if p.len() < phi {
        p.resize(phi, Rat::zero());
        return;
    }
    for d in (phi..p.len()).rev() {
        let c = std::mem::take(&mut p[d]);
        if c.is_zero() {
            continue;
        }
        for j in 0..phi {
            let t = &c * &data.modulus[j];
            p[d - phi + j] -= t;
        }
    }
    p.truncate(phi);
}

/// An element of ℚ(ζ_N), ζ_N = exp(2πi/N).
#[derive(Clone, Debug)]
pub struct Cyc {
    order: u32,
    coeffs: Vec<Rat>,
}

impl Cyc {
    pub fn from_rat(r: Rat) -> Cyc {
        Cyc { order: 1, coeffs: vec![r] }
    }

    pub fn from_int(n: i64) -> Cyc {
        Cyc::from_rat(rat(n))
    }

    pub fn zero() -> Cyc {
        Cyc::from_rat(Rat::zero())
    }

    pub fn one() -> Cyc {
        Cyc::from_rat(Rat::one())
    }

    /// The primitive root ζ_n.
    pub fn zeta(n: u32) -> Result<Cyc, NumError> {
        Cyc::zeta_pow(n, 1)
    }

    /// ζ_n^k for any integer `k`.
    pub fn zeta_pow(n: u32, k: i64) -> Result<Cyc, NumError> {
        check_order(n)?;
        let data = tables(n);
        let idx = k.rem_euclid(n as i64) as usize;
        Ok(Cyc { order: n, coeffs: data.powers[idx].clone() })
    }

    /// Element of ℚ(ζ_n) given by an arbitrary polynomial in ζ (low to high).
    pub fn from_coeffs(n: u32, mut coeffs: Vec<Rat>) -> Result<Cyc, NumError> {
        check_order(n)?;
        let data = tables(n);
        reduce_mod(&mut coeffs, &data);
        Ok(Cyc { order: n, coeffs })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Power-basis coordinates, length φ(order).
    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.is_rational() && self.coeffs[0].is_one()
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        self.is_rational().then(|| &self.coeffs[0])
    }

    /// Number of nonzero power-basis coordinates.
    pub fn weight(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    /// For a single-term value `c·ζ^k`, whether `c < 0`.
    pub fn single_term_negative(&self) -> Option<bool> {
        let mut it = self.coeffs.iter().filter(|c| !c.is_zero());
        let first = it.next()?;
        if it.next().is_some() {
            None
        } else {
            Some(first.is_negative())
        }
    }

    /// Re-express in ℚ(ζ_n); requires `order | n`.
    pub fn embed(&self, n: u32) -> Result<Cyc, NumError> {
        check_order(n)?;
        if n == self.order {
            return Ok(self.clone());
        }
        if n % self.order != 0 {
            return Err(NumError::OrderMismatch { left: self.order, right: n });
        }
        let data = tables(n);
        let step = (n / self.order) as usize;
        let mut out = vec![Rat::zero(); data.phi];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, p) in out.iter_mut().zip(&data.powers[(i * step) % n as usize]) {
                if !p.is_zero() {
                    *o += c * p;
                }
            }
        }
        Ok(Cyc { order: n, coeffs: out })
    }

    /// The automorphism σ_k : ζ ↦ ζ^k.
    pub fn galois(&self, k: i64) -> Result<Cyc, NumError> {
        let n = self.order;
        let kk = k.rem_euclid(n as i64) as u32;
        if kk.gcd(&n) != 1 {
            return Err(NumError::NotCoprime { k, order: n });
        }
        if self.is_rational() {
            return Ok(self.clone());
        }
        let data = tables(n);
        let mut out = vec![Rat::zero(); data.phi];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let idx = (i as u64 * kk as u64 % n as u64) as usize;
            for (o, p) in out.iter_mut().zip(&data.powers[idx]) {
                if !p.is_zero() {
                    *o += c * p;
                }
            }
        }
        Ok(Cyc { order: n, coeffs: out })
    }

    /// Complex conjugation σ₋₁.
    pub fn conj(&self) -> Cyc {
        self.galois(-1).expect("-1 is a unit modulo every order")
    }

    pub fn scale(&self, r: &Rat) -> Cyc {
        Cyc { order: self.order, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    pub fn inv(&self) -> Result<Cyc, NumError> {
        if self.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        if let Some(r) = self.as_rat() {
            return Ok(Cyc::from_rat(r.recip()));
        }
        let data = tables(self.order);
        let s = dense::inverse_mod(&self.coeffs, &data.modulus);
        Cyc::from_coeffs(self.order, s)
    }

    pub fn checked_div(&self, other: &Cyc) -> Result<Cyc, NumError> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Cyc, NumError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Cyc::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    /// Both operands expressed over one common order.
    fn aligned(&self, other: &Cyc) -> (Cyc, Cyc) {
        let n = self.order.lcm(&other.order);
        (
            self.embed(n).expect("lcm is a multiple"),
            other.embed(n).expect("lcm is a multiple"),
        )
    }

    fn add_impl(&self, other: &Cyc, negate: bool) -> Cyc {
        let combine = |a: &Rat, b: &Rat| if negate { a - b } else { a + b };
        if self.order == other.order {
            let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| combine(a, b)).collect();
            return Cyc { order: self.order, coeffs };
        }
        if other.is_rational() {
            let mut out = self.clone();
            out.coeffs[0] = combine(&self.coeffs[0], &other.coeffs[0]);
            return out;
        }
        if self.is_rational() {
            let mut out = if negate { -other } else { other.clone() };
            out.coeffs[0] += &self.coeffs[0];
            return out;
        }
        let (a, b) = self.aligned(other);
        a.add_impl(&b, negate)
    }

    fn mul_impl(&self, other: &Cyc) -> Cyc {
        if let Some(r) = other.as_rat() {
            return self.scale(r);
        }
        if let Some(r) = self.as_rat() {
            return other.scale(r);
        }
        if self.order != other.order {
            let (a, b) = self.aligned(other);
            return a.mul_impl(&b);
        }
        let data = tables(self.order);
        let mut prod = vec![Rat::zero(); 2 * data.phi - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        reduce_mod(&mut prod, &data);
        Cyc { order: self.order, coeffs: prod }
    }

    /// Render as a polynomial in `symbol`, highest power first, e.g. `zeta^2-1`.
    pub fn render(&self, symbol: &str) -> String {
        let items: Vec<(Rat, String)> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let label = match i {
                    0 => String::new(),
                    1 => symbol.to_string(),
                    _ => format!("{symbol}^{i}"),
                };
                (c.clone(), label)
            })
            .collect();
        render_combination(&items)
    }
}

/// Render `Σ c_i · label_i` compactly; an empty label stands for 1.
pub(crate) fn render_combination(items: &[(Rat, String)]) -> String {
    if items.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (c, label)) in items.iter().enumerate() {
        let neg = c.is_negative();
        if neg {
            out.push('-');
        } else if idx > 0 {
            out.push('+');
        }
        let mag = c.abs();
        if label.is_empty() {
            out.push_str(&mag.to_string());
        } else if mag.is_one() {
            out.push_str(label);
        } else {
            out.push_str(&format!("{mag}*{label}"));
        }
    }
    out
}

impl PartialEq for Cyc {
    fn eq(&self, other: &Cyc) -> bool {
        if self.order == other.order {
            return self.coeffs == other.coeffs;
        }
        if self.is_rational() && other.is_rational() {
            return self.coeffs[0] == other.coeffs[0];
        }
        let (a, b) = self.aligned(other);
        a.coeffs == b.coeffs
    }
}

impl Eq for Cyc {}

impl fmt::Display for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("zeta"))
    }
}

impl From<Rat> for Cyc {
    fn from(r: Rat) -> Cyc {
        Cyc::from_rat(r)
    }
}

impl From<i64> for Cyc {
    fn from(n: i64) -> Cyc {
        Cyc::from_int(n)
    }
}

impl<'a> Neg for &'a Cyc {
    type Output = Cyc;
    fn neg(self) -> Cyc {
        Cyc { order: self.order, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Neg for Cyc {
    type Output = Cyc;
    fn neg(self) -> Cyc {
        -&self
    }
}

macro_rules! cyc_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl<'a, 'b> $trait<&'b Cyc> for &'a Cyc {
            type Output = Cyc;
            fn $method(self, rhs: &'b Cyc) -> Cyc {
                $body(self, rhs)
            }
        }
        impl $trait<Cyc> for Cyc {
            type Output = Cyc;
            fn $method(self, rhs: Cyc) -> Cyc {
                $body(&self, &rhs)
            }
        }
        impl<'a> $trait<&'a Cyc> for Cyc {
            type Output = Cyc;
            fn $method(self, rhs: &'a Cyc) -> Cyc {
                $body(&self, rhs)
            }
        }
    };
}

cyc_binop!(Add, add, |a: &Cyc, b: &Cyc| a.add_impl(b, false));
cyc_binop!(Sub, sub, |a: &Cyc, b: &Cyc| a.add_impl(b, true));
cyc_binop!(Mul, mul, |a: &Cyc, b: &Cyc| a.mul_impl(b));

/// Field operation selector for [`cyc_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Strict field arithmetic: both operands must share their order unless one
/// of them is rational.
pub fn cyc_arith(op: ArithOp, x: &Cyc, y: &Cyc) -> Result<Cyc, NumError> {
    if x.order != y.order && !x.is_rational() && !y.is_rational() {
        return Err(NumError::OrderMismatch { left: x.order, right: y.order });
    }
    Ok(match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
        ArithOp::Div => x.checked_div(y)?,
    })
}

/// Dense univariate helpers over ℚ used for inversion modulo Φ_N.
mod dense {
    use super::Rat;
    use num_traits::Zero;

    fn trim(p: &mut Vec<Rat>) {
        while p.last().is_some_and(Zero::is_zero) {
            p.pop();
        }
    }

    fn divrem(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
        let mut r = a.to_vec();
        trim(&mut r);
        let db = b.len() - 1;
        if r.len() < b.len() {
            return (vec![], r);
        }
        let lead_inv = b[db].recip();
        let mut q = vec![Rat::zero(); r.len() - db];
        for i in (0..q.len()).rev() {
            let c = &r[i + db] * &lead_inv;
            if c.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                r[i + j] -= &c * bj;
            }
            q[i] = c;
        }
        r.truncate(db);
        trim(&mut r);
        (q, r)
    }

    fn mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    fn sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        let n = a.len().max(b.len());
        let mut out: Vec<Rat> = (0..n)
            .map(|i| {
                let x = a.get(i).cloned().unwrap_or_else(Rat::zero);
                let y = b.get(i).cloned().unwrap_or_else(Rat::zero);
                x - y
            })
            .collect();
        trim(&mut out);
        out
    }

    /// `s` with `s·a ≡ 1 (mod m)`; `m` irreducible and `a` nonzero mod `m`.
    pub(super) fn inverse_mod(a: &[Rat], m: &[Rat]) -> Vec<Rat> {
        let mut r0 = m.to_vec();
        let mut r1 = a.to_vec();
        trim(&mut r1);
        let mut s0: Vec<Rat> = vec![];
        let mut s1: Vec<Rat> = vec![Rat::from_integer(1.into())];
        while !r1.is_empty() {
            let (q, r) = divrem(&r0, &r1);
            let s2 = sub(&s0, &mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
        }
        // r0 is a nonzero constant
        let c = r0[0].recip();
        s0.iter().map(|x| x * &c).collect()
    }
}

//! Group determinants as polynomial forms, abelian character factors, and
//! the product law under group-ring convolution.

use std::collections::HashMap;

use thiserror::Error;

use crate::dsl;
use crate::exactnum::Cyc;
use crate::groups::{regular_matrix, CoeffVector, Group, GroupError};
use crate::polyfunc::{expansion_det, mat_det, MPoly, PolyError, RatFunc};

/// Largest order for which the determinant is expanded symbolically.
pub const MAX_SYMBOLIC_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("symbolic expansion supports order at most {MAX_SYMBOLIC_ORDER}, got {0}")]
    OrderTooLarge(usize),
    #[error("group is not abelian")]
    NotAbelian,
    #[error("{0}")]
    Group(#[from] GroupError),
    #[error("{0}")]
    Poly(#[from] PolyError),
    #[error("bad factorization: {0}")]
    BadFactorization(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDetForm {
    pub group: Group,
    pub names: Vec<String>,
    pub poly: MPoly,
}

/// `a, b, c, …` up to order 8, else `x1, x2, …`.
pub fn default_names(order: usize) -> Vec<String> {
    if order <= MAX_SYMBOLIC_ORDER {
        (0..order).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        (1..=order).map(|i| format!("x{i}")).collect()
    }
}

pub fn group_determinant(g: &Group) -> Result<GroupDetForm, FormError> {
    group_determinant_with(g, &default_names(g.order()))
}

/// Determinant of `M[s][t] = x[s⁻¹t]` with variable `names[i]` for element `i`.
pub fn group_determinant_with(g: &Group, names: &[String]) -> Result<GroupDetForm, FormError> {
    if g.order() > MAX_SYMBOLIC_ORDER {
        return Err(FormError::OrderTooLarge(g.order()));
    }
    let m = regular_matrix(g, &CoeffVector::symbols(g, names)?)?;
    let rows: Vec<Vec<MPoly>> = (0..g.order()).map(|i| m.row(i).iter().map(|e| e.num().clone()).collect()).collect();
    Ok(GroupDetForm { group: g.clone(), names: names.to_vec(), poly: expansion_det(&rows) })
}

/// The group determinant evaluated at `a`, for any supported order.
pub fn det_value(g: &Group, a: &CoeffVector) -> Result<RatFunc, FormError> {
    Ok(mat_det(&regular_matrix(g, a)?)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub variables: Option<Vec<String>>,
    pub factors: Vec<(MPoly, u32)>,
}

impl Factorization {
    pub fn product(&self) -> MPoly {
        self.factors.iter().fold(MPoly::one(), |acc, (p, e)| &acc * &p.pow(*e))
    }

    /// Accepts `["a+b", "a-b"]`, entries `["a+b", 2]`, or
    /// `{"variables": [...], "factors": [...]}`.
    pub fn from_json(text: &str) -> Result<Factorization, FormError> {
        let bad = |m: String| FormError::BadFactorization(m);
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let (variables, list) = match &v {
            serde_json::Value::Array(items) => (None, items.clone()),
            serde_json::Value::Object(map) => {
                let vars = match map.get("variables") {
                    None => None,
                    Some(x) => Some(
                        serde_json::from_value::<Vec<String>>(x.clone()).map_err(|e| bad(format!("variables: {e}")))?,
                    ),
                };
                let list = map
                    .get("factors")
                    .and_then(|f| f.as_array())
                    .ok_or_else(|| bad("missing \"factors\" list".into()))?;
                (vars, list.clone())
            }
            _ => return Err(bad("expected a list or an object".into())),
        };
        let factors = list
            .iter()
            .map(|item| {
                let (text, mult) = match item {
                    serde_json::Value::String(s) => (s.clone(), 1),
                    serde_json::Value::Array(pair) if pair.len() == 2 => {
                        let s = pair[0].as_str().ok_or_else(|| bad("factor must be a string".into()))?;
                        let m = pair[1].as_u64().filter(|m| *m <= 64).ok_or_else(|| bad("bad multiplicity".into()))?;
                        (s.to_string(), m as u32)
                    }
                    other => return Err(bad(format!("unexpected entry {other}"))),
                };
                let f = dsl::parse_ratfunc(&text).map_err(|e| bad(format!("{text}: {e}")))?;
                if !f.is_polynomial() {
                    return Err(bad(format!("{text} is not a polynomial")));
                }
                Ok((f.num().clone(), mult))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Factorization { variables, factors })
    }

    pub fn to_json(&self) -> String {
        let items: Vec<serde_json::Value> = self
            .factors
            .iter()
            .map(|(p, e)| {
                let s = p.render_with(&dsl::render_cyc);
                if *e == 1 { s.into() } else { serde_json::json!([s, e]) }
            })
            .collect();
        serde_json::Value::Array(items).to_string()
    }
}

/// Character values as exponents of ζ_N, N = exponent of `g`.
fn characters(g: &Group) -> Vec<Vec<u32>> {
    let n = g.order();
    let exp = g.exponent() as u32;
    // generators, each outside the span of the earlier ones
    let mut gens: Vec<usize> = Vec::new();
    let mut span = vec![false; n];
    span[0] = true;
    let close = |gens: &[usize]| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(x) = stack.pop() {
            for &s in gens {
                let y = g.mul(x, s);
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    };
    while let Some(x) = (0..n).find(|&x| !span[x]) {
        gens.push(x);
        span = close(&gens);
    }
    let mut found = Vec::new();
    let mut choice = vec![0u32; gens.len()];
    loop {
        // propagate χ(x·s) = χ(x) + choice[s] along the Cayley graph
        let mut val: Vec<Option<u32>> = vec![None; n];
        val[0] = Some(0);
        let mut stack = vec![0];
        let mut ok = true;
        'walk: while let Some(x) = stack.pop() {
            for (i, &s) in gens.iter().enumerate() {
                let y = g.mul(x, s);
                let v = (val[x].unwrap() + choice[i]) % exp;
                match val[y] {
                    None => {
                        val[y] = Some(v);
                        stack.push(y);
                    }
                    Some(w) if w != v => {
                        ok = false;
                        break 'walk;
                    }
                    _ => {}
                }
            }
        }
        if ok {
            found.push(val.into_iter().map(Option::unwrap).collect());
        }
        // next choice vector
        let mut i = 0;
        while i < choice.len() {
            choice[i] += 1;
            if choice[i] < exp {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == choice.len() {
            break;
        }
    }
    found
}

pub fn char_factors(g: &Group) -> Result<Factorization, FormError> {
    char_factors_with(g, &default_names(g.order()))
}

/// One linear factor `Σ χ(g)·x_g` per character; coefficients in ℚ(ζ_N).
pub fn char_factors_with(g: &Group, names: &[String]) -> Result<Factorization, FormError> {
    if !g.is_abelian() {
        return Err(FormError::NotAbelian);
    }
    if names.len() != g.order() {
        return Err(GroupError::NameCount { expected: g.order(), got: names.len() }.into());
    }
    let exp = g.exponent() as u32;
    let factors = characters(g)
        .into_iter()
        .map(|chi| {
            let p = chi.iter().zip(names).fold(MPoly::zero(), |acc, (&k, v)| {
                let c = if exp == 1 { Cyc::one() } else { Cyc::zeta_pow(exp, i64::from(k)).unwrap() };
                &acc + &MPoly::var(v).scale(&c)
            });
            (p, 1)
        })
        .collect();
    Ok(Factorization { variables: Some(names.to_vec()), factors })
}

/// Product of the claimed factors equals the group determinant.
pub fn verify_factorization(g: &Group, names: &[String], claimed: &Factorization) -> Result<bool, FormError> {
    let form = group_determinant_with(g, names)?;
    Ok(claimed.product() == form.poly)
}

/// `(u⋆v)[w] = Σ_{gh=w} u[g]·v[h]`.
pub fn convolve(g: &Group, u: &CoeffVector, v: &CoeffVector) -> Result<CoeffVector, FormError> {
    let n = g.order();
    if u.len() != n || v.len() != n {
        return Err(GroupError::LengthMismatch { expected: n, got: u.len().min(v.len()) }.into());
    }
    let mut out = vec![RatFunc::zero(); n];
    for a in 0..n {
        if u.get(a).is_zero() {
            continue;
        }
        for b in 0..n {
            if !v.get(b).is_zero() {
                let w = g.mul(a, b);
                out[w] = &out[w] + &(u.get(a) * v.get(b));
            }
        }
    }
    Ok(CoeffVector::new(g, out)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureReport {
    pub du: RatFunc,
    pub dv: RatFunc,
    pub duv: RatFunc,
    pub equal: bool,
}

pub fn closure_check(g: &Group, u: &CoeffVector, v: &CoeffVector) -> Result<ClosureReport, FormError> {
    let du = det_value(g, u)?;
    let dv = det_value(g, v)?;
    let duv = det_value(g, &convolve(g, u, v)?)?;
    let equal = &du * &dv == duv;
    Ok(ClosureReport { du, dv, duv, equal })
}

/// Evaluate a form at named values.
pub fn eval_form(form: &GroupDetForm, values: &[Cyc]) -> Result<Cyc, FormError> {
    let point: HashMap<String, Cyc> = form.names.iter().cloned().zip(values.iter().cloned()).collect();
    Ok(form.poly.eval(&point)?)
}

//! The |G|·|H| linear system of a functional equation and its exact solution.

use std::collections::HashMap;

use thiserror::Error;

use crate::actions::{apply_domain, apply_image, ActionError, DomainAction, ImageAction, PunctureSet};
use crate::exactnum::Cyc;
use crate::polyfunc::{bareiss_det, mat_det, poly_lcm, MPoly, PolyError, PolyMatrix, RatFunc};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("singular system: the determinant {determinant} vanishes identically")]
    SingularSystem { determinant: RatFunc },
    #[error("point lies in the excluded set ({poly} = 0)")]
    ExcludedPoint { poly: String },
    #[error("solution has a pole at the point")]
    PoleAtPoint,
    #[error("missing value for variable {0}")]
    MissingVariable(String),
    #[error("the right side is unspecified; only the linear combination is available")]
    OpaqueRhs,
    #[error("{0}")]
    Action(#[from] ActionError),
    #[error("{0}")]
    Poly(#[from] PolyError),
}

/// Right-hand side: a concrete function, or an unspecified `F` whose
/// translates become fresh symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Known(RatFunc),
    Opaque(String),
}

/// `Σ a[g][h] · h(f(g(x))) = F(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationSpec {
    domain: DomainAction,
    image: ImageAction,
    coeffs: Vec<Vec<RatFunc>>,
    rhs: Rhs,
    field_order: u32,
}

impl EquationSpec {
    /// `coeffs[g][h]` indexed by domain then image group elements.
    pub fn new(domain: DomainAction, image: ImageAction, coeffs: Vec<Vec<RatFunc>>, rhs: Rhs, field_order: u32) -> EquationSpec {
        assert_eq!(coeffs.len(), domain.group().order(), "one coefficient row per domain element");
        assert!(coeffs.iter().all(|r| r.len() == image.group().order()), "one coefficient per image element");
        EquationSpec { domain, image, coeffs, rhs, field_order }
    }

    /// Trivial image action and constant coefficients `a[g]`.
    pub fn simple(domain: DomainAction, coeffs: Vec<RatFunc>, rhs: RatFunc) -> EquationSpec {
        let coeffs = coeffs.into_iter().map(|c| vec![c]).collect();
        EquationSpec::new(domain, ImageAction::trivial(), coeffs, Rhs::Known(rhs), 1)
    }

    pub fn domain(&self) -> &DomainAction {
        &self.domain
    }

    pub fn image(&self) -> &ImageAction {
        &self.image
    }

    pub fn coeff(&self, g: usize, h: usize) -> &RatFunc {
        &self.coeffs[g][h]
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    pub fn with_rhs(&self, rhs: RatFunc) -> EquationSpec {
        EquationSpec { rhs: Rhs::Known(rhs), ..self.clone() }
    }

    /// Least N such that every constant lies in ℚ(ζ_N).
    pub fn field_order(&self) -> u32 {
        self.field_order
    }

    /// Text label of the unknown `h(f(g(x)))`, e.g. `f(1/t)` or `conj(f(zbar))`.
    pub fn unknown_label(&self, g: usize, h: usize, func: &str) -> String {
        let inner = format!("{func}({})", self.domain.label(g));
        match self.image.element(h) {
            (1, false) => inner,
            (-1, true) => format!("conj({inner})"),
            (k, s) => format!("sigma[{k}{}]({inner})", if s { ",swap" } else { "" }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: PolyMatrix,
    pub rhs: Vec<RatFunc>,
    /// Unknown `i` is `h(f(g(x)))` with `(g, h) = index[i]`.
    pub index: Vec<(usize, usize)>,
    pub punctures: PunctureSet,
    /// Set when the right side is unspecified; `rhs[i]` is then its symbol.
    pub opaque: Option<String>,
}

/// The solved component `f` together with the system's determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub f: RatFunc,
    pub determinant: RatFunc,
    pub excluded: PunctureSet,
    pub components: Vec<RatFunc>,
}

/// Symbol for `r(F(k(x)))` when the right side is unspecified.
pub fn opaque_symbol(name: &str, row: usize) -> String {
    format!("{name}{row}")
}

/// Row `(k, r)`, column `(g′, h′)` holds `r(a[g′k⁻¹][r⁻¹h′] ∘ k)`: the
/// coefficient after substituting `x ↦ k(x)` and applying `r` to both sides.
pub fn build_system(spec: &EquationSpec) -> Result<LinearSystem, SolveError> {
    let g = spec.domain.group();
    let h = spec.image.group();
    let (ng, nh) = (g.order(), h.order());
    let n = ng * nh;
    let index: Vec<(usize, usize)> = (0..ng).flat_map(|a| (0..nh).map(move |b| (a, b))).collect();
    let mut matrix = PolyMatrix::zeros(n, n);
    let mut rhs = Vec::with_capacity(n);
    // a ∘ k, cached per (g, h, k)
    let mut shifted: HashMap<(usize, usize, usize), RatFunc> = HashMap::new();
    for (row, &(k, r)) in index.iter().enumerate() {
        for (col, &(gp, hp)) in index.iter().enumerate() {
            let ga = g.mul(gp, g.inv(k));
            let ha = h.mul(h.inv(r), hp);
            let a = &spec.coeffs[ga][ha];
            if a.is_zero() {
                continue;
            }
            let ak = match shifted.get(&(ga, ha, k)) {
                Some(v) => v.clone(),
                None => {
                    let v = apply_domain(&spec.domain, k, a)?;
                    shifted.insert((ga, ha, k), v.clone());
                    v
                }
            };
            matrix.set(row, col, apply_image(&spec.image, r, &ak)?);
        }
        rhs.push(match &spec.rhs {
            Rhs::Known(f) => apply_image(&spec.image, r, &apply_domain(&spec.domain, k, f)?)?,
            Rhs::Opaque(name) => RatFunc::var(&opaque_symbol(name, row)),
        });
    }
    let opaque = match &spec.rhs {
        Rhs::Opaque(name) => Some(name.clone()),
        Rhs::Known(_) => None,
    };
    Ok(LinearSystem { matrix, rhs, index, punctures: spec.domain.punctures(), opaque })
}

/// Gaussian elimination with the first nonzero pivot in each column.
pub fn solve_system(sys: &LinearSystem) -> Result<Solution, SolveError> {
    let determinant = mat_det(&sys.matrix)?;
    if determinant.is_zero() {
        return Err(SolveError::SingularSystem { determinant });
    }
    let n = sys.matrix.rows();
    let components = if has_parameters(sys) {
        cramer(sys)?
    } else {
        match &sys.opaque {
            None => eliminate(&sys.matrix, &[sys.rhs.clone()])?.remove(0),
            Some(name) => {
                // Solve against unit vectors so the arithmetic stays in the
                // coefficient field, then attach the symbols F_j.
                let units: Vec<Vec<RatFunc>> = (0..n)
                    .map(|j| (0..n).map(|i| if i == j { RatFunc::one() } else { RatFunc::zero() }).collect())
                    .collect();
                let cols = eliminate(&sys.matrix, &units)?;
                (0..n)
                    .map(|i| combine(&cols.iter().map(|c| c[i].clone()).collect::<Vec<_>>(), name))
                    .collect::<Result<Vec<_>, _>>()?
            }
        }
    };
    let mut excluded = sys.punctures.clone();
    excluded.insert(determinant.num().clone());
    Ok(Solution { f: components[0].clone(), determinant, excluded, components })
}

/// `Σ_j c_j · F_j` over a common denominator.
fn combine(coeffs: &[RatFunc], name: &str) -> Result<RatFunc, SolveError> {
    let mut den = MPoly::one();
    for c in coeffs.iter().filter(|c| !c.is_zero()) {
        den = poly_lcm(&den, c.den());
    }
    let mut num = MPoly::zero();
    for (j, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let scale = den.div_exact(c.den()).expect("lcm is a multiple");
        num = &num + &(&(c.num() * &scale) * &MPoly::var(&opaque_symbol(name, j)));
    }
    Ok(RatFunc::new(num, den)?)
}

/// More than one variable among the coefficients and known right side.
/// Quotients then stay unreduced, so elimination would swell.
fn has_parameters(sys: &LinearSystem) -> bool {
    let mut vars: Vec<String> = Vec::new();
    let known = if sys.opaque.is_none() { sys.rhs.as_slice() } else { &[] };
    for e in (0..sys.matrix.rows()).flat_map(|i| sys.matrix.row(i).iter()).chain(known) {
        for v in e.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    vars.len() > 1
}

/// Fraction-free Cramer's rule on the row-scaled system.
fn cramer(sys: &LinearSystem) -> Result<Vec<RatFunc>, SolveError> {
    let n = sys.matrix.rows();
    let opaque = sys.opaque.is_some();
    let mut m: Vec<Vec<MPoly>> = Vec::with_capacity(n);
    let mut b: Vec<RatFunc> = Vec::with_capacity(n);
    for i in 0..n {
        let row = sys.matrix.row(i);
        let mut l = MPoly::one();
        for e in row.iter().chain(if opaque { None } else { Some(&sys.rhs[i]) }) {
            if !e.is_zero() {
                l = poly_lcm(&l, e.den());
            }
        }
        m.push(
            row.iter()
                .map(|e| if e.is_zero() { MPoly::zero() } else { e.num() * &l.div_exact(e.den()).expect("row lcm is a multiple") })
                .collect(),
        );
        b.push(&sys.rhs[i] * &RatFunc::new(l, MPoly::one())?);
    }
    let det = bareiss_det(m.clone());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let num = if opaque {
            // expand the replaced column along its entries l_j · F_j
            let mut acc = MPoly::zero();
            for (j, bj) in b.iter().enumerate() {
                let minor: Vec<Vec<MPoly>> = (0..n)
                    .filter(|&r| r != j)
                    .map(|r| (0..n).filter(|&c| c != i).map(|c| m[r][c].clone()).collect())
                    .collect();
                let cof = bareiss_det(minor);
                if cof.is_zero() {
                    continue;
                }
                let term = &cof * bj.num();
                acc = if (i + j) % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            RatFunc::new(acc, det.clone())?
        } else {
            let mut den = MPoly::one();
            for bj in &b {
                if !bj.is_zero() {
                    den = poly_lcm(&den, bj.den());
                }
            }
            let mut mi = m.clone();
            for (r, bj) in b.iter().enumerate() {
                mi[r][i] = if bj.is_zero() { MPoly::zero() } else { bj.num() * &den.div_exact(bj.den()).expect("lcm is a multiple") };
            }
            RatFunc::new(bareiss_det(mi), &det * &den)?
        };
        out.push(num);
    }
    Ok(out)
}

/// Solve `m · x = b` for each right-hand column `b`.
fn eliminate(matrix: &PolyMatrix, rhs: &[Vec<RatFunc>]) -> Result<Vec<Vec<RatFunc>>, SolveError> {
    let n = matrix.rows();
    let k = rhs.len();
    let mut m: Vec<Vec<RatFunc>> = (0..n)
        .map(|i| {
            let mut row = matrix.row(i).to_vec();
            row.extend(rhs.iter().map(|b| b[i].clone()));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero()).expect("nonzero determinant guarantees a pivot");
        m.swap(c, p);
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let factor = m[r][c].try_div(&m[c][c])?;
            for j in c..n + k {
                if !m[c][j].is_zero() {
                    let v = &m[r][j] - &(&factor * &m[c][j]);
                    m[r][j] = v;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(k);
    for col in 0..k {
        let mut x = vec![RatFunc::zero(); n];
        for i in (0..n).rev() {
            let mut acc = m[i][n + col].clone();
            for j in i + 1..n {
                if !m[i][j].is_zero() && !x[j].is_zero() {
                    acc = &acc - &(&m[i][j] * &x[j]);
                }
            }
            x[i] = acc.try_div(&m[i][i])?;
        }
        out.push(x);
    }
    Ok(out)
}

/// Back-substitute a candidate `f` into the equation.
pub fn verify_function(spec: &EquationSpec, f: &RatFunc) -> Result<bool, SolveError> {
    let rhs = match &spec.rhs {
        Rhs::Known(r) => r,
        Rhs::Opaque(_) => return Err(SolveError::OpaqueRhs),
    };
    let mut lhs = RatFunc::zero();
    for (g, row) in spec.coeffs.iter().enumerate() {
        let fg = apply_domain(&spec.domain, g, f)?;
        for (h, a) in row.iter().enumerate() {
            if !a.is_zero() {
                lhs = &lhs + &(a * &apply_image(&spec.image, h, &fg)?);
            }
        }
    }
    Ok(lhs == *rhs)
}

/// True iff the solution satisfies the equation identically. With an
/// unspecified right side the linear system itself is checked.
pub fn verify_solution(spec: &EquationSpec, sol: &Solution) -> bool {
    match &spec.rhs {
        Rhs::Known(_) => verify_function(spec, &sol.f).unwrap_or(false),
        Rhs::Opaque(_) => {
            let Ok(sys) = build_system(spec) else { return false };
            if sys.rhs.len() != sol.components.len() {
                return false;
            }
            (0..sys.rhs.len()).all(|i| {
                let mut acc = RatFunc::zero();
                for (j, x) in sol.components.iter().enumerate() {
                    let e = sys.matrix.get(i, j);
                    if !e.is_zero() {
                        acc = &acc + &(e * x);
                    }
                }
                acc == sys.rhs[i]
            })
        }
    }
}

pub fn evaluate_solution(sol: &Solution, point: &HashMap<String, Cyc>) -> Result<Cyc, SolveError> {
    for v in sol.f.vars() {
        if !point.contains_key(&v) {
            return Err(SolveError::MissingVariable(v));
        }
    }
    if let Some(p) = sol.excluded.hit(point) {
        return Err(SolveError::ExcludedPoint { poly: p.to_string() });
    }
    sol.f.eval(point).map_err(|e| match e {
        PolyError::PoleAtPoint => SolveError::PoleAtPoint,
        other => SolveError::Poly(other),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{build_domain_action, MoebiusMap};
    use crate::exactnum::rat_frac;

    fn c2_inverse() -> DomainAction {
        build_domain_action(&[MoebiusMap::from_ints(0, 1, 1, 0).unwrap()], "t", 64).unwrap().1
    }

    fn q1_rhs() -> RatFunc {
        let t = RatFunc::var("t");
        let one = RatFunc::one();
        (&one - &(&t * &t)).try_div(&(&one + &(&t * &t))).unwrap()
    }

    #[test]
    fn question_one_system() {
        let spec = EquationSpec::simple(c2_inverse(), vec![RatFunc::from_int(1), RatFunc::from_int(2)], q1_rhs());
        let sys = build_system(&spec).unwrap();
        let ints = |a: i64, b: i64| vec![RatFunc::from_int(a), RatFunc::from_int(b)];
        assert_eq!(sys.matrix, PolyMatrix::from_rows(vec![ints(1, 2), ints(2, 1)]).unwrap());
        assert_eq!(sys.rhs[1], -&q1_rhs());
        let sol = solve_system(&sys).unwrap();
        assert_eq!(sol.f, -&q1_rhs());
        assert_eq!(sol.determinant, RatFunc::from_int(-3));
        assert!(verify_solution(&spec, &sol));
        assert!(!verify_function(&spec, &RatFunc::var("t")).unwrap());
        let at = HashMap::from([("t".to_string(), Cyc::from_int(2024))]);
        assert_eq!(evaluate_solution(&sol, &at).unwrap(), Cyc::from_rat(rat_frac(4096575, 4096577)));
        let zero = HashMap::from([("t".to_string(), Cyc::zero())]);
        assert!(matches!(evaluate_solution(&sol, &zero), Err(SolveError::ExcludedPoint { .. })));
    }

    #[test]
    fn singular_when_squares_agree() {
        let spec = EquationSpec::simple(c2_inverse(), vec![RatFunc::from_int(1), RatFunc::from_int(1)], q1_rhs());
        let err = solve_system(&build_system(&spec).unwrap()).unwrap_err();
        assert!(matches!(err, SolveError::SingularSystem { .. }));
    }

    #[test]
    fn semilinear_system() {
        let act = DomainAction::trivial(crate::actions::VariableModel::pair("z"));
        let coeffs = vec![vec![RatFunc::one(), RatFunc::var("z")]];
        let spec = EquationSpec::new(act, ImageAction::conjugation(), coeffs, Rhs::Known(RatFunc::var("z")), 1);
        let sys = build_system(&spec).unwrap();
        let z = RatFunc::var("z");
        let zb = RatFunc::var("zbar");
        let want = PolyMatrix::from_rows(vec![vec![RatFunc::one(), z.clone()], vec![zb.clone(), RatFunc::one()]]).unwrap();
        assert_eq!(sys.matrix, want);
        let sol = solve_system(&sys).unwrap();
        assert_eq!(sol.determinant, &RatFunc::one() - &(&z * &zb));
        assert!(verify_solution(&spec, &sol));
    }

    #[test]
    fn opaque_rhs_gives_combination() {
        let spec = EquationSpec::new(
            c2_inverse(),
            ImageAction::trivial(),
            vec![vec![RatFunc::from_int(1)], vec![RatFunc::from_int(2)]],
            Rhs::Opaque("F".into()),
            1,
        );
        let sol = solve_system(&build_system(&spec).unwrap()).unwrap();
        // f = (2 F(1/t) - F(t)) / 3
        let want = (&RatFunc::var("F1").scale(&Cyc::from_int(2)) - &RatFunc::var("F0")).scale(&Cyc::from_rat(rat_frac(1, 3)));
        assert_eq!(sol.f, want);
        assert!(verify_solution(&spec, &sol));
    }
}

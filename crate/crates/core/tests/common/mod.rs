//! Generators and randomized checks shared by the property and acceptance targets.
#![allow(dead_code)]

use std::collections::HashMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use symfun::actions::{build_domain_action, s3_moebius, DomainAction, MoebiusMap};
use symfun::forms::{convolve, det_value};
use symfun::groups::{self, CoeffVector, Group};
use symfun::solver::{build_system, solve_system, verify_solution, EquationSpec, SolveError};
use symfun::{Cyc, MPoly, RatFunc};

pub fn config(cases: u32) -> Config {
    Config { cases, failure_persistence: None, ..Config::default() }
}

pub fn int(n: i64) -> Cyc {
    Cyc::from_int(n)
}

pub fn frac(p: i64, q: i64) -> Cyc {
    int(p).checked_div(&int(q)).unwrap()
}

/// Elements of ℚ(ζ₁₂) in the power basis 1, ζ, ζ², ζ³.
pub fn cyc12() -> impl Strategy<Value = Cyc> {
    prop::collection::vec((-9i64..=9, 1i64..=5), 4).prop_map(|cs| {
        cs.iter().enumerate().fold(int(0), |acc, (i, &(p, q))| acc + frac(p, q) * Cyc::zeta_pow(12, i as i64).unwrap())
    })
}

pub fn poly_in(var: &str, coeffs: &[i64]) -> MPoly {
    MPoly::from_terms(&[var], coeffs.iter().enumerate().map(|(i, &c)| (vec![i as u32], int(c))))
}

/// Random `p/q` in one variable with both degrees at most `deg`.
pub fn ratfunc(var: &'static str, deg: usize) -> impl Strategy<Value = RatFunc> {
    let side = move || prop::collection::vec(-6i64..=6, 1..=deg + 1);
    (side(), side()).prop_filter_map("zero denominator", move |(n, d)| {
        let den = poly_in(var, &d);
        if den.is_zero() {
            None
        } else {
            Some(RatFunc::new(poly_in(var, &n), den).unwrap())
        }
    })
}

pub fn ints(n: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-5i64..=5, n)
}

pub fn named_groups() -> Vec<(&'static str, Group)> {
    vec![
        ("C2", groups::cyclic(2).unwrap()),
        ("C3", groups::cyclic(3).unwrap()),
        ("C4", groups::cyclic(4).unwrap()),
        ("klein4", groups::klein4().unwrap()),
        ("S3", groups::s3().unwrap()),
        ("Q8", groups::q8().unwrap()),
    ]
}

fn mobius(a: i64, b: i64, c: i64, d: i64) -> MoebiusMap {
    MoebiusMap::from_ints(a, b, c, d).unwrap()
}

fn scaled(k: Cyc) -> MoebiusMap {
    MoebiusMap::new(k, int(0), int(0), int(1)).unwrap()
}

/// Every Möbius action of order at most 8 the tests construct.
pub fn moebius_actions() -> Vec<(&'static str, DomainAction)> {
    let build = |gens: Vec<MoebiusMap>| build_domain_action(&gens, "t", 64).unwrap().1;
    vec![
        ("1/t", build(vec![mobius(0, 1, 1, 0)])),
        ("-t", build(vec![mobius(-1, 0, 0, 1)])),
        ("2-t", build(vec![mobius(-1, 2, 0, 1)])),
        ("-t/(t+1)", build(vec![mobius(-1, 0, 1, 1)])),
        ("1/(1-t)", build(vec![mobius(0, 1, -1, 1)])),
        ("(t-3)/(t+1)", build(vec![mobius(1, -3, 1, 1)])),
        ("-t,1/t", build(vec![mobius(-1, 0, 0, 1), mobius(0, 1, 1, 0)])),
        ("I*t", build(vec![scaled(Cyc::zeta(4).unwrap())])),
        ("w*t", build(vec![scaled(Cyc::zeta(3).unwrap())])),
        ("-w*t", build(vec![scaled(-Cyc::zeta(3).unwrap())])),
        ("zeta8*t", build(vec![scaled(Cyc::zeta(8).unwrap())])),
        ("I*t,1/t", build(vec![scaled(Cyc::zeta(4).unwrap()), mobius(0, 1, 1, 0)])),
        ("S3", s3_moebius("t").unwrap().1),
    ]
}

/// `d(u ⋆ v) = d(u) · d(v)` for integer vectors in [−5, 5].
pub fn check_multiplicativity(g: &Group, cases: u32) -> Result<(), String> {
    let n = g.order();
    TestRunner::new(config(cases))
        .run(&(ints(n), ints(n)), |(u, v)| {
            let u = CoeffVector::from_ints(g, &u).unwrap();
            let v = CoeffVector::from_ints(g, &v).unwrap();
            let uv = convolve(g, &u, &v).unwrap();
            let lhs = det_value(g, &uv).unwrap();
            let rhs = &det_value(g, &u).unwrap() * &det_value(g, &v).unwrap();
            prop_assert_eq!(lhs, rhs);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Listing the elements in another order leaves the determinant unchanged.
pub fn check_relabelling(g: &Group, cases: u32) -> Result<(), String> {
    let n = g.order();
    let perm = Just((1..n).collect::<Vec<usize>>()).prop_shuffle();
    TestRunner::new(config(cases))
        .run(&(ints(n), perm), |(a, rest)| {
            let mut perm = vec![0];
            perm.extend(rest);
            let a = CoeffVector::from_ints(g, &a).unwrap();
            let h = g.relabel(&perm).unwrap();
            prop_assert_eq!(det_value(&h, &a.relabel(&perm)).unwrap(), det_value(g, &a).unwrap());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// `map(g₁g₂) = map(g₁) ∘ map(g₂)` over every pair.
pub fn check_moebius_homomorphism(act: &DomainAction) -> Result<(), String> {
    let g = act.group();
    for a in 0..g.order() {
        for b in 0..g.order() {
            let lhs = act.moebius(g.mul(a, b)).unwrap();
            let rhs = act.moebius(a).unwrap().compose(act.moebius(b).unwrap());
            if *lhs != rhs {
                return Err(format!("map({a}*{b}) = {lhs} but the composite is {rhs}"));
            }
        }
    }
    Ok(())
}

fn constant_spec(act: &DomainAction, coeffs: &[i64], rhs: RatFunc) -> EquationSpec {
    EquationSpec::simple(act.clone(), coeffs.iter().map(|&c| RatFunc::from_int(c)).collect(), rhs)
}

/// C2 and C3 actions for the solver checks.
pub fn solver_actions() -> Vec<(&'static str, DomainAction)> {
    moebius_actions().into_iter().filter(|(_, a)| matches!(a.group().order(), 2 | 3)).collect()
}

/// Solvable random specs back-substitute to an identity.
pub fn check_back_substitution(act: &DomainAction, cases: u32) -> Result<(), String> {
    let n = act.group().order();
    TestRunner::new(config(cases))
        .run(&(ints(n), ratfunc("t", 4)), |(coeffs, rhs)| {
            let a = CoeffVector::from_ints(act.group(), &coeffs).unwrap();
            prop_assume!(!det_value(act.group(), &a).unwrap().is_zero());
            let spec = constant_spec(act, &coeffs, rhs);
            let sol = solve_system(&build_system(&spec).unwrap()).unwrap();
            prop_assert!(verify_solution(&spec, &sol), "f = {} fails", sol.f);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Coefficients that lie on a character hyperplane half of the time.
fn near_singular(n: usize) -> impl Strategy<Value = Vec<i64>> {
    (ints(n), 0usize..4).prop_map(move |(mut v, mode)| {
        match (n, mode) {
            (2, 0) => v[1] = v[0],
            (2, 1) => v[1] = -v[0],
            (3, 0) => v[2] = -v[0] - v[1],
            (3, 1) => {
                // a² + b² + c² = ab + bc + ca over ℤ forces a = b = c
                v[1] = v[0];
                v[2] = v[0];
            }
            _ => {}
        }
        v
    })
}

/// `SingularSystem` exactly when the determinant form vanishes.
pub fn check_singular_iff(act: &DomainAction, cases: u32) -> Result<(), String> {
    let n = act.group().order();
    TestRunner::new(config(cases))
        .run(&(near_singular(n), ratfunc("t", 2)), |(coeffs, rhs)| {
            let a = CoeffVector::from_ints(act.group(), &coeffs).unwrap();
            let vanishes = det_value(act.group(), &a).unwrap().is_zero();
            let spec = constant_spec(act, &coeffs, rhs);
            let outcome = solve_system(&build_system(&spec).unwrap());
            prop_assert_eq!(matches!(outcome, Err(SolveError::SingularSystem { .. })), vanishes, "coefficients {:?}", coeffs);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn at(var: &str, v: Cyc) -> HashMap<String, Cyc> {
    HashMap::from([(var.to_string(), v)])
}

mod common;

use proptest::prelude::*;

use common::*;
use symfun::actions::{apply_domain, apply_image, DomainAction, ImageAction};
use symfun::forms::{char_factors, convolve, det_value, group_determinant};
use symfun::groups::{self, regular_matrix, transposed_regular_matrix, CoeffVector};
use symfun::polyfunc::mat_det;
use symfun::solver::{build_system, solve_system, verify_function, verify_solution, EquationSpec};
use symfun::{Cyc, MPoly, PolyMatrix, RatFunc};

fn small_matrix(n: usize) -> impl Strategy<Value = PolyMatrix> {
    prop::collection::vec(ratfunc("t", 2), n * n)
        .prop_map(move |es| PolyMatrix::from_rows(es.chunks(n).map(|r| r.to_vec()).collect()).unwrap())
}

/// Polynomials in `z, zbar` with coefficients in ℚ(i).
fn pair_poly() -> impl Strategy<Value = MPoly> {
    prop::collection::vec(((0u32..3, 0u32..3), -4i64..=4, -4i64..=4), 1..5).prop_map(|ts| {
        let i = Cyc::zeta(4).unwrap();
        MPoly::from_terms(&["z", "zbar"], ts.into_iter().map(|((a, b), re, im)| (vec![a, b], int(re) + int(im) * &i)))
    })
}

fn pair_ratfunc() -> impl Strategy<Value = RatFunc> {
    (pair_poly(), pair_poly())
        .prop_filter_map("zero denominator", |(n, d)| if d.is_zero() { None } else { RatFunc::new(n, d).ok() })
}

/// Numerator and denominator, compared structurally.
fn parts(f: &RatFunc) -> (MPoly, MPoly) {
    (f.num().clone(), f.den().clone())
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn field_axioms(x in cyc12(), y in cyc12(), z in cyc12()) {
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        if !x.is_zero() {
            prop_assert_eq!(&x * &x.inv().unwrap(), int(1));
        }
    }

    #[test]
    fn galois_is_a_ring_homomorphism(x in cyc12(), y in cyc12(), k in prop::sample::select(vec![1i64, 5, 7, 11, -1])) {
        let s = |c: &Cyc| c.galois(k).unwrap();
        prop_assert_eq!(s(&(&x * &y)), &s(&x) * &s(&y));
        prop_assert_eq!(s(&(&x + &y)), &s(&x) + &s(&y));
    }

    #[test]
    fn conjugation_is_an_involution(x in cyc12()) {
        prop_assert_eq!(x.galois(-1).unwrap().galois(-1).unwrap(), x);
    }

    #[test]
    fn normalisation_is_idempotent(n in ratfunc("t", 4), m in pair_ratfunc()) {
        prop_assert_eq!(parts(&n.renormalized()), parts(&n));
        prop_assert_eq!(parts(&n.renormalized().renormalized()), parts(&n.renormalized()));
        prop_assert_eq!(parts(&m.renormalized().renormalized()), parts(&m.renormalized()));
    }

    #[test]
    fn arithmetic_matches_cross_multiplication(a in ratfunc("t", 3), b in ratfunc("t", 3)) {
        let sum = &a + &b;
        let raw = RatFunc::new(&(a.num() * b.den()) + &(b.num() * a.den()), a.den() * b.den()).unwrap();
        prop_assert_eq!(parts(&sum), parts(&raw));
        let prod = &a * &b;
        prop_assert_eq!(parts(&prod), parts(&RatFunc::new(a.num() * b.num(), a.den() * b.den()).unwrap()));
        if !b.is_zero() {
            prop_assert_eq!(parts(&(&a.try_div(&b).unwrap() * &b)), parts(&a));
        }
    }

    #[test]
    fn det_is_multiplicative_2x2(m in small_matrix(2), n in small_matrix(2)) {
        let mn = m.mul(&n).unwrap();
        prop_assert_eq!(mat_det(&mn).unwrap(), &mat_det(&m).unwrap() * &mat_det(&n).unwrap());
    }

    #[test]
    fn det_is_multiplicative_3x3(m in small_matrix(3), n in small_matrix(3)) {
        let mn = m.mul(&n).unwrap();
        prop_assert_eq!(mat_det(&mn).unwrap(), &mat_det(&m).unwrap() * &mat_det(&n).unwrap());
    }

    #[test]
    fn det_of_transpose(m in small_matrix(3)) {
        prop_assert_eq!(mat_det(&m.transpose()).unwrap(), mat_det(&m).unwrap());
    }

    #[test]
    fn moebius_substitution_round_trip(f in ratfunc("t", 3), which in 0usize..13) {
        let (_, act) = &moebius_actions()[which];
        let g = act.group();
        for k in 0..g.order() {
            let there = apply_domain(act, g.inv(k), &f).unwrap();
            prop_assert_eq!(apply_domain(act, k, &there).unwrap(), f.clone());
        }
    }

    #[test]
    fn image_action_is_a_ring_automorphism(f in pair_ratfunc(), g in pair_ratfunc()) {
        let act = ImageAction::conjugation();
        let k = |x: &RatFunc| apply_image(&act, 1, x).unwrap();
        prop_assert_eq!(k(&(&f * &g)), &k(&f) * &k(&g));
        prop_assert_eq!(k(&(&f + &g)), &k(&f) + &k(&g));
        prop_assert_eq!(k(&k(&f)), f);
    }

    #[test]
    fn regular_representation_is_multiplicative(which in 0usize..6, u in ints(8), v in ints(8)) {
        let (_, g) = &named_groups()[which];
        let n = g.order();
        let u = CoeffVector::from_ints(g, &u[..n]).unwrap();
        let v = CoeffVector::from_ints(g, &v[..n]).unwrap();
        let lhs = regular_matrix(g, &u).unwrap().mul(&regular_matrix(g, &v).unwrap()).unwrap();
        prop_assert_eq!(lhs, regular_matrix(g, &convolve(g, &u, &v).unwrap()).unwrap());
    }

    #[test]
    fn transposed_construction_has_same_det(which in 0usize..6, a in ints(8)) {
        let (_, g) = &named_groups()[which];
        let a = CoeffVector::from_ints(g, &a[..g.order()]).unwrap();
        prop_assert_eq!(
            mat_det(&transposed_regular_matrix(g, &a).unwrap()).unwrap(),
            mat_det(&regular_matrix(g, &a).unwrap()).unwrap()
        );
    }

    #[test]
    fn system_det_is_group_det(which in 0usize..13, a in ints(8)) {
        let (_, act) = &moebius_actions()[which];
        let n = act.group().order();
        let coeffs: Vec<RatFunc> = a[..n].iter().map(|&c| RatFunc::from_int(c)).collect();
        let spec = EquationSpec::simple(act.clone(), coeffs, RatFunc::var("t"));
        let det = mat_det(&build_system(&spec).unwrap().matrix).unwrap();
        prop_assert_eq!(det, det_value(act.group(), &CoeffVector::from_ints(act.group(), &a[..n]).unwrap()).unwrap());
    }

    #[test]
    fn solutions_are_linear_in_the_rhs(which in 0usize..7, a in ints(3), f1 in ratfunc("t", 3), f2 in ratfunc("t", 3)) {
        let (_, act) = &solver_actions()[which];
        let n = act.group().order();
        let cv = CoeffVector::from_ints(act.group(), &a[..n]).unwrap();
        prop_assume!(!det_value(act.group(), &cv).unwrap().is_zero());
        let solve = |rhs: RatFunc| {
            let spec = EquationSpec::simple(act.clone(), cv.values().to_vec(), rhs);
            solve_system(&build_system(&spec).unwrap()).unwrap().f
        };
        prop_assert_eq!(solve(&f1 + &f2), &solve(f1) + &solve(f2));
    }

    #[test]
    fn translated_rhs_is_solved_by_translated_solution(which in 0usize..7, a in ints(3), f in ratfunc("t", 3)) {
        // C2 and C3 are abelian, so f∘k solves the equation with right side F∘k
        let (_, act) = &solver_actions()[which];
        let n = act.group().order();
        let cv = CoeffVector::from_ints(act.group(), &a[..n]).unwrap();
        prop_assume!(!det_value(act.group(), &cv).unwrap().is_zero());
        let spec = EquationSpec::simple(act.clone(), cv.values().to_vec(), f.clone());
        let sol = solve_system(&build_system(&spec).unwrap()).unwrap();
        for k in 1..n {
            let shifted = spec.with_rhs(apply_domain(act, k, &f).unwrap());
            prop_assert!(verify_function(&shifted, &apply_domain(act, k, &sol.f).unwrap()).unwrap());
            let direct = solve_system(&build_system(&shifted).unwrap()).unwrap();
            prop_assert!(verify_solution(&shifted, &direct));
        }
    }
}

#[test]
fn multiplicativity_of_group_determinants() {
    for (name, g) in named_groups() {
        check_multiplicativity(&g, 200).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn relabelling_invariance() {
    for (name, g) in named_groups() {
        check_relabelling(&g, 200).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn moebius_actions_are_homomorphisms() {
    for (name, act) in moebius_actions() {
        assert!(act.group().order() <= 8, "{name}");
        check_moebius_homomorphism(&act).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn random_specs_back_substitute() {
    for (name, act) in solver_actions() {
        check_back_substitution(&act, 200).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn singular_exactly_on_vanishing_forms() {
    for (name, act) in solver_actions() {
        check_singular_iff(&act, 200).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn characters_multiply_to_abelian_forms() {
    for g in [groups::cyclic(2), groups::cyclic(3), groups::cyclic(4), groups::cyclic(6), groups::klein4()] {
        let g = g.unwrap();
        assert_eq!(char_factors(&g).unwrap().product(), group_determinant(&g).unwrap().poly, "order {}", g.order());
    }
}

#[test]
fn six_term_coefficients_through_the_group_form() {
    let (group, act, _) = symfun::actions::s3_moebius("t").unwrap();
    let coeffs: Vec<i64> = (1..=6).collect();
    let form = group_determinant(&group).unwrap();
    let values: Vec<Cyc> = coeffs.iter().map(|&c| int(c)).collect();
    assert_eq!(symfun::forms::eval_form(&form, &values).unwrap(), int(3024));
    let spec = EquationSpec::simple(act, coeffs.iter().map(|&c| RatFunc::from_int(c)).collect(), RatFunc::var("t"));
    assert_eq!(mat_det(&build_system(&spec).unwrap().matrix).unwrap(), RatFunc::from_int(3024));
}

#[test]
fn swap_action_only_renames() {
    let act = DomainAction::swap("z");
    let f = symfun::dsl::parse_ratfunc("I*z^2+a*zbar").unwrap();
    let want = symfun::dsl::parse_ratfunc("I*zbar^2+a*z").unwrap();
    assert_eq!(apply_domain(&act, 1, &f).unwrap(), want);
    let conj = apply_image(&ImageAction::conjugation(), 1, &f).unwrap();
    assert_eq!(conj, symfun::dsl::parse_ratfunc("-I*zbar^2+abar*z").unwrap());
}

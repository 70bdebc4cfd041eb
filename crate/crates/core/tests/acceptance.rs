//! One line per acceptance criterion, each run at its stated time bound.
//!
//! Criterion 7 has a known gap: the printed Q8 factors do not multiply to the
//! Q8 group determinant. It is reported as FAIL and does not fail the target;
//! any other failure does.

mod common;

use std::time::{Duration, Instant};

use common::*;
use symfun::dsl::{parse_equation, parse_ratfunc};
use symfun::forms::{char_factors, group_determinant, group_determinant_with, verify_factorization, Factorization};
use symfun::groups;
use symfun::solver::{build_system, evaluate_solution, solve_system, verify_solution, EquationSpec, Solution};
use symfun::{Cyc, MPoly, RatFunc};

const KNOWN_GAPS: &[u32] = &[7];

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn poly(text: &str) -> MPoly {
    let f = parse_ratfunc(text).unwrap_or_else(|e| panic!("{text}: {e}"));
    assert!(f.is_polynomial(), "{text}");
    f.num().clone()
}

fn spec_of(eq: &str) -> Result<EquationSpec, String> {
    let ast = parse_equation(eq).map_err(|e| format!("{eq}: {e}"))?;
    symfun::dsl::infer_spec(&ast).map_err(|e| format!("{eq}: {e}"))
}

fn solve(eq: &str) -> Result<(EquationSpec, Solution), String> {
    let spec = spec_of(eq)?;
    let sys = build_system(&spec).map_err(|e| e.to_string())?;
    let sol = solve_system(&sys).map_err(|e| e.to_string())?;
    Ok((spec, sol))
}

fn system_det(eq: &str) -> Result<RatFunc, String> {
    let sys = build_system(&spec_of(eq)?).map_err(|e| e.to_string())?;
    symfun::polyfunc::mat_det(&sys.matrix).map_err(|e| e.to_string())
}

fn question1() -> Check {
    let (_, sol) = solve("f(t)+2*f(1/t)=(1-t^2)/(1+t^2)")?;
    let want = parse_ratfunc("(t^2-1)/(t^2+1)").unwrap();
    ensure(sol.f == want, || format!("f = {}", sol.f))?;
    let v = evaluate_solution(&sol, &at("t", int(2024))).map_err(|e| e.to_string())?;
    ensure(v == frac(4096575, 4096577), || format!("f(2024) = {v}"))
}

fn question3() -> Check {
    let (spec, sol) = solve("f(z)-f(w*z)+f(w^2*z)=z^2")?;
    let w = Cyc::zeta(3).unwrap();
    let want = RatFunc::var("z").pow(2).unwrap().scale(&(frac(-1, 2) * &w));
    ensure(sol.f == want, || format!("f = {}", sol.f))?;
    let v = evaluate_solution(&sol, &at("z", int(10))).map_err(|e| e.to_string())?;
    ensure(v == int(-50) * &w, || format!("f(10) = {v}"))?;
    ensure(verify_solution(&spec, &sol), || "back-substitution failed".into())
}

fn puzzle() -> Check {
    let (spec, sol) = solve("f(x)+2*f(-x)+4*f(1/x)+8*f(-1/x)=2025*x^2")?;
    let v = evaluate_solution(&sol, &at("x", int(3))).map_err(|e| e.to_string())?;
    ensure(v == int(-385), || format!("f(3) = {v}"))?;
    ensure(verify_solution(&spec, &sol), || "back-substitution failed".into())
}

fn semilinear() -> Check {
    let sys = build_system(&spec_of("f(z)+z*conj(f(z))=F(z)")?).map_err(|e| e.to_string())?;
    let want = [["1", "z"], ["zbar", "1"]];
    for (i, row) in want.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let got = sys.matrix.get(i, j);
            ensure(*got == parse_ratfunc(e).unwrap(), || format!("entry ({i},{j}) = {got}"))?;
        }
    }
    let det = symfun::polyfunc::mat_det(&sys.matrix).map_err(|e| e.to_string())?;
    ensure(det == parse_ratfunc("1-z*zbar").unwrap(), || format!("det = {det}"))?;
    let (spec, sol) = solve("f(z)+z*conj(f(z))=z")?;
    ensure(verify_solution(&spec, &sol), || format!("f = {} fails", sol.f))
}

fn s3_determinants() -> Check {
    let six = system_det("h(t)+2*h(1-t)+3*h(1/t)+4*h(1/(1-t))+5*h(t/(t-1))+6*h((t-1)/t)=F(t)")?;
    ensure(six == RatFunc::from_int(3024), || format!("six-term det = {six}"))?;
    let s3_3 = system_det("(1+t)*h(t)+(1-t)*h(1-t)+(1/t)*h(1/t)=F(t)")?;
    ensure(s3_3 == RatFunc::from_int(-4), || format!("variable-coefficient det = {s3_3}"))
}

fn circulant() -> Check {
    let g = groups::cyclic(3).unwrap();
    let form = group_determinant(&g).map_err(|e| e.to_string())?;
    ensure(form.poly == poly("a^3+b^3+c^3-3*a*b*c"), || format!("form = {}", form.poly))?;
    let chars = char_factors(&g).map_err(|e| e.to_string())?;
    ensure(chars.factors.len() == 3, || format!("{} character factors", chars.factors.len()))?;
    ensure(chars.product() == form.poly, || "character product differs".into())
}

const Q8_CLAIMED: &[&str] = &[
    "b1^2 - 2*b1*b2 + b2^2 + b3^2 - 2*b3*b4 + b4^2 + b5^2 - 2*b5*b6 + b6^2 + b7^2 - 2*b7*b8 + b8^2",
    "b1^2 - 2*b1*b2 + b2^2 - b3^2 + 2*b3*b4 - b4^2 - b5^2 + 2*b5*b6 - b6^2 + b7^2 - 2*b7*b8 + b8^2",
    "b1 + b2 + b3 + b4 + b5 + b6 + b7 + b8",
    "b1 + b2 + b3 + b4 - b5 - b6 - b7 - b8",
    "b1 + b2 - b3 - b4 + b5 + b6 - b7 - b8",
    "b1 + b2 - b3 - b4 - b5 - b6 + b7 + b8",
];

fn factors(list: &[&str], mult: &[u32]) -> Factorization {
    Factorization { variables: None, factors: list.iter().zip(mult).map(|(s, &m)| (poly(s), m)).collect() }
}

fn q8_and_klein() -> Check {
    let k4 = groups::klein4().unwrap();
    let form = group_determinant(&k4).map_err(|e| e.to_string())?;
    let want = poly("((a+b)^2-(c+d)^2)*((a-b)^2-(c-d)^2)");
    let klein = ensure(form.poly == want, || format!("klein4 form = {}", form.poly));

    let q8 = groups::q8().unwrap();
    let names: Vec<String> = (1..=8).map(|i| format!("b{i}")).collect();
    let claimed = factors(Q8_CLAIMED, &[1; 6]);
    let ok = verify_factorization(&q8, &names, &claimed).map_err(|e| e.to_string())?;
    let q8 = ensure(ok, || {
        let det = group_determinant_with(&q8, &names).unwrap().poly;
        let mut fixed = Q8_CLAIMED.to_vec();
        fixed[1] = Q8_CLAIMED[0];
        let repaired = factors(&fixed, &[1; 6]).product() == det;
        format!(
            "Q8: the six printed factors do not multiply to the group determinant; \
             replacing the second quadratic by the first gives a match: {repaired}"
        )
    });
    klein.and(q8)
}

fn s3_factorization() -> Check {
    let g = groups::s3().unwrap();
    let names: Vec<String> = "abcdef".chars().map(String::from).collect();
    let claimed = factors(
        &["a^2 - b^2 + b*c - c^2 + b*d + c*d - d^2 - a*e + e^2 - a*f - e*f + f^2", "a+b+c+d+e+f", "a-b-c-d+e+f"],
        &[2, 1, 1],
    );
    let ok = verify_factorization(&g, &names, &claimed).map_err(|e| e.to_string())?;
    ensure(ok, || "product differs from the S3 group determinant".into())
}

fn both_sides() -> Check {
    let det = system_det("a*f(z)+b*f(zbar)+c*conj(f(z))+d*conj(f(zbar))=F(z)")?;
    let want = parse_ratfunc("((a+b)*(abar+bbar)-(c+d)*(cbar+dbar))*((a-b)*(abar-bbar)-(c-d)*(cbar-dbar))").unwrap();
    ensure(det == want, || format!("det = {det}"))
}

fn property_suites() -> Check {
    let mut errs = Vec::new();
    for (name, g) in named_groups() {
        if let Err(e) = check_multiplicativity(&g, 200) {
            errs.push(format!("multiplicativity {name}: {e}"));
        }
        if let Err(e) = check_relabelling(&g, 200) {
            errs.push(format!("relabelling {name}: {e}"));
        }
    }
    for (name, act) in moebius_actions() {
        if let Err(e) = check_moebius_homomorphism(&act) {
            errs.push(format!("homomorphism {name}: {e}"));
        }
    }
    for (name, act) in solver_actions() {
        if let Err(e) = check_back_substitution(&act, 200) {
            errs.push(format!("back-substitution {name}: {e}"));
        }
        if let Err(e) = check_singular_iff(&act, 200) {
            errs.push(format!("singularity {name}: {e}"));
        }
    }
    ensure(errs.is_empty(), || errs.join("; "))
}

pub const PRINTED_EQUATIONS: &[&str] = &[
    "f(t)+2*f(1/t)=(1-t^2)/(1+t^2)",
    "a*f(x)+b*f(-x)=F(x)",
    "a*f(x)+b*f(2-x)=F(x)",
    "a*f(x)+b*f(-x/(x+1))=F(x)",
    "f(z)+z*conj(f(z))=F(z)",
    "f(z)-f(w*z)+f(w^2*z)=z^2",
    "(1+t)*h(t)+(1-t)*h(1-t)+(1/t)*h(1/t)=F(t)",
    "h(t)+2*h(1-t)+3*h(1/t)+4*h(1/(1-t))+5*h(t/(t-1))+6*h((t-1)/t)=F(t)",
    "f(x)+2*f(-x)+4*f(1/x)+8*f(-1/x)=2025*x^2",
];

fn parser() -> Check {
    for eq in PRINTED_EQUATIONS {
        let ast = parse_equation(eq).map_err(|e| format!("{eq}: {e}"))?;
        let printed = ast.to_string();
        let again = parse_equation(&printed).map_err(|e| format!("{printed}: {e}"))?;
        ensure(again == ast, || format!("{eq} printed as {printed} re-parses differently"))?;
    }
    let panics = fuzz_parser(10_000);
    ensure(panics.is_empty(), || format!("parser panicked on {panics:?}"))
}

/// Inputs that made the parser panic.
fn fuzz_parser(cases: u32) -> Vec<String> {
    use proptest::prelude::*;
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let pieces = prop::sample::select(vec![
        "f(", "conj(", ")", "(", "t", "x", "z", "zbar", "w", "I", "a", "F", "+", "-", "*", "/", "^", "=", "2", "0",
        "64", "-65", "999999999999999999999", " ", ".", ",", "g(", "é", "\u{0}",
    ]);
    let input = prop_oneof![
        prop::collection::vec(pieces, 0..40).prop_map(|v| v.concat()),
        prop::collection::vec(any::<u8>(), 0..60).prop_map(|b| String::from_utf8_lossy(&b).into_owned()),
    ];
    let mut runner = TestRunner::new(config(cases));
    let mut bad = Vec::new();
    for _ in 0..cases {
        let s = input.new_tree(&mut runner).unwrap().current();
        let ok = std::panic::catch_unwind(|| {
            let _ = parse_equation(&s);
            let _ = parse_ratfunc(&s);
        })
        .is_ok();
        if !ok {
            bad.push(s);
        }
    }
    bad
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: Vec<(u32, &str, u64, fn() -> Check)> = vec![
        (1, "f(t)+2f(1/t) pipeline, f(2024)", 1, question1),
        (2, "cube-root-of-unity pipeline, f(10) = -50w", 1, question3),
        (3, "final puzzle f(3) = -385", 1, puzzle),
        (4, "semilinear system [[1,z],[zbar,1]]", 1, semilinear),
        (5, "S3 system determinants 3024 and -4", 2, s3_determinants),
        (6, "circulant identity for C3", 1, circulant),
        (7, "Q8 and klein4 factorizations", 10, q8_and_klein),
        (8, "S3 factorization", 5, s3_factorization),
        (9, "both-sides C2xC2 determinant", 2, both_sides),
        (10, "property suites", 30, property_suites),
        (11, "parser round-trip and fuzz", 10, parser),
    ];
    let mut unexpected = 0;
    for (n, title, bound, check) in criteria {
        let start = Instant::now();
        let outcome = match std::panic::catch_unwind(check) {
            Ok(r) => r,
            Err(_) => Err("panicked".to_string()),
        };
        let took = start.elapsed();
        let outcome = outcome.and_then(|()| {
            ensure(took <= Duration::from_secs(bound), || format!("took {took:?}, bound {bound} s"))
        });
        match outcome {
            Ok(()) => println!("[PASS] criterion {n}: {title} ({} ms)", took.as_millis()),
            Err(e) => {
                let known = KNOWN_GAPS.contains(&n);
                println!("[FAIL] criterion {n}: {title} ({} ms){}", took.as_millis(), if known { " [known gap]" } else { "" });
                println!("       {e}");
                if !known {
                    unexpected += 1;
                }
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}

//! Command-line front end. `run` returns the exit code and the text that
//! would be printed, so tests can drive it directly.

use std::collections::HashMap;

use clap::{Args, Parser, Subcommand};

use crate::actions::{build_domain_action, s3_moebius, MoebiusMap, VariableModel};
use crate::dsl::{self, DslError, RhsAst};
use crate::exactnum::Cyc;
use crate::forms::{self, Factorization};
use crate::groups::{self, CoeffVector, Group};
use crate::polyfunc::{mat_det, RatFunc};
use crate::solver::{self, build_system, evaluate_solution, solve_system, verify_solution, EquationSpec, SolveError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MATH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "symfun", about = "Exact solver for functional equations with finite group symmetry")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an equation such as "f(t)+2*f(1/t)=(1-t^2)/(1+t^2)".
    Solve(SolveArgs),
    /// Group determinant of a named group.
    Det(DetArgs),
    /// Check a claimed factorization of a group determinant.
    FactorCheck {
        #[arg(long)]
        group: String,
        #[arg(long)]
        factors: std::path::PathBuf,
    },
    /// Compare d(u)·d(v) with d(u⋆v).
    Closure {
        #[arg(long)]
        group: String,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long, allow_hyphen_values = true)]
        v: String,
    },
    /// Close Möbius maps under composition and print the Cayley table.
    Group {
        #[arg(long, allow_hyphen_values = true)]
        gens: String,
        #[arg(long, default_value_t = 64)]
        bound: usize,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    eq: String,
    /// Evaluate at var=value; repeat for symbolic parameters.
    #[arg(long, allow_hyphen_values = true)]
    at: Vec<String>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    verify: bool,
}

#[derive(Args, Debug)]
struct DetArgs {
    #[arg(long)]
    group: String,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "symbolic", conflicts_with = "symbolic")]
    coeffs: Option<String>,
    #[arg(long)]
    symbolic: bool,
    #[arg(long)]
    expand: bool,
}

struct Failure(i32, String);

impl From<DslError> for Failure {
    fn from(e: DslError) -> Failure {
        let code = if matches!(e, DslError::BoundExceeded { .. }) { EXIT_MATH } else { EXIT_USAGE };
        Failure(code, format!("error: {e}"))
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Failure {
        let code = match e {
            SolveError::SingularSystem { .. } | SolveError::ExcludedPoint { .. } | SolveError::PoleAtPoint => EXIT_MATH,
            _ => EXIT_USAGE,
        };
        Failure(code, format!("error: {e}"))
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, format!("error: {msg}"))
}

fn math(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_MATH, format!("error: {msg}"))
}

/// Run the CLI on `args` (including the program name).
pub fn run<I, S>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return (code, e.to_string());
        }
    };
    let result = match cli.cmd {
        Command::Solve(a) => cmd_solve(&a),
        Command::Det(a) => cmd_det(&a),
        Command::FactorCheck { group, factors } => cmd_factor_check(&group, &factors),
        Command::Closure { group, u, v } => cmd_closure(&group, &u, &v),
        Command::Group { gens, bound } => cmd_group(&gens, bound),
    };
    match result {
        Ok(out) => (EXIT_OK, out),
        Err(Failure(code, msg)) => (code, msg),
    }
}

/// Coefficients re-expressed in ℚ(ζ_N) so that `zeta` means one thing.
fn in_field(f: &RatFunc, n: u32) -> RatFunc {
    f.map_coeffs(|c| lift(c, n))
}

fn lift(c: &Cyc, n: u32) -> Cyc {
    match c.as_rat() {
        Some(r) => Cyc::from_rat(r.clone()),
        None => c.embed(n).unwrap_or_else(|_| c.clone()),
    }
}

fn zeta_note(n: u32, text: &str) -> Option<String> {
    (n > 1 && text.contains("zeta")).then(|| format!("zeta=exp(2*pi*i/{n})"))
}

fn parse_constant(text: &str) -> Result<Cyc, Failure> {
    let f = dsl::parse_ratfunc(text).map_err(|e| usage(format!("{text}: {e}")))?;
    f.as_constant().ok_or_else(|| usage(format!("{text} is not a constant")))
}

fn cmd_solve(a: &SolveArgs) -> Result<String, Failure> {
    let ast = dsl::parse_equation(&a.eq)?;
    let spec = dsl::infer_spec(&ast)?;
    let sys = build_system(&spec)?;
    let sol = solve_system(&sys)?;
    let n = spec.field_order();
    let model = spec.domain().model().clone();
    let var = match &model {
        VariableModel::Single(v) => v.clone(),
        VariableModel::Pair { z, .. } => z.clone(),
    };

    let f_text = in_field(&sol.f, n).to_string();
    let det_text = in_field(&sol.determinant, n).to_string();
    let excluded: Vec<String> = sol.excluded.polys().iter().map(|p| format!("{}=0", p.map_coeffs(|c| lift(c, n)))).collect();
    let mut legend = Vec::new();
    if let RhsAst::Opaque { name, .. } = &ast.rhs {
        for (row, &(k, r)) in sys.index.iter().enumerate() {
            let base = format!("{name}({})", spec.domain().label(k));
            let shown = if spec.image().element(r).1 { format!("conj({base})") } else { base };
            legend.push(format!("{}={shown}", solver::opaque_symbol(name, row)));
        }
    }

    let mut value = None;
    if !a.at.is_empty() {
        if matches!(ast.rhs, RhsAst::Opaque { .. }) {
            return Err(usage("cannot evaluate: the right side is unspecified"));
        }
        let mut point = HashMap::new();
        for item in &a.at {
            let (k, v) = item.split_once('=').ok_or_else(|| usage(format!("--at expects var=value, got {item}")))?;
            let c = parse_constant(v.trim())?;
            let k = k.trim().to_string();
            if let VariableModel::Pair { z, zbar } = &model {
                if k == *z {
                    point.insert(zbar.clone(), c.conj());
                }
            }
            point.insert(k, c);
        }
        let at_text = point.get(&var).map(|c| lift(c, n).to_string()).unwrap_or_else(|| "?".into());
        let v = evaluate_solution(&sol, &point)?;
        value = Some((at_text, lift(&v, n).to_string()));
    }

    let verified = a.verify.then(|| verify_solution(&spec, &sol));
    let all_text = format!("{f_text} {det_text} {}", value.as_ref().map(|v| v.1.as_str()).unwrap_or(""));
    let zeta = zeta_note(n, &all_text);

    let out = if a.json {
        let mut obj = serde_json::json!({
            "solution": f_text,
            "determinant": det_text,
            "excluded": excluded,
        });
        if let Some((_, v)) = &value {
            obj["value"] = v.clone().into();
        }
        if let Some(z) = &zeta {
            obj["zeta"] = z.trim_start_matches("zeta=").into();
        }
        if let Some(ok) = verified {
            obj["verified"] = ok.into();
        }
        if !legend.is_empty() {
            obj["rhs_symbols"] = legend.clone().into();
        }
        obj.to_string()
    } else {
        let mut lines = vec![
            format!("{}({var})={f_text}", ast.func),
            format!("determinant={det_text}"),
            format!("excluded={{{}}}", excluded.join(", ")),
        ];
        lines.extend(legend);
        if let Some((at, v)) = &value {
            lines.push(format!("{}({at})={v}", ast.func));
        }
        if let Some(ok) = verified {
            lines.push(format!("verified={ok}"));
        }
        lines.extend(zeta);
        lines.join("\n")
    };
    if verified == Some(false) {
        return Err(Failure(EXIT_MATH, out));
    }
    Ok(out)
}

enum NamedGroup {
    Plain(Group),
    S3Moebius,
}

fn named_group(name: &str) -> Result<NamedGroup, Failure> {
    let bad = || usage(format!("unknown group {name}; use cN, klein4, s3, s3-moebius or q8"));
    match name {
        "klein4" => Ok(NamedGroup::Plain(groups::klein4().unwrap())),
        "s3" => Ok(NamedGroup::Plain(groups::s3().unwrap())),
        "q8" => Ok(NamedGroup::Plain(groups::q8().unwrap())),
        "s3-moebius" => Ok(NamedGroup::S3Moebius),
        _ => {
            let n: usize = name.strip_prefix('c').and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            groups::cyclic(n).map(NamedGroup::Plain).map_err(|e| usage(e))
        }
    }
}

fn variable_names(name: &str, order: usize) -> Vec<String> {
    if name == "q8" {
        (1..=8).map(|i| format!("b{i}")).collect()
    } else {
        forms::default_names(order)
    }
}

fn parse_list(text: &str) -> Result<Vec<RatFunc>, Failure> {
    text.split(',')
        .map(|s| dsl::parse_ratfunc(s.trim()).map_err(|e| usage(format!("{}: {e}", s.trim()))))
        .collect()
}

fn vector(g: &Group, text: &str) -> Result<CoeffVector, Failure> {
    CoeffVector::new(g, parse_list(text)?).map_err(usage)
}

fn field_of(values: &[&RatFunc]) -> u32 {
    use num_integer::Integer;
    let mut n = 1u32;
    for f in values {
        for p in [f.num(), f.den()] {
            for (_, c) in p.terms() {
                if !c.is_rational() {
                    n = n.lcm(&c.order());
                }
            }
        }
    }
    n
}

fn show(f: &RatFunc, n: u32) -> String {
    let s = in_field(f, n).to_string();
    match zeta_note(n, &s) {
        Some(z) => format!("{s}\n{z}"),
        None => s,
    }
}

fn cmd_det(a: &DetArgs) -> Result<String, Failure> {
    let group = named_group(&a.group)?;
    let (g, action) = match group {
        NamedGroup::Plain(g) => (g, None),
        NamedGroup::S3Moebius => {
            let (g, act, _) = s3_moebius("t").map_err(math)?;
            (g, Some(act))
        }
    };
    if let Some(text) = &a.coeffs {
        let values = parse_list(text)?;
        if values.len() != g.order() {
            return Err(usage(format!("{} needs {} coefficients, got {}", a.group, g.order(), values.len())));
        }
        let n = field_of(&values.iter().collect::<Vec<_>>());
        let det = match action {
            Some(act) => {
                let spec = EquationSpec::simple(act, values, RatFunc::zero());
                mat_det(&build_system(&spec)?.matrix).map_err(math)?
            }
            None => forms::det_value(&g, &CoeffVector::new(&g, values).map_err(usage)?).map_err(math)?,
        };
        return Ok(show(&det, n));
    }
    let names = variable_names(&a.group, g.order());
    if g.is_abelian() && !a.expand {
        let f = forms::char_factors_with(&g, &names).map_err(math)?;
        let n = g.exponent() as u32;
        let parts: Vec<String> = f.factors.iter().map(|(p, _)| format!("({})", p.map_coeffs(|c| lift(c, n)))).collect();
        let s = parts.join("*");
        return Ok(match zeta_note(n, &s) {
            Some(z) => format!("{s}\n{z}"),
            None => s,
        });
    }
    let form = forms::group_determinant_with(&g, &names).map_err(math)?;
    Ok(form.poly.to_string())
}

fn cmd_factor_check(group: &str, path: &std::path::Path) -> Result<String, Failure> {
    let g = match named_group(group)? {
        NamedGroup::Plain(g) => g,
        NamedGroup::S3Moebius => s3_moebius("t").map_err(math)?.0,
    };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let claimed = Factorization::from_json(&text).map_err(usage)?;
    let names = claimed.variables.clone().unwrap_or_else(|| variable_names(group, g.order()));
    let ok = forms::verify_factorization(&g, &names, &claimed).map_err(usage)?;
    if ok {
        Ok("true".into())
    } else {
        Err(Failure(EXIT_MATH, "false".into()))
    }
}

fn cmd_closure(group: &str, u: &str, v: &str) -> Result<String, Failure> {
    let g = match named_group(group)? {
        NamedGroup::Plain(g) => g,
        NamedGroup::S3Moebius => s3_moebius("t").map_err(math)?.0,
    };
    let (u, v) = (vector(&g, u)?, vector(&g, v)?);
    let r = forms::closure_check(&g, &u, &v).map_err(math)?;
    let n = field_of(&[&r.du, &r.dv, &r.duv]);
    let line = format!(
        "d(u)={} d(v)={} d(u*v)={} equal={}",
        in_field(&r.du, n),
        in_field(&r.dv, n),
        in_field(&r.duv, n),
        r.equal
    );
    Ok(match zeta_note(n, &line) {
        Some(z) => format!("{line}\n{z}"),
        None => line,
    })
}

fn cmd_group(gens: &str, bound: usize) -> Result<String, Failure> {
    let texts: Vec<&str> = gens.split(',').map(str::trim).collect();
    let mut var = None;
    for t in &texts {
        let f = dsl::parse_ratfunc(t).map_err(|e| usage(format!("{t}: {e}")))?;
        for v in f.vars() {
            match &var {
                None => var = Some(v),
                Some(w) if *w == v => {}
                Some(w) => return Err(usage(format!("generators mix variables {w} and {v}"))),
            }
        }
    }
    let var = var.unwrap_or_else(|| "t".to_string());
    let maps: Vec<MoebiusMap> = texts.iter().map(|t| MoebiusMap::parse(t, &var).map_err(usage)).collect::<Result<_, _>>()?;
    let (g, act, _) = build_domain_action(&maps, &var, bound).map_err(math)?;
    let names = (0..g.order()).map(|i| act.label(i)).collect();
    let named = Group::from_table(names, g.table().to_vec()).map_err(math)?;
    Ok(named.to_json())
}

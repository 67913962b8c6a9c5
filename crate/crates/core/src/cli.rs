//! Command-line front end. Every invocation produces one JSON document.
//!
//! Exit codes: 0 when all checks pass, 1 when a verification fails, 2 on
//! usage or input errors.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::algebra::{AlgebraElement, AlgebraParams, Degree};
use crate::braid::{adjoint_action, four_string_braid, two_string_braid, BraidUnitary, BraidWord};
use crate::definetti::{
    admissibility_check, charge_structure, dirac_check, factorization_test, fixed_point_algebra,
    invariance_residual, invariant_project, tail_expectation_probe, FIXED_POINT_CAP,
};
use crate::error::{PfError, Result};
use crate::expr::{eval, parse, syntactic_degree, EvalContext};
use crate::matrix_rep::{monomial_basis, represent_generator, Operator};
use crate::state::{
    self, density_from_json, density_to_functional, gns, is_neutral, state_from_json,
    DensityState, StateFunctional,
};

#[derive(Parser, Debug)]
#[command(name = "parafermion", version, about = "Parafermion algebra and braid toolkit")]
struct Cli {
    /// Tolerance override for the command's checks.
    #[arg(long, global = true, env = "PF_TOL", value_parser = parse_tol)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

fn parse_tol(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() && t >= 0.0 => Ok(t),
        _ => Err(format!("`{s}` is not a nonnegative tolerance")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the commutation, order and star relations of the generators.
    VerifyCpr {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        pairs: usize,
    },
    /// Check unitarity, braid relations and pair exchange of the braids.
    VerifyBraid {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        pairs: usize,
    },
    /// Normal-order an expression, optionally evaluating a state on it.
    Eval {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        pairs: usize,
        #[arg(long)]
        expr: String,
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Charge of an expression; semantic when --d is given.
    Charge {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        d: Option<u32>,
    },
    /// Smallest p0 with d | p0².
    P0 {
        #[arg(long)]
        d: u32,
    },
    /// Project a random density onto the braid commutant.
    InvariantSolve {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Shift-average probe against the ergodic bound.
    EtProbe {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        x: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        state: PathBuf,
        /// Overrides the support size m in the bound.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Product-structure residual of a state.
    Factorize {
        #[arg(long)]
        state: PathBuf,
    },
    /// Point-mass test for a mixture of densities.
    Dirac {
        #[arg(long)]
        mixture: PathBuf,
    },
    /// Charge admissibility of a one-block state.
    Admissible {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        state: PathBuf,
    },
    /// GNS construction of a state.
    Gns {
        #[arg(long)]
        state: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyCpr { .. } => "verify-cpr",
            Command::VerifyBraid { .. } => "verify-braid",
            Command::Eval { .. } => "eval",
            Command::Charge { .. } => "charge",
            Command::P0 { .. } => "p0",
            Command::InvariantSolve { .. } => "invariant-solve",
            Command::EtProbe { .. } => "et-probe",
            Command::Factorize { .. } => "factorize",
            Command::Dirac { .. } => "dirac",
            Command::Admissible { .. } => "admissible",
            Command::Gns { .. } => "gns",
        }
    }
}

/// Exit code plus the JSON report.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
}

#[derive(Default)]
struct Params {
    d: Option<u32>,
    m: Option<usize>,
    k: Option<u32>,
    tol: Option<f64>,
}

fn envelope(command: &str, p: &Params, results: Value, pass: bool, start: Instant) -> Value {
    json!({
        "command": command,
        "params": {"d": p.d, "m": p.m, "k": p.k, "tol": p.tol},
        "results": results,
        "pass": pass,
        "wall_time_ms": start.elapsed().as_secs_f64() * 1e3,
    })
}

fn error_json(e: &PfError) -> Value {
    let mut v = json!({"kind": error_kind(e), "message": e.to_string()});
    if let PfError::Parse(p) = e {
        v["offset"] = json!(p.offset);
    }
    v
}

fn error_kind(e: &PfError) -> &'static str {
    match e {
        PfError::Parse(_) => "parse",
        PfError::NotAState(_) | PfError::InconsistentFunctional { .. } | PfError::Inadmissible { .. } => {
            "verification"
        }
        _ => "input",
    }
}

fn exit_code_for(e: &PfError) -> i32 {
    if error_kind(e) == "verification" {
        1
    } else {
        2
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let start = Instant::now();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
                || matches!(e.kind(), ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand);
            let code = if help && e.kind() != ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                0
            } else {
                2
            };
            let text = e.render().to_string();
            let results = if code == 0 {
                json!({"help": text})
            } else {
                json!({"error": {"kind": "usage", "message": text}})
            };
            return Outcome {
                code,
                report: envelope("usage", &Params::default(), results, code == 0, start),
            };
        }
    };
    let name = cli.command.name();
    let mut params = Params::default();
    match dispatch(&cli, &mut params) {
        Ok((results, pass)) => Outcome {
            code: if pass { 0 } else { 1 },
            report: envelope(name, &params, results, pass, start),
        },
        Err(e) => Outcome {
            code: exit_code_for(&e),
            report: envelope(name, &params, json!({"error": error_json(&e)}), false, start),
        },
    }
}

fn tol_or(cli: &Cli, default: f64) -> f64 {
    cli.tol.unwrap_or(default)
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PfError::Format(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| PfError::Format(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<StateFunctional> {
    state_from_json(&read_json(path)?)
}

fn element_json(x: &AlgebraElement) -> Value {
    let terms: Vec<Value> = x
        .terms()
        .iter()
        .map(|(k, c)| json!({"monomial": k.pairs(), "coeff": [c.re, c.im]}))
        .collect();
    json!({"terms": terms, "text": x.to_string(), "is_zero": x.is_zero()})
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn dispatch(cli: &Cli, p: &mut Params) -> Result<(Value, bool)> {
    match &cli.command {
        Command::VerifyCpr { d, pairs } => {
            let tol = tol_or(cli, 1e-10);
            *p = Params { d: Some(*d), m: Some(*pairs), tol: Some(tol), k: None };
            verify_cpr(*d, *pairs, tol)
        }
        Command::VerifyBraid { d, pairs } => {
            let tol = tol_or(cli, 1e-9);
            *p = Params { d: Some(*d), m: Some(*pairs), tol: Some(tol), k: None };
            verify_braid(*d, *pairs, tol)
        }
        Command::Eval { d, pairs, expr, state } => {
            *p = Params { d: Some(*d), m: Some(*pairs), tol: cli.tol, k: None };
            let ctx = EvalContext::new(*d, *pairs)?;
            let x = eval(&parse(expr)?, &ctx)?;
            let mut results = json!({"element": element_json(&x)});
            if let Some(path) = state {
                let mut phi = load_state(path)?;
                check_d(&phi, *d)?;
                // A one-block state acts as the product state on every block.
                if phi.blocks() == 1 && *pairs > 1 {
                    phi = state::product_state(&phi, *pairs)?;
                }
                results["value"] = complex_json(phi.evaluate(&x)?);
            }
            Ok((results, true))
        }
        Command::Charge { expr, d } => {
            *p = Params { d: *d, tol: cli.tol, ..Params::default() };
            let e = parse(expr)?;
            let syntactic = syntactic_degree(&e)?;
            let mut results = json!({"syntactic": syntactic});
            match d {
                None => {
                    results["mode"] = json!("syntactic");
                    results["homogeneous"] = json!(matches!(syntactic, crate::expr::SyntacticDegree::Homogeneous(_)));
                }
                Some(d) => {
                    let ctx = EvalContext::fitting(*d, &e)?;
                    p.m = Some(ctx.blocks);
                    let x = eval(&e, &ctx)?;
                    results["mode"] = json!("semantic");
                    let comps: Vec<u32> = x.charge_components().keys().map(|c| c.value()).collect();
                    results["components"] = json!(comps);
                    match x.degree() {
                        Degree::Homogeneous(c) => {
                            results["homogeneous"] = json!(true);
                            results["degree"] = json!(c.value());
                        }
                        Degree::Mixed => {
                            results["homogeneous"] = json!(false);
                            results["degree"] = Value::Null;
                        }
                    }
                }
            }
            Ok((results, true))
        }
        Command::P0 { d } => {
            *p = Params { d: Some(*d), tol: cli.tol, ..Params::default() };
            let s = charge_structure(*d)?;
            let trial = square_free_by_trial_division(*d);
            let results = json!({
                "p0": s.p0,
                "square_free": s.square_free,
                "admissible": s.admissible,
                "square_free_by_trial_division": trial,
            });
            Ok((results, trial == s.square_free))
        }
        Command::InvariantSolve { d, pairs, seed } => {
            let tol = tol_or(cli, 1e-8);
            *p = Params { d: Some(*d), m: Some(*pairs), tol: Some(tol), k: None };
            invariant_solve(*d, *pairs, *seed, tol)
        }
        Command::EtProbe { d, k, x, a, state, m } => {
            let rho = load_state(state)?;
            check_d(&rho, *d)?;
            if rho.blocks() != 1 {
                return Err(PfError::Format("et-probe expects a one-block state".into()));
            }
            *p = Params { d: Some(*d), m: *m, k: Some(*k), tol: cli.tol };
            let params = *rho.params();
            let xe = parse(x)?;
            let ae = parse(a)?;
            let cx = EvalContext::fitting(*d, &xe)?;
            let ca = EvalContext::fitting(*d, &ae)?;
            let xv = eval(&xe, &EvalContext { params, ..cx })?;
            let av = eval(&ae, &EvalContext { params, ..ca })?;
            let phi = state::product_state(&rho, 1)?;
            let report = tail_expectation_probe(&xv, &av, &phi, *k, *m)?;
            if p.m.is_none() {
                p.m = Some(report.m);
            }
            let pass = report.pass;
            Ok((serde_json::to_value(report).expect("plain data"), pass))
        }
        Command::Factorize { state } => {
            let tol = tol_or(cli, 1e-10);
            let phi = load_state(state)?;
            *p = Params { d: Some(phi.d()), m: Some(phi.blocks()), tol: Some(tol), k: None };
            let r = factorization_test(&phi, phi.blocks())?;
            Ok((json!({"residual": r}), r <= tol))
        }
        Command::Dirac { mixture } => {
            let tol = tol_or(cli, 1e-8);
            let parts = load_mixture(mixture)?;
            let first = &parts[0].1;
            *p = Params { d: Some(first.params().d()), m: Some(first.blocks()), tol: Some(tol), k: None };
            let r = dirac_check(&parts, tol, tol)?;
            let pass = r.is_dirac;
            Ok((serde_json::to_value(r).expect("plain data"), pass))
        }
        Command::Admissible { d, state } => {
            let rho = load_state(state)?;
            check_d(&rho, *d)?;
            *p = Params { d: Some(*d), m: Some(rho.blocks()), tol: cli.tol, k: None };
            let a = admissibility_check(&rho)?;
            let pass = a.admissible;
            Ok((serde_json::to_value(a).expect("plain data"), pass))
        }
        Command::Gns { state } => {
            let tol = tol_or(cli, 1e-8);
            let phi = load_state(state)?;
            *p = Params { d: Some(phi.d()), m: Some(phi.blocks()), tol: Some(tol), k: None };
            let g = gns(&phi)?;
            let mut worst: f64 = 0.0;
            for key in monomial_basis(phi.d(), phi.blocks()) {
                let x = AlgebraElement::from_key(*phi.params(), key.clone(), Complex64::new(1.0, 0.0));
                worst = worst.max((g.expectation(&x)? - phi.value(&key)).norm());
            }
            let cpr = g.cpr_residual();
            let results = json!({
                "dim": g.dim,
                "cyclic_vector_norm": g.cyclic_vector.norm(),
                "state_reproduction_residual": worst,
                "cpr_residual": cpr,
            });
            Ok((results, worst <= tol && cpr <= tol))
        }
    }
}

fn check_d(phi: &StateFunctional, d: u32) -> Result<()> {
    if phi.d() != d {
        return Err(PfError::IncompatibleAlgebras {
            left: d,
            right: phi.d(),
        });
    }
    Ok(())
}

fn load_mixture(path: &Path) -> Result<Vec<(f64, DensityState)>> {
    let v = read_json(path)?;
    let comps = v
        .get("components")
        .and_then(Value::as_array)
        .ok_or_else(|| PfError::Format("mixture files need a `components` list".into()))?;
    if comps.is_empty() {
        return Err(PfError::InvalidWeights("empty mixture".into()));
    }
    comps
        .iter()
        .map(|c| {
            let w = c
                .get("weight")
                .and_then(Value::as_f64)
                .ok_or_else(|| PfError::Format("component without numeric `weight`".into()))?;
            let dens = c
                .get("density")
                .ok_or_else(|| PfError::Format("component without `density`".into()))?;
            Ok((w, density_from_json(dens)?))
        })
        .collect()
}

pub fn square_free_by_trial_division(d: u32) -> bool {
    let mut n = d;
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            n /= f;
            if n.is_multiple_of(f) {
                return false;
            }
        }
        f += 1;
    }
    true
}

fn verify_cpr(d: u32, pairs: usize, tol: f64) -> Result<(Value, bool)> {
    let params = AlgebraParams::new(d)?;
    let gens = (1..=2 * pairs as u32)
        .map(|s| represent_generator(&params, s, pairs))
        .collect::<Result<Vec<_>>>()?;
    let id = Operator::identity(params, pairs)?;
    let q = params.q();
    let (mut comm, mut order, mut star): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (j, cj) in gens.iter().enumerate() {
        order = order.max((&cj.unitary_pow(d as i64) - &id).norm());
        star = star.max((&cj.adjoint() - &cj.unitary_pow(d as i64 - 1)).norm());
        for ck in &gens[j + 1..] {
            comm = comm.max((&(cj * ck) - &(ck * cj).scale(q)).norm());
        }
    }
    let pass = comm <= tol && order <= tol && star <= tol;
    Ok((
        json!({
            "generators": gens.len(),
            "commutation_residual": comm,
            "order_residual": order,
            "star_residual": star,
        }),
        pass,
    ))
}

fn verify_braid(d: u32, pairs: usize, tol: f64) -> Result<(Value, bool)> {
    let params = AlgebraParams::new(d)?;
    let mut two_string: f64 = 0.0;
    for k in 1..2 * pairs as u32 {
        two_string = two_string.max(two_string_braid(&params, k, pairs)?.unitarity_residual());
    }
    let braids = (1..pairs as u32)
        .map(|j| four_string_braid(&params, j, pairs))
        .collect::<Result<Vec<_>>>()?;
    let unitarity = braids.iter().fold(0.0_f64, |a, b| a.max(b.unitarity_residual()));
    let mut yang_baxter: Option<f64> = None;
    let mut far: Option<f64> = None;
    for j in 1..pairs as u32 {
        if j + 2 <= pairs as u32 {
            let w = |l: Vec<(u32, i8)>| -> Result<Operator> {
                Ok(BraidUnitary::realize(&params, &BraidWord::new(l)?, pairs)?.op)
            };
            let r = (&w(vec![(j, 1), (j + 1, 1), (j, 1)])? - &w(vec![(j + 1, 1), (j, 1), (j + 1, 1)])?).norm();
            yang_baxter = Some(yang_baxter.unwrap_or(0.0).max(r));
        }
        for k in j + 2..pairs as u32 {
            let a = &braids[j as usize - 1].op;
            let b = &braids[k as usize - 1].op;
            far = Some(far.unwrap_or(0.0).max(a.commutator(b).norm()));
        }
    }
    let mut exchange: Option<f64> = None;
    if let Some(b) = braids.first() {
        let mut worst: f64 = 0.0;
        for a in 0..d as i64 {
            for n in 0..d as i64 {
                let x = AlgebraElement::from_word(params, &[(1, a), (2, n)], Complex64::new(1.0, 0.0));
                let y = AlgebraElement::from_word(params, &[(3, a), (4, n)], Complex64::new(1.0, 0.0));
                worst = worst.max(adjoint_action(b, &x)?.distance(&y));
            }
        }
        exchange = Some(worst);
    }
    let checks = [Some(two_string), Some(unitarity), yang_baxter, far, exchange];
    let pass = checks.iter().flatten().all(|&r| r <= tol);
    Ok((
        json!({
            "two_string_unitarity": two_string,
            "four_string_unitarity": unitarity,
            "braid_relation": yang_baxter,
            "far_commutation": far,
            "pair_exchange": exchange,
        }),
        pass,
    ))
}

fn invariant_solve(d: u32, pairs: usize, seed: u64, tol: f64) -> Result<(Value, bool)> {
    let params = AlgebraParams::new(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = DensityState::random(params, pairs, 2, &mut rng)?;
    let before = invariance_residual(&rho)?.residual;
    let out = invariant_project(&rho)?;
    let after = invariance_residual(&out)?.residual;
    let min_eig = out.eigenvalues().min();
    let trace = out.rho().trace().re;
    let phi = density_to_functional(&out);
    let neutral = is_neutral(&phi, tol);
    let mut results = json!({
        "seed": seed,
        "residual_before": before,
        "invariance_residual": after,
        "min_eigenvalue": min_eig,
        "trace": trace,
        "charged_residual": neutral.residual,
        "density": state::density_to_json(&out),
    });
    let n = out.rho().dim();
    if n * n <= FIXED_POINT_CAP {
        results["fixed_point_algebra"] = fixed_point_algebra(&params, pairs)?.to_json();
    }
    let pass = after <= tol && min_eig >= -1e-9 && (trace - 1.0).abs() <= 1e-10;
    Ok((results, pass))
}

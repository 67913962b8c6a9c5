//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use parafermion::braid::{BraidUnitary, BraidWord};
use parafermion::definetti::{
    admissibility_check, charge_structure, cross_block_commutation, dirac_check, factorization_test,
    p0, tail_expectation_probe,
};
use parafermion::expr::{eval, parse, parse_bytes, EvalContext};
use parafermion::matrix_rep::{expand, gauss_phase, monomial_basis, represent, represent_generator, Operator};
use parafermion::state::{
    density_to_functional, is_braid_invariant, is_neutral, mixture, product_state, DensityState,
};
use parafermion::{AlgebraElement, AlgebraParams, MonomialKey};

use common::{
    admissible_density, brute_p0, generators, kron_all, random_expr, spectral, trace_norm,
    trial_square_free, upow, MatrixOracle, M,
};

type Criterion = (&'static str, Box<dyn Fn() -> Verdict>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn params(d: u32) -> AlgebraParams {
    AlgebraParams::new(d).unwrap()
}

fn word(text: &str) -> BraidWord {
    text.parse().unwrap()
}

fn cpr_suite() -> Verdict {
    let start = Instant::now();
    let (mut comm, mut order, mut unit): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for d in 2..=6 {
        let p = params(d);
        for m in 1..=3 {
            let gens: Vec<Operator> = (1..=2 * m as u32).map(|s| represent_generator(&p, s, m).unwrap()).collect();
            let id = Operator::identity(p, m).unwrap();
            for (j, a) in gens.iter().enumerate() {
                order = order.max((&a.unitary_pow(d as i64) - &id).norm());
                unit = unit.max(a.unitarity_residual());
                for b in &gens[j + 1..] {
                    comm = comm.max((&(a * b) - &(b * a).scale(p.q())).norm());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        comm <= 1e-10 && order <= 1e-10 && unit <= 1e-12 && secs <= 30.0,
        format!("commutation {comm:.1e}, order {order:.1e}, unitarity {unit:.1e}, {secs:.2}s"),
    )
}

fn braid_relations() -> Verdict {
    let mut yb: f64 = 0.0;
    for d in [2, 3] {
        let p = params(d);
        let lhs = BraidUnitary::realize(&p, &word("b1 b2 b1"), 3).unwrap();
        let rhs = BraidUnitary::realize(&p, &word("b2 b1 b2"), 3).unwrap();
        yb = yb.max((&lhs.op - &rhs.op).norm());
    }
    let p = params(2);
    let lhs = BraidUnitary::realize(&p, &word("b1 b3"), 4).unwrap();
    let rhs = BraidUnitary::realize(&p, &word("b3 b1"), 4).unwrap();
    let far = (&lhs.op - &rhs.op).norm();
    verdict(yb <= 1e-9 && far <= 1e-9, format!("b1b2b1 vs b2b1b2 {yb:.1e}, b1b3 vs b3b1 {far:.1e}"))
}

fn pair_exchange() -> Verdict {
    let mut worst: f64 = 0.0;
    for d in 2..=4 {
        let p = params(d);
        let b = BraidUnitary::realize(&p, &word("b1"), 2).unwrap();
        for a in 0..d as i64 {
            for n in 0..d as i64 {
                let x = represent(&AlgebraElement::from_word(p, &[(1, a), (2, n)], one()), 2).unwrap();
                let y = represent(&AlgebraElement::from_word(p, &[(3, a), (4, n)], one()), 2).unwrap();
                worst = worst.max((&b.op.conjugate(&x) - &y).norm());
            }
        }
    }
    verdict(worst <= 1e-9, format!("max residual {worst:.1e} over all (a, b), d = 2..4"))
}

fn shift_as_braids() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for d in 2..=4 {
        let p = params(d);
        let keys: Vec<MonomialKey> = monomial_basis(d, 2).collect();
        let mut xs = Vec::new();
        for _ in 0..20 {
            let terms = (0..3).map(|_| {
                let k = keys[r.random_range(0..keys.len())].clone();
                (k, Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
            });
            xs.push(AlgebraElement::from_terms(p, terms));
        }
        for n in [2u32, 3] {
            let blocks = n as usize + 1;
            let b = BraidUnitary::realize(&p, &BraidWord::ascending(n).unwrap(), blocks).unwrap();
            for x in &xs {
                let got = b.op.conjugate(&represent(x, blocks).unwrap());
                let want = represent(&x.shift(1), blocks).unwrap();
                worst = worst.max((&got - &want).norm());
                count += 1;
            }
        }
    }
    verdict(worst <= 1e-9, format!("{count} cases, max residual {worst:.1e}"))
}

fn ergodic_bound() -> Verdict {
    let d = 3;
    let p = params(d);
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let keys: Vec<MonomialKey> = monomial_basis(d, 2).collect();
    let mut probes = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut bound_ok = true;
    let mut gap_ok = true;
    let mut gap_checks = 0;
    for _ in 0..3 {
        let rho = density_to_functional(&admissible_density(d, &mut r));
        let phi = product_state(&rho, 1).unwrap();
        for i in 0..60 {
            let xk = if i % 3 == 0 {
                // Neutral x so the convergence gap is defined.
                let a = r.random_range(0..3u32);
                let b = (3 - a) % 3;
                MonomialKey::from_block_factors(&[(a, b), (r.random_range(0..3), 0)])
            } else {
                keys[r.random_range(0..keys.len())].clone()
            };
            let x = AlgebraElement::from_key(p, xk, one());
            let a = AlgebraElement::from_key(p, keys[r.random_range(0..keys.len())].clone(), one());
            let mut gaps = Vec::new();
            for k in [4, 8, 16] {
                let rep = tail_expectation_probe(&x, &a, &phi, k, None).unwrap();
                probes += 1;
                bound_ok &= rep.observed <= rep.bound;
                if rep.bound > 0.0 {
                    worst_ratio = worst_ratio.max(rep.observed / rep.bound);
                }
                gaps.push(rep.gap);
            }
            if let (Some(g4), Some(g16)) = (gaps[0], gaps[2]) {
                gap_checks += 1;
                gap_ok &= g16 <= g4 + 1e-12;
            }
        }
    }
    verdict(
        bound_ok && gap_ok && gap_checks > 0,
        format!("{probes} probes, max observed/bound {worst_ratio:.3}, {gap_checks} gap checks"),
    )
}

/// Brute-force product-structure residual of a dense 3-block density.
fn dense_factorization(d: u32, density: &M) -> f64 {
    let gens = generators(d, 3);
    let n = density.nrows();
    let phi = |m: &M| (density * m).trace();
    let local = |block: usize, a: u32, b: u32| {
        upow(&gens[2 * block], a as i64) * upow(&gens[2 * block + 1], b as i64)
    };
    let pairs: Vec<(u32, u32)> = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).collect();
    let mut worst: f64 = 0.0;
    for &(a1, b1) in &pairs {
        for &(a2, b2) in &pairs {
            for &(a3, b3) in &pairs {
                let (m1, m2, m3) = (local(0, a1, b1), local(1, a2, b2), local(2, a3, b3));
                let joint = phi(&(&m1 * &m2 * &m3));
                let split = phi(&m1) * phi(&m2) * phi(&m3);
                worst = worst.max((joint - split).norm());
            }
        }
    }
    debug_assert_eq!(n, (d as usize).pow(3));
    worst
}

fn factorization() -> Verdict {
    let d = 3;
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let rho = admissible_density(d, &mut r);
    let tau = loop {
        let t = admissible_density(d, &mut r);
        if trace_norm(&(t.matrix() - rho.matrix())) >= 0.1 {
            break t;
        }
    };
    let dist = trace_norm(&(tau.matrix() - rho.matrix()));
    let pr = product_state(&density_to_functional(&rho), 3).unwrap();
    let pt = product_state(&density_to_functional(&tau), 3).unwrap();
    let product_residual = factorization_test(&pr, 3).unwrap();
    let mix = mixture(&[(0.5, pr), (0.5, pt)]).unwrap();
    let mix_residual = factorization_test(&mix, 3).unwrap();

    let cube = |m: &M| kron_all(&[m.clone(), m.clone(), m.clone()]);
    let dense = (cube(rho.matrix()) + cube(tau.matrix())) * Complex64::new(0.5, 0.0);
    let oracle = dense_factorization(d, &dense);
    let agree = (oracle - mix_residual).abs();
    verdict(
        product_residual <= 1e-10 && mix_residual >= 1e-4 && agree <= 1e-12,
        format!(
            "product {product_residual:.1e}, mixture {mix_residual:.3e} (oracle {oracle:.3e}), ‖ρ−τ‖₁ = {dist:.3}"
        ),
    )
}

fn one_block_density(d: u32, extra: &AlgebraElement) -> DensityState {
    let p = params(d);
    let x = &AlgebraElement::identity(p).scale(Complex64::new(1.0 / d as f64, 0.0)) + extra;
    DensityState::new(represent(&x, 1).unwrap()).unwrap()
}

fn unit_component(x: &AlgebraElement, charge: u32) -> AlgebraElement {
    let part = x
        .charge_components()
        .into_iter()
        .find(|(c, _)| c.value() == charge)
        .map(|(_, v)| v)
        .expect("component present");
    let norm = represent(&part, 1).unwrap().norm();
    part.scale(Complex64::new(1.0 / norm, 0.0))
}

fn neutrality_admissibility() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let mut braid_worst: f64 = 0.0;
    for d in 2..=4 {
        for _ in 0..3 {
            let rho = density_to_functional(&admissible_density(d, &mut r));
            for m in 2..=3 {
                let c = is_braid_invariant(&product_state(&rho, m).unwrap(), 1e-9).unwrap();
                braid_worst = braid_worst.max(c.residual);
            }
        }
    }
    let mut neutral_worst: f64 = 0.0;
    for d in 2..=4 {
        let w: Vec<f64> = (0..d).map(|_| r.random_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        let rho = DensityState::diagonal(params(d), 1, &w.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap();
        let phi = product_state(&density_to_functional(&rho), 3).unwrap();
        neutral_worst = neutral_worst.max(is_neutral(&phi, 1e-10).residual);
    }

    let p = params(4);
    let c1 = AlgebraElement::generator(p, 1);
    let sq = AlgebraElement::from_word(p, &[(1, 2)], one());
    let charge_two = one_block_density(4, &sq.scale(Complex64::new(0.1, 0.0)));
    let charge_one = one_block_density(4, &(&c1 + &c1.adjoint()).scale(Complex64::new(0.1, 0.0)));
    let adm_two = admissibility_check(&density_to_functional(&charge_two)).unwrap().admissible;
    let adm_one = admissibility_check(&density_to_functional(&charge_one)).unwrap().admissible;

    let x2 = unit_component(&expand(charge_two.rho(), 1e-14).unwrap(), 2);
    let x1 = unit_component(&expand(charge_one.rho(), 1e-14).unwrap(), 1);
    let mut two_worst: f64 = 0.0;
    let mut one_least = f64::INFINITY;
    for (j, k) in [(0, 1), (0, 2), (1, 2), (2, 0)] {
        two_worst = two_worst.max(cross_block_commutation(&x2, &x2, j, k).unwrap().residual);
        one_least = one_least.min(cross_block_commutation(&x1, &x1, j, k).unwrap().residual);
    }
    let pass = braid_worst <= 1e-9
        && neutral_worst <= 1e-10
        && adm_two
        && !adm_one
        && two_worst <= 1e-10
        && one_least >= 0.1;
    verdict(
        pass,
        format!(
            "braid {braid_worst:.1e}, neutral {neutral_worst:.1e}, d=4 charge-2 {two_worst:.1e}, charge-1 ≥ {one_least:.3}"
        ),
    )
}

fn inverse_de_finetti() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let mut dirac_worst: f64 = 0.0;
    let mut dirac_ok = true;
    let mut mix_least = f64::INFINITY;
    let mut mix_ok = true;
    let mut cov_least = f64::INFINITY;
    for d in 2..=3 {
        let p = params(d);
        for blocks in 1..=2 {
            for _ in 0..5 {
                let a = DensityState::random(p, blocks, r.random_range(1..=4), &mut r).unwrap();
                let b = DensityState::random(p, blocks, r.random_range(1..=4), &mut r).unwrap();
                for parts in [vec![(1.0, a.clone())], vec![(0.3, a.clone()), (0.7, a.clone())]] {
                    let rep = dirac_check(&parts, 1e-12, 1e-10).unwrap();
                    dirac_ok &= rep.is_dirac;
                    dirac_worst = dirac_worst.max(rep.residual);
                    cov_least = cov_least.min(rep.covariance);
                }
                let w = r.random_range(0.1..0.9);
                let rep = dirac_check(&[(w, a), (1.0 - w, b)], 1e-12, 1e-10).unwrap();
                mix_ok &= !rep.is_dirac;
                mix_least = mix_least.min(rep.residual);
                cov_least = cov_least.min(rep.covariance);
            }
        }
    }
    verdict(
        dirac_ok && dirac_worst <= 1e-12 && mix_ok && mix_least >= 1e-6 && cov_least >= -1e-10,
        format!("dirac residual ≤ {dirac_worst:.1e}, mixtures ≥ {mix_least:.2e}, covariance ≥ {cov_least:.1e}"),
    )
}

fn charge_structure_check() -> Verdict {
    let mut bad = Vec::new();
    for d in 2..=30 {
        let s = charge_structure(d).unwrap();
        if p0(d) != brute_p0(d) || s.p0 != brute_p0(d) || s.square_free != trial_square_free(d) {
            bad.push(d);
        }
    }
    verdict(bad.is_empty(), format!("d = 2..30, mismatches {bad:?}"))
}

fn gauss_phase_check() -> Verdict {
    let (mut om, mut sq, mut cyc): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for d in 2..=12 {
        let p = params(d);
        om = om.max((gauss_phase(&p).omega.norm() - 1.0).abs());
        sq = sq.max((p.zeta() * p.zeta() - p.q()).norm());
        cyc = cyc.max((p.zeta().powi((d * d) as i32) - one()).norm());
    }
    verdict(
        om <= 1e-12 && sq <= 1e-12 && cyc <= 1e-12,
        format!("||ω|−1| {om:.1e}, |ζ²−q| {sq:.1e}, |ζ^(d²)−1| {cyc:.1e}"),
    )
}

fn envelope_ok(v: &Value) -> bool {
    let Some(obj) = v.as_object() else { return false };
    ["command", "params", "results", "pass", "wall_time_ms"].iter().all(|k| obj.contains_key(*k))
        && v["pass"].is_boolean()
        && v["wall_time_ms"].is_number()
        && ["d", "m", "k", "tol"].iter().all(|k| v["params"].get(*k).is_some())
}

fn parser_and_cli(suite_start: Instant) -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let mut panics = 0;
    for _ in 0..100_000 {
        let len = r.random_range(0..40);
        let bytes: Vec<u8> = (0..len).map(|_| r.random()).collect();
        if std::panic::catch_unwind(|| parse_bytes(&bytes).is_ok()).is_err() {
            panics += 1;
        }
    }

    let oracle = MatrixOracle::new(3, 2);
    let ctx = EvalContext::new(3, 2).unwrap();
    let mut eval_worst: f64 = 0.0;
    for _ in 0..100 {
        let e = random_expr(&mut r, 3, 2);
        let ours = eval(&parse(&e.to_string()).unwrap(), &ctx).unwrap();
        let got = represent(&ours, 2).unwrap();
        eval_worst = eval_worst.max(spectral(&(got.matrix() - &oracle.eval(&e, 0))));
    }

    let dir = std::env::temp_dir().join(format!("parafermion-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let diag = json!({"d": 3, "m": 1, "matrix": [
        [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.3, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 0.0], [0.2, 0.0]],
    ]});
    let state = dir.join("state.json");
    std::fs::write(&state, diag.to_string()).unwrap();
    let mix = dir.join("mixture.json");
    std::fs::write(&mix, json!({"components": [{"weight": 1.0, "density": diag}]}).to_string()).unwrap();
    let s = state.to_string_lossy().into_owned();
    let mx = mix.to_string_lossy().into_owned();
    let commands: Vec<Vec<&str>> = vec![
        vec!["verify-cpr", "--d", "3", "--pairs", "2"],
        vec!["verify-braid", "--d", "3", "--pairs", "3"],
        vec!["eval", "--d", "3", "--pairs", "2", "--expr", "c1 c2 - q c2 c1", "--state", &s],
        vec!["charge", "--expr", "c1 c2"],
        vec!["p0", "--d", "12"],
        vec!["invariant-solve", "--d", "2", "--pairs", "2", "--seed", "1"],
        vec!["et-probe", "--d", "3", "--k", "4", "--x", "c1 c2^2", "--a", "c3", "--state", &s],
        vec!["factorize", "--state", &s],
        vec!["dirac", "--mixture", &mx],
        vec!["admissible", "--d", "3", "--state", &s],
        vec!["gns", "--state", &s],
        vec!["p0", "--d", "nope"],
    ];
    let mut cli_ok = true;
    for args in &commands {
        let out = parafermion::cli::run(std::iter::once("parafermion").chain(args.iter().copied()));
        let text = serde_json::to_string(&out.report).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        cli_ok &= envelope_ok(&back);
    }
    let p12 = parafermion::cli::run(["parafermion", "p0", "--d", "12"]);
    cli_ok &= p12.report["results"]["p0"] == 6 && p12.report["results"]["square_free"] == false;

    let secs = suite_start.elapsed().as_secs_f64();
    verdict(
        panics == 0 && eval_worst <= 1e-9 && cli_ok && secs <= 300.0,
        format!(
            "fuzz panics {panics}/100000, eval vs oracle {eval_worst:.1e}, {} CLI envelopes ok: {cli_ok}, {secs:.1}s elapsed",
            commands.len()
        ),
    )
}

fn main() {
    let start = Instant::now();
    // Panics from the fuzz loop are counted, not printed.
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: Vec<Criterion> = vec![
        ("CPR suite", Box::new(cpr_suite)),
        ("braid relations", Box::new(braid_relations)),
        ("pair exchange", Box::new(pair_exchange)),
        ("shift as braids", Box::new(shift_as_braids)),
        ("ergodic bound", Box::new(ergodic_bound)),
        ("factorization", Box::new(factorization)),
        ("neutrality and admissibility", Box::new(neutrality_admissibility)),
        ("inverse de Finetti", Box::new(inverse_de_finetti)),
        ("charge structure", Box::new(charge_structure_check)),
        ("Gauss phase", Box::new(gauss_phase_check)),
        ("parser and CLI", Box::new(move || parser_and_cli(start))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
            Ok(v) => v,
            Err(_) => verdict(false, "panicked".into()),
        };
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {:<30} {} [{:.2}s]",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            name,
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

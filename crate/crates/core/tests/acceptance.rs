//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use cauchy_qam::classify::fit_representation;
use cauchy_qam::residual::{reduced_residual, residual_terms};
use cauchy_qam::{
    build_pair, classify_original, counterexample_pair, decompose_support, locate_mean_points, reduce,
    verify_grid, ClassifyOptions, FamilySpec, Func1D, Generator, Interval, MeanPoints, MeanWeights,
    QuasiArithmeticMean, SamplePlan, Verdict,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact_families_verify() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut runs = 0;
    for case in 0..3 {
        for _ in 0..20 {
            let spec = typed_spec(case, rng.gen_range(0.2..4.0), coeffs(&mut rng), coeffs(&mut rng));
            for (gen, window) in generators() {
                let pair = build_pair(&spec, &gen).map_err(|e| e.to_string())?;
                let q = QuasiArithmeticMean::new(gen.clone(), MeanWeights::symmetric());
                let plan = SamplePlan::uniform(window, 101).with_random_pairs(10_000, rng.gen());
                let r = verify_grid(&pair.phi, &pair.psi, &q, &plan, 1e-9).map_err(|e| e.to_string())?;
                check(r.pass, || format!("{spec:?} over {} failed: {r:?}", gen.name()))?;
                worst = worst.max(r.max_scaled);
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} sweeps, worst scaled residual {worst:.2e}"))
}

fn dependent_asymmetric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gens = generators();
    let mut worst = 0.0_f64;
    for i in 0..20 {
        let mut c = coeffs(&mut rng);
        if c[0].abs() < 0.1 && c[1].abs() < 0.1 {
            c[0] = 1.0;
        }
        let spec = FamilySpec::dependent(c, FREE_MEMBERS[i % FREE_MEMBERS.len()]);
        let (gen, window) = &gens[i % gens.len()];
        let pair = build_pair(&spec, gen).map_err(|e| e.to_string())?;
        for alpha in [0.2, 1.0 / 3.0, 0.75] {
            let q = QuasiArithmeticMean::new(gen.clone(), MeanWeights::new(alpha).unwrap());
            let plan = SamplePlan::uniform(*window, 101);
            let r = verify_grid(&pair.phi, &pair.psi, &q, &plan, 1e-9).map_err(|e| e.to_string())?;
            check(r.pass, || format!("{spec:?} alpha {alpha} failed: {r:?}"))?;
            worst = worst.max(r.max_scaled);
        }
    }
    // (x², x) at α = 1/3: h = 2/3, residual 1·1 − 1·(4/3)
    let line = Interval::real_line();
    let q = QuasiArithmeticMean::new(Generator::identity(line), MeanWeights::new(1.0 / 3.0).unwrap());
    let phi = Func1D::parse("x^2", line).unwrap();
    let psi = Func1D::parse("x", line).unwrap();
    let r = residual_terms(&phi, &psi, &q, 0.0, 1.0).unwrap().residual();
    check((r + 1.0 / 3.0).abs() <= 1e-12, || format!("residual at (0,1) is {r}"))?;
    Ok(format!("60 sweeps, worst {worst:.2e}; fixed pair residual {r:.15}"))
}

fn counterexample_fixture() -> Outcome {
    let pair = counterexample_pair(0.0, 0.0);
    let window = common::iv(0.0, 1.0);
    let q = QuasiArithmeticMean::new(Generator::identity(window), MeanWeights::symmetric());
    let r = verify_grid(&pair.f, &pair.g, &q, &SamplePlan::uniform(window, 101), 1e-12).map_err(|e| e.to_string())?;
    check(r.pass, || format!("verify failed: {r:?}"))?;
    let n = 1000;
    let tol = 2.0 / n as f64;
    let u_g = decompose_support(|x| pair.g.deriv1(x), &window, n, 1e-8).map_err(|e| e.to_string())?;
    let u_f = decompose_support(|x| pair.f.deriv1(x), &window, n, 1e-8).map_err(|e| e.to_string())?;
    check(u_g.intervals.len() == 1 && u_f.intervals.len() == 1, || format!("U_g {u_g:?}, U_f {u_f:?}"))?;
    let (g, f) = (u_g.intervals[0], u_f.intervals[0]);
    let err = [g.lo(), g.hi() - 0.4, f.lo() - 0.8, f.hi() - 1.0]
        .into_iter()
        .fold(0.0_f64, |m, e| m.max(e.abs()));
    check(err <= tol, || format!("U_g = {g}, U_f = {f}, endpoint error {err}"))?;
    check(!u_f.overlaps(&u_g), || "supports overlap".into())?;
    Ok(format!("max residual {:.1e}; U_g = {g}, U_f = {f}", r.max_scaled))
}

fn classifier_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gens = generators();
    let opts = ClassifyOptions::default();
    let (mut worst_mu, mut worst_coef) = (0.0_f64, 0.0_f64);
    for case in 0..3 {
        for i in 0..20 {
            let (p, q) = independent_coeffs(&mut rng);
            let spec = typed_spec(case, rng.gen_range(0.3..3.0), p, q);
            let (gen, window) = &gens[(i + case) % gens.len()];
            let pair = build_pair(&spec, gen).map_err(|e| e.to_string())?;
            let want = &pair.spec;
            let r = classify_original(&pair.phi, &pair.psi, gen, window, &opts).map_err(|e| e.to_string())?;
            check(r.case == Verdict::from(want.case), || {
                format!("{want:?} over {}: got {:?} ({:?})", gen.name(), r.case, r.notes)
            })?;
            if let Some(mu) = want.mu {
                let got = r.mu.unwrap_or(f64::NAN);
                let e = ((got - mu) / mu).abs();
                check(e <= 1e-3, || format!("{want:?}: mu {got}"))?;
                worst_mu = worst_mu.max(e);
            }
            let (cf, cg) = (r.coeffs_f.unwrap(), r.coeffs_g.unwrap());
            let e = rel_gap(&cf, &want.coeffs_phi).max(rel_gap(&cg, &want.coeffs_psi));
            check(e <= 1e-6, || format!("{want:?} over {}: coefficients {cf:?} {cg:?}", gen.name()))?;
            worst_coef = worst_coef.max(e);
        }
    }
    Ok(format!("60 specs; worst mu error {worst_mu:.1e}, worst coefficient error {worst_coef:.1e}"))
}

fn mean_value_locator() -> Outcome {
    let line = Interval::real_line();
    let f = |s: &str| Func1D::parse(s, line).unwrap();
    let single = |phi: &Func1D, psi: &Func1D, a: f64, b: f64| -> Result<f64, String> {
        match locate_mean_points(phi, psi, a, b, 2048).map_err(|e| e.to_string())? {
            MeanPoints::Roots(r) if r.len() == 1 => Ok(r[0]),
            other => Err(format!("expected one root, got {other:?}")),
        }
    };
    let c = single(&f("x^3"), &f("x"), 0.0, 1.0)?;
    check((c - 1.0 / 3f64.sqrt()).abs() <= 1e-10, || format!("x^3: {c}"))?;
    let c = single(&f("cosh(x)"), &f("sinh(x)"), 0.0, 2.0)?;
    check((c - 1.0).abs() <= 1e-10, || format!("cosh: {c}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gen = Generator::identity(line);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let (p, q) = independent_coeffs(&mut rng);
        let pair = build_pair(&FamilySpec::quadratic(p, q), &gen).map_err(|e| e.to_string())?;
        let a = rng.gen_range(-5.0..4.0);
        let b = a + rng.gen_range(0.1..5.0);
        let c = single(&pair.phi, &pair.psi, a, b)?;
        let e = (c - 0.5 * (a + b)).abs();
        check(e <= 1e-9, || format!("({a}, {b}): {c}"))?;
        worst = worst.max(e);
    }
    Ok(format!("fixed points exact to 1e-10; 50 quadratic pairs, worst midpoint error {worst:.1e}"))
}

fn reduction_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut gens = generators();
    gens.push((Generator::resolve("exp", None).unwrap(), common::iv(-1.0, 1.5)));
    gens.push((Generator::resolve("x + x^3", None).unwrap(), common::iv(-1.5, 1.2)));
    let mut worst = 0.0_f64;
    for (gen, window) in &gens {
        let e = *gen.domain();
        let phi = Func1D::parse("sin(x) + x^2", e).unwrap();
        let psi = Func1D::parse("exp(x/3) - x", e).unwrap();
        let red = reduce(&phi, &psi, gen);
        let inner = window.shrink(1e-3);
        for _ in 0..1000 {
            let x = rng.gen_range(inner.lo()..inner.hi());
            let y = rng.gen_range(inner.lo()..inner.hi());
            let alpha = rng.gen_range(0.05..0.95);
            let q = QuasiArithmeticMean::new(gen.clone(), MeanWeights::new(alpha).unwrap());
            let orig = residual_terms(&phi, &psi, &q, x, y).map_err(|e| e.to_string())?;
            let (a, b) = (gen.eval(x).unwrap(), gen.eval(y).unwrap());
            let rt = reduced_residual(&red, alpha, a, b).map_err(|e| e.to_string())?;
            let scaled = rt.residual() * gen.deriv1(orig.mean).unwrap();
            let gap = (orig.residual() - scaled).abs() / (1.0 + orig.left.abs() + orig.right.abs());
            check(gap <= 1e-8, || format!("{} at ({x}, {y}), alpha {alpha}: gap {gap}", gen.name()))?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("{} generators × 1000 pairs, worst relative gap {worst:.1e}", gens.len()))
}

fn representation_fit() -> Outcome {
    let window = common::iv(0.0, 2.0);
    let phi = Func1D::parse("exp(-x)", window).unwrap();
    let psi = Func1D::parse("exp(x)", window).unwrap();
    let r = fit_representation(&phi, &psi, &window, 2001).map_err(|e| e.to_string())?;
    // reference x₀ = 0: S = (1 − e^{−2x})/2 and v = −e^{−2x} = −1 + 2S
    let (a_ref, k_ref) = (-1.0, 2.0);
    let s_ref = |x: f64| 0.5 * (1.0 - (-2.0 * x).exp());
    let a_mid = a_ref + k_ref * s_ref(r.x0);
    check(r.r_squared >= 1.0 - 1e-6, || format!("r² = {}", r.r_squared))?;
    check((r.k - k_ref).abs() <= 1e-4 && (r.a - a_mid).abs() <= 1e-4, || {
        format!("A = {}, K = {} against {a_mid}, {k_ref}", r.a, r.k)
    })?;
    Ok(format!("x0 = {:.6}, A = {:.8} (want {a_mid:.8}), K = {:.8}, r² = {}", r.x0, r.a, r.k, r.r_squared))
}

fn four_term_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let line = Interval::real_line();
    let gen = Generator::identity(line);
    let window = common::iv(-2.0, 2.0);
    let (alpha, beta) = (0.5, 0.5);
    let mut worst = 0.0_f64;
    for case in 0..3 {
        for _ in 0..5 {
            let (p, q) = independent_coeffs(&mut rng);
            let spec = typed_spec(case, rng.gen_range(0.3..2.0), p, q);
            let pair = build_pair(&spec, &gen).map_err(|e| e.to_string())?;
            let (ff, gg) = (&pair.phi, &pair.psi);
            let support = decompose_support(|x| gg.deriv1(x), &window, 1000, 1e-8).map_err(|e| e.to_string())?;
            let iv = support
                .intervals
                .iter()
                .copied()
                .max_by(|a, b| a.width().total_cmp(&b.width()))
                .ok_or("g vanishes on the window")?
                .shrink(0.1);
            let v = |x: f64| ff.deriv1(x).unwrap() / gg.deriv1(x).unwrap();
            for _ in 0..1000 {
                let a = rng.gen_range(iv.lo()..iv.hi());
                let b = rng.gen_range(iv.lo()..iv.hi());
                let m = alpha * a + beta * b;
                let t1 = beta * gg.deriv1(a).unwrap() * (v(m) - v(a));
                let t2 = alpha * gg.deriv1(b).unwrap() * (v(b) - v(m));
                let s = (t1 - t2).abs() / (1.0 + t1.abs() + t2.abs());
                check(s <= 1e-8, || format!("{spec:?} at ({a}, {b}): {s}"))?;
                worst = worst.max(s);
            }
        }
    }
    Ok(format!("15 families × 1000 pairs, worst scaled value {worst:.1e}"))
}

fn cli_contract() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_cauchy-qam");
    let verify = |extra: &[&str]| -> Result<i32, String> {
        let mut args = vec!["verify", "--phi", "x^2", "--psi", "x", "--generator", "identity", "--domain", "0,1"];
        args.extend_from_slice(extra);
        let out = Command::new(bin).args(&args).output().map_err(|e| e.to_string())?;
        out.status.code().ok_or_else(|| "killed by signal".to_string())
    };
    let codes = [
        verify(&[])?,
        verify(&["--alpha", "0.3"])?,
        verify(&["--generator", "x^2", "--domain", "-1,1"])?,
    ];
    check(codes == [0, 1, 2], || format!("exit codes {codes:?}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run_grid = |name: &str| -> Result<Vec<u8>, String> {
        let path = dir.path().join(name);
        let status = Command::new(bin)
            .args(["grid", "--phi", "x^2", "--psi", "x", "--domain", "0,1", "--random-pairs", "500", "--seed", "7"])
            .arg("--out")
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        check(status.success(), || format!("grid exited with {status}"))?;
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    let (first, second) = (run_grid("a.csv")?, run_grid("b.csv")?);
    check(first == second, || "grid output differs between runs".into())?;
    let rows = first.iter().filter(|&&b| b == b'\n').count() - 1;
    Ok(format!("exit codes {codes:?}; {rows} identical csv rows"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact families pass the grid check", exact_families_verify),
        ("dependent families pass at asymmetric weights", dependent_asymmetric),
        ("bounded-interval counterexample", counterexample_fixture),
        ("classifier round trip", classifier_round_trip),
        ("mean value point locator", mean_value_locator),
        ("reduction equivalence", reduction_equivalence),
        ("representation fit", representation_fit),
        ("four-term identity on typed families", four_term_identity),
        ("command line contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

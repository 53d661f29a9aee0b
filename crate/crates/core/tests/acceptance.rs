//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines reach the terminal; exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use serde_json::Value;

use nashkit::bounds::{
    find_power_exponent, power_inequality_value, small_positive_function, sup_norm_bounds,
    validation_density, verify_power_derivative_bound,
};
use nashkit::calculus::{
    sweep_faa_di_bruno, sweep_leibniz_power, sweep_multinomial, IdentityReport,
};
use nashkit::counterexamples::{
    analytic_obstruction_check, cones_of_t, one_sided_tangent, path_image_in_set, set_t, t_grid,
    validate_cones, PathGerm, Side, Verdict,
};
use nashkit::homotopy::{
    check_straight_line, clamp_deviation, glue_homotopy, power_derivatives_at_half,
};
use nashkit::scenario::{RunOptions, Scenario};
use nashkit::semialg::{AxisBox, SampleGrid};
use nashkit::symexpr::{int, random_points, rat, Rational, SymFn, SymMap};
use nashkit::topology::{mostowski_check, stereographic, stereographic_inverse, Control};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn sweep_summary(reports: &[IdentityReport]) -> Outcome {
    match reports.iter().find(|r| !r.passed()) {
        None => Ok(format!("{} exact cases", reports.len())),
        Some(r) => Err(r.to_json_line()),
    }
}

fn multinomial() -> Outcome {
    sweep_summary(&sweep_multinomial(3, 6, 5))
}

fn leibniz() -> Outcome {
    sweep_summary(&sweep_leibniz_power(42, 25, 5, 4, 20))
}

fn faa_di_bruno() -> Outcome {
    sweep_summary(&sweep_faa_di_bruno(42, 10, 3, 20))
}

fn power_exponents() -> Outcome {
    let m = find_power_exponent(&int(2), &rat(1, 2), 1).map_err(|e| e.to_string())?;
    ensure(m == 6, format!("(2, 1/2, 1) gave {m}"))?;
    ensure(
        power_inequality_value(&int(2), &rat(1, 2), 1, 5) == rat(5, 4)
            && power_inequality_value(&int(2), &rat(1, 2), 1, 6) == rat(3, 4),
        "values at 5 and 6",
    )?;
    let m = find_power_exponent(&rat(3, 2), &rat(1, 2), 1).map_err(|e| e.to_string())?;
    ensure(m == 5, format!("(3/2, 1/2, 1) gave {m}"))?;
    let grid = SampleGrid::lattice(&AxisBox::cube(1, int(-1), int(1)), 1000, true);
    let mut worst = f64::INFINITY;
    for f in ["x/2", "(1 - x^2)/2"] {
        let f = SymFn::parse(f, 1).unwrap();
        for mu in 0..=2 {
            let c = sup_norm_bounds(&f, &grid, mu).map_err(|e| e.to_string())?;
            let n = find_power_exponent(&c.c, &c.l, mu.max(1)).map_err(|e| e.to_string())?;
            let r = verify_power_derivative_bound(&f, n, mu, &grid).map_err(|e| e.to_string())?;
            let margin = r.min_margin.unwrap_or(f64::INFINITY);
            ensure(
                r.pass && margin >= 1e-12,
                format!("{f} mu={mu} N={n} margin {margin:e}"),
            )?;
            worst = worst.min(margin);
        }
    }
    Ok(format!(
        "M = 6 and 5; bound margins >= {worst:.3e} on 1000 points"
    ))
}

fn small_function() -> Outcome {
    let start = Instant::now();
    let domain = AxisBox::cube(1, int(-1), int(1));
    let grid = SampleGrid::lattice(&domain, 1000, true);
    let f = SymFn::parse("1 - x^2", 1).unwrap();
    let sf = small_positive_function(&f, &domain, &Control::constant(rat(1, 4)), 1, &grid)
        .map_err(|e| e.to_string())?;
    let dense = SampleGrid::lattice(&domain, validation_density(&grid, 1), true);
    ensure(
        dense.len() >= 4 * grid.len(),
        "validation grid is not 4x denser",
    )?;
    let dh = sf.h.partial(0);
    let quarter = rat(1, 4);
    for p in grid.points.iter().chain(&dense.points) {
        let h = sf.h.eval(p).unwrap();
        let d = dh.eval(p).unwrap();
        ensure(
            h.is_positive() && h < quarter && d.abs() < quarter,
            format!("fails at {p:?}"),
        )?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), format!("took {took:?}"))?;
    Ok(format!(
        "h = g^{}, {} + {} points, {took:.1?}",
        sf.n,
        grid.len(),
        dense.len()
    ))
}

fn check<'a>(r: &'a Value, name: &str) -> Result<&'a Value, String> {
    let c = r["checks"]
        .as_array()
        .and_then(|cs| cs.iter().find(|c| c["check"] == name))
        .ok_or_else(|| {
            format!(
                "{}: no check `{name}`: {}",
                r["name"],
                r.get("error").unwrap_or(&Value::Null)
            )
        })?;
    ensure(c["pass"] == true, format!("{}: `{name}` failed", r["name"]))?;
    Ok(c)
}

fn push_instances(reports: &BTreeMap<String, Value>) -> Outcome {
    let mut exps = Vec::new();
    for name in ["interval_push", "quadrant_push", "halfdisc_push"] {
        let r = &reports[name];
        let field = check(r, "inward_field")?;
        ensure(
            field["detail"]["min_margin"].as_f64().unwrap_or(0.0) > 0.0,
            "field margin",
        )?;
        let eps = check(r, "push_epsilon")?;
        let e = eps["detail"]["exponent"].as_u64().unwrap_or(99);
        ensure(e <= 20, format!("{name}: eps = 2^-{e}"))?;
        check(r, "push_epsilon.validation")?;
        check(r, "sigma_identity_at_zero")?;
        let sigma = check(r, "sigma_interior")?;
        ensure(
            sigma["detail"]["grid_size"].as_u64().unwrap_or(0) >= 200,
            "fewer than 200 samples",
        )?;
        ensure(sigma["detail"]["params"]["t_count"] == 32, "t_count")?;
        exps.push(e);
    }
    let t = &reports["teardrop_push"];
    ensure(
        t["status"] == "fail" && t["error"]["kind"] == "degenerate",
        "teardrop did not fail as degenerate",
    )?;
    let p = &t["error"]["witness"]["point"];
    let near_origin = p
        .as_array()
        .is_some_and(|v| v.iter().all(|x| x.as_f64().unwrap_or(1.0).abs() < 1e-3));
    ensure(near_origin, format!("teardrop witness {p}"))?;
    Ok(format!(
        "eps exponents {exps:?}; teardrop degenerate at {p}"
    ))
}

fn diffeomorphisms(reports: &BTreeMap<String, Value>) -> Outcome {
    let mut dets = Vec::new();
    for name in ["interval_push", "quadrant_push", "halfdisc_push"] {
        let r = &reports[name];
        check(r, "delta")?;
        let close = check(r, "psi_close_to_identity")?;
        ensure(
            close["detail"]["control"] == "1/10" && close["detail"]["mu"] == 1,
            "closeness control",
        )?;
        let emb = check(r, "psi_embedding")?;
        ensure(
            emb["detail"]["pairs_per_time"] == 10_000 && emb["detail"]["times"] == 32,
            "embedding sizes",
        )?;
        dets.push(emb["detail"]["min_abs_det"].as_f64().unwrap_or(0.0));
    }
    Ok(format!("min |det| {dets:?}, 32 times, 10^4 pairs each"))
}

fn gadgets() -> Outcome {
    for m in [1u32, 3, 5, 7, 9] {
        let ds = power_derivatives_at_half(m).map_err(|e| e.to_string())?;
        let k = m as usize;
        ensure(
            ds[..k - 1].iter().all(Zero::is_zero) && !ds[k - 1].is_zero(),
            format!("eta_{m}"),
        )?;
    }
    for d in [rat(1, 8), rat(1, 16), rat(1, 32)] {
        let r = clamp_deviation(&d, 10_000).map_err(|e| e.to_string())?;
        ensure(
            r.pass && r.points >= 10_000,
            format!("clamp {d}: {}", r.max_deviation),
        )?;
    }
    let psi1 = SymMap::parse(&["t*x"], 2).unwrap();
    let psi2 = SymMap::parse(&["x/2 + (t - 1/2)*x^2"], 2).unwrap();
    let xs = AxisBox::cube(1, int(-1), int(1)).lattice_vertices(21);
    let g = glue_homotopy(&psi1, &psi2, 3, 2, &xs).map_err(|e| e.to_string())?;
    ensure(
        g.report.pass && g.report.seam_gaps[1..].iter().all(|v| *v == 0.0),
        "seam",
    )?;
    Ok("odd m <= 9 exact, clamp deviations, seam C^2 exact".into())
}

fn straight_lines() -> Outcome {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(42);
    let pts = random_points(9, 20, 3, 16);
    for i in 0..10 {
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            SymMap::new(
                (0..2)
                    .map(|_| nashkit::calculus::random_polynomial(rng, 2, 3))
                    .collect(),
                2,
            )
        };
        let (f, g) = (mk(&mut rng), mk(&mut rng));
        let r = check_straight_line(&f, &g, &pts).map_err(|e| e.to_string())?;
        ensure(r.identity && r.samples_pass, format!("pair {i}"))?;
    }
    Ok("10 random pairs, identity exact in t".into())
}

fn blend(reports: &BTreeMap<String, Value>) -> Outcome {
    let r = &reports["halfdisc_push"];
    check(r, "blend.phi")?;
    let z = check(r, "blend.fixes_zero_set")?;
    let inside = check(r, "blend.inside")?;
    Ok(format!(
        "G = F at {} zero-set points, {} images inside",
        z["detail"]["zero_set_points"], inside["detail"]["checked"]
    ))
}

fn embeddings() -> Outcome {
    let h = SymFn::parse("x", 1).unwrap();
    let samples: Vec<Vec<Rational>> = (1..=20)
        .map(|k| vec![Rational::one() / Rational::from_integer(2.into()).pow(k)])
        .collect();
    let m = mostowski_check(&h, &samples).map_err(|e| e.to_string())?;
    ensure(
        m.graph_identity_exact && m.projection_inverts && m.norms_increasing,
        "mostowski",
    )?;
    for k in 1..=3usize {
        let s = stereographic(k);
        let back = stereographic_inverse(k).compose(&s);
        for p in random_points(k as u64, 50, k, 32) {
            ensure(
                back.eval(&p).unwrap() == p,
                format!("round trip k={k} at {p:?}"),
            )?;
        }
        ensure(
            s.norm_squared().equivalent(&SymFn::one(k), 3),
            format!("|phi_{k}|^2 != 1"),
        )?;
    }
    Ok("t h(x) = 1 on 20 dyadic points; stereographic k = 1, 2, 3 exact".into())
}

fn counterexamples() -> Outcome {
    let t = set_t();
    let member = |p: [Rational; 2]| t.contains(&p).unwrap();
    ensure(
        member([int(0), int(0)])
            && member([rat(1, 10), rat(1, 10)])
            && !member([int(0), rat(1, 2)]),
        "membership",
    )?;
    let grid = t_grid(&rat(-1, 4), &rat(1, 4), 1000);
    let alpha = PathGerm::signed_power(1);
    ensure(
        path_image_in_set(&alpha, &t, &grid).unwrap(),
        "path leaves T",
    )?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let l = one_sided_tangent(&alpha, Side::Left).unwrap().direction;
    let r = one_sided_tangent(&alpha, Side::Right).unwrap().direction;
    let close = |a: &[f64], b: [f64; 2]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    ensure(
        close(&l, [-s, s]) && close(&r, [s, s]),
        format!("tangents {l:?} {r:?}"),
    )?;
    let cones = cones_of_t();
    let v = analytic_obstruction_check(&alpha, &cones, Some((&t, &grid)))
        .unwrap()
        .verdict;
    ensure(v == Verdict::Obstructed, format!("{v:?}"))?;
    let analytic = PathGerm::analytic(SymMap::parse(&["t^3", "t^3"], 1).unwrap()).unwrap();
    let v = analytic_obstruction_check(&analytic, &cones, None)
        .unwrap()
        .verdict;
    ensure(v == Verdict::NotObstructed, format!("analytic {v:?}"))?;
    let c = validate_cones(&cones, &t, 720, 1e-3).unwrap();
    ensure(c.pass, format!("{} overlaps", c.overlaps))?;
    Ok("memberships, tangents (-1,1)/sqrt2 and (1,1)/sqrt2, verdicts, 720 directions".into())
}

fn determinism(
    first: &BTreeMap<String, String>,
    second: &BTreeMap<String, String>,
    took: Duration,
) -> Outcome {
    for (name, a) in first {
        ensure(
            second.get(name) == Some(a),
            format!("{name} differs between runs"),
        )?;
    }
    ensure(took < Duration::from_secs(600), format!("took {took:?}"))?;
    Ok(format!(
        "{} scenarios byte-identical; acceptance wall-clock {took:.1?}",
        first.len()
    ))
}

fn run_bundled() -> (BTreeMap<String, String>, BTreeMap<String, Value>) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.retain(|p| p.extension().is_some_and(|e| e == "toml"));
    paths.sort();
    let mut texts = BTreeMap::new();
    let mut values = BTreeMap::new();
    for p in paths {
        let sc = Scenario::load(&p).unwrap();
        let out = sc.run(&RunOptions::default());
        texts.insert(sc.name.clone(), out.report_text());
        values.insert(sc.name.clone(), out.report);
    }
    (texts, values)
}

fn main() {
    let start = Instant::now();
    let (first, reports) = run_bundled();
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |n, name, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let r = f();
        results.push((n, name, r, t.elapsed()));
    };
    record(1, "multinomial identity", &multinomial);
    record(2, "Leibniz rule for powers", &leibniz);
    record(3, "reciprocal chain rule", &faa_di_bruno);
    record(4, "power-exponent lemma", &power_exponents);
    record(5, "small-function pipeline", &small_function);
    record(6, "push instances", &|| push_instances(&reports));
    record(7, "diffeomorphism family", &|| diffeomorphisms(&reports));
    record(8, "reparameterization gadgets", &gadgets);
    record(9, "straight-line homotopy", &straight_lines);
    record(10, "blend interpolation", &blend_wrap(&reports));
    record(11, "embedding formulas", &embeddings);
    record(12, "counterexample suite", &counterexamples);
    let (second, _) = run_bundled();
    let took = start.elapsed();
    record(13, "determinism", &|| determinism(&first, &second, took));

    let mut failed = 0;
    for (n, name, r, t) in &results {
        match r {
            Ok(d) => println!("criterion {n:>2} PASS  {name} ({t:.1?}): {d}"),
            Err(e) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name} ({t:.1?}): {e}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn blend_wrap(reports: &BTreeMap<String, Value>) -> impl Fn() -> Outcome + '_ {
    move || blend(reports)
}

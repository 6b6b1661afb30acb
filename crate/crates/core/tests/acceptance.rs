//! Acceptance criteria, one line of output each.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use sdgeo::dist_tensors::{contact_identity_residual, rp_versus_riemann, FourFields};
use sdgeo::quadrature::{integral_formula_check, reduction_ratio, stokes_check, QuadratureGrid};
use sdgeo::sampling::{random_vector_field, rng, sample_points};
use sdgeo::scenarios::{self, ScenarioManifold};
use sdgeo::suite::{self, Check, VerifyOptions};
use sdgeo::{einstein_tensor, ResidualReport};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn named() -> Vec<ScenarioManifold> {
    scenarios::SCENARIO_NAMES.iter().map(|n| scenarios::by_name(n).unwrap()).collect()
}

fn allowed_scenarios() -> Vec<ScenarioManifold> {
    let mut v = named();
    v.push(scenarios::hopf_conformal_s3().unwrap());
    v.into_iter().filter(|s| s.pointwise.pair.flags.allowed).collect()
}

fn opts(points: usize, tol: f64) -> VerifyOptions {
    VerifyOptions { points, seed: 42, tol }
}

fn run(s: &ScenarioManifold, check: Check, o: VerifyOptions) -> ResidualReport {
    suite::verify_check(s, check, &o).unwrap()
}

/// The sphere-block entry of the Einstein tensor as printed.
fn e1_printed(u: f64) -> f64 {
    let (s, c) = u.sin_cos();
    let (s2, c2) = (s * s, c * c);
    -s2 * (4.0 * c2 * c2 - 5.0 * c2 + 10.0) / (1.0 + s2).powi(3)
}

fn einstein_reference(e1: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![e1, e1, e1, -3.0, -3.0]))
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let s = scenarios::einstein_s3xt2().unwrap();
    let chart = &s.pointwise.chart;
    let points = sample_points(chart, 100, &mut rng(42)).unwrap();
    let (mut printed, mut corrected) = (0.0f64, 0.0f64);
    for x in &points {
        let e = einstein_tensor(chart, x).unwrap();
        let u = x[3];
        let a = einstein_reference(e1_printed(u));
        let b = einstein_reference(scenarios::einstein_e1(u));
        printed = printed.max((&e - &a).amax() / (1.0 + a.amax()));
        corrected = corrected.max((&e - &b).amax() / (1.0 + b.amax()));
    }
    let elapsed = started.elapsed().as_secs_f64();
    let at_quarter = -e1_printed(PI / 2.0);
    let values_ok = (at_quarter - 1.25).abs() < 1e-12 && (3f64.sqrt() - 1.732051).abs() < 1e-6;
    outcome(
        printed <= 1e-8 && elapsed <= 10.0 && values_ok,
        format!(
            "printed closed form: max normalized residual {printed:.3e}; with cos⁴ coefficient 1: {corrected:.3e}; -E1(pi/2) = {at_quarter}; {elapsed:.2}s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let s = scenarios::einstein_s3xt2().unwrap();
    let chart = &s.pointwise.chart;
    let p = s.pointwise.pair.total();
    let mut worst = 0.0f64;
    for x in sample_points(chart, 100, &mut rng(7)).unwrap() {
        let lg = chart.local(&x, 1).unwrap();
        let m = lg.endo(&p);
        let pp = m.matmul(&lg.adjoint(&m));
        let d = lg.metric_inv().apply(&lg.div_endo_trace(&pp));
        let norm = lg.inner(&d, &d).value().max(0.0).sqrt();
        worst = worst.max(norm / (1.0 + pp.values().norm()));
    }
    outcome(worst <= 1e-8, format!("max |div(PP*)| normalized {worst:.3e} at 100 points"))
}

fn criterion_3() -> Outcome {
    let e = run(&scenarios::einstein_s3xt2().unwrap(), Check::Allowed, opts(200, 1e-8));
    let w = run(&scenarios::warped_torus(scenarios::sin_profile).unwrap(), Check::Allowed, opts(200, 1e-8));
    let t = run(&scenarios::twisted_warped_torus().unwrap(), Check::Allowed, opts(200, 1e-8));
    outcome(
        e.pass && w.pass && t.max_normalized >= 1e-3,
        format!(
            "einstein {:.3e}, warped {:.3e}, non-allowed counterexample {:.3e}",
            e.max_normalized, w.max_normalized, t.max_normalized
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in allowed_scenarios() {
        let r = run(&s, Check::Codazzi, opts(200, 1e-7));
        pass &= r.pass;
        parts.push(format!("{} {:.1e}", s.name, r.max_normalized));
    }
    let s = scenarios::warped_torus(scenarios::sin_profile).unwrap();
    let (points, args) = suite::samples(&s, 200, 42).unwrap();
    let mut worst = 0.0f64;
    for (k, x) in points.iter().enumerate() {
        let f: &FourFields = &args[k % args.len()].fields;
        let (rp, classical) = rp_versus_riemann(&s.pointwise.pair, &s.pointwise.chart, x, f).unwrap();
        worst = worst.max((rp - classical).abs() / (1.0 + classical.abs()));
    }
    pass &= worst <= 1e-8;
    parts.push(format!("R^P vs R on warped torus {worst:.1e}"));
    outcome(pass, parts.join(", "))
}

fn per_scenario(list: &[ScenarioManifold], check: Check, o: VerifyOptions) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in list {
        let r = run(s, check, o);
        pass &= r.pass;
        parts.push(format!("{} {:.1e}", s.name, r.max_normalized));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_5() -> Outcome {
    let list: Vec<_> = named().into_iter().filter(|s| s.pointwise.pair.flags.div_pp_star_zero).collect();
    per_scenario(&list, Check::Prop3, opts(200, 1e-8))
}

fn self_adjoint_scenarios() -> Vec<ScenarioManifold> {
    let mut v = named();
    v.push(scenarios::hopf_conformal_s3().unwrap());
    v.into_iter().filter(|s| s.pointwise.pair.flags.self_adjoint).collect()
}

fn criterion_6() -> Outcome {
    per_scenario(&self_adjoint_scenarios(), Check::Traces, opts(200, 1e-7))
}

fn criterion_7() -> Outcome {
    let list: Vec<_> = allowed_scenarios().into_iter().filter(|s| s.pointwise.pair.flags.self_adjoint).collect();
    per_scenario(&list, Check::Walczak, opts(100, 1e-6))
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let cases: [(ScenarioManifold, Vec<usize>, Vec<usize>, f64); 3] = [
        (scenarios::flat_torus_projectors(1, 1).unwrap(), vec![64, 64], vec![128, 128], 1e-12),
        (scenarios::warped_torus(scenarios::sin_profile).unwrap(), vec![32, 32], vec![64, 64], f64::INFINITY),
        (scenarios::einstein_s3xt2().unwrap(), vec![8, 8, 8, 8, 8], vec![12, 12, 8, 8, 8], f64::INFINITY),
    ];
    for (s, coarse, fine, abs_cap) in cases {
        let sc = &s.integration;
        let x = random_vector_field(&mut rng(42), sc.chart.dim());
        let p = sc.pair.total();
        let a = stokes_check(&p, &sc.chart, &x, &QuadratureGrid::new(&sc.chart, &coarse).unwrap()).unwrap();
        let b = stokes_check(&p, &sc.chart, &x, &QuadratureGrid::new(&sc.chart, &fine).unwrap()).unwrap();
        let refine_ok = b.integral.abs() <= a.integral.abs() || b.integral.abs() <= 1e-10 * b.volume;
        let ok = a.report.pass && b.report.pass && b.integral.abs() <= abs_cap && refine_ok;
        pass &= ok;
        parts.push(format!(
            "{} |I|/Vol {:.1e} -> {:.1e} (ratio {:.1e})",
            s.name,
            a.integral.abs() / a.volume,
            b.integral.abs() / b.volume,
            reduction_ratio(&b, &a)
        ));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_9() -> Outcome {
    let w = scenarios::warped_torus(scenarios::sin_profile).unwrap();
    let sc = &w.integration;
    let grid = QuadratureGrid::new(&sc.chart, &[128, 128]).unwrap();
    let wo = integral_formula_check(&sc.pair, &sc.chart, &grid, &[]).unwrap();
    let ratio = wo.integral.abs() / wo.abs_integral;
    let mut pass = !wo.degenerate && wo.report.pass && ratio <= 1e-6;
    let mut parts = vec![format!("warped |I|/N {ratio:.1e} (N = {:.3})", wo.abs_integral)];
    for (s, counts) in [
        (scenarios::einstein_s3xt2().unwrap(), vec![8, 8, 8, 8, 8]),
        (scenarios::flat_torus_projectors(1, 1).unwrap(), vec![16, 16]),
    ] {
        let sc = &s.integration;
        let grid = QuadratureGrid::new(&sc.chart, &counts).unwrap();
        let o = integral_formula_check(&sc.pair, &sc.chart, &grid, &s.symmetry_axes).unwrap();
        pass &= o.degenerate && o.report.pass && o.max_pointwise <= 1e-9;
        parts.push(format!("{} pointwise max {:.1e} degenerate {}", s.name, o.max_pointwise, o.degenerate));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_10() -> Outcome {
    let s = scenarios::hopf_contact_s3().unwrap();
    let c = s.pointwise.contact.as_ref().unwrap();
    let (points, args) = suite::samples(&s, 100, 42).unwrap();
    let (mut structure, mut pp, mut div) = (0.0f64, 0.0f64, 0.0f64);
    for (k, x) in points.iter().enumerate() {
        let r = contact_identity_residual(c, &s.pointwise.chart, &args[k % args.len()].fields.x1, x).unwrap();
        structure = structure.max(r.structure);
        pp = pp.max(r.pp_star);
        div = div.max(r.div_norm);
    }
    let conformal = scenarios::hopf_conformal_s3().unwrap();
    let sign = suite::contact_sign(&conformal, &opts(100, 1e-9)).unwrap();
    let round = suite::contact_sign(&s, &opts(100, 1e-9)).unwrap();
    outcome(
        structure <= 1e-9 && pp <= 1e-9 && div <= 1e-9 && sign.consistent.is_some(),
        format!(
            "structure {structure:.1e}, PP* {pp:.1e}, |div(PP*)| {div:.1e}; sign run: plus {:.1e}, minus {:.1e} -> {:?} (round S³: plus {:.1e}, minus {:.1e})",
            sign.plus, sign.minus, sign.consistent, round.plus, round.minus
        ),
    )
}

fn criterion_11() -> Outcome {
    let render = |threads: usize| -> String {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut lines = Vec::new();
            for name in ["warped-torus", "hopf-s3"] {
                let s = scenarios::by_name(name).unwrap();
                let mut reports = suite::cmd_verify(&s, &[Check::Codazzi, Check::Walczak, Check::Traces], &opts(60, 1e-6)).unwrap();
                reports.extend(suite::cmd_integrate(&s, suite::Which::Stokes, &[16], 42).unwrap());
                for mut r in reports {
                    r.runtime_ms = 0;
                    lines.push(serde_json::to_string(&r).unwrap());
                }
            }
            lines.join("\n")
        })
    };
    let a = render(1);
    let b = render(4);
    let c = render(1);
    outcome(a == b && a == c, format!("{} bytes, identical across 1 and 4 threads and reruns: {}", a.len(), a == b && a == c))
}

/// Criteria whose published closed form disagrees with the computed value;
/// they are run at full tolerance and expected to report FAIL.
const KNOWN_FAILURES: [usize; 1] = [1];

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Einstein tensor closed form", criterion_1),
        ("div(PP*) = 0 on S3xT2", criterion_2),
        ("allowedness forms", criterion_3),
        ("Codazzi identity", criterion_4),
        ("P-divergence equivalences", criterion_5),
        ("trace lemmas", criterion_6),
        ("pointwise Walczak identity", criterion_7),
        ("P-divergence theorem", criterion_8),
        ("integral formula", criterion_9),
        ("almost contact example", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("[{}] criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        if !o.pass {
            failed.push(k + 1);
        }
    }
    println!("{} of {} criteria pass; failing: {failed:?}; known failures: {KNOWN_FAILURES:?}", criteria.len() - failed.len(), criteria.len());
    if failed == KNOWN_FAILURES {
        ExitCode::SUCCESS
    } else {
        println!("unexpected set of failing criteria");
        ExitCode::FAILURE
    }
}

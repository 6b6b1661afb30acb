use nalgebra::DMatrix;
use proptest::prelude::*;
use sdgeo::chart_geometry::{christoffel, einstein_tensor, metric_jet, riemann};
use sdgeo::dist_tensors::{dist_invariants, dist_invariants_rotated, trace_lemma_residuals};
use sdgeo::endo_fields::{adjoint, adjoint_matrix};
use sdgeo::quadrature::{stokes_check, QuadratureGrid};
use sdgeo::sampling::{random_orthogonal, random_vector_field, rng, sample_points};
use sdgeo::scenarios::{self, einstein_e1, ScenarioManifold};
use sdgeo::{EndoField, Jet};

fn all_scenarios() -> Vec<ScenarioManifold> {
    let mut v: Vec<_> = scenarios::SCENARIO_NAMES.iter().map(|n| scenarios::by_name(n).unwrap()).collect();
    v.push(scenarios::hopf_conformal_s3().unwrap());
    v
}

fn unit_box(x: &[f64], s: &ScenarioManifold) -> Option<Vec<f64>> {
    let chart = &s.pointwise.chart;
    let p: Vec<f64> = chart.domain().iter().zip(x).map(|(&(a, b), t)| a + (b - a) * t).collect();
    (chart.clearance(&p) > 1e-2).then_some(p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn curvature_symmetries_and_bianchi(which in 0usize..6, t in prop::collection::vec(0.0f64..1.0, 5)) {
        let s = &all_scenarios()[which];
        let n = s.dim();
        let Some(x) = unit_box(&t[..n], s) else { return Ok(()) };
        let r = riemann(&s.pointwise.chart, &x).unwrap();
        let mut scale = 1.0f64;
        for i in 0..n { for j in 0..n { for k in 0..n { for l in 0..n {
            scale = scale.max(r.get(i, j, k, l).abs());
        }}}}
        for i in 0..n { for j in 0..n { for k in 0..n { for l in 0..n {
            let v = r.get(i, j, k, l);
            prop_assert!((v + r.get(j, i, k, l)).abs() <= 1e-10 * scale);
            prop_assert!((v + r.get(i, j, l, k)).abs() <= 1e-10 * scale);
            prop_assert!((v - r.get(k, l, i, j)).abs() <= 1e-10 * scale);
            let b = v + r.get(j, k, i, l) + r.get(k, i, j, l);
            prop_assert!(b.abs() <= 1e-10 * scale);
        }}}}
    }

    #[test]
    fn connection_is_metric_and_torsion_free(which in 0usize..6, t in prop::collection::vec(0.0f64..1.0, 5)) {
        let s = &all_scenarios()[which];
        let n = s.dim();
        let Some(x) = unit_box(&t[..n], s) else { return Ok(()) };
        let jet = metric_jet(&s.pointwise.chart, &x).unwrap();
        let gam = christoffel(&jet);
        let g = s.pointwise.chart.metric_at(&x).unwrap();
        let coords: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(v, i, n, 1)).collect();
        let gj = (s.pointwise.chart.metric_fn())(&coords);
        for k in 0..n { for i in 0..n { for j in 0..n {
            prop_assert!((gam.get(k, i, j) - gam.get(k, j, i)).abs() <= 1e-12 * (1.0 + gam.get(k, i, j).abs()));
            // ∂_k g_ij = Γ^m_ki g_mj + Γ^m_kj g_im
            let mut rhs = 0.0;
            for m in 0..n {
                rhs += gam.get(m, k, i) * g[(m, j)] + gam.get(m, k, j) * g[(i, m)];
            }
            let lhs = gj.at(i, j).d(k).value();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }}}
    }

    #[test]
    fn adjoint_is_an_involution(which in 0usize..6, t in prop::collection::vec(0.0f64..1.0, 5), seed in 0u64..1000) {
        let s = &all_scenarios()[which];
        let n = s.dim();
        let Some(x) = unit_box(&t[..n], s) else { return Ok(()) };
        let g = s.pointwise.chart.metric_at(&x).unwrap();
        let a = random_orthogonal(&mut rng(seed), n) * DMatrix::from_fn(n, n, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
        let back = adjoint_matrix(&adjoint_matrix(&a, &g), &g);
        prop_assert!((back - &a).norm() <= 1e-10 * (1.0 + a.norm()));
        let p = s.pointwise.pair.total();
        let star = adjoint(&p, &s.pointwise.chart, &x).unwrap();
        // ⟨PX, Y⟩ = ⟨X, P*Y⟩
        let pm = p.at(&x);
        let lhs = (pm.transpose() * &g) - (&g * &star);
        prop_assert!(lhs.norm() <= 1e-10 * (1.0 + pm.norm()));
    }

    #[test]
    fn invariants_do_not_depend_on_the_frame(which in 0usize..6, t in prop::collection::vec(0.0f64..1.0, 5), seed in 0u64..1000) {
        let s = &all_scenarios()[which];
        let n = s.dim();
        let Some(x) = unit_box(&t[..n], s) else { return Ok(()) };
        let q = random_orthogonal(&mut rng(seed), n);
        let a = dist_invariants(&s.pointwise.pair, &s.pointwise.chart, &x).unwrap();
        let b = dist_invariants_rotated(&s.pointwise.pair, &s.pointwise.chart, &x, &q).unwrap();
        let scale = 1.0 + a.walczak_scale();
        prop_assert!((a.smix - b.smix).abs() <= 1e-9 * scale);
        prop_assert!((a.norms.h1 - b.norms.h1).abs() <= 1e-9 * scale);
        prop_assert!((a.norms.t2 - b.norms.t2).abs() <= 1e-9 * scale);
        prop_assert!((&a.mean1 - &b.mean1).norm() <= 1e-9 * scale);
        prop_assert!((&a.mean2 - &b.mean2).norm() <= 1e-9 * scale);
    }
}

#[test]
fn einstein_tensor_matches_corrected_closed_form() {
    let s = scenarios::einstein_s3xt2().unwrap();
    let chart = &s.pointwise.chart;
    for x in sample_points(chart, 100, &mut rng(7)).unwrap() {
        let e = einstein_tensor(chart, &x).unwrap();
        let e1 = einstein_e1(x[3]);
        for i in 0..5 {
            let want = if i < 3 { e1 } else { -3.0 };
            assert!((e[(i, i)] - want).abs() <= 1e-8 * (1.0 + want.abs()), "E[{i}] at {x:?}");
            for j in 0..5 {
                if i != j {
                    assert!(e[(i, j)].abs() <= 1e-10);
                }
            }
        }
    }
    assert!((einstein_e1(std::f64::consts::FRAC_PI_2) + 1.25).abs() < 1e-15);
}

#[test]
fn einstein_christoffel_pattern() {
    // only the u-direction couples the two factors
    let s = scenarios::einstein_s3xt2().unwrap();
    let chart = &s.pointwise.chart;
    for x in sample_points(chart, 20, &mut rng(3)).unwrap() {
        let gam = christoffel(&metric_jet(chart, &x).unwrap());
        for k in 0..5 { for i in 0..5 { for j in 0..5 {
            let sphere = |a: usize| a < 3;
            let mixed = sphere(k) != sphere(i) || sphere(k) != sphere(j);
            if mixed {
                assert!(gam.get(k, i, j).abs() <= 1e-10, "Γ^{k}_{i}{j} = {}", gam.get(k, i, j));
            }
        }}}
    }
}

#[test]
fn identity_endomorphism_satisfies_the_divergence_theorem_everywhere() {
    for s in all_scenarios() {
        let sc = &s.integration;
        let n = sc.chart.dim();
        let level = if n == 3 { 64 } else { 16 };
        let counts = s.grid_for(level).into_iter().map(|c| c.max(8)).collect::<Vec<_>>();
        let grid = QuadratureGrid::new(&sc.chart, &counts).unwrap();
        let xf = random_vector_field(&mut rng(11), n);
        let out = stokes_check(&EndoField::identity(n), &sc.chart, &xf, &grid).unwrap();
        assert!(out.report.pass, "{}: {:e}", s.name, out.integral);
    }
}

#[test]
fn scaling_the_pair_scales_the_mixed_scalar_curvature_by_c_to_the_fifth() {
    let base = scenarios::warped_torus(scenarios::sin_profile).unwrap();
    let scaled = scenarios::scaled_identity(&base, 2.0).unwrap();
    for x in sample_points(&base.pointwise.chart, 10, &mut rng(5)).unwrap() {
        let a = dist_invariants(&base.pointwise.pair, &base.pointwise.chart, &x).unwrap();
        let b = dist_invariants(&scaled.pointwise.pair, &scaled.pointwise.chart, &x).unwrap();
        assert!((b.smix - 32.0 * a.smix).abs() <= 1e-10 * (1.0 + a.smix.abs()));
    }
}

#[test]
fn trace_identities_break_for_the_non_allowed_pair() {
    let s = scenarios::twisted_warped_torus().unwrap();
    let worst = sample_points(&s.pointwise.chart, 10, &mut rng(1))
        .unwrap()
        .iter()
        .map(|x| trace_lemma_residuals(&s.pointwise.pair, &s.pointwise.chart, x).unwrap().max_normalized())
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "{worst:e}");
}

#[test]
fn trace_identities_hold_on_allowed_self_adjoint_pairs() {
    for s in all_scenarios() {
        for x in sample_points(&s.pointwise.chart, 20, &mut rng(2)).unwrap() {
            let r = trace_lemma_residuals(&s.pointwise.pair, &s.pointwise.chart, &x).unwrap();
            assert!(r.max_normalized() <= 1e-7, "{} at {x:?}: {:e}", s.name, r.max_normalized());
        }
    }
}

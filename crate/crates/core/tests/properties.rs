mod common;

use common::{catalog_items, phi, rel_err, richardson, RandomField};
use finsler_douglas::chart::{alpha_spray, conformal_factor, Chart, Geometry};
use finsler_douglas::douglas::{douglas_generic_at, pde_residual};
use finsler_douglas::expr::{Consts, Expr};
use finsler_douglas::gab::{conformal_quantities, spray_conformal, spray_general, PhiSpec};
use finsler_douglas::jets::Jet2;
use finsler_douglas::solutions::{i_n, phi_from_spec, s_times_i_n, SolutionSpec};
use nalgebra::DVector;
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("t".to_string()),
        (1u32..50).prop_map(|k| format!("{}", k as f64 / 8.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (
                inner.clone(),
                inner.clone(),
                prop::sample::select(vec!['+', '-', '*', '/'])
            )
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (
                inner,
                prop::sample::select(vec!["sqrt", "exp", "log", "arctan"])
            )
                .prop_map(|(a, f)| format!("{f}(1 + ({a})^2)")),
        ]
    })
}

type CatalogPhi = (String, PhiSpec, f64, Arc<SolutionSpec>, Consts);

fn catalog_phis() -> &'static Vec<CatalogPhi> {
    static CELL: OnceLock<Vec<CatalogPhi>> = OnceLock::new();
    CELL.get_or_init(|| {
        catalog_items()
            .into_iter()
            .map(|it| {
                (
                    it.name.clone(),
                    it.closed.clone().unwrap(),
                    it.b0,
                    it.spec.clone(),
                    it.consts.clone(),
                )
            })
            .collect()
    })
}

/// `(b², s)` with `b ≤ min(0.8, 0.9 b₀)` and `|s| ≤ 0.95 b`.
fn bs_in(b0: f64, ub: f64, us: f64) -> (f64, f64) {
    let b = (0.05 + 0.95 * ub) * 0.8_f64.min(0.9 * b0);
    (b * b, 0.95 * b * us)
}

fn profile_source() -> impl Strategy<Value = String> {
    (0.0..0.3f64, -0.3..0.3f64, -0.3..0.3f64, -0.3..0.3f64).prop_map(|(a, c, d, e)| {
        format!("sqrt(1 + b2 + {a:.6}*b2*s^2 + s^2) + {c:.6}*s + {d:.6}*s^3 + {e:.6}*b2")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn printed_expressions_reparse_identically(src in expr_source()) {
        let e = Expr::parse(&src).unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        prop_assert_eq!(e, again);
    }

    #[test]
    fn expression_jets_match_differences(src in expr_source(), t0 in 0.2..0.8f64) {
        let e = Expr::parse(&src).unwrap();
        let c = Consts::new();
        let real = |t: f64| e.eval_real(t, &c);
        prop_assume!([t0 - 2e-3, t0, t0 + 2e-3].iter().all(|&t| real(t).is_ok_and(|v| v.is_finite() && v.abs() < 1e3)));
        let j = e.eval(&[Jet2::var_u(t0, 2, 0)], &c).unwrap();
        let d1 = richardson(|h| real(t0 + h).unwrap(), 1e-3);
        prop_assert!(rel_err(j.partial(1, 0), d1) < 1e-6, "{}: {} vs {}", src, j.partial(1, 0), d1);
        let d2 = richardson(|h| e.eval(&[Jet2::var_u(t0 + h, 1, 0)], &c).unwrap().partial(1, 0), 1e-3);
        prop_assert!(rel_err(j.partial(2, 0), d2) < 1e-6);
    }

    #[test]
    fn jet_products_of_polynomials_are_exact(
        p in prop::collection::vec(-4i32..5, 9),
        q in prop::collection::vec(-4i32..5, 9),
    ) {
        // degree ≤ 2 in each variable, so the product fits in orders (4, 4)
        let rows = |c: &[i32]| -> Vec<Vec<f64>> {
            (0..5).map(|a| (0..5).map(|b| if a < 3 && b < 3 { c[3 * a + b] as f64 } else { 0.0 }).collect()).collect()
        };
        let prod = &Jet2::from_coeffs(&rows(&p)) * &Jet2::from_coeffs(&rows(&q));
        for a in 0..5 {
            for b in 0..5 {
                let mut want = 0i64;
                for a1 in 0..3usize.min(a + 1) {
                    for b1 in 0..3usize.min(b + 1) {
                        if a - a1 < 3 && b - b1 < 3 {
                            want += (p[3 * a1 + b1] * q[3 * (a - a1) + (b - b1)]) as i64;
                        }
                    }
                }
                prop_assert_eq!(prod.coeff(a, b), want as f64);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn teh_identity_for_random_profiles(src in profile_source(), ub in 0.0..1.0f64, us in -1.0..1.0f64, n in 2usize..5) {
        let (b2, s) = bs_in(f64::INFINITY, ub, us);
        let q = conformal_quantities(&phi(&src), b2, s, n).unwrap();
        let lhs = q.t - s * q.t2;
        let rhs = -(b2 - s * s) * q.douglas_residual(s) / (n as f64 + 1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn catalog_forms_solve_the_pde(k in 0usize..11, ub in 0.0..1.0f64, us in -1.0..1.0f64) {
        let items = catalog_phis();
        let (name, closed, b0, spec, consts) = &items[k % items.len()];
        let (b2, s) = bs_in(*b0, ub, us);
        let r = pde_residual(closed, &spec.f, &spec.g, consts, b2, s).unwrap();
        prop_assert!(r.abs() < 1e-9, "{name} at ({b2}, {s}): {r:e}");
    }

    #[test]
    fn in_derivative_matches_integrand(n in 1u32..9, ub in 0.05..1.0f64, us in -1.0..1.0f64) {
        let b2 = 4.0 * ub;
        let s = 0.95 * b2.sqrt() * us;
        prop_assume!(s.abs() > 1e-3);
        let j = i_n(n, &Jet2::constant(b2, 0, 1), &Jet2::var_v(s, 0, 1)).unwrap();
        let want = (b2 - s * s).powf((n as f64 - 1.0) / 2.0) / (s * s);
        prop_assert!(rel_err(j.partial(0, 1), want) < 1e-10);
        let prod: f64 = s_times_i_n(n, &b2, &s).unwrap();
        prop_assert!(rel_err(prod, s * i_n(n, &b2, &s).unwrap()) < 1e-12);
    }

    #[test]
    fn zero_h_solutions_have_the_even_part_of_the_closed_form(ub in 0.0..1.0f64, us in -1.0..1.0f64) {
        static SPEC: OnceLock<SolutionSpec> = OnceLock::new();
        let spec = SPEC.get_or_init(|| {
            SolutionSpec::parse("0", "0", "0", "(1 + t)*sqrt(t)", None, Consts::new(), Default::default()).unwrap()
        });
        let (b2, s) = bs_in(f64::INFINITY, ub, us);
        let sum = phi_from_spec(spec, b2, s).unwrap() + phi_from_spec(spec, b2, -s).unwrap();
        prop_assert!((sum - 2.0 * (1.0 + b2 + s * s)).abs() < 1e-10);
    }

    #[test]
    fn field_derivatives_are_symmetric(seed in 0u64..1000, n in 2usize..4) {
        let field = RandomField::new(n, seed);
        let x: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.4 - 0.3 * i as f64).collect();
        let d = field.derivatives(&x, &y, 4).unwrap();
        for k in 2..=4 {
            let t = d.dy(k);
            for idx in t.indices() {
                let mut sorted = idx.clone();
                sorted.sort_unstable();
                prop_assert!((t.get(&idx) - t.get(&sorted)).abs() <= 1e-12 * (1.0 + t.get(&idx).abs()));
            }
        }
    }
}

fn random_y(n: usize, v: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| v[i] + if i == 0 { 1.5 } else { 0.0 })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sprays_are_quadratic_and_the_routes_agree(
        k in 0usize..11,
        n in 2usize..5,
        xs in prop::collection::vec(-0.2..0.2f64, 4),
        ys in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        let items = catalog_items();
        let item = &items[k % items.len()];
        let chart = item.chart.build(n).unwrap();
        let geom = Geometry::at(&chart, &xs[..n]).unwrap();
        let y = DVector::from_vec(random_y(n, &ys));
        let (_, s) = finsler_douglas::gab::alpha_s(&geom, &y).unwrap();
        prop_assume!(geom.b2.sqrt() < 0.9 * item.b0 && s.abs() < 0.95 * geom.b2.sqrt());
        let closed = item.closed.as_ref().unwrap();
        let g = spray_general(&geom, closed, &y).unwrap();
        let g2 = spray_general(&geom, closed, &(&y * 2.0)).unwrap();
        prop_assert!((&g2 - &g * 4.0).amax() <= 1e-10 * (1.0 + g2.amax()));
        let c = conformal_factor(&geom, 1e-9).unwrap();
        let gc = spray_conformal(&geom, closed, &y, c.c).unwrap();
        prop_assert!((&gc - &g).amax() <= 1e-9 * (1.0 + g.amax()), "{}", item.name);
    }

    #[test]
    fn riemannian_sprays_coincide(mu in -1.0..1.0f64, n in 2usize..5, xs in prop::collection::vec(-0.3..0.3f64, 4), ys in prop::collection::vec(-1.0..1.0f64, 4)) {
        let chart = Chart::mu_family(n, mu).unwrap();
        let geom = Geometry::at(&chart, &xs[..n]).unwrap();
        let y = DVector::from_vec(random_y(n, &ys));
        let g = spray_general(&geom, &phi("1"), &y).unwrap();
        prop_assert!((&g - alpha_spray(&geom, &y)).amax() <= 1e-12 * (1.0 + g.amax()));
    }

    #[test]
    fn douglas_tensors_satisfy_their_identities(
        src in profile_source(),
        n in 2usize..5,
        xs in prop::collection::vec(-0.2..0.2f64, 4),
        ys in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        let chart = Chart::mu_family(n, 0.5).unwrap();
        let geom = Geometry::at(&chart, &xs[..n]).unwrap();
        let y = random_y(n, &ys);
        let g = douglas_generic_at(&geom, &phi(&src), &y).unwrap();
        let scale = 1.0 + g.d3g.max_abs();
        let d = g.tensor.defects();
        let ymax = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(d.symmetry <= 1e-9 * scale);
        prop_assert!(d.contraction <= 1e-9 * scale * ymax);
        prop_assert!(d.trace <= 1e-9 * scale);
        let y3: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
        let g3 = douglas_generic_at(&geom, &phi(&src), &y3).unwrap();
        let homog = g.tensor.d.data().iter().zip(g3.tensor.d.data()).fold(0.0_f64, |m, (a, b)| m.max((a - 3.0 * b).abs()));
        prop_assert!(homog <= 1e-8 * scale);
    }
}

use finsler_douglas::douglas::{douglas_condition, pde_residual};
use finsler_douglas::expr::Consts;
use finsler_douglas::gab::regularity;
use finsler_douglas::sampling::bs_grid;
use finsler_douglas::solutions::{
    catalog, catalog_entries, characteristic_residual, finsler_regularity, fit_kappa,
    phi_from_spec, psi_identity_residual, CatalogItem, CatalogParams, QuadratureConfig,
    SolutionSpec,
};
use std::sync::Arc;

fn items() -> Vec<CatalogItem> {
    catalog_entries()
        .iter()
        .map(|e| catalog(e.name, &CatalogParams::default()).unwrap())
        .collect()
}

fn grid_for(item: &CatalogItem, nb: usize, ns: usize) -> Vec<(f64, f64)> {
    bs_grid(0.8_f64.min(0.9 * item.b0), nb, ns)
}

#[test]
fn reconstruction_matches_closed_forms_up_to_kappa() {
    for item in items() {
        let closed = item.closed.as_ref().unwrap();
        let pts: Vec<(f64, f64, f64)> = grid_for(&item, 10, 10)
            .into_iter()
            .map(|(b2, s)| {
                let d = phi_from_spec(&item.spec, b2, s).unwrap() - closed.value(b2, s).unwrap();
                (b2, s, d)
            })
            .collect();
        // κ may depend on b², so fit per b² row
        let mut worst: f64 = 0.0;
        for row in pts.chunks(10) {
            let (_, r) = fit_kappa(&row.iter().map(|&(_, s, d)| (s, d)).collect::<Vec<_>>());
            worst = worst.max(r);
        }
        assert!(worst < 1e-8, "{}: {worst:e}", item.name);
    }
}

#[test]
fn reconstructed_phi_solves_the_pde() {
    for item in items() {
        let mut worst: f64 = 0.0;
        for (b2, s) in grid_for(&item, 10, 10) {
            let r = pde_residual(
                &item.reconstructed,
                &item.spec.f,
                &item.spec.g,
                &item.consts,
                b2,
                s,
            )
            .unwrap();
            worst = worst.max(r.abs());
        }
        assert!(worst < 1e-7, "{}: {worst:e}", item.name);
    }
}

#[test]
fn closed_forms_solve_the_pde_and_the_douglas_condition() {
    for item in items() {
        let closed = item.closed.as_ref().unwrap();
        for (b2, s) in grid_for(&item, 10, 10) {
            let r = pde_residual(closed, &item.spec.f, &item.spec.g, &item.consts, b2, s).unwrap();
            assert!(r.abs() < 1e-9, "{} pde at ({b2}, {s}): {r:e}", item.name);
            let c = douglas_condition(closed, b2, s, 3).unwrap();
            assert!(
                c.residual.abs() < 1e-9,
                "{} H at ({b2}, {s}): {:e}",
                item.name,
                c.residual
            );
        }
    }
}

#[test]
fn characteristic_and_identity_residuals_vanish() {
    for item in items() {
        let closed = item.closed.as_ref().unwrap();
        for (b2, s) in grid_for(&item, 10, 10) {
            let c = characteristic_residual(&item.spec, b2, s).unwrap();
            let p = psi_identity_residual(&item.spec, closed, b2, s).unwrap();
            assert!(
                c.abs() < 1e-9 && p.abs() < 1e-9,
                "{} ({b2}, {s}): {c:e} {p:e}",
                item.name
            );
        }
    }
}

#[test]
fn perturbed_big_phi_is_caught() {
    let item = catalog("funk", &CatalogParams::default()).unwrap();
    let spec = SolutionSpec::parse(
        "0",
        "0",
        "1/(1 - t)",
        "sqrt(t/(1 - t)) + 0.1",
        Some(("0", "0")),
        Consts::new(),
        QuadratureConfig::default(),
    )
    .unwrap();
    let r = psi_identity_residual(&spec, item.closed.as_ref().unwrap(), 0.36, 0.2).unwrap();
    assert!(r.abs() > 1e-3);
}

#[test]
fn regularity_reports_agree() {
    for item in items() {
        let grid = grid_for(&item, 8, 9);
        for n in [2, 3] {
            let margins = finsler_regularity(&item.spec, &grid, n);
            let direct = regularity(&item.reconstructed, n, &grid);
            for (i, lp) in margins.node_pass.iter().enumerate() {
                if let Some(p) = lp {
                    assert_eq!(
                        *p, direct.node_pass[i],
                        "{} n={n} node {:?}",
                        item.name, grid[i]
                    );
                }
            }
        }
    }
}

#[test]
fn funk_is_regular() {
    let item = catalog("funk", &CatalogParams::default()).unwrap();
    let r = finsler_regularity(&item.spec, &bs_grid(0.9, 9, 10), 3);
    assert!(r.pass());
}

#[test]
fn oddness_structure_for_example3() {
    let spec = Arc::new(
        SolutionSpec::parse(
            "0",
            "0",
            "0",
            "(1 + t)*sqrt(t)",
            None,
            Consts::new(),
            QuadratureConfig::default(),
        )
        .unwrap(),
    );
    for (b2, s) in bs_grid(0.8, 5, 7) {
        let sum = phi_from_spec(&spec, b2, s).unwrap() + phi_from_spec(&spec, b2, -s).unwrap();
        assert!((sum - 2.0 * (1.0 + b2 + s * s)).abs() < 1e-10);
    }
}

#[test]
fn example6_eta_with_the_literal_coefficients() {
    // ∫(f + g t) = -ln(1 - λt) and ∫ g e^{...} = λ/(1 - λt) - λ, anchored at 0
    let lam: f64 = 0.3;
    let spec = SolutionSpec::parse(
        "lambda",
        "lambda^2/(1 - lambda*t)",
        "0",
        "sqrt(t)",
        None,
        [("lambda".to_string(), lam)].into_iter().collect(),
        QuadratureConfig::default(),
    )
    .unwrap();
    let (b2, s) = (0.25, 0.1);
    let w = b2 - s * s;
    let want = w / (1.0 / (1.0 - lam * b2) - w * (lam / (1.0 - lam * b2) - lam));
    assert!((spec.eta(b2, s).unwrap() - want).abs() < 1e-13);
}

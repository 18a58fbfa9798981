//! The four subcommands.

use crate::config::{Resolved, RunConfig};
use crate::error::CliError;
use crate::report::{Check, Point, Report, Status, Worst};
use finsler_douglas::chart::{conformal_factor, Geometry};
use finsler_douglas::douglas::{
    douglas_closed_form, douglas_condition, douglas_generic_at, is_douglas, pde_residual,
};
use finsler_douglas::gab::regularity;
use finsler_douglas::par::Exec;
use finsler_douglas::sampling::{bs_grid, sample_points, SampleConfig};
use finsler_douglas::solutions::{
    catalog, catalog_entries, characteristic_residual, finsler_regularity, psi_identity_residual,
    solution_margins, CatalogParams,
};
use finsler_douglas::Error;
use serde_json::{json, Value};
use std::path::PathBuf;

/// Tolerance for the tensor identities, relative to `1 + max|∂³G|`.
pub const TENSOR_TOL: f64 = 1e-8;
/// Tolerance used when deciding whether `β` is closed and conformal.
pub const CONFORMAL_TOL: f64 = 1e-9;

fn echo(cfg: &RunConfig, r: &Resolved) -> Value {
    json!({
        "chart": r.chart_label,
        "n": r.n,
        "metric": r.metric_label,
        "b0": if r.b0.is_finite() { json!(r.b0) } else { json!("inf") },
        "samples": cfg.samples,
        "seed": cfg.seed,
        "tolerance": cfg.tolerance,
        "flags": r.flags,
    })
}

fn grid_echo(cfg: &RunConfig, r: &Resolved) -> Value {
    let mut v = echo(cfg, r);
    v["grid"] = json!({ "b_max": cfg.b_max(r.b0), "nb": cfg.grid.nb, "ns": cfg.grid.ns });
    v
}

fn sample_point(x: &[f64], y: &[f64]) -> Point {
    Point::Sample {
        x: x.to_vec(),
        y: y.to_vec(),
    }
}

/// Douglas verdict from the generic route plus the closed-form cross-check.
pub fn verify(cfg: &RunConfig, exec: Exec) -> Result<Report, CliError> {
    let r = cfg.resolve()?;
    let mut report = Report::new("verify", echo(cfg, &r));
    let samples = SampleConfig::new(cfg.samples, cfg.seed);
    let verdict = is_douglas(&r.chart, &r.phi, &samples, cfg.tolerance, exec)?;
    let status = match (verdict.douglas, verdict.trivial) {
        (true, true) => Status::Trivial,
        (true, false) => Status::Pass,
        (false, _) => Status::Fail,
    };
    report.checks.push(Check {
        name: "douglas_generic",
        status,
        worst: verdict.max_norm.is_finite().then_some(verdict.max_norm),
        tolerance: Some(cfg.tolerance),
        worst_point: verdict.worst.as_ref().map(|p| sample_point(&p.x, &p.y)),
        detail: format!("max |D| / (1 + |∂³G|) over {} samples", verdict.samples),
    });
    report.verdict = Some(
        match status {
            Status::Trivial => "trivially Douglas (c = 0)",
            Status::Pass => "Douglas",
            _ => "not Douglas",
        }
        .into(),
    );

    let pts = sample_points(&r.chart, r.phi.b0, &samples)?;
    let rows = exec.map(&pts, |p| -> Result<(f64, Option<f64>), Error> {
        let geom = Geometry::at(&r.chart, &p.x)?;
        let g = douglas_generic_at(&geom, &r.phi, &p.y)?;
        let scale = 1.0 + g.d3g.max_abs();
        let ymax = p.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let d = g.tensor.defects();
        let defect = (d.symmetry.max(d.trace).max(d.contraction / ymax)) / scale;
        let gap = match conformal_factor(&geom, CONFORMAL_TOL) {
            Ok(c) => Some(
                g.tensor
                    .max_diff(&douglas_closed_form(&geom, &r.phi, &p.y, c.c)?)
                    / scale,
            ),
            Err(Error::NotConformal { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok((defect, gap))
    });
    let (mut defects, mut gaps) = (Worst::default(), Worst::default());
    let mut conformal = 0;
    for (p, row) in pts.iter().zip(rows) {
        let at = sample_point(&p.x, &p.y);
        match row {
            Ok((d, gap)) => {
                defects.push(Ok(d), at.clone());
                if let Some(g) = gap {
                    conformal += 1;
                    gaps.push(Ok(g), at);
                }
            }
            Err(e) => {
                defects.push(Err(e.to_string()), at.clone());
                gaps.push(Err(e.to_string()), at);
            }
        }
    }
    report.checks.push(Check::residual(
        "tensor_identities",
        defects,
        TENSOR_TOL,
        "symmetry, y-contraction and trace of D, relative to 1 + |∂³G|",
    ));
    report.checks.push(if conformal == 0 && gaps.errors == 0 {
        Check::new(
            "closed_form_agreement",
            Status::Skipped,
            "β is not closed and conformal at any sample",
        )
    } else {
        Check::residual(
            "closed_form_agreement",
            gaps,
            cfg.tolerance,
            format!(
                "max |D_closed - D_generic| / (1 + |∂³G|) at {conformal} of {} samples",
                pts.len()
            ),
        )
    });
    report.finish();
    Ok(report)
}

/// Residuals of the characterizing equation and the Douglas condition on a grid.
pub fn pde_check(cfg: &RunConfig, exec: Exec) -> Result<Report, CliError> {
    let r = cfg.resolve()?;
    let mut report = Report::new("pde-check", grid_echo(cfg, &r));
    let grid = bs_grid(cfg.b_max(r.b0), cfg.grid.nb, cfg.grid.ns);
    let (f, g, consts) = &r.coefficients;
    type Row = [Option<Result<f64, String>>; 4];
    let rows: Vec<Row> = exec.map(&grid, |&(b2, s)| {
        let e = |x: finsler_douglas::Result<f64>| x.map_err(|e| e.to_string());
        let spec = r.spec.as_ref();
        [
            Some(e(pde_residual(&r.phi, f, g, consts, b2, s))),
            Some(e(douglas_condition(&r.phi, b2, s, r.n).map(|c| c.residual))),
            spec.filter(|_| s != 0.0)
                .map(|sp| e(characteristic_residual(sp, b2, s))),
            spec.map(|sp| e(psi_identity_residual(sp, &r.phi, b2, s))),
        ]
    });
    let mut worst: [Worst; 4] = Default::default();
    for (&(b2, s), row) in grid.iter().zip(rows) {
        for (w, v) in worst.iter_mut().zip(row) {
            if let Some(v) = v {
                w.push(v, Point::Grid { b2, s });
            }
        }
    }
    let [pde, cond, chr, psi] = worst;
    let tol = cfg.tolerance;
    report.checks.push(Check::residual(
        "pde",
        pde,
        tol,
        "φ₂₂ - 2(φ₁ - sφ₁₂) - (f + g s²)(φ - sφ₂ + (b² - s²)φ₂₂)",
    ));
    report
        .checks
        .push(Check::residual("douglas_condition", cond, tol, "H₂ - sH₂₂"));
    if r.spec.is_some() {
        report.checks.push(Check::residual(
            "characteristic",
            chr,
            tol,
            "ψ₁ + [1 - (f + g s²)(b² - s²)] ψ₂ / (2s) with ψ = Φ(η), s ≠ 0",
        ));
        report.checks.push(Check::residual(
            "psi_identity",
            psi,
            tol,
            "(φ - sφ₂) - Φ(η)/√(b² - s²)",
        ));
    }
    let reg = regularity(&r.phi, r.n, &grid);
    report.checks.push(regularity_check(
        reg.pass(),
        grid.is_empty(),
        reg.worst_m1,
        reg.worst_m2,
        r.n,
    ));
    report.finish();
    Ok(report)
}

fn regularity_check(
    pass: bool,
    empty: bool,
    m1: (f64, [f64; 2]),
    m2: (f64, [f64; 2]),
    n: usize,
) -> Check {
    let status = match (empty, pass) {
        (true, _) => Status::Trivial,
        (false, true) => Status::Pass,
        (false, false) => Status::Fail,
    };
    let (value, at) = if n >= 3 && m1.0 < m2.0 { m1 } else { m2 };
    Check {
        name: "regularity",
        status,
        worst: value.is_finite().then_some(value),
        tolerance: None,
        worst_point: (!empty).then_some(Point::Grid {
            b2: at[0],
            s: at[1],
        }),
        detail: format!("smallest required margin for n = {n} (must be > 0)"),
    }
}

/// A computed row of the `solve` table.
struct SolveRow {
    b2: f64,
    s: f64,
    values: Result<[f64; 6], String>,
    pde: Result<f64, String>,
    characteristic: Option<Result<f64, String>>,
}

pub const SOLVE_COLUMNS: [&str; 9] = [
    "b2",
    "s",
    "phi",
    "phi_minus_s_phi2",
    "eta",
    "big_phi",
    "margin1",
    "margin2",
    "error",
];

/// Tabulate the reconstructed `φ` on a grid.
pub fn solve(
    cfg: &RunConfig,
    exec: Exec,
    table: Option<PathBuf>,
) -> Result<(Report, Vec<u8>), CliError> {
    let r = cfg.resolve()?;
    let (Some(spec), Some(phi)) = (r.spec.clone(), r.reconstructed.clone()) else {
        return Err(CliError::Config(
            "solve needs a `catalog` or `solution` metric".into(),
        ));
    };
    let mut report = Report::new("solve", grid_echo(cfg, &r));
    let grid = bs_grid(cfg.b_max(r.b0), cfg.grid.nb, cfg.grid.ns);
    let (f, g, consts) = &r.coefficients;
    let rows = exec.map(&grid, |&(b2, s)| {
        let values = (|| -> finsler_douglas::Result<[f64; 6]> {
            let p = phi.partials(b2, s)?;
            let eta = spec.eta(b2, s)?;
            let big = spec.big_phi.eval_real(eta, &spec.consts)?;
            let m = if s == 0.0 {
                [f64::NAN; 2]
            } else {
                let m = solution_margins(&spec, b2, s)?;
                [m.m1, m.m2]
            };
            Ok([p.phi, p.phi - s * p.p2, eta, big, m[0], m[1]])
        })()
        .map_err(|e| e.to_string());
        SolveRow {
            b2,
            s,
            values,
            pde: pde_residual(&phi, f, g, consts, b2, s).map_err(|e| e.to_string()),
            characteristic: (s != 0.0)
                .then(|| characteristic_residual(&spec, b2, s).map_err(|e| e.to_string())),
        }
    });

    let mut csv = csv::Writer::from_writer(vec![]);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    csv.write_record(SOLVE_COLUMNS).map_err(io)?;
    let (mut failed, mut pde, mut chr) = (Worst::default(), Worst::default(), Worst::default());
    for row in &rows {
        let at = Point::Grid {
            b2: row.b2,
            s: row.s,
        };
        let mut rec = vec![row.b2.to_string(), row.s.to_string()];
        match &row.values {
            Ok(v) => {
                rec.extend(v.iter().map(|x| {
                    if x.is_nan() {
                        String::new()
                    } else {
                        x.to_string()
                    }
                }));
                rec.push(String::new());
                failed.push(Ok(0.0), at.clone());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), 6));
                rec.push(e.clone());
                failed.push(Err(e.clone()), at.clone());
            }
        }
        csv.write_record(&rec).map_err(io)?;
        pde.push(row.pde.clone(), at.clone());
        if let Some(c) = &row.characteristic {
            chr.push(c.clone(), at);
        }
    }
    let bytes = csv.into_inner().map_err(|e| CliError::Io(e.to_string()))?;

    report.checks.push(Check::residual(
        "rows",
        failed,
        f64::INFINITY,
        format!("{} grid rows", rows.len()),
    ));
    report.checks.push(Check::residual(
        "pde",
        pde,
        cfg.tolerance,
        "reconstructed φ in the characterizing equation",
    ));
    report.checks.push(Check::residual(
        "characteristic",
        chr,
        cfg.tolerance,
        "ψ₁ + [1 - (f + g s²)(b² - s²)] ψ₂ / (2s) with ψ = Φ(η), s ≠ 0",
    ));
    let reg = finsler_regularity(&spec, &grid, r.n);
    let (pos, neg) = (&reg.positive, &reg.negative);
    let pick =
        |a: (f64, [f64; 2]), b: (f64, [f64; 2])| if b.0 < a.0 || b.0.is_nan() { b } else { a };
    let mut check = regularity_check(
        reg.pass(),
        pos.nodes + neg.nodes == 0,
        pick(pos.worst_m1, neg.worst_m1),
        pick(pos.worst_m2, neg.worst_m2),
        r.n,
    );
    check.detail = format!(
        "Φ/√(b² - s²) and -(√(b² - s²)/s)∂_sΦ(η) for n = {}; s > 0: {}, s < 0: {}",
        r.n,
        if pos.pass() { "pass" } else { "fail" },
        if neg.pass() { "pass" } else { "fail" }
    );
    report.checks.push(check);
    report.table = table.map(|p| p.display().to_string());
    report.finish();
    Ok((report, bytes))
}

/// The catalog listing, or one resolved entry when the config names it.
pub fn catalog_listing(cfg: Option<&RunConfig>) -> Result<Report, CliError> {
    let wanted = cfg.and_then(|c| c.metric.catalog.as_ref());
    let mut entries = vec![];
    for e in catalog_entries() {
        if wanted.is_some_and(|w| w.name != e.name) {
            continue;
        }
        let mut entry = json!({
            "name": e.name,
            "origin": e.origin,
            "params": e.params.iter().map(|p| json!({ "name": p.name, "default": p.default })).collect::<Vec<_>>(),
            "htilde": e.htilde,
            "chart": format!("{:?}", e.chart),
            "closed_form": e.has_closed_form,
            "flags": e.flags,
        });
        if let Some(w) = wanted {
            let params = CatalogParams {
                values: w.params.clone(),
                htilde: w.htilde.clone(),
            };
            let item = catalog(&w.name, &params).map_err(CliError::config)?;
            entry["resolved"] = json!({ "b0": item.b0, "consts": item.consts, "f": item.spec.f.to_string(), "g": item.spec.g.to_string() });
        }
        entries.push(entry);
    }
    if let Some(w) = wanted {
        if entries.is_empty() {
            // produces the suggestion list
            catalog(&w.name, &CatalogParams::default()).map_err(CliError::config)?;
        }
    }
    let mut report = Report::new("catalog", json!({ "name": wanted.map(|w| w.name.clone()) }));
    report.checks.push(Check::new(
        "entries",
        Status::Pass,
        format!("{} entries", entries.len()),
    ));
    report.entries = Some(Value::Array(entries));
    report.finish();
    Ok(report)
}

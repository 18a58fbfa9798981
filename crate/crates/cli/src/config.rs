//! Run configuration (`"schema": 1`) and its resolution into library objects.

use crate::error::CliError;
use finsler_douglas::chart::{Chart, FormKind, MetricKind};
use finsler_douglas::expr::{Consts, Expr};
use finsler_douglas::gab::PhiSpec;
use finsler_douglas::solutions::{
    catalog, CatalogItem, CatalogParams, QuadratureConfig, SolutionSpec,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const SCHEMA: u32 = 1;

fn default_samples() -> usize {
    20
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_n() -> usize {
    3
}

fn default_cells() -> usize {
    10
}

fn zero() -> String {
    "0".into()
}

fn infinite() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    /// Must match the subcommand when present.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub chart: Option<ChartConfig>,
    pub metric: MetricConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub grid: GridConfig,
    /// Report path; `--out` wins.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// CSV path for `solve`.
    #[serde(default)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartConfig {
    /// `α = |y|`, `β = ⟨x + shift, y⟩`.
    Euclidean {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default)]
        shift: Option<Vec<f64>>,
    },
    MuFamily {
        #[serde(default = "default_n")]
        n: usize,
        mu: f64,
    },
    /// Euclidean `α` with the non-closed `β = x² dx¹`.
    Shear {
        #[serde(default = "default_n")]
        n: usize,
    },
    /// Euclidean `α` with the closed, non-conformal `β = d(x¹x²)`.
    ExactXy {
        #[serde(default = "default_n")]
        n: usize,
    },
    /// The chart the catalog entry is listed with.
    Catalog {
        #[serde(default = "default_n")]
        n: usize,
    },
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub catalog: Option<CatalogSource>,
    #[serde(default)]
    pub phi: Option<PhiSource>,
    #[serde(default)]
    pub solution: Option<SolutionSource>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSource {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub htilde: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSource {
    /// `φ` in the variables `b2` and `s`.
    pub expr: String,
    #[serde(default)]
    pub consts: Consts,
    #[serde(default = "infinite")]
    pub b0: f64,
    /// Coefficients for `pde-check`, in `t = b²`.
    #[serde(default = "zero")]
    pub f: String,
    #[serde(default = "zero")]
    pub g: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSource {
    pub f: String,
    pub g: String,
    #[serde(default = "zero")]
    pub h: String,
    pub big_phi: String,
    /// Closed `∫(f + g t)` and `∫ g e^{A}`; numeric when absent.
    #[serde(default)]
    pub antiderivatives: Option<AntiderivativeSource>,
    #[serde(default)]
    pub consts: Consts,
    #[serde(default = "infinite")]
    pub b0: f64,
    #[serde(default)]
    pub quadrature: Option<QuadratureSource>,
    /// A claimed closed `φ(b2, s)`, checked against `big_phi` by `pde-check`.
    #[serde(default)]
    pub phi: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AntiderivativeSource {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSource {
    pub nodes: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Defaults to `min(0.8, 0.9 b₀)`.
    #[serde(default)]
    pub b_max: Option<f64>,
    #[serde(default = "default_cells")]
    pub nb: usize,
    #[serde(default = "default_cells")]
    pub ns: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            b_max: None,
            nb: default_cells(),
            ns: default_cells(),
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.tol {
            self.tolerance = t;
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
    }

    pub fn validate(&self, command: &str) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema != SCHEMA {
            return bad(format!(
                "unsupported schema {} (expected {SCHEMA})",
                self.schema
            ));
        }
        if let Some(c) = &self.command {
            if c != command {
                return bad(format!("config is for `{c}`, invoked as `{command}`"));
            }
        }
        let sources = [
            self.metric.catalog.is_some(),
            self.metric.phi.is_some(),
            self.metric.solution.is_some(),
        ];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return bad("metric needs exactly one of `catalog`, `phi`, `solution`".into());
        }
        if !(self.tolerance > 0.0) {
            return bad(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if let Some(b) = self.grid.b_max {
            if !(b > 0.0) {
                return bad(format!("grid.b_max must be positive, got {b}"));
            }
        }
        Ok(())
    }
}

/// What a config resolves to.
pub struct Resolved {
    pub chart: Chart,
    pub chart_label: String,
    pub n: usize,
    /// The `φ` checked by `verify` and `pde-check`.
    pub phi: PhiSpec,
    pub metric_label: String,
    /// `(f, g)` with their constants.
    pub coefficients: (Expr, Expr, Consts),
    pub spec: Option<Arc<SolutionSpec>>,
    /// Reconstructed `φ` when a solution spec is present.
    pub reconstructed: Option<PhiSpec>,
    pub b0: f64,
    pub flags: Vec<String>,
}

fn catalog_item(src: &CatalogSource) -> Result<CatalogItem, CliError> {
    let params = CatalogParams {
        values: src.params.clone(),
        htilde: src.htilde.clone(),
    };
    catalog(&src.name, &params).map_err(CliError::config)
}

fn build_chart(
    cfg: Option<&ChartConfig>,
    item: Option<&CatalogItem>,
) -> Result<(Chart, String, usize), CliError> {
    let cfg = cfg.cloned().unwrap_or(match item {
        Some(_) => ChartConfig::Catalog { n: default_n() },
        None => ChartConfig::Euclidean {
            n: default_n(),
            shift: None,
        },
    });
    let chart = match &cfg {
        ChartConfig::Euclidean { n, shift } => {
            Chart::euclidean(*n, shift.clone().unwrap_or_else(|| vec![0.0; *n]))
        }
        ChartConfig::MuFamily { n, mu } => Chart::mu_family(*n, *mu),
        ChartConfig::Shear { n } => Chart::new(*n, MetricKind::Euclidean, FormKind::Shear),
        ChartConfig::ExactXy { n } => Chart::new(*n, MetricKind::Euclidean, FormKind::ExactXY),
        ChartConfig::Catalog { n } => match item {
            Some(it) => it.chart.build(*n),
            None => {
                return Err(CliError::Config(
                    "chart kind `catalog` needs a catalog metric".into(),
                ))
            }
        },
    }
    .map_err(CliError::config)?;
    let label = match &cfg {
        ChartConfig::Catalog { n } => format!("{:?} n={n}", item.map(|i| i.chart).unwrap()),
        other => format!("{other:?}"),
    };
    let n = chart_dim(&cfg);
    Ok((chart, label, n))
}

fn chart_dim(cfg: &ChartConfig) -> usize {
    match cfg {
        ChartConfig::Euclidean { n, .. }
        | ChartConfig::MuFamily { n, .. }
        | ChartConfig::Shear { n }
        | ChartConfig::ExactXy { n }
        | ChartConfig::Catalog { n } => *n,
    }
}

fn solution_spec(src: &SolutionSource) -> Result<SolutionSpec, CliError> {
    let quadrature = src
        .quadrature
        .as_ref()
        .map(|q| QuadratureConfig {
            nodes: q.nodes,
            tol: q.tol,
        })
        .unwrap_or_default();
    SolutionSpec::parse(
        &src.f,
        &src.g,
        &src.h,
        &src.big_phi,
        src.antiderivatives
            .as_ref()
            .map(|a| (a.a.as_str(), a.b.as_str())),
        src.consts.clone(),
        quadrature,
    )
    .map_err(CliError::config)
}

fn coefficient(src: &str, consts: &Consts) -> Result<Expr, CliError> {
    let names: Vec<&str> = consts.keys().map(String::as_str).collect();
    Expr::parse_with(src, &["t"], &names).map_err(CliError::config)
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let m = &self.metric;
        if let Some(src) = &m.catalog {
            let item = catalog_item(src)?;
            let (chart, chart_label, n) = build_chart(self.chart.as_ref(), Some(&item))?;
            let phi = item
                .closed
                .clone()
                .unwrap_or_else(|| item.reconstructed.clone());
            return Ok(Resolved {
                chart,
                chart_label,
                n,
                phi,
                metric_label: format!("catalog:{}", item.name),
                coefficients: (
                    item.spec.f.clone(),
                    item.spec.g.clone(),
                    item.consts.clone(),
                ),
                reconstructed: Some(item.reconstructed.clone()),
                spec: Some(item.spec.clone()),
                b0: item.b0,
                flags: item.flags.clone(),
            });
        }
        let (chart, chart_label, n) = build_chart(self.chart.as_ref(), None)?;
        if let Some(src) = &m.phi {
            let phi = PhiSpec::from_expr(&src.expr, src.consts.clone(), src.b0)
                .map_err(CliError::config)?;
            return Ok(Resolved {
                chart,
                chart_label,
                n,
                phi,
                metric_label: format!("phi:{}", src.expr),
                coefficients: (
                    coefficient(&src.f, &src.consts)?,
                    coefficient(&src.g, &src.consts)?,
                    src.consts.clone(),
                ),
                spec: None,
                reconstructed: None,
                b0: src.b0,
                flags: vec![],
            });
        }
        let src = m.solution.as_ref().expect("validated");
        let spec = Arc::new(solution_spec(src)?);
        let reconstructed = spec.phi_spec(src.b0, "solution");
        let phi = match &src.phi {
            Some(e) => {
                PhiSpec::from_expr(e, src.consts.clone(), src.b0).map_err(CliError::config)?
            }
            None => reconstructed.clone(),
        };
        Ok(Resolved {
            chart,
            chart_label,
            n,
            phi,
            metric_label: format!("solution:Phi={}", src.big_phi),
            coefficients: (spec.f.clone(), spec.g.clone(), spec.consts.clone()),
            spec: Some(spec),
            reconstructed: Some(reconstructed),
            b0: src.b0,
            flags: vec![],
        })
    }

    pub fn b_max(&self, b0: f64) -> f64 {
        self.grid.b_max.unwrap_or(0.8_f64.min(0.9 * b0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_json(text).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = cfg(r#"{"schema": 1, "metric": {"catalog": {"name": "funk"}}}"#);
        assert_eq!((c.samples, c.seed, c.tolerance), (20, 0, 1e-6));
        assert_eq!((c.grid.nb, c.grid.ns), (10, 10));
        c.validate("verify").unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.n, 3);
        assert!((r.b0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exactly_one_source() {
        let none = cfg(r#"{"schema": 1, "metric": {}}"#);
        assert!(none.validate("verify").is_err());
        let two =
            cfg(r#"{"schema": 1, "metric": {"catalog": {"name": "funk"}, "phi": {"expr": "1"}}}"#);
        assert!(two.validate("verify").is_err());
    }

    #[test]
    fn rejects_bad_values_and_fields() {
        for text in [
            r#"{"schema": 1, "samples": 0, "metric": {"phi": {"expr": "1"}}}"#,
            r#"{"schema": 1, "tolerance": 0, "metric": {"phi": {"expr": "1"}}}"#,
            r#"{"schema": 2, "metric": {"phi": {"expr": "1"}}}"#,
            r#"{"schema": 1, "command": "solve", "metric": {"phi": {"expr": "1"}}}"#,
        ] {
            assert!(cfg(text).validate("verify").is_err(), "{text}");
        }
        assert!(RunConfig::from_json(r#"{"schema": 1, "metric": {}, "sample": 3}"#).is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = cfg(r#"{"schema": 1, "seed": 4, "metric": {"phi": {"expr": "1"}}}"#);
        c.apply(&Overrides {
            seed: Some(9),
            tol: Some(1e-3),
            out: None,
        });
        assert_eq!((c.seed, c.tolerance), (9, 1e-3));
    }

    #[test]
    fn unknown_catalog_name_is_a_config_error() {
        let c = cfg(r#"{"schema": 1, "metric": {"catalog": {"name": "fnk"}}}"#);
        let e = c.resolve().err().unwrap();
        assert!(matches!(e, CliError::Config(_)));
        assert!(e.to_string().contains("funk"));
    }
}

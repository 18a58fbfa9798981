//! Named members of the solution family, with closed forms where known.

use super::{s_times_i_n, QuadratureConfig, SolutionSpec};
use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{Consts, Expr};
use crate::gab::{PhiSpec, Provenance};
use crate::jets::{Jet2, Scalar};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
}

/// Static description of a catalog name.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    /// What the entry is, in words.
    pub origin: &'static str,
    pub params: &'static [ParamInfo],
    /// Default `h̃(t)`, the coefficient of `s` in the closed form.
    pub htilde: &'static str,
    pub chart: ChartChoice,
    pub has_closed_form: bool,
    pub flags: &'static [&'static str],
}

/// Which builtin chart an entry is exercised on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartChoice {
    /// `α = |y|`, `β = ⟨x + shift·e₁, y⟩`.
    Euclidean {
        shift: f64,
    },
    MuFamily(f64),
}

impl ChartChoice {
    pub fn build(&self, n: usize) -> Result<Chart> {
        match *self {
            ChartChoice::Euclidean { shift } => {
                let mut v = vec![0.0; n];
                if n > 0 {
                    v[0] = shift;
                }
                Chart::euclidean(n, v)
            }
            ChartChoice::MuFamily(mu) => Chart::mu_family(n, mu),
        }
    }
}

/// Overrides for an entry: numeric parameters and an optional `h̃(t)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CatalogParams {
    pub values: BTreeMap<String, f64>,
    pub htilde: Option<String>,
}

impl CatalogParams {
    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn with_htilde(mut self, src: &str) -> Self {
        self.htilde = Some(src.to_string());
        self
    }
}

/// A resolved entry.
#[derive(Debug, Clone)]
pub struct CatalogItem {
    pub name: String,
    pub spec: Arc<SolutionSpec>,
    /// Closed-form `φ`, including the `h̃(b²) s` term.
    pub closed: Option<PhiSpec>,
    /// `φ` reconstructed from `spec`.
    pub reconstructed: PhiSpec,
    pub b0: f64,
    pub chart: ChartChoice,
    pub consts: Consts,
    pub flags: Vec<String>,
}

const NONE: &[ParamInfo] = &[];
const EX1: &[ParamInfo] = &[
    ParamInfo {
        name: "m",
        default: 3.0,
    },
    ParamInfo {
        name: "f0",
        default: 0.5,
    },
];
const EX2: &[ParamInfo] = &[
    ParamInfo {
        name: "eps",
        default: 1.0,
    },
    ParamInfo {
        name: "xi",
        default: 0.5,
    },
    ParamInfo {
        name: "mu",
        default: 0.5,
    },
];
const FUNK: &[ParamInfo] = &[
    ParamInfo {
        name: "eps",
        default: 1.0,
    },
    ParamInfo {
        name: "xi",
        default: -1.0,
    },
    ParamInfo {
        name: "mu",
        default: 1.0,
    },
];
const GFUNK: &[ParamInfo] = &[
    ParamInfo {
        name: "eps",
        default: 1.0,
    },
    ParamInfo {
        name: "xi",
        default: -1.0,
    },
    ParamInfo {
        name: "mu",
        default: 1.0,
    },
    ParamInfo {
        name: "shift",
        default: 0.3,
    },
];
const BERWALD: &[ParamInfo] = &[ParamInfo {
    name: "mu",
    default: -1.0,
}];
const GBERWALD: &[ParamInfo] = &[
    ParamInfo {
        name: "sign",
        default: 1.0,
    },
    ParamInfo {
        name: "shift",
        default: 0.3,
    },
];
const EX5: &[ParamInfo] = &[
    ParamInfo {
        name: "c",
        default: 1.0,
    },
    ParamInfo {
        name: "eps",
        default: 0.5,
    },
];
const EX6: &[ParamInfo] = &[ParamInfo {
    name: "lambda",
    default: 0.3,
}];

const fn euclid(shift: f64) -> ChartChoice {
    ChartChoice::Euclidean { shift }
}

/// Every catalog name with its defaults.
pub fn catalog_entries() -> Vec<CatalogEntry> {
    let e = |name, origin, params, htilde, chart, flags| CatalogEntry {
        name,
        origin,
        params,
        htilde,
        chart,
        has_closed_form: true,
        flags,
    };
    vec![
        e(
            "example1",
            "power profile Φ = η^{m/2} with constant f; closed form through I_m",
            EX1,
            "0",
            euclid(0.0),
            &[],
        ),
        e(
            "example2",
            "Φ = ε√(η/(1 - μ²η)) with g = 0",
            EX2,
            "0",
            euclid(0.0),
            &[],
        ),
        e(
            "funk",
            "example2 at ε = 1, ξ = -1, μ = 1: the Funk metric of the unit ball",
            FUNK,
            "mu/(1 + xi*t)",
            euclid(0.0),
            &["projectively flat"],
        ),
        e(
            "generalized-funk",
            "funk on a translated position form",
            GFUNK,
            "mu/(1 + xi*t)",
            euclid(0.3),
            &["projectively flat"],
        ),
        e(
            "example3",
            "Φ = (1 + η)√η with f = g = 0",
            NONE,
            "0",
            euclid(0.0),
            &[],
        ),
        e(
            "berwald",
            "example3 with h̃ = 2√(1 + t) on the μ-family chart",
            BERWALD,
            "2*sqrt(1 + t)",
            ChartChoice::MuFamily(-1.0),
            &["projectively flat"],
        ),
        e(
            "example4",
            "Φ = √η/(1 - η)^{3/2} with f = g = 0",
            NONE,
            "0",
            euclid(0.0),
            &[],
        ),
        e(
            "generalized-berwald",
            "example4 with h̃ = 2·sign/(1 - t)² on a translated position form",
            GBERWALD,
            "sign*2/(1 - t)^2",
            euclid(0.3),
            &["projectively flat"],
        ),
        e(
            "example5",
            "Φ = ½(1/√(c - η) - ε/√(c - ε²η))√η with f = g = 0",
            EX5,
            "0",
            euclid(0.0),
            &[],
        ),
        e(
            "shen",
            "example5 with h̃ = ½(1/(c - t) - ε²/(c - ε²t))",
            EX5,
            "0.5*(1/(c - t) - eps^2/(c - eps^2*t))",
            euclid(0.0),
            &["projectively flat"],
        ),
        e(
            "example6",
            "Φ = √η with f = -λ²t/(1 - λt)², g = λ²/(1 - λt)²",
            EX6,
            "0",
            euclid(0.0),
            &["Douglas, not projectively flat"],
        ),
    ]
}

fn suggestions(name: &str) -> Vec<String> {
    let mut scored: Vec<(usize, &str)> = catalog_entries()
        .iter()
        .map(|e| (strsim::levenshtein(name, e.name), e.name))
        .filter(|(d, n)| *d <= 3 || n.contains(name))
        .collect();
    scored.sort();
    scored
        .into_iter()
        .take(3)
        .map(|(_, n)| n.to_string())
        .collect()
}

struct Raw {
    f: &'static str,
    g: &'static str,
    big_phi: &'static str,
    a: &'static str,
    b: &'static str,
    body: &'static str,
    b0: f64,
}

fn raw(base: &str, p: &Consts) -> Result<Raw> {
    let get = |k: &str| p.get(k).copied().unwrap_or(f64::NAN);
    let invalid = |msg: String| Err(Error::InvalidParam(msg));
    Ok(match base {
        "example1" => {
            let m = get("m");
            if !(m >= 1.0 && m.fract() == 0.0 && m <= 64.0) {
                return invalid(format!("m must be a positive integer, got {m}"));
            }
            Raw {
                f: "2*f0/m",
                g: "0",
                big_phi: "t^(m/2)",
                a: "2*f0*t/m",
                b: "0",
                body: "",
                b0: f64::INFINITY,
            }
        }
        "example2" => {
            let (eps, xi, mu) = (get("eps"), get("xi"), get("mu"));
            if !(eps > 0.0) {
                return invalid(format!("eps must be positive, got {eps}"));
            }
            let k = mu * mu + eps * xi;
            let mut b0 = f64::INFINITY;
            if xi < 0.0 {
                b0 = b0.min(1.0 / (-xi).sqrt());
            }
            if k < 0.0 {
                b0 = b0.min((-eps / k).sqrt());
            }
            Raw {
                f: "(mu^2 + eps*xi)/(eps + (mu^2 + eps*xi)*t)",
                g: "0",
                big_phi: "eps*sqrt(t/(1 - mu^2*t))",
                a: "log(eps + (mu^2 + eps*xi)*t)",
                b: "0",
                body: "sqrt(eps + eps*xi*b2 + mu^2*s^2)/(1 + xi*b2)",
                b0,
            }
        }
        "example3" => Raw {
            f: "0",
            g: "0",
            big_phi: "(1 + t)*sqrt(t)",
            a: "0",
            b: "0",
            body: "1 + b2 + s^2",
            b0: f64::INFINITY,
        },
        "example4" => Raw {
            f: "0",
            g: "0",
            big_phi: "sqrt(t)/(1 - t)^(3/2)",
            a: "0",
            b: "0",
            body: "(1 - b2 + 2*s^2)/((1 - b2)^2*sqrt(1 - b2 + s^2))",
            b0: 1.0,
        },
        "example5" => {
            let (c, eps) = (get("c"), get("eps"));
            if !(c > 0.0 && eps < 1.0) {
                return invalid(format!("need c > 0 and eps < 1, got c = {c}, eps = {eps}"));
            }
            let b0 = if eps == 0.0 {
                c.sqrt()
            } else {
                c.sqrt() * (1.0 / eps.abs()).min(1.0)
            };
            Raw {
                f: "0",
                g: "0",
                big_phi: "0.5*(1/sqrt(c - t) - eps/sqrt(c - eps^2*t))*sqrt(t)",
                a: "0",
                b: "0",
                body: "0.5*(sqrt(c - b2 + s^2)/(c - b2) - eps*sqrt(c - eps^2*(b2 - s^2))/(c - eps^2*b2))",
                b0,
            }
        }
        "example6" => {
            let lam = get("lambda");
            if !lam.is_finite() {
                return invalid("lambda must be finite".into());
            }
            let b0 = if lam > 0.0 {
                1.0 / (2.0 * lam).sqrt()
            } else {
                f64::INFINITY
            };
            Raw {
                f: "-lambda^2*t/(1 - lambda*t)^2",
                g: "lambda^2/(1 - lambda*t)^2",
                big_phi: "sqrt(t)",
                a: "0",
                b: "lambda/(1 - lambda*t)",
                body: "sqrt((1 - lambda*b2)*(1 - 2*lambda*b2 + lambda*s^2))/(1 - 2*lambda*b2)",
                b0,
            }
        }
        _ => unreachable!("base entries are fixed"),
    })
}

fn base_of(name: &str) -> &'static str {
    match name {
        "funk" | "generalized-funk" => "example2",
        "berwald" => "example3",
        "generalized-berwald" => "example4",
        "shen" => "example5",
        "example1" => "example1",
        "example2" => "example2",
        "example3" => "example3",
        "example4" => "example4",
        "example5" => "example5",
        _ => "example6",
    }
}

/// Resolve a catalog name with parameter overrides.
pub fn catalog(name: &str, params: &CatalogParams) -> Result<CatalogItem> {
    let entries = catalog_entries();
    let entry = entries
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownCatalog {
            name: name.to_string(),
            suggestions: suggestions(name),
        })?;
    let mut consts: Consts = entry
        .params
        .iter()
        .map(|p| (p.name.to_string(), p.default))
        .collect();
    for (k, v) in &params.values {
        if !consts.contains_key(k) {
            let known: Vec<&str> = entry.params.iter().map(|p| p.name).collect();
            return Err(Error::InvalidParam(format!(
                "{name} has no parameter `{k}` (known: {})",
                if known.is_empty() {
                    "none".to_string()
                } else {
                    known.join(", ")
                }
            )));
        }
        if !v.is_finite() {
            return Err(Error::InvalidParam(format!(
                "parameter `{k}` must be finite"
            )));
        }
        consts.insert(k.clone(), *v);
    }
    let mut chart = entry.chart;
    if let Some(&shift) = consts.get("shift") {
        chart = ChartChoice::Euclidean { shift };
    }
    if name == "berwald" {
        chart = ChartChoice::MuFamily(consts["mu"]);
    }
    let r = raw(base_of(name), &consts)?;
    let htilde_src = params.htilde.as_deref().unwrap_or(entry.htilde);
    let spec = Arc::new(SolutionSpec::parse(
        r.f,
        r.g,
        htilde_src,
        r.big_phi,
        Some((r.a, r.b)),
        consts.clone(),
        QuadratureConfig::default(),
    )?);
    let names: Vec<&str> = consts.keys().map(String::as_str).collect();
    let htilde = Expr::parse_with(htilde_src, &["t"], &names)?;
    let closed = if base_of(name) == "example1" {
        let (m, f0) = (consts["m"] as u32, consts["f0"]);
        let c = consts.clone();
        PhiSpec::from_fn(
            move |b2: &Jet2, s: &Jet2| {
                let lead = htilde.eval(std::slice::from_ref(b2), &c)? * s.clone();
                let damp = b2.scale(-f0).exp()?;
                Ok(lead - damp * s_times_i_n(m, b2, s)?)
            },
            r.b0,
            Provenance::Catalog(name.to_string()),
        )
    } else {
        let body = Expr::parse_with(r.body, &["b2", "s"], &names)?;
        let c = consts.clone();
        PhiSpec::from_fn(
            move |b2: &Jet2, s: &Jet2| {
                let lead = htilde.eval(std::slice::from_ref(b2), &c)? * s.clone();
                Ok(lead + body.eval(&[b2.clone(), s.clone()], &c)?)
            },
            r.b0,
            Provenance::Catalog(name.to_string()),
        )
    };
    Ok(CatalogItem {
        name: name.to_string(),
        reconstructed: spec.phi_spec(r.b0, name),
        spec,
        closed: Some(closed),
        b0: r.b0,
        chart,
        consts,
        flags: entry.flags.iter().map(|s| s.to_string()).collect(),
    })
}

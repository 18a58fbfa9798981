//! The Douglas solution family built from `(f, g, h, Φ)`.
//!
//! With `A = ∫(f + g b²) db²` and `B = ∫ g e^A db²`, the characteristic
//! invariant is `η = (b² - s²) / (e^A - (b² - s²) B)` and
//!
//! ```text
//! φ = s (h(b²) - ∫ Φ(η) / (s² √(b² - s²)) ds).
//! ```
//!
//! The s-integral is realized as its Hadamard finite part: with
//! `q(σ) = Φ(η(b², σ)) / √(b² - σ²)` (even in σ) and `k₀ = q(0)`,
//!
//! ```text
//! ∫ q/σ² dσ  :=  -k₀/s + ∫₀^s (q(σ) - k₀)/σ² dσ,
//! ```
//!
//! which is odd in `s`, smooth through `s = 0` after multiplying by `s`, and
//! gives `φ(b², 0) = k₀`. Any other antiderivative differs by `κ(b²) s`,
//! absorbed into `h`. After `σ = sτ`,
//!
//! ```text
//! φ = s h + k₀ - ∫₀¹ (q(sτ) - k₀)/τ² dτ,
//! ```
//!
//! and the integrand is regular at `τ = 0`. `b²`-derivatives are carried by
//! jets through the quadrature nodes.

mod catalog;
mod integrals;
pub mod quad;

pub use catalog::{
    catalog, catalog_entries, CatalogEntry, CatalogItem, CatalogParams, ChartChoice, ParamInfo,
};
pub use integrals::{double_factorial, i_n, s_times_i_n};

use crate::error::{Error, Result};
use crate::expr::{Consts, Expr};
use crate::gab::{Margins, PhiSpec, Profile, Provenance, RegularityReport};
use crate::jets::{Jet2, Scalar};
use quad::{integrate, integrate_scaled, GaussLegendre};
use std::sync::Arc;

/// Below `|σ| < SERIES_FRACTION * b` the integrand is taken from its Taylor
/// series in σ instead of by direct subtraction.
const SERIES_FRACTION: f64 = 0.02;
const SERIES_ORDER: usize = 16;
/// From `|s| >= RECURSION_FRACTION * b` on, s-derivatives come from the
/// recursion instead of the jet-valued quadrature.
const RECURSION_FRACTION: f64 = 0.5;

/// How `∫(f + g b²) db²` and `∫ g e^A db²` are obtained.
#[derive(Debug, Clone)]
pub enum Antiderivatives {
    /// User-supplied closed forms `A(t)` and `B(t)`.
    Closed { a: Expr, b: Expr },
    /// Gauss–Legendre quadrature anchored at `b² = 0`.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Nodes per panel of the adaptive rule.
    pub nodes: usize,
    /// Relative tolerance per panel.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes: 20,
            tol: 1e-11,
        }
    }
}

/// The data `(f, g, h, Φ)` of a solution, each an expression in `t`
/// (`t = b²` for `f, g, h`, `t = η` for `Φ`).
#[derive(Debug, Clone)]
pub struct SolutionSpec {
    pub f: Expr,
    pub g: Expr,
    pub h: Expr,
    pub big_phi: Expr,
    pub consts: Consts,
    pub antiderivatives: Antiderivatives,
    pub quadrature: QuadratureConfig,
    rule: Arc<GaussLegendre>,
}

impl SolutionSpec {
    /// Parse from expression sources. `antiderivatives` holds `(A, B)`
    /// sources; `None` selects numeric quadrature.
    pub fn parse(
        f: &str,
        g: &str,
        h: &str,
        big_phi: &str,
        antiderivatives: Option<(&str, &str)>,
        consts: Consts,
        quadrature: QuadratureConfig,
    ) -> Result<Self> {
        if quadrature.nodes == 0 || !(quadrature.tol > 0.0) {
            return Err(Error::InvalidParam(
                "quadrature needs nodes >= 1 and tol > 0".into(),
            ));
        }
        let names: Vec<&str> = consts.keys().map(String::as_str).collect();
        let p = |src: &str| Expr::parse_with(src, &["t"], &names);
        let antiderivatives = match antiderivatives {
            Some((a, b)) => Antiderivatives::Closed { a: p(a)?, b: p(b)? },
            None => Antiderivatives::Numeric,
        };
        Ok(Self {
            f: p(f)?,
            g: p(g)?,
            h: p(h)?,
            big_phi: p(big_phi)?,
            consts,
            antiderivatives,
            quadrature,
            rule: Arc::new(GaussLegendre::new(quadrature.nodes)),
        })
    }

    fn u_jet(&self, e: &Expr, b2: f64, du: usize, dv: usize) -> Result<Jet2> {
        e.eval(&[Jet2::var_u(b2, du, dv)], &self.consts)
    }

    fn real(&self, e: &Expr, t: f64) -> Result<f64> {
        e.eval_real(t, &self.consts)
    }

    fn quad1<F>(&self, f: F, a: f64, b: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<Vec<f64>>,
    {
        Ok(integrate(&self.rule, f, a, b, 1, self.quadrature.tol)?[0])
    }

    fn a_numeric(&self, b2: f64) -> Result<f64> {
        self.quad1(
            |t| Ok(vec![self.real(&self.f, t)? + self.real(&self.g, t)? * t]),
            0.0,
            b2,
        )
    }

    /// `A(b²)` and `B(b²)` as jets in `b²` of orders `(du, 0)`.
    pub fn antiderivatives(&self, b2: f64, du: usize) -> Result<(Jet2, Jet2)> {
        match &self.antiderivatives {
            Antiderivatives::Closed { a, b } => {
                Ok((self.u_jet(a, b2, du, 0)?, self.u_jet(b, b2, du, 0)?))
            }
            Antiderivatives::Numeric => {
                let a0 = self.a_numeric(b2)?;
                let b0 = self.quad1(
                    |t| Ok(vec![self.real(&self.g, t)? * self.a_numeric(t)?.exp()]),
                    0.0,
                    b2,
                )?;
                let mut a = Jet2::constant(a0, du, 0);
                let mut b = Jet2::constant(b0, du, 0);
                if du >= 1 {
                    // derivatives from the integrands
                    let u = Jet2::var_u(b2, du - 1, 0);
                    let fa = self.u_jet(&self.f, b2, du - 1, 0)?
                        + self.u_jet(&self.g, b2, du - 1, 0)? * u;
                    for k in 1..=du {
                        a.set(k, 0, fa.coeff(k - 1, 0) / k as f64);
                    }
                    let gb = self.u_jet(&self.g, b2, du - 1, 0)? * a.truncate(du - 1, 0).exp()?;
                    for k in 1..=du {
                        b.set(k, 0, gb.coeff(k - 1, 0) / k as f64);
                    }
                }
                Ok((a, b))
            }
        }
    }

    fn eta_with(&self, ab: &(Jet2, Jet2), b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2> {
        let u = Jet2::var_u(b2, du, dv);
        let v = Jet2::var_v(s, du, dv);
        let w = &u - &(&v * &v);
        let den = &ab.0.truncate(du, dv).exp()? - &(&w * &ab.1.truncate(du, dv));
        let d0 = den.coeff(0, 0);
        if d0 == 0.0 || !d0.is_finite() {
            return Err(Error::ZeroDenominator { b2, s });
        }
        w.try_div(&den)
    }

    /// `η` as a jet of orders `(du, dv)` at `(b², s)`.
    pub fn eta_jet(&self, b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2> {
        let ab = self.antiderivatives(b2, du)?;
        self.eta_with(&ab, b2, s, du, dv)
    }

    pub fn eta(&self, b2: f64, s: f64) -> Result<f64> {
        Ok(self.eta_jet(b2, s, 0, 0)?.coeff(0, 0))
    }

    /// `Φ(η(b², s))` as a jet.
    pub fn big_phi_jet(&self, b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2> {
        let eta = self.eta_jet(b2, s, du, dv)?;
        self.big_phi.eval(&[eta], &self.consts)
    }

    /// `q = Φ(η) / √(b² - σ²)` as a jet.
    fn q_with(&self, ab: &(Jet2, Jet2), b2: f64, sigma: f64, du: usize, dv: usize) -> Result<Jet2> {
        let eta = self.eta_with(ab, b2, sigma, du, dv)?;
        let big = self.big_phi.eval(&[eta], &self.consts)?;
        let u = Jet2::var_u(b2, du, dv);
        let v = Jet2::var_v(sigma, du, dv);
        Ok(big * (&u - &(&v * &v)).powf(-0.5)?)
    }

    /// The reconstructed `φ` as a jet of orders `(du, dv)` at `(b², s)`.
    pub fn phi_jet(&self, b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2> {
        if !(b2 > 0.0) || !(s * s < b2) {
            return Err(Error::Domain {
                op: "phi",
                value: s,
            });
        }
        let b = b2.sqrt();
        let ab = self.antiderivatives(b2, du)?;
        let h = self.u_jet(&self.h, b2, du, dv)?;
        // q as a series in σ about 0, coefficients are jets in b²
        let qs = self.q_with(&ab, b2, 0.0, du, SERIES_ORDER)?;
        let k0: Vec<f64> = (0..=du).map(|a| qs.coeff(a, 0)).collect();
        // φ = s h + k₀ - ∫₀¹ (q(sτ) - k₀)/τ² dτ. For small |s| the s-jet is
        // carried through the integrand (q(τ(s + δ)) has δ-coefficients
        // q_j(sτ) τ^j); otherwise only values are integrated and higher
        // coefficients follow from φ - sφ₂ = q.
        let recur = s.abs() >= RECURSION_FRACTION * b;
        let jmax = if recur { 0 } else { dv };
        let width = (du + 1) * (jmax + 1);
        let at = |a: usize, j: usize| a * (jmax + 1) + j;
        // coefficient j lives on the scale b^{-j}
        let scales: Vec<f64> = (0..width)
            .map(|i| b.powi(-((i % (jmax + 1)) as i32)))
            .collect();
        let integral = integrate_scaled(
            &self.rule,
            |tau| {
                let mut out = vec![0.0; width];
                let sigma = s * tau;
                if sigma.abs() < SERIES_FRACTION * b {
                    for a in 0..=du {
                        for j in 0..=jmax {
                            out[at(a, j)] = (j.max(2)..=SERIES_ORDER)
                                .map(|m| {
                                    qs.coeff(a, m)
                                        * binomial(m, j)
                                        * s.powi((m - j) as i32)
                                        * tau.powi(m as i32 - 2)
                                })
                                .sum();
                        }
                    }
                } else {
                    let q = self.q_with(&ab, b2, sigma, du, jmax)?;
                    for a in 0..=du {
                        for j in 0..=jmax {
                            let mut c = q.coeff(a, j) * tau.powi(j as i32);
                            if j == 0 {
                                c -= k0[a];
                            }
                            out[at(a, j)] = c / (tau * tau);
                        }
                    }
                }
                Ok(out)
            },
            0.0,
            1.0,
            &scales,
            self.quadrature.tol,
        )?;
        let mut phi = &Jet2::var_v(s, du, dv) * &h;
        for a in 0..=du {
            for j in 0..=jmax {
                let base = if j == 0 { k0[a] } else { 0.0 };
                phi.set(a, j, phi.coeff(a, j) + base - integral[at(a, j)]);
            }
        }
        if recur && dv >= 1 {
            // p_{j+1} = ((1 - j) p_j - q_j) / ((j + 1) s)
            let q = self.q_with(&ab, b2, s, du, dv)?;
            for a in 0..=du {
                for j in 0..dv {
                    let next =
                        ((1.0 - j as f64) * phi.coeff(a, j) - q.coeff(a, j)) / ((j + 1) as f64 * s);
                    phi.set(a, j + 1, next);
                }
            }
        }
        Ok(phi)
    }

    /// Wrap the reconstruction as a profile.
    pub fn phi_spec(self: &Arc<Self>, b0: f64, label: &str) -> PhiSpec {
        PhiSpec::new(
            Arc::new(SolutionProfile(self.clone())),
            b0,
            Provenance::Solution(label.to_string()),
        )
    }
}

fn binomial(m: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

struct SolutionProfile(Arc<SolutionSpec>);

impl Profile for SolutionProfile {
    fn jet(&self, b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2> {
        self.0.phi_jet(b2, s, du, dv)
    }
}

/// `φ(b², s)` reconstructed from the solution data.
pub fn phi_from_spec(spec: &SolutionSpec, b2: f64, s: f64) -> Result<f64> {
    Ok(spec.phi_jet(b2, s, 0, 0)?.coeff(0, 0))
}

/// `ψ₁ + [1 - (f + g s²)(b² - s²)] ψ₂ / (2s)` with `ψ = Φ(η)`.
pub fn characteristic_residual(spec: &SolutionSpec, b2: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Err(Error::Domain {
            op: "characteristic",
            value: s,
        });
    }
    let psi = spec.big_phi_jet(b2, s, 1, 1)?;
    let f = spec.real(&spec.f, b2)?;
    let g = spec.real(&spec.g, b2)?;
    let coef = (1.0 - (f + g * s * s) * (b2 - s * s)) / (2.0 * s);
    Ok(psi.partial(1, 0) + coef * psi.partial(0, 1))
}

/// `(φ - sφ₂) - Φ(η)/√(b² - s²)` for a closed-form `φ`.
pub fn psi_identity_residual(spec: &SolutionSpec, phi: &PhiSpec, b2: f64, s: f64) -> Result<f64> {
    let p = phi.partials(b2, s)?;
    let big = spec.big_phi_jet(b2, s, 0, 0)?.coeff(0, 0);
    Ok(p.phi - s * p.p2 - big / (b2 - s * s).sqrt())
}

/// Margins `Φ/√(b² - s²)` and `-(√(b² - s²)/s) ∂_s Φ(η)`.
pub fn solution_margins(spec: &SolutionSpec, b2: f64, s: f64) -> Result<Margins> {
    let big = spec.big_phi_jet(b2, s, 0, 1)?;
    let root = (b2 - s * s).sqrt();
    Ok(Margins {
        m1: big.coeff(0, 0) / root,
        m2: -root / s * big.partial(0, 1),
    })
}

/// Sign report for a solution, with `s > 0` and `s < 0` nodes kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct FinslerRegularity {
    pub positive: RegularityReport,
    pub negative: RegularityReport,
    /// Per input node; `None` where `s = 0` (outside the test's domain).
    pub node_pass: Vec<Option<bool>>,
}

impl FinslerRegularity {
    pub fn pass(&self) -> bool {
        self.positive.pass() && self.negative.pass()
    }
}

pub fn finsler_regularity(spec: &SolutionSpec, grid: &[(f64, f64)], n: usize) -> FinslerRegularity {
    let nan = Margins {
        m1: f64::NAN,
        m2: f64::NAN,
    };
    let mut pos = (Vec::new(), Vec::new());
    let mut neg = (Vec::new(), Vec::new());
    let mut node_pass = Vec::with_capacity(grid.len());
    for &(b2, s) in grid {
        if s == 0.0 {
            node_pass.push(None);
            continue;
        }
        let m = solution_margins(spec, b2, s).unwrap_or(nan);
        let ok = m.m2 > 0.0 && (n < 3 || m.m1 > 0.0);
        node_pass.push(Some(ok));
        let side = if s > 0.0 { &mut pos } else { &mut neg };
        side.0.push((b2, s));
        side.1.push(m);
    }
    FinslerRegularity {
        positive: RegularityReport::from_margins(n, &pos.0, &pos.1),
        negative: RegularityReport::from_margins(n, &neg.0, &neg.1),
        node_pass,
    }
}

/// Least-squares `κ` in `d(s) ≈ κ s` and the largest remaining `|d - κ s|`.
pub fn fit_kappa(points: &[(f64, f64)]) -> (f64, f64) {
    let ss: f64 = points.iter().map(|(s, _)| s * s).sum();
    let sd: f64 = points.iter().map(|(s, d)| s * d).sum();
    let kappa = if ss > 0.0 { sd / ss } else { 0.0 };
    let resid = points
        .iter()
        .fold(0.0_f64, |m, (s, d)| m.max((d - kappa * s).abs()));
    (kappa, resid)
}

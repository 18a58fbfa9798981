//! `F = α φ(b², β/α)`: profile functions, regularity, and sprays.

use crate::chart::{alpha_spray, Geometry};
use crate::error::{Error, Result};
use crate::expr::{Consts, Expr};
use crate::jets::{Jet2, Scalar};
use nalgebra::DVector;
use std::fmt;
use std::sync::Arc;

/// Something that can produce the Taylor jet of `φ` at `(b², s)`.
pub trait Profile: Send + Sync {
    fn jet(&self, b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2>;
}

/// Where a profile came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Catalog(String),
    Expression(String),
    Solution(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Catalog(s) => write!(f, "catalog:{s}"),
            Provenance::Expression(s) => write!(f, "expr:{s}"),
            Provenance::Solution(s) => write!(f, "solution:{s}"),
        }
    }
}

/// A profile `φ(b², s)` valid on `|s| <= b < b0`.
#[derive(Clone)]
pub struct PhiSpec {
    profile: Arc<dyn Profile>,
    pub b0: f64,
    pub provenance: Provenance,
}

impl fmt::Debug for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiSpec")
            .field("b0", &self.b0)
            .field("provenance", &self.provenance)
            .finish()
    }
}

struct ExprProfile {
    expr: Expr,
    consts: Consts,
}

impl Profile for ExprProfile {
    fn jet(&self, b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2> {
        let vars = [Jet2::var_u(b2, du, dv), Jet2::var_v(s, du, dv)];
        self.expr.eval(&vars, &self.consts)
    }
}

struct FnProfile<F>(F);

impl<F> Profile for FnProfile<F>
where
    F: Fn(&Jet2, &Jet2) -> Result<Jet2> + Send + Sync,
{
    fn jet(&self, b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2> {
        (self.0)(&Jet2::var_u(b2, du, dv), &Jet2::var_v(s, du, dv))
    }
}

impl PhiSpec {
    pub fn new(profile: Arc<dyn Profile>, b0: f64, provenance: Provenance) -> Self {
        Self {
            profile,
            b0,
            provenance,
        }
    }

    /// From an expression in the variables `b2` and `s`.
    pub fn from_expr(src: &str, consts: Consts, b0: f64) -> Result<Self> {
        let names: Vec<&str> = consts.keys().map(String::as_str).collect();
        let expr = Expr::parse_with(src, &["b2", "s"], &names)?;
        Ok(Self::new(
            Arc::new(ExprProfile { expr, consts }),
            b0,
            Provenance::Expression(src.to_string()),
        ))
    }

    /// From a closure over `(b², s)` jets.
    pub fn from_fn<F>(f: F, b0: f64, provenance: Provenance) -> Self
    where
        F: Fn(&Jet2, &Jet2) -> Result<Jet2> + Send + Sync + 'static,
    {
        Self::new(Arc::new(FnProfile(f)), b0, provenance)
    }

    pub fn jet_with(&self, b2: f64, s: f64, du: usize, dv: usize) -> Result<Jet2> {
        let j = self.profile.jet(b2, s, du, dv)?;
        if !j.is_finite() {
            return Err(Error::NonFinite { index: vec![] });
        }
        Ok(j)
    }

    /// Jet at the default orders `(1, 6)`.
    pub fn jet(&self, b2: f64, s: f64) -> Result<Jet2> {
        let (du, dv) = Jet2::DEFAULT_ORDERS;
        self.jet_with(b2, s, du, dv)
    }

    pub fn value(&self, b2: f64, s: f64) -> Result<f64> {
        Ok(self.jet_with(b2, s, 0, 0)?.coeff(0, 0))
    }

    pub fn partials(&self, b2: f64, s: f64) -> Result<Partials> {
        Ok(Partials::from_jet(&self.jet_with(b2, s, 1, 2)?))
    }
}

/// `φ` and the low-order partials used by the spray formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub phi: f64,
    pub p1: f64,
    pub p2: f64,
    pub p12: f64,
    pub p22: f64,
}

impl Partials {
    pub fn from_jet(j: &Jet2) -> Self {
        Self {
            phi: j.partial(0, 0),
            p1: j.partial(1, 0),
            p2: j.partial(0, 1),
            p12: j.partial(1, 1),
            p22: j.partial(0, 2),
        }
    }
}

/// The two regularity margins `φ - sφ₂` and `φ - sφ₂ + (b² - s²)φ₂₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub m1: f64,
    pub m2: f64,
}

pub fn margins(phi: &PhiSpec, b2: f64, s: f64) -> Result<Margins> {
    let p = phi.partials(b2, s)?;
    let m1 = p.phi - s * p.p2;
    Ok(Margins {
        m1,
        m2: m1 + (b2 - s * s) * p.p22,
    })
}

/// Result of checking margins on a grid of `(b², s)` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub n: usize,
    pub nodes: usize,
    /// Smallest first margin and where (irrelevant for `n = 2`).
    pub worst_m1: (f64, [f64; 2]),
    pub worst_m2: (f64, [f64; 2]),
    /// Per node: whether every margin required in dimension `n` is positive.
    pub node_pass: Vec<bool>,
}

impl RegularityReport {
    pub fn pass(&self) -> bool {
        self.node_pass.iter().all(|&p| p)
    }

    /// Fold per-node margin pairs into a report.
    pub fn from_margins(n: usize, grid: &[(f64, f64)], margins: &[Margins]) -> Self {
        let mut worst_m1 = (f64::INFINITY, [f64::NAN; 2]);
        let mut worst_m2 = (f64::INFINITY, [f64::NAN; 2]);
        let mut node_pass = Vec::with_capacity(grid.len());
        for (&(b2, s), m) in grid.iter().zip(margins) {
            if m.m1 < worst_m1.0 || m.m1.is_nan() {
                worst_m1 = (m.m1, [b2, s]);
            }
            if m.m2 < worst_m2.0 || m.m2.is_nan() {
                worst_m2 = (m.m2, [b2, s]);
            }
            let ok2 = m.m2 > 0.0;
            node_pass.push(if n >= 3 { ok2 && m.m1 > 0.0 } else { ok2 });
        }
        Self {
            n,
            nodes: grid.len(),
            worst_m1,
            worst_m2,
            node_pass,
        }
    }
}

/// Check `φ - sφ₂ > 0` (for `n >= 3`) and `φ - sφ₂ + (b² - s²)φ₂₂ > 0` on
/// every grid node. Nodes where `φ` cannot be evaluated count as failures.
pub fn regularity(phi: &PhiSpec, n: usize, grid: &[(f64, f64)]) -> RegularityReport {
    let ms: Vec<Margins> = grid
        .iter()
        .map(|&(b2, s)| {
            margins(phi, b2, s).unwrap_or(Margins {
                m1: f64::NAN,
                m2: f64::NAN,
            })
        })
        .collect();
    RegularityReport::from_margins(n, grid, &ms)
}

/// `Q, R, Θ, Ψ, Π, Ω` at one `(b², s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprayQuantities {
    pub q: f64,
    pub r: f64,
    pub theta: f64,
    pub psi: f64,
    pub pi: f64,
    pub omega: f64,
}

fn check_denominators(b2: f64, s: f64, m: Margins) -> Result<()> {
    if !(m.m1 > 0.0) {
        return Err(Error::Regularity {
            b2,
            s,
            which: "phi - s phi_2",
            margin: m.m1,
        });
    }
    if !(m.m2 > 0.0) {
        return Err(Error::Regularity {
            b2,
            s,
            which: "phi - s phi_2 + (b^2 - s^2) phi_22",
            margin: m.m2,
        });
    }
    Ok(())
}

pub fn spray_quantities_from(p: &Partials, b2: f64, s: f64) -> Result<SprayQuantities> {
    let m1 = p.phi - s * p.p2;
    let m2 = m1 + (b2 - s * s) * p.p22;
    check_denominators(b2, s, Margins { m1, m2 })?;
    let q = p.p2 / m1;
    let r = p.p1 / m1;
    let theta = (m1 * p.p2 - s * p.phi * p.p22) / (2.0 * p.phi * m2);
    let psi = p.p22 / (2.0 * m2);
    let pi = (m1 * p.p12 - s * p.p1 * p.p22) / (m1 * m2);
    let omega = 2.0 * p.p1 / p.phi - (s * p.phi + (b2 - s * s) * p.p2) / p.phi * pi;
    Ok(SprayQuantities {
        q,
        r,
        theta,
        psi,
        pi,
        omega,
    })
}

pub fn spray_quantities(phi: &PhiSpec, b2: f64, s: f64) -> Result<SprayQuantities> {
    spray_quantities_from(&phi.partials(b2, s)?, b2, s)
}

/// `E`, `H` and its s-derivatives, `T` and its s-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalQuantities {
    pub e: f64,
    pub h: f64,
    pub h2: f64,
    pub h22: f64,
    pub h222: f64,
    pub h2222: f64,
    pub t: f64,
    pub t2: f64,
    pub t22: f64,
    pub t222: f64,
}

impl ConformalQuantities {
    /// `H₂ - sH₂₂`, the Douglas condition under closed-conformal `β`.
    pub fn douglas_residual(&self, s: f64) -> f64 {
        self.h2 - s * self.h22
    }
}

/// `H` as a jet in `s` alone (orders `(0, 4)`), from a `φ` jet of orders
/// at least `(1, 6)`.
pub fn h_jet(j: &Jet2, b2: f64, s: f64) -> Result<Jet2> {
    const DV: usize = 4;
    let pu = j.d_u();
    let pv = j.d_v();
    let puv = pu.d_v();
    let pvv = pv.d_v();
    let t = |x: &Jet2| x.truncate(0, DV);
    let (p, pu, pv, puv, pvv) = (t(j), t(&pu), t(&pv), t(&puv), t(&pvv));
    let v = Jet2::var_v(s, 0, DV);
    let w = (&v * &v).scale(-1.0).add_const(b2);
    let num = &pvv - &(&pu - &(&v * &puv)).scale(2.0);
    let den = (&(&p - &(&v * &pv)) + &(&w * &pvv)).scale(2.0);
    if !(den.coeff(0, 0) > 0.0) {
        return Err(Error::Regularity {
            b2,
            s,
            which: "phi - s phi_2 + (b^2 - s^2) phi_22",
            margin: den.coeff(0, 0) / 2.0,
        });
    }
    num.try_div(&den)
}

pub fn conformal_quantities(
    phi: &PhiSpec,
    b2: f64,
    s: f64,
    n: usize,
) -> Result<ConformalQuantities> {
    let j = phi.jet(b2, s)?;
    let pp = Partials::from_jet(&j);
    let m1 = pp.phi - s * pp.p2;
    check_denominators(
        b2,
        s,
        Margins {
            m1,
            m2: m1 + (b2 - s * s) * pp.p22,
        },
    )?;
    let hj = h_jet(&j, b2, s)?;
    let k = -1.0 / (n as f64 + 1.0);
    let v = Jet2::var_v(s, 0, 3);
    let w = (&v * &v).scale(-1.0).add_const(b2);
    let tj = (&(&v * &hj.truncate(0, 3)).scale(2.0) + &(&w * &hj.d_v())).scale(k);
    let h = hj.partial(0, 0);
    let h2 = hj.partial(0, 1);
    let e = (pp.p2 + 2.0 * s * pp.p1) / (2.0 * pp.phi)
        - h * (s * pp.phi + (b2 - s * s) * pp.p2) / pp.phi;
    Ok(ConformalQuantities {
        e,
        h,
        h2,
        h22: hj.partial(0, 2),
        h222: hj.partial(0, 3),
        h2222: hj.partial(0, 4),
        t: k * (2.0 * s * h + (b2 - s * s) * h2),
        t2: tj.partial(0, 1),
        t22: tj.partial(0, 2),
        t222: tj.partial(0, 3),
    })
}

/// `α`, `s = β/α` at `y`, rejecting a vanishing `α`.
pub fn alpha_s(geom: &Geometry, y: &DVector<f64>) -> Result<(f64, f64)> {
    let alpha = geom.alpha(y);
    if !(alpha > 1e-12 * y.amax()) || y.amax() == 0.0 {
        return Err(Error::MetricDegenerate { x: geom.x.clone() });
    }
    Ok((alpha, geom.beta_of(y) / alpha))
}

/// Spray coefficients of `F = α φ(b², β/α)` for an arbitrary 1-form.
pub fn spray_general(geom: &Geometry, phi: &PhiSpec, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (alpha, s) = alpha_s(geom, y)?;
    let q = spray_quantities(phi, geom.b2, s)?;
    let bd = &geom.beta;
    let r00 = bd.r00(y);
    let r0 = bd.r0(y);
    let s0 = bd.s0(y);
    let common = -2.0 * alpha * q.q * s0 + r00 + 2.0 * alpha * alpha * q.r * bd.r_scalar;
    let coef_y = (q.theta * common + alpha * q.omega * (r0 + s0)) / alpha;
    let coef_b = q.psi * common + alpha * q.pi * (r0 + s0);
    let mut g = alpha_spray(geom, y);
    g += geom.s_up0(y) * (alpha * q.q);
    g += y * coef_y;
    g += &geom.b_up * coef_b;
    g -= (&bd.r_up + &bd.s_up) * (alpha * alpha * q.r);
    Ok(g)
}

/// Spray coefficients when `b_{i|j} = c a_ij`.
pub fn spray_conformal(
    geom: &Geometry,
    phi: &PhiSpec,
    y: &DVector<f64>,
    c: f64,
) -> Result<DVector<f64>> {
    let (alpha, s) = alpha_s(geom, y)?;
    let cq = conformal_quantities(phi, geom.b2, s, geom.n)?;
    let mut g = alpha_spray(geom, y);
    g += y * (c * alpha * cq.e);
    g += &geom.b_up * (c * alpha * alpha * cq.h);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{conformal_factor, Chart};

    fn phi(src: &str) -> PhiSpec {
        PhiSpec::from_expr(src, Consts::new(), f64::INFINITY).unwrap()
    }

    #[test]
    fn riemannian_quantities_vanish() {
        let q = spray_quantities(&phi("1 + 0*s"), 0.3, 0.2).unwrap();
        assert_eq!([q.q, q.r, q.theta, q.psi, q.pi, q.omega], [0.0; 6]);
    }

    #[test]
    fn randers_quantities() {
        let s = 0.3;
        let q = spray_quantities(&phi("1 + s"), 0.25, s).unwrap();
        assert_eq!(q.q, 1.0);
        assert!((q.theta - 1.0 / (2.0 * (1.0 + s))).abs() < 1e-15);
        assert_eq!(q.psi, 0.0);
    }

    #[test]
    fn quadratic_profile_at_zero_s() {
        let q = spray_quantities(&phi("1 + b2 + s^2"), 0.25, 0.0).unwrap();
        assert_eq!(q.q, 0.0);
        assert!((q.r - 1.0 / 1.25).abs() < 1e-15);
    }

    #[test]
    fn regularity_margins() {
        let grid: Vec<(f64, f64)> = (0..5).map(|k| (0.25, -0.4 + 0.2 * k as f64)).collect();
        let rep = regularity(&phi("1 + s"), 3, &grid);
        assert!(rep.pass());
        assert!((rep.worst_m1.0 - 1.0).abs() < 1e-15);
        let m = margins(&phi("1 - s^2"), 4.0, 1.4).unwrap();
        assert!((m.m1 - 2.96).abs() < 1e-12);
        assert!((m.m2 + 1.12).abs() < 1e-12);
    }

    #[test]
    fn randers_spray_at_origin() {
        let ch = Chart::euclidean(2, vec![0.0, 0.0]).unwrap();
        let g = Geometry::at(&ch, &[0.0, 0.0]).unwrap();
        let y = DVector::from_vec(vec![1.0, 0.0]);
        let sp = spray_general(&g, &phi("1 + s"), &y).unwrap();
        assert!((sp[0] - 0.5).abs() < 1e-15 && sp[1].abs() < 1e-15);
    }

    #[test]
    fn quadratic_profile_has_vanishing_h() {
        let f = phi("1 + b2 + s^2");
        let cq = conformal_quantities(&f, 0.3, 0.2, 3).unwrap();
        for v in [
            cq.h, cq.h2, cq.h22, cq.h222, cq.h2222, cq.t, cq.t2, cq.t22, cq.t222,
        ] {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn stored_t_matches_definition_exactly() {
        let f = phi("sqrt(1 + b2 + s^2) + 0.3*s*b2");
        let (b2, s, n) = (0.4, 0.25, 3);
        let cq = conformal_quantities(&f, b2, s, n).unwrap();
        let t = -1.0 / (n as f64 + 1.0) * (2.0 * s * cq.h + (b2 - s * s) * cq.h2);
        assert_eq!(cq.t, t);
    }

    #[test]
    fn general_and_conformal_sprays_agree() {
        let f = phi("sqrt(1 - b2 + s^2)/(1 - b2) + 0.4*s");
        let ch = Chart::euclidean(3, vec![0.1, 0.0, -0.2]).unwrap();
        let g = Geometry::at(&ch, &[0.2, 0.3, 0.1]).unwrap();
        let c = conformal_factor(&g, 1e-10).unwrap();
        let y = DVector::from_vec(vec![0.3, -1.0, 0.6]);
        let a = spray_general(&g, &f, &y).unwrap();
        let b = spray_conformal(&g, &f, &y, c.c).unwrap();
        assert!((a - &b).amax() < 1e-12 * (1.0 + b.amax()));
    }

    #[test]
    fn nonpositive_denominator_is_a_regularity_error() {
        assert!(matches!(
            spray_quantities(&phi("1 - s^2"), 4.0, 1.4),
            Err(Error::Regularity { .. })
        ));
    }
}

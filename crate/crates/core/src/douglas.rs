//! The Douglas tensor by two independent routes, the Douglas decision
//! procedure, and the characterizing PDE residual.
//!
//! The generic route pushes `F²` through the definition of the spray,
//! `G^i = ¼ g^{il}([F²]_{x^k y^l} y^k - [F²]_{x^l})`, entirely in truncated
//! polynomial arithmetic, then takes third y-derivatives of
//! `G^i - (∂_m G^m) y^i / (n+1)`. It needs no assumption on `β`. The closed
//! form assumes `b_{i|j} = c a_ij` and is assembled from `T`, `H` and their
//! s-derivatives.

use crate::chart::{conformal_factor, Geometry, RiemannChart};
use crate::error::{Error, Result};
use crate::expr::{Consts, Expr};
use crate::gab::{alpha_s, conformal_quantities, margins, PhiSpec};
use crate::jets::{Poly, Scalar, Space, Tensor};
use crate::par::Exec;
use crate::sampling::{sample_points, Sample, SampleConfig};
use nalgebra::{DMatrix, DVector};

/// `D^i_jkl` at a point, stored as a rank-4 tensor indexed `[i, j, k, l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DouglasTensor {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Tensor,
}

/// Absolute violations of the structural identities of a Douglas tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorDefects {
    /// `max |D^i_jkl - D^i_σ(jkl)|` over permutations.
    pub symmetry: f64,
    /// `max |D^i_jkl y^l|`
    pub contraction: f64,
    /// `max |D^m_jkm|`
    pub trace: f64,
}

impl DouglasTensor {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.d.get(&[i, j, k, l])
    }

    pub fn max_abs(&self) -> f64 {
        self.d.max_abs()
    }

    pub fn frobenius(&self) -> f64 {
        self.d.frobenius()
    }

    pub fn defects(&self) -> TensorDefects {
        let n = self.n;
        let mut out = TensorDefects {
            symmetry: 0.0,
            contraction: 0.0,
            trace: 0.0,
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut c = 0.0;
                    for l in 0..n {
                        let v = self.get(i, j, k, l);
                        for p in [
                            self.get(i, j, l, k),
                            self.get(i, k, j, l),
                            self.get(i, k, l, j),
                            self.get(i, l, j, k),
                            self.get(i, l, k, j),
                        ] {
                            out.symmetry = out.symmetry.max((v - p).abs());
                        }
                        c += v * self.y[l];
                    }
                    out.contraction = out.contraction.max(c.abs());
                }
            }
        }
        for j in 0..n {
            for k in 0..n {
                let t: f64 = (0..n).map(|m| self.get(m, j, k, m)).sum();
                out.trace = out.trace.max(t.abs());
            }
        }
        out
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &DouglasTensor) -> f64 {
        self.d
            .data()
            .iter()
            .zip(other.d.data())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Output of the generic route.
#[derive(Debug, Clone)]
pub struct GenericDouglas {
    pub tensor: DouglasTensor,
    /// `∂³G^i / ∂y^j ∂y^k ∂y^l`, the scale for the normalized norm.
    pub d3g: Tensor,
    /// `G^i(x, y)`
    pub spray: Vec<f64>,
}

impl GenericDouglas {
    /// `‖D‖ / (1 + ‖∂³G‖)`, Frobenius norms.
    pub fn scaled_norm(&self) -> f64 {
        self.tensor.frobenius() / (1.0 + self.d3g.frobenius())
    }
}

fn factorial(k: u8) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Third derivatives at the expansion point of y-polynomials `p[i]`.
fn third_derivatives(p: &[Poly], n: usize) -> Tensor {
    let mut t = Tensor::zeros(n, 4);
    let mut e = vec![0u8; n];
    for idx in t.indices().collect::<Vec<_>>() {
        e.iter_mut().for_each(|v| *v = 0);
        for &m in &idx[1..] {
            e[m] += 1;
        }
        let mult: f64 = e.iter().map(|&v| factorial(v)).product();
        t.set(&idx, p[idx[0]].coeff(&e) * mult);
    }
    t
}

/// `F²(x + δx, y + δy)` as a polynomial in `(δx, δy)`, degree 6 with
/// x-degree at most 1. Variables `0..n` are `δx`, `n..2n` are `δy`.
pub fn f_squared_jet(geom: &Geometry, phi: &PhiSpec, y: &[f64]) -> Result<Poly> {
    let n = geom.n;
    let yv = DVector::from_column_slice(y);
    let (_, s0) = alpha_s(geom, &yv)?;
    let jet = phi.jet(geom.b2, s0)?;
    let space = Space::get(2 * n, n, 6);
    let lin = |value: f64, grad: &dyn Fn(usize) -> f64| {
        let mut p = Poly::constant(&space, value);
        for k in 0..n {
            p = p + Poly::variable(&space, k, 0.0).scale(grad(k));
        }
        p
    };
    let ys: Vec<Poly> = (0..n)
        .map(|i| Poly::variable(&space, n + i, y[i]))
        .collect();
    let mut alpha2 = Poly::zeros(&space);
    let mut beta = Poly::zeros(&space);
    for i in 0..n {
        for j in 0..n {
            let aij = lin(geom.a[(i, j)], &|k| geom.da[k][(i, j)]);
            alpha2 = alpha2 + aij * (&ys[i] * &ys[j]);
        }
        let bi = lin(geom.b[i], &|k| geom.db[(i, k)]);
        beta = beta + bi * ys[i].clone();
    }
    // ∂_k b² = 2 b^i ∂_k b_i - b^i b^j ∂_k a_ij
    let bu = &geom.b_up;
    let b2 = lin(0.0, &|k| {
        let db: f64 = (0..n).map(|i| bu[i] * geom.db[(i, k)]).sum();
        2.0 * db - bu.dot(&(&geom.da[k] * bu))
    });
    let s = &beta * &alpha2.powf(-0.5)?;
    let phi_p = jet.substitute(&b2, &s.add_const(-s0));
    let f2 = &alpha2 * &(&phi_p * &phi_p);
    if !f2.is_finite() {
        return Err(Error::NonFinite { index: vec![] });
    }
    Ok(f2)
}

/// Douglas tensor from its definition, for any 1-form.
pub fn douglas_generic(
    chart: &dyn RiemannChart,
    phi: &PhiSpec,
    x: &[f64],
    y: &[f64],
) -> Result<GenericDouglas> {
    let geom = Geometry::at(chart, x)?;
    douglas_generic_at(&geom, phi, y)
}

pub fn douglas_generic_at(geom: &Geometry, phi: &PhiSpec, y: &[f64]) -> Result<GenericDouglas> {
    let n = geom.n;
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let yv = DVector::from_column_slice(y);
    let (_, s) = alpha_s(geom, &yv)?;
    let m = margins(phi, geom.b2, s)?;
    let which = if m.m1 <= 0.0 {
        Some(("phi - s phi_2", m.m1))
    } else if m.m2 <= 0.0 {
        Some(("phi - s phi_2 + (b^2 - s^2) phi_22", m.m2))
    } else {
        None
    };
    if let Some((which, margin)) = which {
        return Err(Error::Regularity {
            b2: geom.b2,
            s,
            which,
            margin,
        });
    }

    let f2 = f_squared_jet(geom, phi, y)?;
    let ysp = Space::get(n, 0, 4);
    let ysp5 = Space::get(n, 0, 5);
    let ysp6 = Space::get(n, 0, 6);
    let drop_x: Vec<Option<usize>> = (0..2 * n)
        .map(|v| if v < n { None } else { Some(v - n) })
        .collect();
    let same: Vec<Option<usize>> = (0..n).map(Some).collect();
    // F² = P0(δy) + Σ_k δx^k P_k(δy); derivatives are taken before
    // truncating so every kept coefficient is exact
    let p0 = f2.remap(&ysp6, &drop_x);
    let pk: Vec<Poly> = (0..n)
        .map(|k| f2.derivative(k).remap(&ysp5, &drop_x))
        .collect();
    let hess: Vec<Vec<Poly>> = (0..n)
        .map(|i| {
            let di = p0.derivative(i);
            (0..n)
                .map(|j| di.derivative(j).remap(&ysp, &same))
                .collect()
        })
        .collect();
    let yy: Vec<Poly> = (0..n).map(|i| Poly::variable(&ysp, i, y[i])).collect();
    // v_l = ½ (Σ_k ∂_l P_k y^k - P_l), to be solved against the Hessian
    let rhs: Vec<Poly> = (0..n)
        .map(|l| {
            let mut acc = pk[l].remap(&ysp, &same).scale(-1.0);
            for k in 0..n {
                acc = acc + pk[k].derivative(l).remap(&ysp, &same) * yy[k].clone();
            }
            acc.scale(0.5)
        })
        .collect();
    let h0 = DMatrix::from_fn(n, n, |i, j| hess[i][j].value());
    let h0inv = h0.try_inverse().ok_or(Error::MetricSingular)?;
    let nil: Vec<Vec<Poly>> = hess
        .iter()
        .map(|row| row.iter().map(|p| p.add_const(-p.value())).collect())
        .collect();
    let apply_inv = |v: &[Poly]| -> Vec<Poly> {
        (0..n)
            .map(|i| {
                let mut acc = Poly::zeros(&ysp);
                for (j, vj) in v.iter().enumerate() {
                    acc = acc + vj.scale(h0inv[(i, j)]);
                }
                acc
            })
            .collect()
    };
    let mut g = apply_inv(&rhs);
    // each pass fixes one more degree of the nilpotent correction
    for _ in 0..5 {
        let resid: Vec<Poly> = (0..n)
            .map(|i| {
                let mut acc = rhs[i].clone();
                for j in 0..n {
                    acc = acc - &nil[i][j] * &g[j];
                }
                acc
            })
            .collect();
        g = apply_inv(&resid);
    }
    let div = (0..n)
        .map(|m| g[m].derivative(m))
        .reduce(|a, b| a + b)
        .expect("n >= 1");
    let k = 1.0 / (n as f64 + 1.0);
    let w: Vec<Poly> = (0..n).map(|i| &g[i] - &(&div * &yy[i]).scale(k)).collect();
    let d = third_derivatives(&w, n);
    let d3g = third_derivatives(&g, n);
    Ok(GenericDouglas {
        tensor: DouglasTensor {
            n,
            x: geom.x.clone(),
            y: y.to_vec(),
            d,
        },
        d3g,
        spray: g.iter().map(Scalar::value).collect(),
    })
}

/// Douglas tensor from the closed form, valid when `b_{i|j} = c a_ij`.
pub fn douglas_closed_form(
    geom: &Geometry,
    phi: &PhiSpec,
    y: &[f64],
    c: f64,
) -> Result<DouglasTensor> {
    let n = geom.n;
    let yu = DVector::from_column_slice(y);
    let (a, s) = alpha_s(geom, &yu)?;
    let q = conformal_quantities(phi, geom.b2, s, n)?;
    let yl = &geom.a * &yu;
    let am = &geom.a;
    let b = &geom.b;
    let bu = &geom.b_up;
    let (t0, t2, t22, t222) = (q.t, q.t2, q.t22, q.t222);
    let (h2, h22, h222) = (q.h2, q.h22, q.h222);
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let a2 = a * a;
    let a3 = a2 * a;
    let mut d = Tensor::zeros(n, 4);
    for idx in d.indices().collect::<Vec<_>>() {
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let c1 = |j: usize, k: usize, l: usize| {
            (((t0 - s * t2) * am[(k, l)] + t22 * b[l] * b[k]) * delta(i, j)
                + ((s / a) * (3.0 * t22 + s * t222) * yl[l] * yl[j]
                    - (t22 + s * t222) * b[l] * yl[j])
                    * b[k]
                    * yu[i]
                    / a2)
                / a
        };
        let c2 = |j: usize, k: usize, l: usize| {
            -(s * t22 * ((yl[k] * b[l] + yl[l] * b[k]) * delta(i, j) + am[(j, l)] * b[k] * yu[i])
                + (t0 - s * t2 - s * s * t22) * (yl[l] * delta(i, j) + am[(l, j)] * yu[i]) * yl[k]
                    / a)
                / a2
        };
        let c4 = |j: usize, k: usize, l: usize| {
            ((h2 - s * h22) * (b[j] - s / a * yl[j]) * am[(k, l)]
                - (h2 - s * h22 - s * s * h222) * b[l] * yl[j] * yl[k] / a2
                - s * h222 / a * b[k] * b[l] * yl[j])
                * bu[i]
                / a
        };
        let cyc = |f: &dyn Fn(usize, usize, usize) -> f64| f(j, k, l) + f(k, l, j) + f(l, j, k);
        let mut v = cyc(&c1) + cyc(&c2) + cyc(&c4);
        v += ((3.0 * t0 - 3.0 * s * t2 - 6.0 * s * s * t22 - s * s * s * t222)
            * yl[k]
            * yl[j]
            * yl[l]
            / a3
            + t222 * b[l] * b[k] * b[j])
            * yu[i]
            / a2;
        v += ((s / a3) * (3.0 * h2 - 3.0 * s * h22 - s * s * h222) * yl[j] * yl[k] * yl[l]
            + h222 * b[l] * b[k] * b[j])
            * bu[i]
            / a;
        d.set(&idx, c * v);
    }
    Ok(DouglasTensor {
        n,
        x: geom.x.clone(),
        y: y.to_vec(),
        d,
    })
}

/// `H₂ - sH₂₂` together with the `(f, g)` implied by `H = ½(f + g s²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DouglasCondition {
    pub residual: f64,
    pub f: f64,
    pub g: f64,
}

pub fn douglas_condition(phi: &PhiSpec, b2: f64, s: f64, n: usize) -> Result<DouglasCondition> {
    let q = conformal_quantities(phi, b2, s, n)?;
    Ok(DouglasCondition {
        residual: q.douglas_residual(s),
        f: 2.0 * q.h - q.h22 * s * s,
        g: q.h22,
    })
}

/// `φ₂₂ - 2(φ₁ - sφ₁₂) - (f + g s²)(φ - sφ₂ + (b² - s²)φ₂₂)`.
pub fn pde_residual(
    phi: &PhiSpec,
    f: &Expr,
    g: &Expr,
    consts: &Consts,
    b2: f64,
    s: f64,
) -> Result<f64> {
    let p = phi.partials(b2, s)?;
    let fv = f.eval_real(b2, consts)?;
    let gv = g.eval_real(b2, consts)?;
    let lhs = p.p22 - 2.0 * (p.p1 - s * p.p12);
    let rhs = (fv + gv * s * s) * (p.phi - s * p.p2 + (b2 - s * s) * p.p22);
    Ok(lhs - rhs)
}

/// Result of sampling the generic Douglas norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DouglasVerdict {
    pub samples: usize,
    pub max_norm: f64,
    pub worst: Option<Sample>,
    pub douglas: bool,
    /// `β` is closed-conformal with `c = 0` at every sample.
    pub trivial: bool,
}

/// Decide whether `F` is Douglas by sampling the scaled generic norm.
pub fn is_douglas(
    chart: &dyn RiemannChart,
    phi: &PhiSpec,
    cfg: &SampleConfig,
    tol: f64,
    exec: Exec,
) -> Result<DouglasVerdict> {
    let pts = sample_points(chart, phi.b0, cfg)?;
    let res: Vec<Result<(f64, bool)>> = exec.map(&pts, |p| {
        let geom = Geometry::at(chart, &p.x)?;
        let g = douglas_generic_at(&geom, phi, &p.y)?;
        let trivial = conformal_factor(&geom, 1e-9).is_ok_and(|c| c.trivial);
        Ok((g.scaled_norm(), trivial))
    });
    let mut max_norm: f64 = 0.0;
    let mut worst = None;
    let mut trivial = !pts.is_empty();
    for (p, r) in pts.iter().zip(res) {
        let (norm, triv) = r?;
        trivial &= triv;
        if norm > max_norm || norm.is_nan() {
            max_norm = norm;
            worst = Some(p.clone());
        }
    }
    Ok(DouglasVerdict {
        samples: pts.len(),
        max_norm,
        worst,
        douglas: max_norm < tol,
        trivial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Chart, FormKind, MetricKind};

    fn phi(src: &str) -> PhiSpec {
        PhiSpec::from_expr(src, Consts::new(), f64::INFINITY).unwrap()
    }

    #[test]
    fn riemannian_mu_family_has_no_douglas_curvature() {
        let ch = Chart::mu_family(3, 0.5).unwrap();
        let r = douglas_generic(&ch, &phi("1"), &[0.3, -0.2, 0.4], &[0.7, 0.1, -1.2]).unwrap();
        assert!(r.tensor.max_abs() < 1e-8, "{}", r.tensor.max_abs());
    }

    #[test]
    fn generic_spray_matches_general_formula() {
        let ch = Chart::new(3, MetricKind::MuFamily(0.4), FormKind::Shear).unwrap();
        let f = phi("sqrt(1 + b2 + s^2) + 0.3*s");
        let x = [0.3, 0.5, -0.1];
        let y = [0.4, -0.9, 0.6];
        let geom = Geometry::at(&ch, &x).unwrap();
        let r = douglas_generic_at(&geom, &f, &y).unwrap();
        let g = crate::gab::spray_general(&geom, &f, &DVector::from_column_slice(&y)).unwrap();
        for i in 0..3 {
            assert!(
                (r.spray[i] - g[i]).abs() < 1e-12,
                "{i}: {} vs {}",
                r.spray[i],
                g[i]
            );
        }
    }

    #[test]
    fn closed_randers_is_douglas() {
        let ch = Chart::new(2, MetricKind::Euclidean, FormKind::ExactXY).unwrap();
        let r = douglas_generic(&ch, &phi("1 + s"), &[0.2, 0.3], &[0.8, -0.5]).unwrap();
        assert!(r.tensor.max_abs() < 1e-7);
    }

    #[test]
    fn shear_randers_is_not_douglas() {
        let ch = Chart::new(2, MetricKind::Euclidean, FormKind::Shear).unwrap();
        let r = douglas_generic(&ch, &phi("1 + s"), &[0.2, 0.3], &[0.8, -0.5]).unwrap();
        assert!(r.tensor.max_abs() > 1e-3);
    }

    #[test]
    fn closed_form_agrees_with_generic_for_non_douglas_profile() {
        let ch = Chart::euclidean(3, vec![0.1, -0.2, 0.05]).unwrap();
        let f = phi("1 + s + s^3 + 0.2*b2*s^2");
        let x = [0.2, 0.3, -0.1];
        let y = [0.5, -1.0, 0.7];
        let geom = Geometry::at(&ch, &x).unwrap();
        let c = conformal_factor(&geom, 1e-10).unwrap();
        let gen = douglas_generic_at(&geom, &f, &y).unwrap();
        let cl = douglas_closed_form(&geom, &f, &y, c.c).unwrap();
        assert!(gen.tensor.max_abs() > 1e-2);
        let diff = gen.tensor.max_diff(&cl);
        assert!(diff < 1e-9 * (1.0 + gen.tensor.max_abs()), "{diff}");
    }

    #[test]
    fn riemannian_closed_form_is_exactly_zero() {
        let ch = Chart::euclidean(2, vec![0.0; 2]).unwrap();
        let geom = Geometry::at(&ch, &[0.3, 0.1]).unwrap();
        let d = douglas_closed_form(&geom, &phi("1"), &[1.0, 0.4], 1.0).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn condition_and_pde_residuals() {
        let c = douglas_condition(&phi("1 + b2 + s^2"), 0.3, 0.2, 3).unwrap();
        assert_eq!((c.residual, c.f, c.g), (0.0, 0.0, 0.0));
        let c = douglas_condition(&phi("1 + s + s^3"), 0.25, 0.3, 3).unwrap();
        assert!(c.residual.abs() > 1e-2);
        let zero = Expr::parse("0").unwrap();
        let r = pde_residual(&phi("1 + b2 + s^2"), &zero, &zero, &Consts::new(), 0.3, 0.2).unwrap();
        assert_eq!(r, 0.0);
        let r = pde_residual(&phi("1 + s"), &zero, &zero, &Consts::new(), 0.3, 0.2).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn constant_form_is_trivially_douglas() {
        let ch = Chart::new(2, MetricKind::Euclidean, FormKind::Constant(vec![0.3, 0.2])).unwrap();
        let cfg = SampleConfig::new(5, 3);
        let v = is_douglas(&ch, &phi("1 + s"), &cfg, 1e-6, Exec::Sequential).unwrap();
        assert!(v.douglas && v.trivial);
    }
}

//! Riemannian data `(α, β)` on a coordinate chart.

use crate::error::{Error, Result};
use crate::jets::{Poly, Scalar, Space};
use nalgebra::{DMatrix, DVector};

/// Values and first derivatives of `a_ij` and `b_i` at one point.
#[derive(Debug, Clone)]
pub struct ChartPoint {
    pub a: DMatrix<f64>,
    /// `da[k][(i, j)] = ∂_k a_ij`
    pub da: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
    /// `db[(i, k)] = ∂_k b_i`
    pub db: DMatrix<f64>,
}

/// A Riemannian metric `a_ij(x)` with a 1-form `b_i(x)` on an open chart.
pub trait RiemannChart: Send + Sync {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
    fn eval(&self, x: &[f64]) -> Result<ChartPoint>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    Euclidean,
    /// `a_ij = ((1 + μ|x|²) δ_ij - μ x_i x_j) / (1 + μ|x|²)²`
    MuFamily(f64),
    /// `a_ij = e^{2 x¹} δ_ij`
    Conformal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FormKind {
    /// `b = x + shift`, i.e. `β = ⟨x, y⟩ + ⟨a, y⟩`
    Position {
        shift: Vec<f64>,
    },
    /// `b = x / (1 + μ|x|²)^{3/2}`
    MuFamily(f64),
    /// `b = d(x¹x²) = (x², x¹, 0, …)`
    ExactXY,
    /// `b = (x², 0, …)`, not closed
    Shear,
    Constant(Vec<f64>),
    Zero,
}

/// The builtin charts, with derivatives from dual-number evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    n: usize,
    metric: MetricKind,
    form: FormKind,
}

impl Chart {
    pub fn new(n: usize, metric: MetricKind, form: FormKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParam(format!(
                "dimension must be at least 2, got {n}"
            )));
        }
        match &form {
            FormKind::Position { shift: v } | FormKind::Constant(v) if v.len() != n => {
                return Err(Error::Dimension {
                    expected: n,
                    got: v.len(),
                })
            }
            _ => {}
        }
        Ok(Self { n, metric, form })
    }

    /// `α = |y|`, `β = ⟨x, y⟩ + ⟨shift, y⟩`.
    pub fn euclidean(n: usize, shift: Vec<f64>) -> Result<Self> {
        Self::new(n, MetricKind::Euclidean, FormKind::Position { shift })
    }

    /// The μ-family `α` with `β = ⟨x, y⟩ / (1 + μ|x|²)^{3/2}`.
    pub fn mu_family(n: usize, mu: f64) -> Result<Self> {
        Self::new(n, MetricKind::MuFamily(mu), FormKind::MuFamily(mu))
    }

    pub fn metric_kind(&self) -> &MetricKind {
        &self.metric
    }

    pub fn form_kind(&self) -> &FormKind {
        &self.form
    }

    /// `a_ij` (row-major) and `b_i` evaluated on any scalar type.
    pub fn components<S: Scalar>(&self, x: &[S]) -> Result<(Vec<S>, Vec<S>)> {
        let n = self.n;
        let zero = x[0].constant_like(0.0);
        let one = x[0].constant_like(1.0);
        let norm2 = x
            .iter()
            .fold(zero.clone(), |acc, xi| acc + xi.clone() * xi.clone());
        let mut a = vec![zero.clone(); n * n];
        match self.metric {
            MetricKind::Euclidean => {
                for i in 0..n {
                    a[i * n + i] = one.clone();
                }
            }
            MetricKind::MuFamily(mu) => {
                let w = norm2.scale(mu).add_const(1.0);
                let inv = w.powi(-2)?;
                for i in 0..n {
                    for j in 0..n {
                        let mut e = (x[i].clone() * x[j].clone()).scale(-mu);
                        if i == j {
                            e = e + w.clone();
                        }
                        a[i * n + j] = e * inv.clone();
                    }
                }
            }
            MetricKind::Conformal => {
                let e = x[0].scale(2.0).exp()?;
                for i in 0..n {
                    a[i * n + i] = e.clone();
                }
            }
        }
        let b = match &self.form {
            FormKind::Position { shift } => x
                .iter()
                .zip(shift)
                .map(|(xi, ai)| xi.add_const(*ai))
                .collect(),
            FormKind::MuFamily(mu) => {
                let w = norm2.scale(*mu).add_const(1.0).powf(-1.5)?;
                x.iter().map(|xi| xi.clone() * w.clone()).collect()
            }
            FormKind::ExactXY => {
                let mut b = vec![zero.clone(); n];
                b[0] = x[1].clone();
                b[1] = x[0].clone();
                b
            }
            FormKind::Shear => {
                let mut b = vec![zero.clone(); n];
                b[0] = x[1].clone();
                b
            }
            FormKind::Constant(c) => c.iter().map(|&ci| zero.constant_like(ci)).collect(),
            FormKind::Zero => vec![zero; n],
        };
        Ok((a, b))
    }
}

impl RiemannChart for Chart {
    fn dim(&self) -> usize {
        self.n
    }

    fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.n || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self.metric {
            MetricKind::MuFamily(mu) => 1.0 + mu * x.iter().map(|v| v * v).sum::<f64>() > 0.0,
            _ => true,
        }
    }

    fn eval(&self, x: &[f64]) -> Result<ChartPoint> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain { x: x.to_vec() });
        }
        let n = self.n;
        let space = Space::get(n, 0, 1);
        let xs: Vec<Poly> = x
            .iter()
            .enumerate()
            .map(|(k, &xk)| Poly::variable(&space, k, xk))
            .collect();
        let (a, b) = self.components(&xs)?;
        let linear = |p: &Poly, k: usize| {
            let mut e = vec![0u8; n];
            e[k] = 1;
            p.coeff(&e)
        };
        let am = DMatrix::from_fn(n, n, |i, j| a[i * n + j].value());
        let da = (0..n)
            .map(|k| DMatrix::from_fn(n, n, |i, j| linear(&a[i * n + j], k)))
            .collect();
        let bv = DVector::from_fn(n, |i, _| b[i].value());
        let db = DMatrix::from_fn(n, n, |i, k| linear(&b[i], k));
        Ok(ChartPoint {
            a: am,
            da,
            b: bv,
            db,
        })
    }
}

/// Covariant derivative of `β` and its contractions.
#[derive(Debug, Clone)]
pub struct BetaDerivatives {
    /// `b_cov[(i, j)] = b_{i|j}`
    pub b_cov: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// `r_i = b^j r_ji`
    pub r_i: DVector<f64>,
    /// `s_i = b^j s_ji`
    pub s_i: DVector<f64>,
    /// `r = b^i r_i`
    pub r_scalar: f64,
    /// `r^i = a^{ij} r_j`
    pub r_up: DVector<f64>,
    /// `s^i = a^{ij} s_j`
    pub s_up: DVector<f64>,
}

impl BetaDerivatives {
    pub fn r00(&self, y: &DVector<f64>) -> f64 {
        y.dot(&(&self.r * y))
    }

    pub fn r0(&self, y: &DVector<f64>) -> f64 {
        self.r_i.dot(y)
    }

    pub fn s0(&self, y: &DVector<f64>) -> f64 {
        self.s_i.dot(y)
    }
}

/// Everything about `(α, β)` at a point that sprays and Douglas tensors need.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub n: usize,
    pub x: Vec<f64>,
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
    pub da: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
    pub db: DMatrix<f64>,
    /// `b^i = a^{ij} b_j`
    pub b_up: DVector<f64>,
    pub b2: f64,
    /// `gamma[i][(j, k)] = Γ^i_jk`
    pub gamma: Vec<DMatrix<f64>>,
    pub beta: BetaDerivatives,
}

impl Geometry {
    pub fn at(chart: &dyn RiemannChart, x: &[f64]) -> Result<Self> {
        let p = chart.eval(x)?;
        let n = chart.dim();
        let chol =
            p.a.clone()
                .cholesky()
                .ok_or_else(|| Error::MetricDegenerate { x: x.to_vec() })?;
        let a_inv = chol.inverse();
        let gamma = christoffel_from(&a_inv, &p.da);
        let b_up = &a_inv * &p.b;
        let b2 = p.b.dot(&b_up);
        let b_cov = DMatrix::from_fn(n, n, |i, j| {
            let conn: f64 = (0..n).map(|k| p.b[k] * gamma[k][(i, j)]).sum();
            p.db[(i, j)] - conn
        });
        let r = (&b_cov + b_cov.transpose()) * 0.5;
        let s = (&b_cov - b_cov.transpose()) * 0.5;
        let r_i = r.transpose() * &b_up;
        let s_i = s.transpose() * &b_up;
        let r_scalar = b_up.dot(&r_i);
        let r_up = &a_inv * &r_i;
        let s_up = &a_inv * &s_i;
        Ok(Self {
            n,
            x: x.to_vec(),
            a: p.a,
            a_inv,
            da: p.da,
            b: p.b,
            db: p.db,
            b_up,
            b2,
            gamma,
            beta: BetaDerivatives {
                b_cov,
                r,
                s,
                r_i,
                s_i,
                r_scalar,
                r_up,
                s_up,
            },
        })
    }

    pub fn alpha(&self, y: &DVector<f64>) -> f64 {
        y.dot(&(&self.a * y)).sqrt()
    }

    pub fn beta_of(&self, y: &DVector<f64>) -> f64 {
        self.b.dot(y)
    }

    /// `s^i_0 = a^{ij} s_jk y^k`
    pub fn s_up0(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.a_inv * (&self.beta.s * y)
    }
}

fn christoffel_from(a_inv: &DMatrix<f64>, da: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = a_inv.nrows();
    // first kind: Γ_ljk = ½(∂_j a_lk + ∂_k a_jl - ∂_l a_jk)
    let first =
        |l: usize, j: usize, k: usize| 0.5 * (da[j][(l, k)] + da[k][(j, l)] - da[l][(j, k)]);
    (0..n)
        .map(|i| {
            DMatrix::from_fn(n, n, |j, k| {
                (0..n).map(|l| a_inv[(i, l)] * first(l, j, k)).sum()
            })
        })
        .collect()
}

/// `Γ^i_jk(x)`, indexed `[i][(j, k)]`.
pub fn christoffel(chart: &dyn RiemannChart, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    Ok(Geometry::at(chart, x)?.gamma)
}

pub fn beta_derivatives(chart: &dyn RiemannChart, x: &[f64]) -> Result<BetaDerivatives> {
    Ok(Geometry::at(chart, x)?.beta)
}

/// Outcome of the closed-conformal test `b_{i|j} = c a_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conformal {
    pub c: f64,
    pub residual: f64,
    /// `c` vanishes within tolerance.
    pub trivial: bool,
}

/// Estimate `c = a^{ij} b_{i|j} / n` and accept it if
/// `max |b_{i|j} - c a_ij| <= tol (1 + |c|)`.
pub fn conformal_factor(geom: &Geometry, tol: f64) -> Result<Conformal> {
    let n = geom.n;
    let bc = &geom.beta.b_cov;
    let trace: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| geom.a_inv[(i, j)] * bc[(i, j)])
        .sum();
    let c = trace / n as f64;
    let residual = (bc - &geom.a * c).amax();
    if residual > tol * (1.0 + c.abs()) {
        return Err(Error::NotConformal { residual });
    }
    Ok(Conformal {
        c,
        residual,
        trivial: c.abs() <= tol,
    })
}

/// Spray of `α`: `G^i = ½ Γ^i_jk y^j y^k`.
pub fn alpha_spray(geom: &Geometry, y: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(geom.n, |i, _| 0.5 * y.dot(&(&geom.gamma[i] * y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn euclidean_is_flat() {
        let ch = Chart::euclidean(3, vec![0.0; 3]).unwrap();
        let g = Geometry::at(&ch, &[0.3, -0.1, 0.2]).unwrap();
        assert!(g.gamma.iter().all(|m| m.amax() == 0.0));
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(alpha_spray(&g, &y).amax(), 0.0);
    }

    #[test]
    fn conformally_flat_christoffels() {
        let ch = Chart::new(2, MetricKind::Conformal, FormKind::Zero).unwrap();
        let g = Geometry::at(&ch, &[0.4, -0.7]).unwrap();
        let gm = &g.gamma;
        assert!(close(gm[0][(0, 0)], 1.0, 1e-14));
        assert!(close(gm[0][(1, 1)], -1.0, 1e-14));
        assert!(close(gm[1][(0, 1)], 1.0, 1e-14));
        assert!(close(gm[1][(1, 0)], 1.0, 1e-14));
        assert!(close(gm[0][(0, 1)], 0.0, 1e-14));
        assert!(close(gm[1][(0, 0)], 0.0, 1e-14));
        assert!(close(gm[1][(1, 1)], 0.0, 1e-14));
        let sp = alpha_spray(&g, &DVector::from_vec(vec![1.0, 0.0]));
        assert!(close(sp[0], 0.5, 1e-14) && close(sp[1], 0.0, 1e-14));
    }

    #[test]
    fn mu_family_christoffels_vanish_at_origin() {
        for mu in [-1.0, 0.5, 2.0] {
            let ch = Chart::mu_family(3, mu).unwrap();
            let g = Geometry::at(&ch, &[0.0; 3]).unwrap();
            assert!(g.gamma.iter().all(|m| m.amax() < 1e-15));
        }
    }

    #[test]
    fn position_form_is_conformal_with_unit_factor() {
        let ch = Chart::euclidean(3, vec![0.3, -0.2, 0.5]).unwrap();
        let g = Geometry::at(&ch, &[0.1, 0.2, -0.4]).unwrap();
        assert_eq!(g.beta.b_cov, DMatrix::identity(3, 3));
        assert_eq!(g.beta.s.amax(), 0.0);
        let c = conformal_factor(&g, 1e-10).unwrap();
        assert_eq!(c.c, 1.0);
        assert!(!c.trivial);
    }

    #[test]
    fn exact_form_is_closed_but_not_conformal() {
        let ch = Chart::new(2, MetricKind::Euclidean, FormKind::ExactXY).unwrap();
        let g = Geometry::at(&ch, &[0.2, 0.5]).unwrap();
        assert_eq!(g.beta.s.amax(), 0.0);
        assert!(matches!(
            conformal_factor(&g, 1e-8),
            Err(Error::NotConformal { .. })
        ));
    }

    #[test]
    fn mu_family_form_is_conformal() {
        let ch = Chart::mu_family(3, 0.5).unwrap();
        let g = Geometry::at(&ch, &[0.0; 3]).unwrap();
        let c = conformal_factor(&g, 1e-12).unwrap();
        assert!(close(c.c, 1.0, 1e-14));
        let g = Geometry::at(&ch, &[0.3, -0.2, 0.4]).unwrap();
        assert!(conformal_factor(&g, 1e-10).is_ok());
    }

    #[test]
    fn constant_form_is_trivially_conformal() {
        let ch = Chart::new(2, MetricKind::Euclidean, FormKind::Constant(vec![0.3, 0.1])).unwrap();
        let g = Geometry::at(&ch, &[0.2, 0.5]).unwrap();
        assert!(conformal_factor(&g, 1e-10).unwrap().trivial);
    }

    #[test]
    fn shear_form_is_not_closed() {
        let ch = Chart::new(2, MetricKind::Euclidean, FormKind::Shear).unwrap();
        let g = Geometry::at(&ch, &[0.2, 0.5]).unwrap();
        assert_eq!(g.beta.s[(0, 1)], 0.5);
        assert_eq!(g.beta.b_cov, &g.beta.r + &g.beta.s);
    }

    #[test]
    fn outside_domain_is_rejected() {
        let ch = Chart::mu_family(2, -1.0).unwrap();
        assert!(matches!(
            ch.eval(&[1.0, 0.5]),
            Err(Error::OutsideDomain { .. })
        ));
    }
}

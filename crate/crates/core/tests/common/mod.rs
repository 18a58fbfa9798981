//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use finsler_douglas::chart::{Chart, FormKind, MetricKind};
use finsler_douglas::expr::Consts;
use finsler_douglas::gab::PhiSpec;
use finsler_douglas::jets::{field_derivatives, FieldDerivatives, Poly, Scalar};
use finsler_douglas::sampling::bs_grid;
use finsler_douglas::solutions::{catalog, catalog_entries, CatalogItem, CatalogParams};
use finsler_douglas::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn catalog_items() -> Vec<CatalogItem> {
    catalog_entries()
        .iter()
        .map(|e| catalog(e.name, &CatalogParams::default()).expect("catalog defaults resolve"))
        .collect()
}

/// `b ≤ min(0.8, 0.9 b₀)`, `|s| ≤ 0.95 b`, `s ≠ 0` for even `ns`.
pub fn grid_for(item: &CatalogItem, nb: usize, ns: usize) -> Vec<(f64, f64)> {
    bs_grid(0.8_f64.min(0.9 * item.b0), nb, ns)
}

pub fn phi(src: &str) -> PhiSpec {
    PhiSpec::from_expr(src, Consts::new(), f64::INFINITY).expect("fixture parses")
}

/// Randers `F = α + β` with the non-closed `β = x² dx¹`.
pub fn randers_shear(n: usize) -> (Chart, PhiSpec) {
    let chart = Chart::new(n, MetricKind::Euclidean, FormKind::Shear).unwrap();
    let phi = PhiSpec::from_expr("1 + s", Consts::new(), 1.0).unwrap();
    (chart, phi)
}

/// Smooth non-Douglas profile with random coefficients.
pub fn random_profile(rng: &mut ChaCha8Rng) -> PhiSpec {
    let c: Vec<f64> = (0..4).map(|_| rng.random_range(-0.3..0.3)).collect();
    let src = format!(
        "sqrt(1 + b2 + {:.6}*b2*s^2 + s^2) + {:.6}*s + {:.6}*s^3 + {:.6}*b2",
        c[0].abs(),
        c[1],
        c[2],
        c[3]
    );
    phi(&src)
}

/// A random smooth field `f(x, y)`: a cubic polynomial times an exponential
/// plus a square root, with coefficients drawn from `seed`.
#[derive(Debug, Clone)]
pub struct RandomField {
    pub n: usize,
    poly: Vec<(f64, Vec<usize>)>,
    lin: Vec<f64>,
    root: Vec<f64>,
}

impl RandomField {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars = 2 * n;
        let poly = (0..6)
            .map(|_| {
                let deg = rng.random_range(0..=3);
                let mons = (0..deg).map(|_| rng.random_range(0..vars)).collect();
                (rng.random_range(-1.0..1.0), mons)
            })
            .collect();
        let lin = (0..vars).map(|_| rng.random_range(-0.5..0.5)).collect();
        let root = (0..vars).map(|_| rng.random_range(-0.7..0.7)).collect();
        Self { n, poly, lin, root }
    }

    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        let v: Vec<S> = x.iter().chain(y).cloned().collect();
        let zero = v[0].constant_like(0.0);
        let mut p = zero.clone();
        for (c, mons) in &self.poly {
            let mut t = v[0].constant_like(*c);
            for &m in mons {
                t = t * v[m].clone();
            }
            p = p + t;
        }
        let mut l = zero.clone();
        let mut r = zero.constant_like(1.0);
        for (i, vi) in v.iter().enumerate() {
            l = l + vi.scale(self.lin[i]);
            r = r + (vi.clone() * vi.clone()).scale(self.root[i] * self.root[i]);
        }
        Ok(p * l.exp()? + r.sqrt()?)
    }

    pub fn derivatives(&self, x: &[f64], y: &[f64], order: usize) -> Result<FieldDerivatives> {
        field_derivatives(
            |xs: &[Poly], ys: &[Poly]| self.eval(xs, ys),
            x,
            y,
            order,
            true,
        )
    }
}

/// Richardson-extrapolated central difference of `g` at `t = 0`.
pub fn richardson<G: Fn(f64) -> f64>(g: G, h: f64) -> f64 {
    let d = |h: f64| (g(h) - g(-h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs())
}

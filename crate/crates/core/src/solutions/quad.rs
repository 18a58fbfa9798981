//! Adaptive Gauss–Legendre quadrature for vector-valued integrands.

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Apply the rule on `[a, b]`.
    pub fn apply<F>(&self, f: &mut F, a: f64, b: f64, dim: usize) -> Result<Vec<f64>>
    where
        F: FnMut(f64) -> Result<Vec<f64>>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = vec![0.0; dim];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x)?;
            for (s, vi) in acc.iter_mut().zip(v) {
                *s += w * half * vi;
            }
        }
        Ok(acc)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const MAX_DEPTH: usize = 40;
/// Total panel budget per call.
const MAX_PANELS: usize = 1 << 13;

/// Adaptive bisection: a panel is accepted when the whole-panel estimate
/// and the sum of its halves agree to `tol * max(1, |estimate|)` in every
/// component.
pub fn integrate<F>(
    rule: &GaussLegendre,
    f: F,
    a: f64,
    b: f64,
    dim: usize,
    tol: f64,
) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    integrate_scaled(rule, f, a, b, &vec![1.0; dim], tol)
}

/// As [`integrate`], with `tol * max(scale_i, |estimate_i|)` per component.
pub fn integrate_scaled<F>(
    rule: &GaussLegendre,
    mut f: F,
    a: f64,
    b: f64,
    scales: &[f64],
    tol: f64,
) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let dim = scales.len();
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    let whole = rule.apply(&mut f, a, b, dim)?;
    let mut out = vec![0.0; dim];
    let mut budget = MAX_PANELS;
    let mut ctx = Ctx {
        rule,
        f: &mut f,
        scales,
        tol,
        budget: &mut budget,
    };
    recurse(&mut ctx, a, b, whole, 0, &mut out)?;
    Ok(out)
}

struct Ctx<'a, F> {
    rule: &'a GaussLegendre,
    f: &'a mut F,
    scales: &'a [f64],
    tol: f64,
    budget: &'a mut usize,
}

fn recurse<F>(
    ctx: &mut Ctx<'_, F>,
    a: f64,
    b: f64,
    whole: Vec<f64>,
    depth: usize,
    out: &mut [f64],
) -> Result<()>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let dim = ctx.scales.len();
    let m = 0.5 * (a + b);
    let left = ctx.rule.apply(ctx.f, a, m, dim)?;
    let right = ctx.rule.apply(ctx.f, m, b, dim)?;
    let mut err: f64 = 0.0;
    for i in 0..dim {
        let split = left[i] + right[i];
        let d = (split - whole[i]).abs() / split.abs().max(ctx.scales[i]);
        if !d.is_finite() {
            return Err(Error::Quadrature { a, b, estimate: d });
        }
        err = err.max(d);
    }
    if err <= ctx.tol {
        for i in 0..dim {
            out[i] += left[i] + right[i];
        }
        return Ok(());
    }
    if depth >= MAX_DEPTH || *ctx.budget == 0 {
        return Err(Error::Quadrature {
            a,
            b,
            estimate: err,
        });
    }
    *ctx.budget -= 1;
    recurse(ctx, a, m, left, depth + 1, out)?;
    recurse(ctx, m, b, right, depth + 1, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let r = GaussLegendre::new(5);
        // exact through degree 9
        let v = r
            .apply(&mut |x| Ok(vec![x.powi(8), x.powi(9)]), -1.0, 1.0, 2)
            .unwrap();
        assert!((v[0] - 2.0 / 9.0).abs() < 1e-15);
        assert!(v[1].abs() < 1e-15);
        let w: f64 = GaussLegendre::new(64).weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_a_peaked_integrand() {
        let r = GaussLegendre::new(10);
        let v = integrate(&r, |x| Ok(vec![1.0 / (1e-4 + x * x)]), -1.0, 1.0, 1, 1e-13).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v[0] - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn non_finite_integrand_fails() {
        let r = GaussLegendre::new(4);
        assert!(matches!(
            integrate(&r, |_| Ok(vec![f64::NAN]), 0.0, 1.0, 1, 1e-10),
            Err(Error::Quadrature { .. })
        ));
    }
}

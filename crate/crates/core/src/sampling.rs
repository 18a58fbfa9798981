//! Seeded sample points `(x, y)` and `(b², s)` grids.
//!
//! The generator is ChaCha8 seeded with `seed_from_u64`, so sample sets are
//! reproducible across platforms.

use crate::chart::{Geometry, RiemannChart};
use crate::error::{Error, Result};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Fraction of the admissible range kept clear of `|s| = b` and `b = b0`.
pub const EDGE: f64 = 0.95;
/// Points with `b` below this are skipped.
pub const MIN_B: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    pub count: usize,
    pub seed: u64,
    /// `x` is drawn uniformly from the ball of this radius.
    pub radius: f64,
    /// Give up after `count * attempts_per_sample + 1000` draws.
    pub attempts_per_sample: usize,
}

impl SampleConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            radius: 1.0,
            attempts_per_sample: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Draw `(x, y)` with `x` in the chart domain, `0.05 <= b <= 0.95 b0` and
/// `|s| <= 0.95 b`.
pub fn sample_points(chart: &dyn RiemannChart, b0: f64, cfg: &SampleConfig) -> Result<Vec<Sample>> {
    let n = chart.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let limit = cfg.count * cfg.attempts_per_sample + 1000;
    let mut out = Vec::with_capacity(cfg.count);
    let mut attempts = 0;
    while out.len() < cfg.count {
        if attempts >= limit {
            return Err(Error::SamplerExhausted {
                attempts,
                accepted: out.len(),
            });
        }
        attempts += 1;
        let dir = normal_vec(&mut rng, n);
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = cfg.radius * rng.random::<f64>().powf(1.0 / n as f64);
        let y = normal_vec(&mut rng, n);
        if norm == 0.0 {
            continue;
        }
        let x: Vec<f64> = dir.iter().map(|v| v / norm * radius).collect();
        if !chart.contains(&x) {
            continue;
        }
        let Ok(geom) = Geometry::at(chart, &x) else {
            continue;
        };
        let b = geom.b2.sqrt();
        if b < MIN_B || b > EDGE * b0 {
            continue;
        }
        let yv = DVector::from_column_slice(&y);
        let alpha = geom.alpha(&yv);
        if alpha == 0.0 {
            continue;
        }
        let s = geom.beta_of(&yv) / alpha;
        if s.abs() > EDGE * b {
            continue;
        }
        out.push(Sample { x, y });
    }
    Ok(out)
}

/// A rectangular grid of `(b², s)` nodes: `nb` values of `b` evenly spaced
/// up to `b_max` (excluding 0) and `ns` values of `s` spanning
/// `[-0.95 b, 0.95 b]`.
pub fn bs_grid(b_max: f64, nb: usize, ns: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(nb * ns);
    for i in 0..nb {
        let b = b_max * (i + 1) as f64 / nb as f64;
        for j in 0..ns {
            let t = if ns == 1 {
                0.0
            } else {
                -EDGE + 2.0 * EDGE * j as f64 / (ns - 1) as f64
            };
            out.push((b * b, b * t));
        }
    }
    out
}

/// Random `(b², s)` pairs with `b` in `[MIN_B, b_max]` and `|s| <= 0.95 b`.
pub fn random_bs(b_max: f64, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let b = MIN_B + (b_max - MIN_B) * rng.random::<f64>();
            let t = EDGE * (2.0 * rng.random::<f64>() - 1.0);
            (b * b, b * t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    #[test]
    fn samples_are_reproducible_and_admissible() {
        let ch = Chart::euclidean(3, vec![0.0; 3]).unwrap();
        let cfg = SampleConfig::new(30, 7);
        let a = sample_points(&ch, 1.0, &cfg).unwrap();
        let b = sample_points(&ch, 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        for p in &a {
            let r: f64 = p.x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((MIN_B..=0.95).contains(&r));
            let yn: f64 = p.y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let s: f64 = p.x.iter().zip(&p.y).map(|(u, v)| u * v).sum::<f64>() / yn;
            assert!(s.abs() <= 0.95 * r + 1e-15);
        }
    }

    #[test]
    fn impossible_domain_exhausts() {
        let ch = Chart::euclidean(2, vec![0.0; 2]).unwrap();
        let mut cfg = SampleConfig::new(5, 1);
        cfg.attempts_per_sample = 1;
        // b0 below the minimum b rejects every draw
        let r = sample_points(&ch, 0.01, &cfg);
        assert!(matches!(
            r,
            Err(Error::SamplerExhausted { accepted: 0, .. })
        ));
    }

    #[test]
    fn grid_shape() {
        let g = bs_grid(0.8, 10, 10);
        assert_eq!(g.len(), 100);
        assert!(g.iter().all(|&(b2, s)| b2 > 0.0 && s.abs() < b2.sqrt()));
        assert!((g[99].0 - 0.64).abs() < 1e-15);
    }
}

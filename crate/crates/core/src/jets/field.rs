use super::{Poly, Space};
use crate::error::{Error, Result};
use std::sync::Arc;

/// Dense `n^rank` tensor, row-major in its indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    n: usize,
    rank: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, rank: usize) -> Self {
        Self {
            n,
            rank,
            data: vec![0.0; n.pow(rank as u32)],
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], x: f64) {
        let o = self.offset(idx);
        self.data[o] = x;
    }

    /// All index tuples in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.data.len()).map(move |mut flat| {
            let mut idx = vec![0; self.rank];
            for slot in idx.iter_mut().rev() {
                *slot = flat % self.n;
                flat /= self.n;
            }
            idx
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Derivatives of a scalar field `f(x, y)` at one point.
///
/// `dy(k)` holds `∂^k f / ∂y^{i1}…∂y^{ik}` for `k = 1..=order`;
/// `dxdy(k)` holds `∂^{k+1} f / ∂x^j ∂y^{i1}…∂y^{ik}` with the x-index first,
/// for `k = 0..order`, when x-derivatives were requested.
#[derive(Debug, Clone)]
pub struct FieldDerivatives {
    pub n: usize,
    pub value: f64,
    dy: Vec<Tensor>,
    dxdy: Vec<Tensor>,
}

impl FieldDerivatives {
    pub fn order(&self) -> usize {
        self.dy.len()
    }

    pub fn dy(&self, k: usize) -> &Tensor {
        assert!(k >= 1, "pure y-derivatives start at order 1");
        &self.dy[k - 1]
    }

    pub fn has_x(&self) -> bool {
        !self.dxdy.is_empty()
    }

    pub fn dxdy(&self, k: usize) -> &Tensor {
        &self.dxdy[k]
    }

    /// Assemble from a field jet produced by [`field_jet`].
    pub fn from_jet(jet: &Poly, n: usize) -> Self {
        let space = jet.space();
        let need_x = space.nx() > 0;
        let y0 = if need_x { n } else { 0 };
        let order = space.degree();
        let mut buf = vec![0u8; space.nvars()];
        let mut deriv = |xs: Option<usize>, ys: &[usize]| -> f64 {
            buf.iter_mut().for_each(|b| *b = 0);
            if let Some(j) = xs {
                buf[j] = 1;
            }
            for &i in ys {
                buf[y0 + i] += 1;
            }
            let mult: f64 = buf.iter().map(|&e| factorial(e as usize)).product();
            jet.coeff(&buf) * mult
        };
        let dy = (1..=order)
            .map(|k| {
                let mut t = Tensor::zeros(n, k);
                for idx in t.indices().collect::<Vec<_>>() {
                    let v = deriv(None, &idx);
                    t.set(&idx, v);
                }
                t
            })
            .collect();
        let dxdy = if need_x {
            (0..order)
                .map(|k| {
                    let mut t = Tensor::zeros(n, k + 1);
                    for idx in t.indices().collect::<Vec<_>>() {
                        let v = deriv(Some(idx[0]), &idx[1..]);
                        t.set(&idx, v);
                    }
                    t
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            n,
            value: jet.coeffs()[0],
            dy,
            dxdy,
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Evaluate `f` on perturbed coordinates and return its truncated expansion.
///
/// With `need_x`, variables `0..n` carry `δx` (capped at degree 1) and
/// `n..2n` carry `δy`; otherwise the space has only the `n` y-variables and
/// `x` enters as constants.
pub fn field_jet<F>(f: F, x: &[f64], y: &[f64], order: usize, need_x: bool) -> Result<Poly>
where
    F: Fn(&[Poly], &[Poly]) -> Result<Poly>,
{
    let n = y.len();
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    let space: Arc<Space> = if need_x {
        Space::get(2 * n, n, order)
    } else {
        Space::get(n, 0, order)
    };
    let xs: Vec<Poly> = x
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            if need_x {
                Poly::variable(&space, k, xk)
            } else {
                Poly::constant(&space, xk)
            }
        })
        .collect();
    let y0 = if need_x { n } else { 0 };
    let ys: Vec<Poly> = y
        .iter()
        .enumerate()
        .map(|(l, &yl)| Poly::variable(&space, y0 + l, yl))
        .collect();
    let jet = f(&xs, &ys)?;
    if let Some(i) = jet.coeffs().iter().position(|c| !c.is_finite()) {
        let index = space.monomial(i).iter().map(|&e| e as usize).collect();
        return Err(Error::NonFinite { index });
    }
    Ok(jet)
}

/// Pure y-partials up to `order` and, when `need_x`, mixed `∂_x ∂_y^k`
/// partials up to `k = order - 1`.
pub fn field_derivatives<F>(
    f: F,
    x: &[f64],
    y: &[f64],
    order: usize,
    need_x: bool,
) -> Result<FieldDerivatives>
where
    F: Fn(&[Poly], &[Poly]) -> Result<Poly>,
{
    let jet = field_jet(f, x, y, order, need_x)?;
    Ok(FieldDerivatives::from_jet(&jet, y.len()))
}

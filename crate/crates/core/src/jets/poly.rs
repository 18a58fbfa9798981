use super::{scalar_via_series, series, Elementary};
use crate::error::Result;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Monomial basis for truncated polynomials.
///
/// Variables `0..nx` are "x" variables whose combined degree is capped at 1;
/// variables `nx..nvars` are unrestricted up to the total `degree`. With
/// `nx = 0` this is the plain total-degree truncation.
pub struct Space {
    nvars: usize,
    nx: usize,
    degree: usize,
    monomials: Vec<Vec<u8>>,
    degrees: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    // (i, j, k): monomial i times monomial j is monomial k
    products: Vec<(u32, u32, u32)>,
}

type SpaceCache = Mutex<HashMap<(usize, usize, usize), Arc<Space>>>;

impl Space {
    /// Shared instance for `(nvars, nx, degree)`.
    pub fn get(nvars: usize, nx: usize, degree: usize) -> Arc<Space> {
        static CACHE: OnceLock<SpaceCache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("space cache poisoned");
        guard
            .entry((nvars, nx, degree))
            .or_insert_with(|| Arc::new(Space::build(nvars, nx, degree)))
            .clone()
    }

    fn build(nvars: usize, nx: usize, degree: usize) -> Space {
        assert!(nx <= nvars);
        let mut monomials = Vec::new();
        for d in 0..=degree {
            let mut cur = vec![0u8; nvars];
            enumerate(&mut cur, 0, d, &mut monomials);
        }
        let monomials: Vec<Vec<u8>> = monomials
            .into_iter()
            .filter(|m| m[..nx].iter().map(|&e| e as usize).sum::<usize>() <= 1)
            .collect();
        let degrees: Vec<usize> = monomials
            .iter()
            .map(|m| m.iter().map(|&e| e as usize).sum())
            .collect();
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut products = Vec::new();
        let mut buf = vec![0u8; nvars];
        for (i, mi) in monomials.iter().enumerate() {
            for (j, mj) in monomials.iter().enumerate() {
                if degrees[i] + degrees[j] > degree {
                    continue;
                }
                for v in 0..nvars {
                    buf[v] = mi[v] + mj[v];
                }
                if let Some(&k) = index.get(&buf) {
                    products.push((i as u32, j as u32, k as u32));
                }
            }
        }
        Space {
            nvars,
            nx,
            degree,
            monomials,
            degrees,
            index,
            products,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monomials[i]
    }

    pub fn monomial_degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Space")
            .field("nvars", &self.nvars)
            .field("nx", &self.nx)
            .field("degree", &self.degree)
            .field("len", &self.len())
            .finish()
    }
}

// All exponent vectors of total degree `left` over positions `pos..`.
fn enumerate(cur: &mut [u8], pos: usize, left: usize, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u8;
        out.push(cur.to_vec());
        cur[pos] = 0;
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e as u8;
        enumerate(cur, pos + 1, left - e, out);
    }
    cur[pos] = 0;
}

/// A truncated multivariate polynomial (a multivariate jet about the origin
/// of its perturbation variables).
#[derive(Clone)]
pub struct Poly {
    space: Arc<Space>,
    c: Vec<f64>,
}

impl Poly {
    pub fn zeros(space: &Arc<Space>) -> Self {
        Self {
            space: space.clone(),
            c: vec![0.0; space.len()],
        }
    }

    pub fn constant(space: &Arc<Space>, value: f64) -> Self {
        let mut p = Self::zeros(space);
        p.c[0] = value;
        p
    }

    /// `value + δ_var`.
    pub fn variable(space: &Arc<Space>, var: usize, value: f64) -> Self {
        let mut p = Self::constant(space, value);
        if space.degree >= 1 {
            let mut e = vec![0u8; space.nvars];
            e[var] = 1;
            let i = space.index_of(&e).expect("degree-1 monomial");
            p.c[i] = 1.0;
        }
        p
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeff(&self, exponents: &[u8]) -> f64 {
        self.space.index_of(exponents).map_or(0.0, |i| self.c[i])
    }

    pub fn set_coeff(&mut self, exponents: &[u8], x: f64) {
        let i = self
            .space
            .index_of(exponents)
            .expect("monomial outside the space");
        self.c[i] = x;
    }

    pub fn add_to_coeff(&mut self, i: usize, x: f64) {
        self.c[i] += x;
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    /// Partial derivative with respect to perturbation variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zeros(&self.space);
        let mut buf = vec![0u8; self.space.nvars];
        for (i, m) in self.space.monomials.iter().enumerate() {
            let e = m[var];
            if e == 0 || self.c[i] == 0.0 {
                continue;
            }
            buf.copy_from_slice(m);
            buf[var] -= 1;
            let k = self.space.index_of(&buf).expect("lowered monomial");
            out.c[k] += e as f64 * self.c[i];
        }
        out
    }

    /// Re-express in another space by mapping variables: variable `v` of
    /// `self` becomes variable `map[v]` of `target` (`None` drops every
    /// monomial containing it). Monomials outside `target` are truncated.
    pub fn remap(&self, target: &Arc<Space>, map: &[Option<usize>]) -> Self {
        let mut out = Self::zeros(target);
        let mut buf = vec![0u8; target.nvars];
        'mono: for (i, m) in self.space.monomials.iter().enumerate() {
            if self.c[i] == 0.0 {
                continue;
            }
            buf.iter_mut().for_each(|b| *b = 0);
            for (v, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match map[v] {
                    Some(t) => buf[t] += e,
                    None => continue 'mono,
                }
            }
            if let Some(k) = target.index_of(&buf) {
                out.c[k] += self.c[i];
            }
        }
        out
    }

    /// `Σ_j series[j] (self - self₀)^j`.
    pub fn compose(&self, series: &[f64]) -> Self {
        let top = (series.len().max(1) - 1).min(self.space.degree);
        let mut tail = self.clone();
        tail.c[0] = 0.0;
        let mut acc = Self::constant(&self.space, series.get(top).copied().unwrap_or(0.0));
        for j in (0..top).rev() {
            acc = &acc * &tail;
            acc.c[0] += series[j];
        }
        acc
    }

    pub(crate) fn constant_same(&self, c: f64) -> Self {
        Self::constant(&self.space, c)
    }

    pub(crate) fn constant_term(&self) -> f64 {
        self.c[0]
    }

    pub(crate) fn scaled(&self, k: f64) -> Self {
        Self {
            space: self.space.clone(),
            c: self.c.iter().map(|x| x * k).collect(),
        }
    }

    pub(crate) fn apply(&self, f: Elementary) -> Result<Self> {
        let s = series(f, self.c[0], self.space.degree)?;
        Ok(self.compose(&s))
    }

    fn check_space(&self, rhs: &Self) {
        assert!(
            Arc::ptr_eq(&self.space, &rhs.space),
            "polynomials live in different spaces"
        );
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<(&[u8], f64)> = self
            .space
            .monomials
            .iter()
            .zip(&self.c)
            .filter(|(_, &c)| c != 0.0)
            .map(|(m, &c)| (m.as_slice(), c))
            .collect();
        f.debug_struct("Poly")
            .field("space", &self.space)
            .field("terms", &terms)
            .finish()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.check_space(rhs);
        Poly {
            space: self.space.clone(),
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.check_space(rhs);
        Poly {
            space: self.space.clone(),
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.check_space(rhs);
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.space.products {
            c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        Poly {
            space: self.space.clone(),
            c,
        }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scaled(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

scalar_via_series!(Poly);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Scalar;

    #[test]
    fn space_sizes() {
        // C(n + d, d) monomials in n variables up to degree d
        assert_eq!(Space::get(3, 0, 4).len(), 35);
        assert_eq!(Space::get(4, 0, 6).len(), 210);
        // x-degree <= 1: 210 pure-y plus 4 * C(9, 4) with one x factor
        assert_eq!(Space::get(8, 4, 6).len(), 210 + 4 * 126);
    }

    #[test]
    fn x_degree_is_capped() {
        let sp = Space::get(2, 1, 4);
        let x = Poly::variable(&sp, 0, 0.0);
        let x2 = &x * &x;
        assert!(x2.coeffs().iter().all(|&c| c == 0.0));
        let y = Poly::variable(&sp, 1, 0.0);
        let xy3 = &x * &(&(&y * &y) * &y);
        assert_eq!(xy3.coeff(&[1, 3]), 1.0);
    }

    #[test]
    fn binomial_expansion() {
        let sp = Space::get(2, 0, 3);
        let s = &Poly::variable(&sp, 0, 1.0) + &Poly::variable(&sp, 1, 0.0);
        let cube = s.powi(3).unwrap();
        assert_eq!(cube.coeff(&[0, 0]), 1.0);
        assert_eq!(cube.coeff(&[1, 0]), 3.0);
        assert_eq!(cube.coeff(&[1, 1]), 6.0);
        assert_eq!(cube.coeff(&[2, 1]), 3.0);
        assert_eq!(cube.coeff(&[0, 3]), 1.0);
    }

    #[test]
    fn derivative_and_remap() {
        let sp = Space::get(2, 0, 3);
        let x = Poly::variable(&sp, 0, 2.0);
        let y = Poly::variable(&sp, 1, 0.0);
        let p = &(&x * &x) * &y; // (2 + dx)^2 dy
        let dp = p.derivative(1);
        assert_eq!(dp.coeff(&[0, 0]), 4.0);
        assert_eq!(dp.coeff(&[1, 0]), 4.0);
        let target = Space::get(1, 0, 3);
        let only_x = p.derivative(1).remap(&target, &[Some(0), None]);
        assert_eq!(only_x.coeff(&[2]), 1.0);
    }

    #[test]
    fn recip_times_self_is_one() {
        let sp = Space::get(3, 0, 5);
        let p = &(&Poly::variable(&sp, 0, 1.5) * &Poly::variable(&sp, 1, -0.5))
            + &Poly::variable(&sp, 2, 0.25);
        let q = &p * &p.recip().unwrap();
        for (i, &c) in q.coeffs().iter().enumerate() {
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-13, "coeff {i}: {c}");
        }
    }
}

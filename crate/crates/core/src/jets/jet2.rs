use super::{scalar_via_series, series, Elementary};
use crate::error::{Error, Result};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Truncated bivariate Taylor expansion in `(u, v)`.
///
/// `coeff(a, b)` is `∂_u^a ∂_v^b f / (a! b!)` at the base point, for
/// `a <= du` and `b <= dv`. Arithmetic truncates each variable separately.
#[derive(Clone, PartialEq)]
pub struct Jet2 {
    du: usize,
    dv: usize,
    c: Vec<f64>,
}

impl Jet2 {
    pub const DEFAULT_ORDERS: (usize, usize) = (1, 6);

    pub fn zeros(du: usize, dv: usize) -> Self {
        Self {
            du,
            dv,
            c: vec![0.0; (du + 1) * (dv + 1)],
        }
    }

    pub fn constant(value: f64, du: usize, dv: usize) -> Self {
        let mut j = Self::zeros(du, dv);
        j.c[0] = value;
        j
    }

    /// The independent variable `u` expanded at `u0`.
    pub fn var_u(u0: f64, du: usize, dv: usize) -> Self {
        let mut j = Self::constant(u0, du, dv);
        if du >= 1 {
            j.set(1, 0, 1.0);
        }
        j
    }

    /// The independent variable `v` expanded at `v0`.
    pub fn var_v(v0: f64, du: usize, dv: usize) -> Self {
        let mut j = Self::constant(v0, du, dv);
        if dv >= 1 {
            j.set(0, 1, 1.0);
        }
        j
    }

    /// Build from a coefficient table `rows[a][b]`.
    pub fn from_coeffs(rows: &[Vec<f64>]) -> Self {
        let du = rows.len().saturating_sub(1);
        let dv = rows.first().map_or(0, |r| r.len().saturating_sub(1));
        let mut j = Self::zeros(du, dv);
        for (a, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dv + 1, "ragged coefficient table");
            for (b, &x) in row.iter().enumerate() {
                j.set(a, b, x);
            }
        }
        j
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.du, self.dv)
    }

    #[inline]
    fn idx(&self, a: usize, b: usize) -> usize {
        a * (self.dv + 1) + b
    }

    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a > self.du || b > self.dv {
            return 0.0;
        }
        self.c[self.idx(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, x: f64) {
        let i = self.idx(a, b);
        self.c[i] = x;
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// The partial derivative `∂_u^a ∂_v^b f` at the base point.
    pub fn partial(&self, a: usize, b: usize) -> f64 {
        self.coeff(a, b) * factorial(a) * factorial(b)
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    /// `∂f/∂u` as a jet of orders `(du - 1, dv)`.
    pub fn d_u(&self) -> Self {
        assert!(self.du >= 1, "d_u of a jet with du = 0");
        let mut out = Self::zeros(self.du - 1, self.dv);
        for a in 0..self.du {
            for b in 0..=self.dv {
                out.set(a, b, (a + 1) as f64 * self.coeff(a + 1, b));
            }
        }
        out
    }

    /// `∂f/∂v` as a jet of orders `(du, dv - 1)`.
    pub fn d_v(&self) -> Self {
        assert!(self.dv >= 1, "d_v of a jet with dv = 0");
        let mut out = Self::zeros(self.du, self.dv - 1);
        for a in 0..=self.du {
            for b in 0..self.dv {
                out.set(a, b, (b + 1) as f64 * self.coeff(a, b + 1));
            }
        }
        out
    }

    /// Drop coefficients beyond the given orders (or pad with zeros).
    pub fn truncate(&self, du: usize, dv: usize) -> Self {
        let mut out = Self::zeros(du, dv);
        for a in 0..=du {
            for b in 0..=dv {
                out.set(a, b, self.coeff(a, b));
            }
        }
        out
    }

    /// `Σ_j series[j] (self - self₀)^j`.
    pub fn compose(&self, series: &[f64]) -> Self {
        let top = (series.len().max(1) - 1).min(self.du + self.dv);
        let mut tail = self.clone();
        tail.c[0] = 0.0;
        let mut acc = Self::constant(series.get(top).copied().unwrap_or(0.0), self.du, self.dv);
        for j in (0..top).rev() {
            acc = &acc * &tail;
            acc.c[0] += series[j];
        }
        acc
    }

    /// Substitute `u -> u_jet`, `v -> v_jet` where both arguments share a
    /// shape other than `Jet2` (e.g. [`super::Poly`]): `Σ c_ab (u-u₀)^a (v-v₀)^b`.
    pub fn substitute<S: super::Scalar>(&self, du_tail: &S, dv_tail: &S) -> S {
        // Horner in v for each power of u, then Horner in u.
        let mut outer: Option<S> = None;
        for a in (0..=self.du).rev() {
            let mut inner = du_tail.constant_like(self.coeff(a, self.dv));
            for b in (0..self.dv).rev() {
                inner = (inner * dv_tail.clone()).add_const(self.coeff(a, b));
            }
            outer = Some(match outer {
                None => inner,
                Some(acc) => acc * du_tail.clone() + inner,
            });
        }
        outer.expect("at least one row")
    }

    pub(crate) fn constant_same(&self, c: f64) -> Self {
        Self::constant(c, self.du, self.dv)
    }

    pub(crate) fn constant_term(&self) -> f64 {
        self.c[0]
    }

    pub(crate) fn scaled(&self, k: f64) -> Self {
        Self {
            du: self.du,
            dv: self.dv,
            c: self.c.iter().map(|x| x * k).collect(),
        }
    }

    pub(crate) fn apply(&self, f: Elementary) -> Result<Self> {
        let s = series(f, self.c[0], self.du + self.dv)?;
        Ok(self.compose(&s))
    }

    /// Division with the singular-jet check on the denominator.
    pub fn try_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.c[0] == 0.0 {
            return Err(Error::SingularJet);
        }
        Ok(self * &rhs.apply(Elementary::Recip)?)
    }

    fn check_shape(&self, rhs: &Self) {
        assert_eq!(
            (self.du, self.dv),
            (rhs.du, rhs.dv),
            "jet orders must match"
        );
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.c.chunks(self.dv + 1).collect();
        f.debug_struct("Jet2").field("coeff", &rows).finish()
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        self.check_shape(rhs);
        Jet2 {
            du: self.du,
            dv: self.dv,
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        self.check_shape(rhs);
        Jet2 {
            du: self.du,
            dv: self.dv,
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        self.check_shape(rhs);
        let mut out = Jet2::zeros(self.du, self.dv);
        for a1 in 0..=self.du {
            for b1 in 0..=self.dv {
                let x = self.c[self.idx(a1, b1)];
                if x == 0.0 {
                    continue;
                }
                for a2 in 0..=self.du - a1 {
                    for b2 in 0..=self.dv - b1 {
                        let k = out.idx(a1 + a2, b1 + b2);
                        out.c[k] += x * rhs.c[rhs.idx(a2, b2)];
                    }
                }
            }
        }
        out
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scaled(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: Jet2) -> Jet2 {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        -&self
    }
}

scalar_via_series!(Jet2);

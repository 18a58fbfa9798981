//! Truncated Taylor arithmetic.
//!
//! Two flavours live here. [`Jet2`] is a bivariate expansion in `(u, v) =
//! (b², s)` used for profile functions `φ(b², s)`. [`Poly`] is a truncated
//! multivariate polynomial used to push whole fields `F²(x, y)` through the
//! spray pipeline. Both implement [`Scalar`], so the same expression code runs
//! over plain reals and over either jet type.

mod field;
mod jet2;
mod poly;

pub use field::{field_derivatives, field_jet, FieldDerivatives, Tensor};
pub use jet2::Jet2;
pub use poly::{Poly, Space};

use crate::error::{Error, Result};
use std::ops::{Add, Mul, Neg, Sub};

/// Number-like values that expressions and closed forms can be evaluated on.
pub trait Scalar:
    Clone
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// A constant with the same shape (jet orders, space) as `self`.
    fn constant_like(&self, c: f64) -> Self;
    /// The constant term.
    fn value(&self) -> f64;
    fn scale(&self, k: f64) -> Self;
    fn recip(&self) -> Result<Self>;
    fn sqrt(&self) -> Result<Self>;
    fn exp(&self) -> Result<Self>;
    fn ln(&self) -> Result<Self>;
    fn powf(&self, r: f64) -> Result<Self>;
    fn powi(&self, k: i32) -> Result<Self>;
    fn atan(&self) -> Result<Self>;

    fn div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.clone() * rhs.recip()?)
    }

    fn add_const(&self, c: f64) -> Self {
        self.clone() + self.constant_like(c)
    }
}

impl Scalar for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(&self, k: f64) -> Self {
        self * k
    }
    fn recip(&self) -> Result<Self> {
        if *self == 0.0 {
            return Err(Error::SingularJet);
        }
        Ok(1.0 / self)
    }
    fn sqrt(&self) -> Result<Self> {
        if *self < 0.0 {
            return Err(Error::Domain {
                op: "sqrt",
                value: *self,
            });
        }
        Ok(f64::sqrt(*self))
    }
    fn exp(&self) -> Result<Self> {
        Ok(f64::exp(*self))
    }
    fn ln(&self) -> Result<Self> {
        if *self <= 0.0 {
            return Err(Error::Domain {
                op: "log",
                value: *self,
            });
        }
        Ok(f64::ln(*self))
    }
    fn powf(&self, r: f64) -> Result<Self> {
        if r.fract() == 0.0 && r.abs() < i32::MAX as f64 {
            return Scalar::powi(self, r as i32);
        }
        if *self <= 0.0 {
            return Err(Error::Domain {
                op: "pow",
                value: *self,
            });
        }
        Ok(f64::powf(*self, r))
    }
    fn powi(&self, k: i32) -> Result<Self> {
        if k < 0 && *self == 0.0 {
            return Err(Error::SingularJet);
        }
        Ok(f64::powi(*self, k))
    }
    fn atan(&self) -> Result<Self> {
        Ok(f64::atan(*self))
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            return Err(Error::SingularJet);
        }
        Ok(self / rhs)
    }
}

/// Elementary functions as Taylor series about a base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Elementary {
    Recip,
    Exp,
    Ln,
    Pow(f64),
    PowInt(i32),
    Atan,
}

/// Taylor coefficients `f^(k)(a) / k!` for `k = 0..=order`.
pub(crate) fn series(f: Elementary, a: f64, order: usize) -> Result<Vec<f64>> {
    let mut c = vec![0.0; order + 1];
    match f {
        Elementary::Recip => {
            if a == 0.0 {
                return Err(Error::SingularJet);
            }
            let inv = 1.0 / a;
            let mut t = inv;
            for ck in c.iter_mut() {
                *ck = t;
                t *= -inv;
            }
        }
        Elementary::Exp => {
            let mut t = a.exp();
            for (k, ck) in c.iter_mut().enumerate() {
                if k > 0 {
                    t /= k as f64;
                }
                *ck = t;
            }
        }
        Elementary::Ln => {
            if a <= 0.0 {
                return Err(Error::Domain {
                    op: "log",
                    value: a,
                });
            }
            c[0] = a.ln();
            let inv = 1.0 / a;
            let mut p = 1.0;
            for k in 1..=order {
                p *= inv;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                c[k] = sign * p / k as f64;
            }
        }
        Elementary::Pow(r) => {
            if a <= 0.0 {
                let op = if r == 0.5 { "sqrt" } else { "pow" };
                return Err(Error::Domain { op, value: a });
            }
            // binom(r, k) a^(r-k)
            let mut binom = 1.0;
            let base = a.powf(r);
            let inv = 1.0 / a;
            let mut p = 1.0;
            for k in 0..=order {
                if k > 0 {
                    binom *= (r - (k as f64 - 1.0)) / k as f64;
                    p *= inv;
                }
                c[k] = binom * base * p;
            }
        }
        Elementary::PowInt(r) => {
            if r >= 0 {
                // exact expansion of (a + t)^r
                let r = r as usize;
                let mut binom = 1.0;
                for k in 0..=order.min(r) {
                    if k > 0 {
                        binom *= (r - k + 1) as f64 / k as f64;
                    }
                    c[k] = binom * a.powi((r - k) as i32);
                }
            } else {
                if a == 0.0 {
                    return Err(Error::SingularJet);
                }
                let rf = r as f64;
                let mut binom = 1.0;
                for k in 0..=order {
                    if k > 0 {
                        binom *= (rf - (k as f64 - 1.0)) / k as f64;
                    }
                    c[k] = binom * a.powi(r - k as i32);
                }
            }
        }
        Elementary::Atan => {
            c[0] = a.atan();
            if order > 0 {
                // q = 1 / (1 + (a + t)^2) = 1 / (q0 + q1 t + t^2)
                let (d0, d1) = (1.0 + a * a, 2.0 * a);
                let mut q = vec![0.0; order];
                for k in 0..order {
                    let mut acc = if k == 0 { 1.0 } else { 0.0 };
                    if k >= 1 {
                        acc -= d1 * q[k - 1];
                    }
                    if k >= 2 {
                        acc -= q[k - 2];
                    }
                    q[k] = acc / d0;
                }
                for k in 1..=order {
                    c[k] = q[k - 1] / k as f64;
                }
            }
        }
    }
    Ok(c)
}

/// Implements the fallible [`Scalar`] functions for a type with a
/// `compose(&self, &[f64]) -> Self` method and a known nilpotency order.
macro_rules! scalar_via_series {
    ($ty:ty) => {
        impl $crate::jets::Scalar for $ty {
            fn constant_like(&self, c: f64) -> Self {
                self.constant_same(c)
            }
            fn value(&self) -> f64 {
                self.constant_term()
            }
            fn scale(&self, k: f64) -> Self {
                self.scaled(k)
            }
            fn recip(&self) -> $crate::error::Result<Self> {
                self.apply($crate::jets::Elementary::Recip)
            }
            fn sqrt(&self) -> $crate::error::Result<Self> {
                self.apply($crate::jets::Elementary::Pow(0.5))
            }
            fn exp(&self) -> $crate::error::Result<Self> {
                self.apply($crate::jets::Elementary::Exp)
            }
            fn ln(&self) -> $crate::error::Result<Self> {
                self.apply($crate::jets::Elementary::Ln)
            }
            fn powf(&self, r: f64) -> $crate::error::Result<Self> {
                if r.fract() == 0.0 && r.abs() < i32::MAX as f64 {
                    self.apply($crate::jets::Elementary::PowInt(r as i32))
                } else {
                    self.apply($crate::jets::Elementary::Pow(r))
                }
            }
            fn powi(&self, k: i32) -> $crate::error::Result<Self> {
                self.apply($crate::jets::Elementary::PowInt(k))
            }
            fn atan(&self) -> $crate::error::Result<Self> {
                self.apply($crate::jets::Elementary::Atan)
            }
        }
    };
}
pub(crate) use scalar_via_series;

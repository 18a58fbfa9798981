//! Closed antiderivatives `I_n = ∫ s^{-2} (b² - s²)^{(n-1)/2} ds`.
//!
//! Conventions: `(-1)!! = 0!! = 1`, empty sums vanish, and the integration
//! constant is zero.

use crate::error::{Error, Result};
use crate::jets::Scalar;

/// `k!!` with `k!! = 1` for `k <= 0`.
pub fn double_factorial(k: i64) -> f64 {
    let mut r = 1.0;
    let mut j = k;
    while j > 1 {
        r *= j as f64;
        j -= 2;
    }
    r
}

/// `I_n(b², s)` for `n >= 1` and `0 < |s| < b`.
pub fn i_n<S: Scalar>(n: u32, b2: &S, s: &S) -> Result<S> {
    if s.value() == 0.0 {
        return Err(Error::Domain {
            op: "I_n",
            value: 0.0,
        });
    }
    Ok(s_times_i_n(n, b2, s)? * s.recip()?)
}

/// `s I_n(b², s)`, which extends to `s = 0`. Avoids the `1/s` of `I_n`, so
/// jets of it stay accurate for small `s`.
pub fn s_times_i_n<S: Scalar>(n: u32, b2: &S, s: &S) -> Result<S> {
    if n == 0 {
        return Err(Error::Index(format!("I_n needs n >= 1, got {n}")));
    }
    let (b2v, sv) = (b2.value(), s.value());
    if !(sv * sv < b2v) {
        return Err(Error::Domain {
            op: "I_n",
            value: sv,
        });
    }
    let w = b2.clone() - s.clone() * s.clone();
    let df = |k: i64| double_factorial(k);
    if n.is_multiple_of(2) {
        let m = (n / 2) as i64;
        let c = df(2 * m - 1) / df(2 * m - 2);
        let root = w.sqrt()?;
        let mut sum = b2.constant_like(0.0);
        for i in 1..m {
            let coef = df(2 * m - 2 - 2 * i) / df(2 * m - 2 * i + 1);
            // (b² - s²)^{(2m-2i+1)/2} = root^{2m-2i+1}
            let term = b2.powi((i - 1) as i32)? * root.powi((2 * m - 2 * i + 1) as i32)?;
            sum = sum + term.scale(coef);
        }
        let arc = (s.clone() * root.recip()?).atan()?;
        let block = b2.powi((m - 1) as i32)? * (root + s.clone() * arc);
        Ok((sum - block).scale(c))
    } else {
        let m = ((n - 1) / 2) as i64;
        let c = df(2 * m) / df(2 * m - 1);
        let mut sum = b2.constant_like(0.0);
        for i in 1..=m {
            let coef = df(2 * m - 2 * i - 1) / df(2 * m - 2 * i + 2);
            let term = b2.powi((i - 1) as i32)? * w.powi((m - i + 1) as i32)?;
            sum = sum + term.scale(coef);
        }
        Ok((sum - b2.powi(m as i32)?).scale(c))
    }
}

//! Bracketed scalar root finding: secant steps guarded by bisection.
//!
//! A secant candidate is accepted only if it lands strictly inside the
//! current sign-change bracket. Whenever a step fails to halve the bracket,
//! the next step is a plain bisection, so the width at least halves every two
//! iterations.

use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    pub residual: T,
    pub iterations: usize,
}

/// Finds `x` in `[lo, hi]` with `|f(x)| <= f_tol`, given that `f(lo)` and
/// `f(hi)` differ in sign. Stops early, returning the endpoint with the
/// smaller residual, once the bracket is a few ulps wide.
pub fn bracketed_root<T, F>(mut f: F, lo: T, hi: T, f_tol: T, max_iter: usize) -> Result<Root<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(ModelError::Numerical(format!(
            "non-finite function value on bracket [{a}, {b}]"
        )));
    }
    if fa.abs() <= f_tol {
        return Ok(Root { x: a, residual: fa, iterations: 0 });
    }
    if fb.abs() <= f_tol {
        return Ok(Root { x: b, residual: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(ModelError::Numerical(format!(
            "no sign change on [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }

    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let ulps = T::lit(4.0) * T::epsilon();
    let (mut x0, mut f0, mut x1, mut f1) = (a, fa, b, fb);
    let mut bisect_next = false;

    for it in 1..=max_iter {
        let width = b - a;
        if width <= ulps * a.abs().max(b.abs()) {
            let (x, r) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
            return Ok(Root { x, residual: r, iterations: it - 1 });
        }
        let mid = a + (b - a) / two;
        let x = if bisect_next {
            mid
        } else {
            let cand = x1 - f1 * (x1 - x0) / (f1 - f0);
            if cand.is_finite() && cand > a && cand < b {
                cand
            } else {
                mid
            }
        };
        let fx = f(x);
        if !fx.is_finite() {
            return Err(ModelError::Numerical(format!("non-finite f({x})")));
        }
        if fx.abs() <= f_tol {
            return Ok(Root { x, residual: fx, iterations: it });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        bisect_next = b - a > half * width;
        x0 = x1;
        f0 = f1;
        x1 = x;
        f1 = fx;
    }
    Err(ModelError::Numerical(format!(
        "root not isolated within {max_iter} iterations; bracket [{a}, {b}]"
    )))
}

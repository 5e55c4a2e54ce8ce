//! Golden-section minimization on a closed interval.

use crate::scalar::Scalar;

/// Minimizes `f` on `[lo, hi]` to absolute tolerance `x_tol` in the argument.
///
/// Returns `(argmin, min)`. Both endpoints are evaluated as well, so a
/// monotone objective reports the boundary exactly rather than a point
/// `x_tol` away from it. The tolerance is raised to a few ulps of the
/// interval ends when `x_tol` is finer than the scalar type can resolve.
pub fn golden_section_min<T, F>(mut f: F, lo: T, hi: T, x_tol: T) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    // 1/phi
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (lo, hi);
    let x_tol = x_tol.max(T::lit(4.0) * T::epsilon() * lo.abs().max(hi.abs()));
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > x_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    let (mut best_x, mut best_f) = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best_f {
            best_x = x;
            best_f = fx;
        }
    }
    (best_x, best_f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_interior() {
        let (x, fx) = golden_section_min(|x: f64| (x - 0.7).powi(2) + 3.0, 0.0, 2.0, 1e-10);
        // Near a minimum f changes at second order, so the argmin is only
        // resolvable to about sqrt(eps) relative.
        assert!((x - 0.7).abs() < 1e-7);
        assert!((fx - 3.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_hits_boundary() {
        let (x, _) = golden_section_min(|x: f64| -x, 0.0, 1.0, 1e-8);
        assert_eq!(x, 1.0);
        let (x, _) = golden_section_min(|x: f64| x, 0.25, 1.0, 1e-8);
        assert_eq!(x, 0.25);
    }

    #[test]
    fn convex_cost_shape() {
        // V + c/V has its minimum at sqrt(c).
        let c = 4.0;
        let (x, _) = golden_section_min(|v: f64| v + c / v, 1e-9, 10.0, 1e-10);
        assert!((x - 2.0).abs() < 1e-7);
    }
}

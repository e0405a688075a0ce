//! Bracketed root finding for monotone equations.

use crate::math::abs;
use crate::{Error, Result};

/// Bisection on a sign-changing bracket until its width is at most `width`.
/// Returns the shrunken bracket.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    width: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok((lo, lo));
    }
    if f_hi == 0.0 {
        return Ok((hi, hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::numerical("bisection bracket has no sign change", abs(hi - lo)));
    }
    for _ in 0..max_iter {
        if hi - lo <= width {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok((lo, hi));
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, mid));
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Outcome of a safeguarded Newton solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    /// Function value at `x`.
    pub residual: f64,
    pub iterations: usize,
}

/// Newton's method kept inside the bracket `[lo, hi]`; any step that leaves
/// the bracket or fails to halve the residual is replaced by bisection.
///
/// `fdf` returns `(f(x), f'(x))`. Stops when `|f| <= f_tol` or the step is
/// below `x_tol · max(1, |x|)`.
pub fn safeguarded_newton<F: FnMut(f64) -> Result<(f64, f64)>>(
    mut fdf: F,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<Root> {
    if !(lo < hi) {
        return Err(Error::domain("newton bracket must satisfy lo < hi"));
    }
    let (f_lo, _) = fdf(lo)?;
    let (f_hi, _) = fdf(hi)?;
    if f_lo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::numerical("newton bracket has no sign change", hi - lo));
    }
    let increasing = f_hi > 0.0;
    let mut x = if x0 > lo && x0 < hi { x0 } else { 0.5 * (lo + hi) };
    let mut last_abs_f = f64::INFINITY;
    for it in 1..=max_iter {
        let (fx, dfx) = fdf(x)?;
        if !fx.is_finite() {
            return Err(Error::numerical("non-finite residual in root solve", hi - lo));
        }
        if abs(fx) <= f_tol {
            return Ok(Root { x, residual: fx, iterations: it });
        }
        if (fx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / dfx;
        let use_newton = dfx != 0.0
            && dfx.is_finite()
            && newton > lo
            && newton < hi
            && abs(fx) <= 0.5 * last_abs_f;
        let next = if use_newton || (it == 1 && dfx != 0.0 && newton > lo && newton < hi) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        last_abs_f = abs(fx);
        let step = abs(next - x);
        x = next;
        if step <= x_tol * abs(x).max(1.0) || hi - lo <= x_tol * abs(x).max(1.0) {
            let (fx, _) = fdf(x)?;
            return Ok(Root { x, residual: fx, iterations: it + 1 });
        }
    }
    Err(Error::numerical("root solve did not converge", hi - lo))
}

/// Grows `[x0, x0 + step]` (or downwards for negative `step`) geometrically
/// until `f` changes sign, never crossing `limit`. Returns an ordered bracket.
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    x0: f64,
    mut step: f64,
    limit: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let f0 = f(x0);
    let mut prev = x0;
    for _ in 0..max_iter {
        let mut x = prev + step;
        if (step > 0.0 && x >= limit) || (step < 0.0 && x <= limit) {
            x = limit;
        }
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::numerical("bracket expansion hit an undefined point", x));
        }
        if fx.signum() != f0.signum() || fx == 0.0 {
            return Ok(if x > prev { (prev, x) } else { (x, prev) });
        }
        if x == limit {
            break;
        }
        prev = x;
        step *= 2.0;
    }
    Err(Error::numerical("could not bracket the root", step))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt2() {
        let r = safeguarded_newton(|x| Ok((x * x - 2.0, 2.0 * x)), 0.0, 2.0, 1.0, 1e-15, 1e-15, 100).unwrap();
        assert!((r.x - core::f64::consts::SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn newton_survives_flat_derivative() {
        // Newton from x0 = 0 would divide by zero.
        let r = safeguarded_newton(|x| Ok((x * x * x - 8.0, 3.0 * x * x)), -1.0, 5.0, 0.0, 1e-14, 1e-14, 200)
            .unwrap();
        assert!((r.x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_and_bracket() {
        let (lo, hi) = expand_bracket(|x| x - 100.0, 0.0, 1.0, f64::INFINITY, 60).unwrap();
        assert!(lo <= 100.0 && hi >= 100.0);
        let (lo, hi) = bisect(|x| x - 100.0, lo, hi, 1e-3, 200).unwrap();
        assert!(hi - lo <= 1e-3 && lo <= 100.0 && hi >= 100.0);
    }
}

//! Safeguarded Newton iteration on a sign-changing bracket.

use crate::error::{Error, Result};

/// Finds a root of `f` inside `[lo, hi]`.
///
/// `f` returns the value and the derivative. The endpoints must bracket a
/// sign change. Newton steps that leave the bracket or do not shrink it fast
/// enough are replaced by bisection, so the iteration always converges for a
/// continuous `f`. Stops when `|f| <= ftol` or when the step falls below a
/// few ulps of `x`.
pub(crate) fn solve_bracketed<F>(
    what: &'static str,
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    guess: Option<f64>,
    ftol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    debug_assert!(lo <= hi);
    let (f_lo, _) = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let (f_hi, _) = f(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(Error::domain(format!(
            "{what}: root not bracketed by [{lo}, {hi}] (f = {f_lo}, {f_hi})"
        )));
    }
    let increasing = f_lo < 0.0;

    let mut x = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => 0.5 * (lo + hi),
    };
    let mut step_old = hi - lo;
    let mut step = step_old;
    let mut residual = f64::INFINITY;

    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        residual = fx.abs();
        if residual <= ftol {
            return Ok(x);
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }

        // Bisect when Newton leaves the bracket or stalls.
        let newton = x - fx / dfx;
        let stalled = (2.0 * fx).abs() > (step_old * dfx).abs();
        step_old = step;
        if !newton.is_finite() || newton <= lo || newton >= hi || stalled {
            let mid = 0.5 * (lo + hi);
            step = mid - x;
            x = mid;
        } else {
            step = newton - x;
            x = newton;
        }

        let scale = x.abs().max(f64::MIN_POSITIVE);
        if step.abs() <= 2.0 * f64::EPSILON * scale || hi - lo <= 2.0 * f64::EPSILON * scale {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        what,
        iterations: max_iter,
        residual,
    })
}

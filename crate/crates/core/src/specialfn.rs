//! Special functions of the model.
//!
//! `u(a, x)` is the positive solution of `u * exp(a * u) = exp(x)`, i.e. the
//! principal Lambert branch `W(a e^x) / a`, with `u(0, x) = e^x`. It is the
//! density of one component when the other one acts through the mean field.
//! `f(a, x) = a u^2 / 2 + u` is its antiderivative in `x`, and `psi` fixes
//! the order parameter at coexistence.

use crate::error::{Error, Result};
use crate::roots::solve_bracketed;

/// Below this `y` the order-parameter profile is summed from its series.
pub const PSI_SERIES_THRESHOLD: f64 = 1e-3;

const U_MAX_ITER: usize = 100;
const U_FTOL: f64 = 1e-14;

fn check_inputs(a: f64, x: f64) -> Result<()> {
    if !a.is_finite() || !x.is_finite() {
        return Err(Error::domain(format!("non-finite input a = {a}, x = {x}")));
    }
    if a < 0.0 {
        return Err(Error::domain(format!("coupling must be nonnegative, got a = {a}")));
    }
    Ok(())
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Solves `a e^t + t = x` for `t = ln u`.
///
/// Working with `ln u` keeps `a e^x` out of the computation, so arbitrarily
/// large `x` does not overflow. The bracket is exact: `u <= e^x` because
/// `a u >= 0`, `u <= x / a` whenever `u >= 1`, and `t = x - a u`.
fn ln_u(a: f64, x: f64) -> Result<f64> {
    let t_hi = if x > 0.0 {
        x.min((x / a).max(1.0).ln())
    } else {
        x
    };
    let t_lo = (x - a * t_hi.exp()).min(t_hi);
    // Rounding can put the root a hair outside the analytic bounds.
    let pad = 1e-9 * (1.0 + t_hi.abs().max(t_lo.abs()));
    let (t_lo, t_hi) = (t_lo - pad, t_hi + pad);
    // u0 = e^x / (1 + a e^x)
    let guess = x - softplus(a.ln() + x);
    let ftol = U_FTOL * x.abs().max(1.0);
    solve_bracketed(
        "u(a, x)",
        |t| {
            let at = a * t.exp();
            (at + t - x, at + 1.0)
        },
        t_lo,
        t_hi,
        Some(guess),
        ftol,
        U_MAX_ITER,
    )
}

/// The scaled Lambert function `u(a, x)`.
///
/// ```
/// let u = cwwr::specialfn::u_value(1.0, 1.0).unwrap();
/// assert!((u - 1.0).abs() < 1e-15);
/// ```
pub fn u_value(a: f64, x: f64) -> Result<f64> {
    check_inputs(a, x)?;
    if a == 0.0 {
        return Ok(x.exp());
    }
    Ok(ln_u(a, x)?.exp())
}

/// `du/dx = u / (1 + a u)`.
pub fn u_dx(a: f64, x: f64) -> Result<f64> {
    let u = u_value(a, x)?;
    Ok(u / (1.0 + a * u))
}

/// `d2u/dx2 = u / (1 + a u)^3`.
pub fn u_dxx(a: f64, x: f64) -> Result<f64> {
    let u = u_value(a, x)?;
    Ok(u / (1.0 + a * u).powi(3))
}

/// Free-energy surface `f(a, x) = a u^2 / 2 + u`; its `x`-derivative is `u`.
pub fn f_value(a: f64, x: f64) -> Result<f64> {
    let u = u_value(a, x)?;
    Ok(f_from_u(a, u))
}

pub(crate) fn f_from_u(a: f64, u: f64) -> f64 {
    0.5 * a * u * u + u
}

/// Relative residual `|u e^{a u} - e^x| / e^x`, computed in log space.
pub fn u_residual(a: f64, x: f64, u: f64) -> f64 {
    (u.ln() + a * u - x).exp_m1().abs()
}

/// Order-parameter profile
/// `psi(y) = y + y / (e^y - 1) - 1 + ln(y / (e^y - 1))` for `y > 0`.
///
/// Strictly increasing from `psi(0+) = 0`, with `psi(y) ~ y^2 / 24` near the
/// origin and `psi(y) ~ ln y - 1` for large `y`.
pub fn psi_value(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("psi needs finite y > 0, got {y}")));
    }
    if y < PSI_SERIES_THRESHOLD {
        Ok(psi_series(y))
    } else {
        Ok(psi_direct(y))
    }
}

/// `y^2/24 - y^4/960 + y^6/36288 - y^8/1382400`.
pub(crate) fn psi_series(y: f64) -> f64 {
    let y2 = y * y;
    y2 * (1.0 / 24.0 + y2 * (-1.0 / 960.0 + y2 * (1.0 / 36288.0 - y2 / 1382400.0)))
}

/// The closed form, rearranged so that `e^y` never overflows:
/// `ln(y / (e^y - 1)) = ln y - y - ln(1 - e^{-y})`.
pub(crate) fn psi_direct(y: f64) -> f64 {
    let b = y / y.exp_m1();
    b - 1.0 + y.ln() - (-(-y).exp_m1()).ln()
}

/// `psi'(y) = (1 - B^2) / y - B` with `B = y / (e^y - 1)`.
pub fn psi_dy(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("psi needs finite y > 0, got {y}")));
    }
    if y < 1e-2 {
        let y2 = y * y;
        return Ok(y * (1.0 / 12.0 + y2 * (-1.0 / 240.0 + y2 / 6048.0)));
    }
    let b = y / y.exp_m1();
    Ok((1.0 - b * b) / y - b)
}

/// Unique `y > 0` with `psi(y) = target`, for `target > 0`.
pub fn psi_inverse(target: f64) -> Result<f64> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::domain(format!("psi^-1 needs a finite positive target, got {target}")));
    }
    let mut hi = (24.0 * target).sqrt().max(1.0);
    while psi_direct(hi) < target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::domain(format!("psi^-1 target {target} out of range")));
        }
    }
    let guess = (24.0 * target).sqrt();
    let tol = 1e-15 * target.max(f64::MIN_POSITIVE);
    solve_bracketed(
        "psi^-1",
        |y| {
            if y <= 0.0 {
                (-target, 0.0)
            } else {
                (psi_value(y).unwrap() - target, psi_dy(y).unwrap())
            }
        },
        0.0,
        hi,
        Some(guess),
        tol,
        200,
    )
}

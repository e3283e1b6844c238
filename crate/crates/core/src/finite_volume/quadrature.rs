//! Adaptive Simpson quadrature for fallible integrands.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

struct Simpson<'f, F> {
    f: &'f mut F,
    evaluations: usize,
}

impl<F> Simpson<'_, F>
where
    F: FnMut(f64) -> Result<f64>,
{
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(x)?;
        if !v.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand {v} at {x}")));
        }
        Ok(v)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] (error estimate {:e}, tolerance {tol:e})",
                delta.abs() / 15.0
            )));
        }
        Ok(self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut s = Simpson { f, evaluations: 0 };
    let fa = s.eval(a)?;
    let fb = s.eval(b)?;
    let fm = s.eval(0.5 * (a + b))?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    s.recurse(a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Integrates over consecutive panels `knots[i]..knots[i+1]`, splitting the
/// tolerance in proportion to panel width.
pub(crate) fn adaptive_simpson_panels<F>(f: &mut F, knots: &[f64], tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let span = knots[knots.len() - 1] - knots[0];
    knots
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol * (w[1] - w[0]) / span))
        .sum()
}

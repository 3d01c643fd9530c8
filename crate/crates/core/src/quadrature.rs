//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: u32 = 50;

/// Integrates `f` over `[a, b]` by recursive bisection until the Richardson
/// error estimate of each piece is within its share of `tol`.
///
/// Fails with a numeric error if some piece is still unresolved after
/// `max_depth` bisections.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = refine(f, a, b, fa, fm, fb, whole, tol, max_depth)?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::numeric(
            "adaptive_simpson",
            format!("non-finite integral on [{a}, {b}]"),
        ))
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
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
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // The width test stops bisection once midpoints stop being distinct.
    if delta.abs() <= 15.0 * tol || (b - a) <= 4.0 * f64::EPSILON * m.abs().max(f64::MIN_POSITIVE) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::numeric(
            "adaptive_simpson",
            format!(
                "no convergence on [{a:.3e}, {b:.3e}], error estimate {:.3e}",
                delta.abs() / 15.0
            ),
        ));
    }
    Ok(refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

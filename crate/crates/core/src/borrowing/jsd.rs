//! Jensen-Shannon similarity between single-basket beta posteriors.
//!
//! `w* = 1 - JS(f_i, f_j)` with natural logarithms, so `w*` lies in
//! `[1 - ln 2, 1]`. The usable weight is `w*^eps` when that exceeds `tau`,
//! and 0 otherwise.

use std::f64::consts::LN_2;

use crate::beta::special::ln_beta;
use crate::beta::BetaParams;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, DEFAULT_MAX_DEPTH};

/// Absolute tolerance on the divergence integral.
pub const JSD_TOL: f64 = 1e-8;
/// Smallest possible similarity, reached by disjoint densities.
pub const MIN_SIMILARITY: f64 = 1.0 - LN_2;

const MIN_PANELS: usize = 16;
const MAX_PANELS: usize = 2048;

struct LogDensity {
    a: f64,
    b: f64,
    norm: f64,
}

impl LogDensity {
    fn new(p: &BetaParams) -> Self {
        LogDensity {
            a: p.shape1(),
            b: p.shape2(),
            norm: ln_beta(p.shape1(), p.shape2()),
        }
    }

    #[inline]
    fn eval(&self, ln_x: f64, ln_1mx: f64) -> f64 {
        let l = (self.a - 1.0) * ln_x + (self.b - 1.0) * ln_1mx - self.norm;
        if l.is_nan() {
            f64::NEG_INFINITY
        } else {
            l
        }
    }
}

/// `f ln(2f/(f+g)) + g ln(2g/(f+g))` from the two log densities.
#[inline]
fn js_integrand(lf: f64, lg: f64) -> f64 {
    if lf == f64::NEG_INFINITY && lg == f64::NEG_INFINITY {
        return 0.0;
    }
    let hi = lf.max(lg);
    let ln_sum = hi + ((lf - hi).exp() + (lg - hi).exp()).ln();
    let term = |l: f64| {
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            l.exp() * (LN_2 + l - ln_sum)
        }
    };
    term(lf) + term(lg)
}

/// Jensen-Shannon divergence (natural log) between two beta densities.
///
/// The unit interval is cut into equal panels sized to the narrower density.
/// The two end panels are integrated after the substitution `x = h t^p`
/// (mirrored at 1), which turns the integrable `x^(shape-1)` singularities
/// of shapes below 1 into smooth integrands.
pub fn js_divergence(f: &BetaParams, g: &BetaParams) -> Result<f64> {
    if f == g {
        return Ok(0.0);
    }
    let df = LogDensity::new(f);
    let dg = LogDensity::new(g);
    let min_sd = f.std_dev().min(g.std_dev());
    let panels = ((4.0 / min_sd).ceil() as usize).clamp(MIN_PANELS, MAX_PANELS);
    let h = 1.0 / panels as f64;
    let panel_tol = JSD_TOL / panels as f64;

    let power = |s1: f64, s2: f64| (2.0 / s1.min(s2)).ceil().clamp(2.0, 256.0);
    let p_left = power(df.a, dg.a);
    let p_right = power(df.b, dg.b);
    let ln_h = h.ln();

    let left = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let ln_x = ln_h + p_left * t.ln();
        let ln_1mx = (-ln_x.exp()).ln_1p();
        let jac = h * p_left * t.powf(p_left - 1.0);
        jac * js_integrand(df.eval(ln_x, ln_1mx), dg.eval(ln_x, ln_1mx))
    };
    let right = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let ln_1mx = ln_h + p_right * t.ln();
        let ln_x = (-ln_1mx.exp()).ln_1p();
        let jac = h * p_right * t.powf(p_right - 1.0);
        jac * js_integrand(df.eval(ln_x, ln_1mx), dg.eval(ln_x, ln_1mx))
    };
    let interior = |x: f64| {
        let (ln_x, ln_1mx) = (x.ln(), (-x).ln_1p());
        js_integrand(df.eval(ln_x, ln_1mx), dg.eval(ln_x, ln_1mx))
    };

    let mut total = adaptive_simpson(&left, 0.0, 1.0, panel_tol, DEFAULT_MAX_DEPTH)?;
    total += adaptive_simpson(&right, 0.0, 1.0, panel_tol, DEFAULT_MAX_DEPTH)?;
    for k in 1..panels - 1 {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        total += adaptive_simpson(&interior, a, b, panel_tol, DEFAULT_MAX_DEPTH)?;
    }
    let js = 0.5 * total;
    if !js.is_finite() {
        return Err(Error::numeric("js_divergence", "non-finite divergence"));
    }
    Ok(js.clamp(0.0, LN_2))
}

/// Unadjusted similarity `w* = 1 - JS(f_i, f_j)`.
pub fn jsd_similarity(post_i: &BetaParams, post_j: &BetaParams) -> Result<f64> {
    // Fixed argument order keeps the result bitwise symmetric.
    let (a, b) = if (post_i.shape1(), post_i.shape2()) <= (post_j.shape1(), post_j.shape2()) {
        (post_i, post_j)
    } else {
        (post_j, post_i)
    };
    Ok(1.0 - js_divergence(a, b)?)
}

/// Applies the power and threshold to an unadjusted similarity.
pub fn sharpen(similarity: f64, epsilon: f64, tau: f64) -> f64 {
    let w = similarity.powf(epsilon);
    if w > tau {
        w
    } else {
        0.0
    }
}

/// Jensen-Shannon borrowing weight between two single-basket posteriors.
pub fn jsd_weight(post_i: &BetaParams, post_j: &BetaParams, epsilon: f64, tau: f64) -> Result<f64> {
    if !(epsilon >= 1.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!("epsilon must be >= 1, got {epsilon}")));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Invalid(format!("tau must lie in [0, 1], got {tau}")));
    }
    Ok(sharpen(jsd_similarity(post_i, post_j)?, epsilon, tau))
}

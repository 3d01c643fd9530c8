//! Empirical-Bayes similarity estimates from power-prior marginal likelihoods.
//!
//! Basket `i` is the current data and the other baskets are discounted
//! historical data. The marginal likelihood of `Y_i` given the discounted
//! data is, up to a constant,
//!
//! ```text
//! m(s) = Be(b1 + Y_i + S_y, b2 + n_i - Y_i + S_f) / Be(b1 + S_y, b2 + S_f)
//! ```
//!
//! with `S_y = sum_j s_j Y_j` and `S_f = sum_j s_j (n_j - Y_j)`. Pairwise EB
//! maximizes over one neighbour at a time; global EB maximizes jointly.

use super::optimize::{coordinate_ascent, maximize_unit_interval};
use crate::beta::special::ln_beta;
use crate::beta::{BasketData, PriorSpec};
use crate::error::{check_len, Error, Result};

#[inline]
fn ln_marginal(prior: PriorSpec, y: f64, fail: f64, borrowed_y: f64, borrowed_fail: f64) -> f64 {
    ln_beta(prior.b1 + y + borrowed_y, prior.b2 + fail + borrowed_fail)
        - ln_beta(prior.b1 + borrowed_y, prior.b2 + borrowed_fail)
}

fn check_counts(y: u32, n: u32, which: &str) -> Result<()> {
    if n == 0 || y > n {
        return Err(Error::Invalid(format!(
            "{which} basket counts invalid: y = {y}, n = {n}"
        )));
    }
    Ok(())
}

/// Pairwise EB similarity: the `s` in [0, 1] maximizing the marginal
/// likelihood of basket `i` when basket `j` is borrowed with power `s`.
pub fn peb_weight(y_i: u32, n_i: u32, y_j: u32, n_j: u32, prior_i: PriorSpec) -> Result<f64> {
    check_counts(y_i, n_i, "current")?;
    check_counts(y_j, n_j, "donor")?;
    let (yi, fi) = (y_i as f64, (n_i - y_i) as f64);
    let (yj, fj) = (y_j as f64, (n_j - y_j) as f64);
    let (s, _) = maximize_unit_interval(|s| ln_marginal(prior_i, yi, fi, s * yj, s * fj));
    Ok(s)
}

/// Global EB similarities for basket `i`: all `s_ij` (over the active
/// baskets `j != i`) maximized jointly by coordinate ascent.
///
/// The returned vector has one entry per basket; entry `i` is 1 and entries
/// for inactive baskets are 0.
pub fn geb_weights(i: usize, data: &BasketData, priors: &[PriorSpec]) -> Result<Vec<f64>> {
    data.check_index(i)?;
    check_len("priors", priors.len(), data.len())?;
    if data.len() < 2 {
        return Err(Error::Invalid("global EB needs at least two baskets".into()));
    }
    let (y, n) = (data.y(), data.n());
    let others: Vec<usize> = data.active_others(i).collect();
    let donor_y: Vec<f64> = others.iter().map(|&j| y[j] as f64).collect();
    let donor_f: Vec<f64> = others.iter().map(|&j| (n[j] - y[j]) as f64).collect();
    let (yi, fi) = (y[i] as f64, (n[i] - y[i]) as f64);
    let prior = priors[i];

    let s = coordinate_ascent(others.len(), |s| {
        let mut by = 0.0;
        let mut bf = 0.0;
        for k in 0..s.len() {
            by += s[k] * donor_y[k];
            bf += s[k] * donor_f[k];
        }
        ln_marginal(prior, yi, fi, by, bf)
    });

    let mut out = vec![0.0; data.len()];
    out[i] = 1.0;
    for (k, &j) in others.iter().enumerate() {
        out[j] = s[k];
    }
    Ok(out)
}

//! Efficacy-cutoff calibration under the global null.
//!
//! Baskets sharing `n_max` and look schedule pool their null posterior
//! probabilities and get one cutoff: the `ceil((1 - alpha) N)`-th smallest
//! of the `N` pooled values. With the strict `q > Q` rule this keeps the
//! in-sample rejection fraction at or below `alpha`.

use serde::{Deserialize, Serialize};

use crate::borrowing::BorrowingConfig;
use crate::error::{check_len, Error, Result};
use crate::simulate::{run_scenario_in, Scenario, Stream};
use crate::trial::{CutoffVector, DesignSpec};

/// Rank (1-based) of the lower `(1 - alpha)` empirical quantile among `n`
/// values. The small slack absorbs representation error in `(1 - alpha) n`.
pub fn quantile_rank(alpha: f64, n: usize) -> usize {
    let target = (1.0 - alpha) * n as f64;
    ((target - 1e-9 * target.max(1.0)).ceil() as usize).clamp(1, n)
}

/// Lower `(1 - alpha)` empirical quantile. Needs at least `1 / alpha` values.
pub fn lower_quantile(values: &mut [f64], alpha: f64) -> Result<f64> {
    if (values.len() as f64) * alpha < 1.0 - 1e-12 {
        return Err(Error::Invalid(format!(
            "{} pooled values cannot resolve the {} quantile; need at least {}",
            values.len(),
            1.0 - alpha,
            (1.0 / alpha).ceil()
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::numeric("lower_quantile", "NaN posterior probability"));
    }
    let k = quantile_rank(alpha, values.len());
    let (_, kth, _) = values.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    Ok(*kth)
}

/// Cutoffs from an `M x B` matrix of null posterior probabilities.
pub fn cutoffs_from_q(design: &DesignSpec, q: &[Vec<f64>]) -> Result<CutoffVector> {
    let mut cutoffs = vec![0.0; design.len()];
    for row in q {
        check_len("q row", row.len(), design.len())?;
    }
    for group in design.schedule_groups() {
        let mut pooled: Vec<f64> = q.iter().flat_map(|row| group.iter().map(move |&i| row[i])).collect();
        let value = lower_quantile(&mut pooled, design.alpha)?;
        for &i in &group {
            cutoffs[i] = value;
        }
    }
    CutoffVector::new(cutoffs)
}

/// Simulates `m` global-null trials in the calibration stream and returns
/// the calibrated cutoffs.
pub fn calibrate_q(
    design: &DesignSpec,
    config: &BorrowingConfig,
    m: usize,
    master_seed: u64,
    workers: usize,
) -> Result<CutoffVector> {
    let null = Scenario::global_null(design);
    let set = run_scenario_in(
        Stream::Calibration,
        &null,
        design,
        config,
        None,
        m,
        master_seed,
        workers,
    )?;
    let q: Vec<Vec<f64>> = set.outcomes.into_iter().map(|o| o.q).collect();
    cutoffs_from_q(design, &q)
}

/// Rejection rates under the global null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullErrorReport {
    pub rates: Vec<f64>,
    /// Mean of `rates`.
    pub fpr: f64,
}

/// Basket-wise rejection rates of `cutoffs` on `m` fresh global-null
/// trials, drawn from the evaluation stream.
pub fn realized_error(
    design: &DesignSpec,
    config: &BorrowingConfig,
    cutoffs: &CutoffVector,
    m: usize,
    master_seed: u64,
    workers: usize,
) -> Result<NullErrorReport> {
    let null = Scenario::global_null(design);
    let set = run_scenario_in(
        Stream::Evaluation,
        &null,
        design,
        config,
        Some(cutoffs),
        m,
        master_seed,
        workers,
    )?;
    let b = design.len();
    let mut rates = vec![0.0; b];
    for o in &set.outcomes {
        for (r, &p) in rates.iter_mut().zip(&o.promising) {
            if p {
                *r += 1.0;
            }
        }
    }
    rates.iter_mut().for_each(|r| *r /= m as f64);
    let fpr = rates.iter().sum::<f64>() / b as f64;
    Ok(NullErrorReport { rates, fpr })
}

//! Operating characteristics of a simulated design.
//!
//! Truth labels come from the scenario: basket `i` is promising when its
//! true rate exceeds `p0`. Metrics over an empty truth class are `None`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::simulate::{ReplicateSet, Scenario};

/// Operating characteristics of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub scenario: String,
    pub replicates: usize,
    pub truth: Vec<bool>,
    /// Fraction of replicates declaring each basket promising: the type I
    /// error for non-promising baskets, the power for promising ones.
    pub rejection_rate: Vec<f64>,
    /// Monte Carlo standard error of each rejection rate.
    pub mc_se: Vec<f64>,
    pub fpr: Option<f64>,
    pub fwer: Option<f64>,
    pub fdr: Option<f64>,
    pub tpr: Option<f64>,
    pub ccr: f64,
}

impl ScenarioMetrics {
    /// `(basket, rate)` for each truth-non-promising basket.
    pub fn bwer(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.truth
            .iter()
            .zip(&self.rejection_rate)
            .enumerate()
            .filter(|(_, (t, _))| !**t)
            .map(|(i, (_, &r))| (i, r))
    }
}

/// Monte Carlo standard error `sqrt(p (1 - p) / M)` of a proportion.
pub fn mc_se(rate: f64, m: usize) -> f64 {
    (rate * (1.0 - rate) / m as f64).sqrt()
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn compute_metrics(replicates: &ReplicateSet, scenario: &Scenario, p0: f64) -> Result<ScenarioMetrics> {
    let m = replicates.len();
    if m == 0 {
        return Err(Error::Invalid(format!("scenario {} has no replicates", scenario.name)));
    }
    let b = scenario.orr.len();
    let truth = scenario.truth(p0);
    let mut rejections = vec![0usize; b];
    let mut any_false = 0usize;
    let mut fdp_sum = 0.0;
    for o in &replicates.outcomes {
        check_len("replicate decisions", o.promising.len(), b)?;
        let mut v = 0usize;
        let mut r = 0usize;
        for (i, &p) in o.promising.iter().enumerate() {
            if p {
                rejections[i] += 1;
                r += 1;
                if !truth[i] {
                    v += 1;
                }
            }
        }
        if v > 0 {
            any_false += 1;
        }
        fdp_sum += v as f64 / r.max(1) as f64;
    }
    let rejection_rate: Vec<f64> = rejections.iter().map(|&k| k as f64 / m as f64).collect();
    let has_null = truth.iter().any(|t| !t);
    let has_alt = truth.iter().any(|&t| t);
    let pick = |want: bool| {
        rejection_rate
            .iter()
            .zip(&truth)
            .filter(move |(_, &t)| t == want)
            .map(|(&r, _)| r)
    };
    let ccr = rejection_rate
        .iter()
        .zip(&truth)
        .map(|(&r, &t)| if t { r } else { 1.0 - r })
        .sum::<f64>()
        / b as f64;
    Ok(ScenarioMetrics {
        scenario: scenario.name.clone(),
        replicates: m,
        mc_se: rejection_rate.iter().map(|&r| mc_se(r, m)).collect(),
        fpr: mean(pick(false)),
        fwer: has_null.then(|| any_false as f64 / m as f64),
        fdr: has_null.then(|| fdp_sum / m as f64),
        tpr: if has_alt { mean(pick(true)) } else { None },
        ccr,
        truth,
        rejection_rate,
    })
}

/// Cross-scenario summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Mean over every non-promising (scenario, basket) pair of the null-like set.
    pub bwer_avg: Option<f64>,
    /// Maximum over the same pairs.
    pub bwer_max: Option<f64>,
    /// Mean scenario TPR over the alternative-like set.
    pub tpr_avg: Option<f64>,
    /// Mean scenario CCR over the alternative-like set.
    pub ccr_avg: Option<f64>,
}

/// Default scenario subsets: null-like scenarios contain a non-promising
/// basket, alternative-like scenarios contain a promising one.
pub fn default_subsets(rows: &[ScenarioMetrics]) -> (Vec<String>, Vec<String>) {
    let null_like = rows
        .iter()
        .filter(|r| r.truth.iter().any(|t| !t))
        .map(|r| r.scenario.clone())
        .collect();
    let alt_like = rows
        .iter()
        .filter(|r| r.truth.iter().any(|&t| t))
        .map(|r| r.scenario.clone())
        .collect();
    (null_like, alt_like)
}

pub fn aggregate<S: AsRef<str>>(rows: &[ScenarioMetrics], null_like: &[S], alt_like: &[S]) -> Result<Aggregates> {
    let find = |name: &str| {
        rows.iter()
            .find(|r| r.scenario == name)
            .ok_or_else(|| Error::Invalid(format!("aggregate refers to unknown scenario {name}")))
    };
    let nulls = null_like.iter().map(|s| find(s.as_ref())).collect::<Result<Vec<_>>>()?;
    let alts = alt_like.iter().map(|s| find(s.as_ref())).collect::<Result<Vec<_>>>()?;
    let bwer: Vec<f64> = nulls.iter().flat_map(|r| r.bwer().map(|(_, v)| v)).collect();
    Ok(Aggregates {
        bwer_avg: mean(bwer.iter().copied()),
        bwer_max: bwer.iter().copied().reduce(f64::max),
        tpr_avg: mean(alts.iter().filter_map(|r| r.tpr)),
        ccr_avg: mean(alts.iter().map(|r| r.ccr)),
    })
}

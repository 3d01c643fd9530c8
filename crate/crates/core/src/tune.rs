//! Grid search over borrowing parameters.
//!
//! Every candidate is recalibrated under the global null before its
//! scenarios are scored. All candidates see the same simulated patients
//! (common random numbers), and each simulated trial's similarity matrix is
//! computed once and shared by every candidate.

use serde::{Deserialize, Serialize};

use crate::borrowing::{BorrowingConfig, Method, SimilarityCache};
use crate::calibrate::cutoffs_from_q;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, compute_metrics, default_subsets, Aggregates, ScenarioMetrics};
use crate::simulate::{
    evaluate_prepared, par_map, prepare_replicates, PreparedReplicate, ReplicateSet, Scenario, Stream,
};
use crate::trial::{CutoffVector, DesignSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Strategy {
    /// Maximize the mean of `TPR_avg` and `CCR_avg` subject to
    /// `BWER_max < bwer_bound`.
    MaximizePower { bwer_bound: f64 },
    /// Minimize `|BWER_max - target|`; ties go to the larger `TPR_avg`.
    MatchTarget { target: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    #[serde(default)]
    pub a_values: Vec<f64>,
    #[serde(default)]
    pub delta_values: Vec<f64>,
    #[serde(default)]
    pub epsilon_values: Vec<f64>,
    #[serde(default)]
    pub tau_values: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    pub strategy: Strategy,
    /// Scenarios for the error aggregates; by default those with a
    /// non-promising basket.
    #[serde(default)]
    pub null_like: Option<Vec<String>>,
    /// Scenarios for the power aggregates; by default those with a
    /// promising basket.
    #[serde(default)]
    pub alt_like: Option<Vec<String>>,
}

fn steps(start: f64, stop: f64, step: f64) -> impl Iterator<Item = f64> {
    let count = ((stop - start) / step).round() as usize;
    (0..=count).map(move |k| ((start + k as f64 * step) * 1e6).round() / 1e6)
}

impl TuningGrid {
    /// `a` in 0..=1 by 0.05 then up to 4 by 0.1, `delta` in 0.1..=0.4 by
    /// 0.1, `epsilon` in 1..=7 by 0.5, `tau` in 0..=1 by 0.1.
    pub fn with_defaults(scenarios: Vec<Scenario>, strategy: Strategy) -> Self {
        TuningGrid {
            a_values: steps(0.0, 1.0, 0.05).chain(steps(1.1, 4.0, 0.1)).collect(),
            delta_values: steps(0.1, 0.4, 0.1).collect(),
            epsilon_values: steps(1.0, 7.0, 0.5).collect(),
            tau_values: steps(0.0, 1.0, 0.1).collect(),
            scenarios,
            strategy,
            null_like: None,
            alt_like: None,
        }
    }

    /// Candidate methods in grid order (first parameter outermost).
    pub fn candidates(&self, base: &Method) -> Result<Vec<Method>> {
        let out: Vec<Method> = match *base {
            Method::LocalPp { base, .. } => self
                .a_values
                .iter()
                .flat_map(|&a| {
                    self.delta_values
                        .iter()
                        .map(move |&delta| Method::LocalPp { base, a, delta })
                })
                .collect(),
            Method::Jsd { .. } => self
                .epsilon_values
                .iter()
                .flat_map(|&epsilon| self.tau_values.iter().map(move |&tau| Method::Jsd { epsilon, tau }))
                .collect(),
            other => vec![other],
        };
        if out.is_empty() {
            return Err(Error::Invalid(format!("tuning grid for {} is empty", base.label())));
        }
        for m in &out {
            m.validate()?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub method: Method,
    pub cutoffs: CutoffVector,
    pub scenarios: Vec<ScenarioMetrics>,
    pub aggregates: Aggregates,
    /// Mean of `TPR_avg` and `CCR_avg`.
    pub objective: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub best: usize,
    pub candidates: Vec<CandidateReport>,
}

impl TuningResult {
    pub fn best(&self) -> &CandidateReport {
        &self.candidates[self.best]
    }
}

fn score(report: &mut CandidateReport, strategy: Strategy) {
    report.objective = match (report.aggregates.tpr_avg, report.aggregates.ccr_avg) {
        (Some(t), Some(c)) => Some(0.5 * (t + c)),
        _ => None,
    };
    report.feasible = match strategy {
        Strategy::MaximizePower { bwer_bound } => {
            report.objective.is_some() && report.aggregates.bwer_max.is_some_and(|b| b < bwer_bound)
        }
        Strategy::MatchTarget { .. } => report.aggregates.bwer_max.is_some(),
    };
}

fn select(candidates: &[CandidateReport], strategy: Strategy) -> Result<usize> {
    let feasible = candidates.iter().enumerate().filter(|(_, c)| c.feasible);
    let best = match strategy {
        Strategy::MaximizePower { .. } => feasible
            .map(|(i, c)| (i, c.objective.unwrap_or(f64::NEG_INFINITY)))
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((i, v)),
            }),
        Strategy::MatchTarget { target } => feasible
            .map(|(i, c)| {
                let gap = (c.aggregates.bwer_max.unwrap_or(f64::INFINITY) - target).abs();
                (i, (gap, c.aggregates.tpr_avg.unwrap_or(f64::NEG_INFINITY)))
            })
            .fold(None, |best: Option<(usize, (f64, f64))>, (i, v)| match best {
                Some((_, bv)) if bv.0 < v.0 || (bv.0 == v.0 && bv.1 >= v.1) => best,
                _ => Some((i, v)),
            })
            .map(|(i, (gap, _))| (i, gap)),
    };
    best.map(|(i, _)| i).ok_or_else(|| {
        Error::Infeasible(match strategy {
            Strategy::MaximizePower { bwer_bound } => {
                format!("every candidate has BWER_max >= {bwer_bound} (or no power aggregates)")
            }
            Strategy::MatchTarget { .. } => "no candidate has a non-promising basket to match".into(),
        })
    })
}

fn evaluate_candidate(
    method: Method,
    config: &BorrowingConfig,
    design: &DesignSpec,
    grid: &TuningGrid,
    null: &[PreparedReplicate],
    scenarios: &[Vec<PreparedReplicate>],
    seed: u64,
) -> Result<CandidateReport> {
    let null_out = evaluate_prepared(null, &method, config, None, design.p0, 1)?;
    let q: Vec<Vec<f64>> = null_out.into_iter().map(|o| o.q).collect();
    let cutoffs = cutoffs_from_q(design, &q)?;
    let rows = grid
        .scenarios
        .iter()
        .zip(scenarios)
        .map(|(s, prepared)| {
            let outcomes = evaluate_prepared(prepared, &method, config, Some(&cutoffs), design.p0, 1)?;
            let set = ReplicateSet {
                scenario: s.name.clone(),
                master_seed: seed,
                outcomes,
            };
            compute_metrics(&set, s, design.p0)
        })
        .collect::<Result<Vec<_>>>()?;
    let (default_null, default_alt) = default_subsets(&rows);
    let null_like = grid.null_like.clone().unwrap_or(default_null);
    let alt_like = grid.alt_like.clone().unwrap_or(default_alt);
    let aggregates = aggregate(&rows, &null_like, &alt_like)?;
    let mut report = CandidateReport {
        method,
        cutoffs,
        scenarios: rows,
        aggregates,
        objective: None,
        feasible: false,
    };
    score(&mut report, grid.strategy);
    Ok(report)
}

/// Scores every candidate of `grid` for the method family of `base` and
/// picks one according to the grid's strategy.
pub fn tune(
    grid: &TuningGrid,
    design: &DesignSpec,
    base: &BorrowingConfig,
    m: usize,
    seed: u64,
    workers: usize,
) -> Result<TuningResult> {
    if grid.scenarios.is_empty() {
        return Err(Error::Invalid("tuning needs at least one scenario".into()));
    }
    let methods = grid.candidates(&base.method)?;
    let cache = SimilarityCache::new();
    let null = Scenario::global_null(design);
    let null_prepared = prepare_replicates(&null, design, base, m, seed, Stream::Calibration, workers, &cache)?;
    let scenario_prepared = grid
        .scenarios
        .iter()
        .map(|s| prepare_replicates(s, design, base, m, seed, Stream::Evaluation, workers, &cache))
        .collect::<Result<Vec<_>>>()?;
    let candidates = par_map(methods.len(), workers, |k| {
        evaluate_candidate(methods[k], base, design, grid, &null_prepared, &scenario_prepared, seed)
    })?;
    let best = select(&candidates, grid.strategy)?;
    Ok(TuningResult { best, candidates })
}

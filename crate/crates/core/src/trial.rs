//! Single-trial mechanics: interim futility looks and the final analysis.

use serde::{Deserialize, Serialize};

use crate::beta::{posterior_params, prob_exceed, BasketData, BetaParams, PriorSpec, WeightMatrix};
use crate::borrowing::{build_weight_matrix_cached, BorrowingConfig, SimilarityCache};
use crate::error::{check_len, Error, Result};

/// Interim futility look: stop if cumulative responses after `size`
/// subjects are at most `futility_max_responses`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Look {
    pub size: u32,
    pub futility_max_responses: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasketDesign {
    pub name: String,
    pub n_max: u32,
    #[serde(default)]
    pub looks: Vec<Look>,
}

impl BasketDesign {
    pub fn new(name: impl Into<String>, n_max: u32, looks: Vec<Look>) -> Result<Self> {
        let design = BasketDesign {
            name: name.into(),
            n_max,
            looks,
        };
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::Invalid(format!("basket {}: n_max must be positive", self.name)));
        }
        let mut previous = 0;
        for look in &self.looks {
            if look.size <= previous || look.size >= self.n_max {
                return Err(Error::Invalid(format!(
                    "basket {}: look sizes must increase strictly and stay below n_max = {}",
                    self.name, self.n_max
                )));
            }
            if look.futility_max_responses > look.size {
                return Err(Error::Invalid(format!(
                    "basket {}: futility boundary {} exceeds look size {}",
                    self.name, look.futility_max_responses, look.size
                )));
            }
            previous = look.size;
        }
        Ok(())
    }

    /// Two baskets with equal schedules share an efficacy cutoff.
    pub fn same_schedule(&self, other: &BasketDesign) -> bool {
        self.n_max == other.n_max && self.looks == other.looks
    }
}

/// Design of the whole trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub baskets: Vec<BasketDesign>,
    /// Null (non-promising) response rate.
    pub p0: f64,
    /// Target basket-wise type I error rate.
    pub alpha: f64,
}

impl DesignSpec {
    pub fn new(baskets: Vec<BasketDesign>, p0: f64, alpha: f64) -> Result<Self> {
        let design = DesignSpec { baskets, p0, alpha };
        design.validate()?;
        Ok(design)
    }

    /// `count` baskets named `1..=count` with a common schedule.
    pub fn uniform(count: usize, n_max: u32, looks: Vec<Look>, p0: f64, alpha: f64) -> Result<Self> {
        let baskets = (1..=count)
            .map(|k| BasketDesign::new(k.to_string(), n_max, looks.clone()))
            .collect::<Result<Vec<_>>>()?;
        DesignSpec::new(baskets, p0, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.baskets.is_empty() {
            return Err(Error::Invalid("design has no baskets".into()));
        }
        for b in &self.baskets {
            b.validate()?;
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(Error::Invalid(format!("p0 must lie in (0, 1), got {}", self.p0)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.baskets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.baskets.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.baskets.iter().map(|b| b.name.clone()).collect()
    }

    /// Groups of basket indices sharing `n_max` and look schedule, ordered
    /// by first member.
    pub fn schedule_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, b) in self.baskets.iter().enumerate() {
            match groups.iter_mut().find(|g| self.baskets[g[0]].same_schedule(b)) {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        groups
    }
}

/// Per-basket efficacy cutoffs `Q_i`; promising means `q_i > Q_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CutoffVector(Vec<f64>);

impl CutoffVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("cutoff vector is empty".into()));
        }
        if let Some(q) = values.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::Invalid(format!("cutoffs must lie in [0, 1], got {q}")));
        }
        Ok(CutoffVector(values))
    }

    pub fn uniform(value: f64, baskets: usize) -> Result<Self> {
        CutoffVector::new(vec![value; baskets])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Data at the final analysis plus the look at which each stopped basket
/// stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct InterimResult {
    pub data: BasketData,
    pub stopped_at: Vec<Option<usize>>,
}

/// Runs every basket's futility looks on its response sequence, using only
/// the basket's own data. Only the consumed prefix of a sequence is used.
pub fn apply_interims<S: AsRef<[bool]>>(accrual: &[S], design: &DesignSpec) -> Result<InterimResult> {
    check_len("accrual", accrual.len(), design.len())?;
    let b = design.len();
    let mut y = Vec::with_capacity(b);
    let mut n = Vec::with_capacity(b);
    let mut active = Vec::with_capacity(b);
    let mut stopped_at = Vec::with_capacity(b);
    for (seq, basket) in accrual.iter().zip(&design.baskets) {
        let seq = seq.as_ref();
        if seq.len() < basket.n_max as usize {
            return Err(Error::Invalid(format!(
                "basket {}: response sequence has {} entries, n_max is {}",
                basket.name,
                seq.len(),
                basket.n_max
            )));
        }
        let mut responses = 0u32;
        let mut enrolled = 0u32;
        let mut stop = None;
        for (k, look) in basket.looks.iter().enumerate() {
            responses += seq[enrolled as usize..look.size as usize]
                .iter()
                .filter(|&&r| r)
                .count() as u32;
            enrolled = look.size;
            if responses <= look.futility_max_responses {
                stop = Some(k);
                break;
            }
        }
        if stop.is_none() {
            responses += seq[enrolled as usize..basket.n_max as usize]
                .iter()
                .filter(|&&r| r)
                .count() as u32;
            enrolled = basket.n_max;
        }
        y.push(responses);
        n.push(enrolled);
        active.push(stop.is_none());
        stopped_at.push(stop);
    }
    Ok(InterimResult {
        data: BasketData::new(y, n, active)?,
        stopped_at,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasketOutcome {
    pub stopped_at_look: Option<usize>,
    pub final_y: u32,
    pub final_n: u32,
    /// Borrowing posterior for active baskets; own-data posterior otherwise.
    pub posterior: BetaParams,
    /// `P(p > p0 | data)`, fixed at 0 for stopped baskets.
    pub post_prob: f64,
    pub promising: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub weights: WeightMatrix,
    pub baskets: Vec<BasketOutcome>,
}

impl TrialOutcome {
    pub fn post_probs(&self) -> Vec<f64> {
        self.baskets.iter().map(|b| b.post_prob).collect()
    }

    pub fn promising(&self) -> Vec<bool> {
        self.baskets.iter().map(|b| b.promising).collect()
    }
}

/// Posterior probabilities `q_i` under given weights; 0 for stopped baskets.
pub fn posterior_probs(data: &BasketData, priors: &[PriorSpec], weights: &WeightMatrix, p0: f64) -> Result<Vec<f64>> {
    (0..data.len())
        .map(|i| {
            if data.is_active(i) {
                prob_exceed(&posterior_params(i, data, priors, weights)?, p0)
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

/// Strict decision rule `q_i > Q_i`.
pub fn decide(q: &[f64], cutoffs: &CutoffVector) -> Result<Vec<bool>> {
    check_len("cutoffs", cutoffs.len(), q.len())?;
    Ok(q.iter().zip(cutoffs.values()).map(|(q, c)| q > c).collect())
}

/// Final analysis of one trial: weights among active baskets, posteriors,
/// posterior probabilities and decisions.
pub fn final_analysis(
    interim: &InterimResult,
    config: &BorrowingConfig,
    cutoffs: &CutoffVector,
    p0: f64,
) -> Result<TrialOutcome> {
    final_analysis_cached(interim, config, cutoffs, p0, None)
}

pub fn final_analysis_cached(
    interim: &InterimResult,
    config: &BorrowingConfig,
    cutoffs: &CutoffVector,
    p0: f64,
    cache: Option<&SimilarityCache>,
) -> Result<TrialOutcome> {
    let data = &interim.data;
    check_len("stopped_at", interim.stopped_at.len(), data.len())?;
    check_len("priors", config.priors.len(), data.len())?;
    check_len("cutoffs", cutoffs.len(), data.len())?;
    let weights = build_weight_matrix_cached(config, data, cache)?;
    let q = posterior_probs(data, &config.priors, &weights, p0)?;
    let promising = decide(&q, cutoffs)?;
    let baskets = (0..data.len())
        .map(|i| {
            let posterior = if data.is_active(i) {
                posterior_params(i, data, &config.priors, &weights)?
            } else {
                BetaParams::from_counts(config.priors[i], data.y()[i], data.n()[i])?
            };
            Ok(BasketOutcome {
                stopped_at_look: interim.stopped_at[i],
                final_y: data.y()[i],
                final_n: data.n()[i],
                posterior,
                post_prob: q[i],
                promising: promising[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome { weights, baskets })
}

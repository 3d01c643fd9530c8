//! Monte Carlo replication of whole trials.
//!
//! Replicate `r` of a scenario draws from its own ChaCha8 generator seeded
//! from `(master_seed, stream, scenario name, r)`; basket `i` uses stream
//! `i` of that generator. Response sequences always run to `n_max`, so two
//! methods run with the same seed see the same patients. Results are
//! collected in replicate order and do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{BasketData, WeightMatrix};
use crate::borrowing::{finalize_weights, similarity_matrix, BorrowingConfig, Method, SimilarityCache};
use crate::error::{check_len, Error, Result};
use crate::trial::{apply_interims, decide, posterior_probs, CutoffVector, DesignSpec};

/// Scenario of true response rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(alias = "true_orr")]
    pub orr: Vec<f64>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, orr: Vec<f64>) -> Result<Self> {
        let s = Scenario { name: name.into(), orr };
        s.validate()?;
        Ok(s)
    }

    /// All baskets at the null rate.
    pub fn global_null(design: &DesignSpec) -> Self {
        Scenario {
            name: "global-null".into(),
            orr: vec![design.p0; design.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.orr.is_empty() {
            return Err(Error::Invalid(format!("scenario {} has no baskets", self.name)));
        }
        if let Some(p) = self.orr.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Invalid(format!(
                "scenario {}: response rates must lie in (0, 1), got {p}",
                self.name
            )));
        }
        Ok(())
    }

    /// Truth labels: basket `i` is promising when its rate exceeds `p0`.
    pub fn truth(&self, p0: f64) -> Vec<bool> {
        self.orr.iter().map(|&p| p > p0).collect()
    }
}

/// Independent random-number families. Calibration and evaluation never
/// share streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Calibration,
    Evaluation,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Calibration => 0x6361_6c69_6272_6174,
            Stream::Evaluation => 0x6576_616c_7561_7465,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub q: Vec<f64>,
    pub promising: Vec<bool>,
    pub stopped: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSet {
    pub scenario: String,
    pub master_seed: u64,
    pub outcomes: Vec<ReplicateSummary>,
}

impl ReplicateSet {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn baskets(&self) -> usize {
        self.outcomes.first().map_or(0, |o| o.q.len())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Generator for one replicate.
pub fn replicate_rng(master_seed: u64, stream: Stream, scenario: &str, replicate: u64) -> ChaCha8Rng {
    let mut state = splitmix64(master_seed) ^ stream.tag();
    state = splitmix64(state ^ fnv1a(scenario.as_bytes()));
    state = splitmix64(state ^ replicate);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Full-length Bernoulli response sequences for one replicate.
pub fn generate_accrual(
    scenario: &Scenario,
    design: &DesignSpec,
    master_seed: u64,
    stream: Stream,
    replicate: u64,
) -> Result<Vec<Vec<bool>>> {
    check_len("scenario rates", scenario.orr.len(), design.len())?;
    let mut rng = replicate_rng(master_seed, stream, &scenario.name, replicate);
    Ok(design
        .baskets
        .iter()
        .zip(&scenario.orr)
        .enumerate()
        .map(|(i, (basket, &p))| {
            rng.set_stream(i as u64);
            rng.set_word_pos(0);
            (0..basket.n_max).map(|_| rng.random_bool(p)).collect()
        })
        .collect())
}

/// Runs `f(0..m)` on `workers` threads, keeping index order.
pub fn par_map<T, F>(m: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..m).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start {workers} worker threads: {e}")))?;
    pool.install(|| (0..m).into_par_iter().map(f).collect())
}

/// A simulated trial after the interims, with its parameter-free
/// similarity matrix. Different tuning parameters reuse it.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedReplicate {
    pub data: BasketData,
    pub similarity: WeightMatrix,
}

/// Simulates `m` trials up to the final analysis.
#[allow(clippy::too_many_arguments)]
pub fn prepare_replicates(
    scenario: &Scenario,
    design: &DesignSpec,
    config: &BorrowingConfig,
    m: usize,
    master_seed: u64,
    stream: Stream,
    workers: usize,
    cache: &SimilarityCache,
) -> Result<Vec<PreparedReplicate>> {
    check_simulation_inputs(scenario, design, config, m)?;
    let kind = config.method.similarity_kind();
    par_map(m, workers, |r| {
        let accrual = generate_accrual(scenario, design, master_seed, stream, r as u64)?;
        let interim = apply_interims(&accrual, design)?;
        let similarity = similarity_matrix(kind, &interim.data, &config.priors, Some(cache))?;
        Ok(PreparedReplicate {
            data: interim.data,
            similarity,
        })
    })
}

/// Final analyses of prepared trials under `method`. Without cutoffs every
/// decision is "not promising" and only the `q` values are meaningful.
pub fn evaluate_prepared(
    prepared: &[PreparedReplicate],
    method: &Method,
    config: &BorrowingConfig,
    cutoffs: Option<&CutoffVector>,
    p0: f64,
    workers: usize,
) -> Result<Vec<ReplicateSummary>> {
    method.validate()?;
    par_map(prepared.len(), workers, |r| {
        let rep = &prepared[r];
        let weights = finalize_weights(method, &rep.similarity, &rep.data)?;
        let q = posterior_probs(&rep.data, &config.priors, &weights, p0)?;
        let promising = match cutoffs {
            Some(c) => decide(&q, c)?,
            None => vec![false; q.len()],
        };
        let stopped = rep.data.active().iter().map(|a| !a).collect();
        Ok(ReplicateSummary { q, promising, stopped })
    })
}

fn check_simulation_inputs(scenario: &Scenario, design: &DesignSpec, config: &BorrowingConfig, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Invalid("replicate count must be at least 1".into()));
    }
    design.validate()?;
    scenario.validate()?;
    config.method.validate()?;
    check_len("scenario rates", scenario.orr.len(), design.len())?;
    check_len("priors", config.priors.len(), design.len())?;
    Ok(())
}

/// Simulates `m` trials of `scenario` in the evaluation stream.
pub fn run_scenario(
    scenario: &Scenario,
    design: &DesignSpec,
    config: &BorrowingConfig,
    cutoffs: &CutoffVector,
    m: usize,
    master_seed: u64,
    workers: usize,
) -> Result<ReplicateSet> {
    run_scenario_in(
        Stream::Evaluation,
        scenario,
        design,
        config,
        Some(cutoffs),
        m,
        master_seed,
        workers,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn run_scenario_in(
    stream: Stream,
    scenario: &Scenario,
    design: &DesignSpec,
    config: &BorrowingConfig,
    cutoffs: Option<&CutoffVector>,
    m: usize,
    master_seed: u64,
    workers: usize,
) -> Result<ReplicateSet> {
    if let Some(c) = cutoffs {
        check_len("cutoffs", c.len(), design.len())?;
    }
    let cache = SimilarityCache::new();
    let prepared = prepare_replicates(scenario, design, config, m, master_seed, stream, workers, &cache)?;
    let outcomes = evaluate_prepared(&prepared, &config.method, config, cutoffs, design.p0, workers)?;
    Ok(ReplicateSet {
        scenario: scenario.name.clone(),
        master_seed,
        outcomes,
    })
}

/// `M x B` matrix of posterior probabilities, 0 where a basket stopped.
pub fn collect_q_matrix(replicates: &ReplicateSet) -> Vec<Vec<f64>> {
    replicates.outcomes.iter().map(|o| o.q.clone()).collect()
}

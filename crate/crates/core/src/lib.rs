//! Closed-form Bayesian basket-trial design with power-prior borrowing.
//!
//! Posteriors are beta distributions built from discounted neighbour data,
//! so every trial analysis is exact and cheap. On top of that sit
//! interim futility stopping, Monte Carlo operating characteristics,
//! type I error calibration of efficacy cutoffs and grid tuning.

pub mod beta;
pub mod borrowing;
pub mod calibrate;
pub mod error;
pub mod metrics;
pub mod quadrature;
pub mod simulate;
pub mod trial;
pub mod tune;

pub use beta::{
    borrowing_factor, log_beta, posterior_params, prob_exceed, regularized_inc_beta, BasketData, BetaParams, PriorSpec,
    WeightMatrix,
};
pub use borrowing::{build_weight_matrix, BorrowingConfig, EbBase, Method};
pub use calibrate::{calibrate_q, realized_error};
pub use error::{Error, Result};
pub use metrics::{aggregate, compute_metrics, Aggregates, ScenarioMetrics};
pub use simulate::{collect_q_matrix, run_scenario, ReplicateSet, Scenario};
pub use trial::{apply_interims, final_analysis, BasketDesign, CutoffVector, DesignSpec, Look, TrialOutcome};
pub use tune::{tune, Strategy, TuningGrid, TuningResult};

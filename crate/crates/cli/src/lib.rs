//! Command-line front end: configuration, subcommands and report files.

pub mod config;
pub mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use basketsim_core::metrics::default_subsets;
use basketsim_core::{
    aggregate, borrowing_factor, calibrate_q, compute_metrics, run_scenario, trial, tune, CutoffVector,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use config::{Config, DataFile, MethodConfig, Resolved};
use report::{AnalysisReport, BasketAnalysis, CutoffReport, OcReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Engine(#[from] basketsim_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for bad configuration or data, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Data(_) => 2,
            CliError::Engine(e) if e.is_numeric() || matches!(e, basketsim_core::Error::Resource(_)) => 3,
            CliError::Engine(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "basketsim",
    version,
    about = "Bayesian basket-trial design with local power prior borrowing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed; overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; overrides `run.workers`.
    #[arg(long, env = "BASKETSIM_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze observed basket data.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Basket counts: CSV `name,y,n[,active]` or JSON.
        #[arg(long)]
        data: PathBuf,
    },
    /// Calibrate efficacy cutoffs under the global null.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate operating characteristics of every configured scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Grid-search the borrowing parameters.
    Tune {
        #[command(flatten)]
        common: Common,
    },
}

/// Files of one run. Unless committed, everything written is removed when
/// the set is dropped.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

struct Run {
    config: Config,
    resolved: Resolved,
    seed: u64,
    workers: usize,
}

fn prepare(common: &Common) -> Result<Run, CliError> {
    let config = Config::from_path(&common.config)?;
    let resolved = config.resolve()?;
    let seed = common.seed.unwrap_or(config.run.seed);
    let workers = common
        .workers
        .or(config.run.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Config("workers: must be at least 1".into()));
    }
    Ok(Run {
        config,
        resolved,
        seed,
        workers,
    })
}

fn reproduction(command: &str, common: &Common, data: Option<&Path>, run: &Run) -> String {
    let mut s = format!("basketsim {command} --config {}", common.config.display());
    if let Some(d) = data {
        let _ = write!(s, " --data {}", d.display());
    }
    let _ = write!(
        s,
        " --out {} --seed {} --workers {} --format {}",
        common.out.display(),
        run.seed,
        run.workers,
        common.format.name()
    );
    s
}

/// Outcome of a successful command.
#[derive(Debug, Clone)]
pub struct Completed {
    pub files: Vec<PathBuf>,
    pub reproduce: String,
    /// Human-readable summary for the terminal.
    pub summary: String,
}

fn cutoffs_for(run: &Run) -> Result<CutoffVector, CliError> {
    match &run.resolved.cutoffs {
        Some(c) => Ok(c.clone()),
        None => Ok(calibrate_q(
            &run.resolved.design,
            &run.resolved.borrowing,
            run.config.run.replicates,
            run.seed,
            run.workers,
        )?),
    }
}

fn analyze(common: &Common, data_path: &Path) -> Result<Completed, CliError> {
    let run = prepare(common)?;
    let data = DataFile::from_path(data_path)?;
    let cfg = &run.resolved.borrowing;
    if data.data.len() != cfg.priors.len() {
        return Err(CliError::Data(format!(
            "data has {} baskets, configuration has {}",
            data.data.len(),
            cfg.priors.len()
        )));
    }
    let p0 = run.resolved.design.p0;
    let interim = trial::InterimResult {
        stopped_at: data
            .data
            .active()
            .iter()
            .map(|&a| if a { None } else { Some(0) })
            .collect(),
        data: data.data.clone(),
    };
    let cutoffs = run.resolved.cutoffs.clone();
    let placeholder = CutoffVector::uniform(1.0, data.data.len())?;
    let outcome = trial::final_analysis(&interim, cfg, cutoffs.as_ref().unwrap_or(&placeholder), p0)?;
    let baskets = (0..data.data.len())
        .map(|i| {
            let b = &outcome.baskets[i];
            Ok(BasketAnalysis {
                name: data.names[i].clone(),
                y: b.final_y,
                n: b.final_n,
                active: data.data.is_active(i),
                posterior: b.posterior,
                post_prob: b.post_prob,
                borrowing_factor: borrowing_factor(i, &data.data, &outcome.weights)?,
                cutoff: cutoffs.as_ref().map(|c| c.values()[i]),
                promising: cutoffs.as_ref().map(|_| b.promising),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = AnalysisReport {
        method: cfg.method.label(),
        p0,
        weights: outcome.weights,
        baskets,
    };
    let mut out = Outputs::new(&common.out)?;
    out.write("analysis.json", &report::to_json(&report)?)?;
    if common.format == Format::Csv {
        out.write("analysis.csv", &report::analysis_csv(&report)?)?;
    }
    Ok(Completed {
        files: out.commit(),
        reproduce: reproduction("analyze", common, Some(data_path), &run),
        summary: report::analysis_table(&report),
    })
}

fn calibrate(common: &Common) -> Result<Completed, CliError> {
    let run = prepare(common)?;
    let design = &run.resolved.design;
    let cutoffs = calibrate_q(
        design,
        &run.resolved.borrowing,
        run.config.run.replicates,
        run.seed,
        run.workers,
    )?;
    let rep = CutoffReport {
        method: run.resolved.borrowing.method.label(),
        baskets: design.names(),
        alpha: design.alpha,
        replicates: run.config.run.replicates,
        seed: run.seed,
        cutoffs,
    };
    let mut out = Outputs::new(&common.out)?;
    out.write("cutoffs.json", &report::to_json(&rep)?)?;
    let summary = rep
        .baskets
        .iter()
        .zip(rep.cutoffs.values())
        .map(|(n, q)| format!("{n}: Q = {q:.4}\n"))
        .collect();
    Ok(Completed {
        files: out.commit(),
        reproduce: reproduction("calibrate", common, None, &run),
        summary,
    })
}

fn simulate(common: &Common) -> Result<Completed, CliError> {
    let run = prepare(common)?;
    if run.resolved.scenarios.is_empty() {
        return Err(CliError::Config(
            "scenarios: simulate needs at least one scenario".into(),
        ));
    }
    let design = &run.resolved.design;
    let cutoffs = cutoffs_for(&run)?;
    let m = run.config.run.replicates;
    let rows = run
        .resolved
        .scenarios
        .iter()
        .map(|s| {
            let set = run_scenario(s, design, &run.resolved.borrowing, &cutoffs, m, run.seed, run.workers)?;
            Ok(compute_metrics(&set, s, design.p0)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let (null_like, alt_like) = default_subsets(&rows);
    let agg = aggregate(&rows, &null_like, &alt_like)?;
    let names = design.names();
    let mut out = Outputs::new(&common.out)?;
    match common.format {
        Format::Csv => out.write("oc.csv", &report::oc_csv(&rows, &names, &agg)?)?,
        Format::Json => out.write(
            "oc.json",
            &report::to_json(&OcReport {
                method: run.resolved.borrowing.method.label(),
                baskets: &names,
                cutoffs: &cutoffs,
                replicates: m,
                seed: run.seed,
                scenarios: &rows,
                aggregates: &agg,
            })?,
        )?,
    }
    let summary = format!(
        "cutoffs: {:?}\nBWER_avg {}  BWER_max {}  TPR_avg {}  CCR_avg {}\n",
        cutoffs.values().iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>(),
        report::fmt4(agg.bwer_avg),
        report::fmt4(agg.bwer_max),
        report::fmt4(agg.tpr_avg),
        report::fmt4(agg.ccr_avg),
    );
    Ok(Completed {
        files: out.commit(),
        reproduce: reproduction("simulate", common, None, &run),
        summary,
    })
}

fn tune_cmd(common: &Common) -> Result<Completed, CliError> {
    let run = prepare(common)?;
    let grid = run.config.tuning_grid()?;
    let result = tune(
        &grid,
        &run.resolved.design,
        &run.resolved.borrowing,
        run.config.run.replicates,
        run.seed,
        run.workers,
    )?;
    let best = result.best();
    let mut out = Outputs::new(&common.out)?;
    match common.format {
        Format::Csv => out.write("tuning_grid.csv", &report::tuning_csv(&result)?)?,
        Format::Json => out.write("tuning_grid.json", &report::to_json(&result)?)?,
    }
    let chosen = serde_json::json!({
        "method": MethodConfig::from_method(&best.method),
        "cutoffs": best.cutoffs,
        "aggregates": best.aggregates,
        "objective": best.objective,
    });
    out.write("tuning_best.json", &report::to_json(&chosen)?)?;
    Ok(Completed {
        files: out.commit(),
        reproduce: reproduction("tune", common, None, &run),
        summary: format!(
            "selected {} (BWER_max {}, TPR_avg {}, CCR_avg {})\n",
            best.method.label(),
            report::fmt4(best.aggregates.bwer_max),
            report::fmt4(best.aggregates.tpr_avg),
            report::fmt4(best.aggregates.ccr_avg)
        ),
    })
}

pub fn run(cli: &Cli) -> Result<Completed, CliError> {
    match &cli.command {
        Command::Analyze { common, data } => analyze(common, data),
        Command::Calibrate { common } => calibrate(common),
        Command::Simulate { common } => simulate(common),
        Command::Tune { common } => tune_cmd(common),
    }
}

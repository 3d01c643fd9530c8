//! JSON run configuration and basket data files.

use std::path::Path;

use basketsim_core::trial::BasketDesign;
use basketsim_core::tune::{Strategy, TuningGrid};
use basketsim_core::{BasketData, BorrowingConfig, CutoffVector, DesignSpec, EbBase, Method, PriorSpec, Scenario};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub design: DesignConfig,
    pub method: MethodConfig,
    pub prior: PriorConfig,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub run: RunConfig,
    /// Fixed efficacy cutoffs; calibrated under the global null when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub baskets: Vec<BasketDesign>,
    pub p0: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodKind {
    #[serde(rename = "IM")]
    Independent,
    #[serde(rename = "PP_PEB")]
    PpPeb,
    #[serde(rename = "PP_GEB")]
    PpGeb,
    #[serde(rename = "LocalPP")]
    LocalPp,
    #[serde(rename = "JSD")]
    Jsd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(rename = "type")]
    pub kind: MethodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<EbBase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

fn required(value: Option<f64>, field: &str, kind: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Config(format!("method.{field}: required for method type {kind}")))
}

impl MethodConfig {
    pub fn from_method(method: &Method) -> Self {
        let mut out = MethodConfig {
            kind: MethodKind::Independent,
            base: None,
            a: None,
            delta: None,
            epsilon: None,
            tau: None,
        };
        match *method {
            Method::Independent => {}
            Method::PowerPrior { base } => {
                out.kind = match base {
                    EbBase::Pairwise => MethodKind::PpPeb,
                    EbBase::Global => MethodKind::PpGeb,
                }
            }
            Method::LocalPp { base, a, delta } => {
                out.kind = MethodKind::LocalPp;
                out.base = Some(base);
                out.a = Some(a);
                out.delta = Some(delta);
            }
            Method::Jsd { epsilon, tau } => {
                out.kind = MethodKind::Jsd;
                out.epsilon = Some(epsilon);
                out.tau = Some(tau);
            }
        }
        out
    }

    pub fn to_method(&self) -> Result<Method, CliError> {
        let method = match self.kind {
            MethodKind::Independent => Method::Independent,
            MethodKind::PpPeb => Method::PowerPrior { base: EbBase::Pairwise },
            MethodKind::PpGeb => Method::PowerPrior { base: EbBase::Global },
            MethodKind::LocalPp => Method::LocalPp {
                base: self.base.ok_or_else(|| {
                    CliError::Config("method.base: required for method type LocalPP (PEB or GEB)".into())
                })?,
                a: required(self.a, "a", "LocalPP")?,
                delta: required(self.delta, "delta", "LocalPP")?,
            },
            MethodKind::Jsd => Method::Jsd {
                epsilon: required(self.epsilon, "epsilon", "JSD")?,
                tau: required(self.tau, "tau", "JSD")?,
            },
        };
        method
            .validate()
            .map_err(|e| CliError::Config(format!("method: {e}")))?;
        Ok(method)
    }
}

/// A scalar shared by all baskets or one value per basket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerBasket {
    Shared(f64),
    Each(Vec<f64>),
}

impl PerBasket {
    fn expand(&self, field: &str, baskets: usize) -> Result<Vec<f64>, CliError> {
        match self {
            PerBasket::Shared(v) => Ok(vec![*v; baskets]),
            PerBasket::Each(v) if v.len() == baskets => Ok(v.clone()),
            PerBasket::Each(v) => Err(CliError::Config(format!(
                "prior.{field}: has {} entries for {baskets} baskets",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub b1: PerBasket,
    pub b2: PerBasket,
}

impl PriorConfig {
    pub fn priors(&self, baskets: usize) -> Result<Vec<PriorSpec>, CliError> {
        let b1 = self.b1.expand("b1", baskets)?;
        let b2 = self.b2.expand("b2", baskets)?;
        b1.into_iter()
            .zip(b2)
            .map(|(a, b)| PriorSpec::new(a, b).map_err(|e| CliError::Config(format!("prior: {e}"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "M", default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_replicates() -> usize {
    5000
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            replicates: default_replicates(),
            seed: 0,
            workers: None,
        }
    }
}

/// Tuning section. Missing value lists fall back to the default grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_like: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt_like: Option<Vec<String>>,
}

/// Validated, ready-to-run form of a [`Config`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub design: DesignSpec,
    pub borrowing: BorrowingConfig,
    pub scenarios: Vec<Scenario>,
    pub cutoffs: Option<CutoffVector>,
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Config::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let design = DesignSpec::new(self.design.baskets.clone(), self.design.p0, self.design.alpha)
            .map_err(|e| CliError::Config(format!("design: {e}")))?;
        let b = design.len();
        let method = self.method.to_method()?;
        let borrowing = BorrowingConfig::new(method, self.prior.priors(b)?)
            .map_err(|e| CliError::Config(format!("method: {e}")))?;
        for (k, s) in self.scenarios.iter().enumerate() {
            s.validate()
                .map_err(|e| CliError::Config(format!("scenarios[{k}]: {e}")))?;
            if s.orr.len() != b {
                return Err(CliError::Config(format!(
                    "scenarios[{k}].orr: has {} entries for {b} baskets",
                    s.orr.len()
                )));
            }
        }
        let cutoffs = match &self.cutoffs {
            None => None,
            Some(c) if c.len() != b => {
                return Err(CliError::Config(format!(
                    "cutoffs: has {} entries for {b} baskets",
                    c.len()
                )))
            }
            Some(c) => Some(CutoffVector::new(c.clone()).map_err(|e| CliError::Config(format!("cutoffs: {e}")))?),
        };
        if self.run.replicates == 0 {
            return Err(CliError::Config("run.M: must be at least 1".into()));
        }
        if self.run.workers == Some(0) {
            return Err(CliError::Config("run.workers: must be at least 1".into()));
        }
        Ok(Resolved {
            design,
            borrowing,
            scenarios: self.scenarios.clone(),
            cutoffs,
        })
    }

    pub fn tuning_grid(&self) -> Result<TuningGrid, CliError> {
        let t = self
            .tuning
            .as_ref()
            .ok_or_else(|| CliError::Config("tuning: section required by the tune command".into()))?;
        if self.scenarios.is_empty() {
            return Err(CliError::Config("scenarios: tuning needs at least one scenario".into()));
        }
        let mut grid = TuningGrid::with_defaults(self.scenarios.clone(), t.strategy);
        if let Some(v) = &t.a_values {
            grid.a_values = v.clone();
        }
        if let Some(v) = &t.delta_values {
            grid.delta_values = v.clone();
        }
        if let Some(v) = &t.epsilon_values {
            grid.epsilon_values = v.clone();
        }
        if let Some(v) = &t.tau_values {
            grid.tau_values = v.clone();
        }
        grid.null_like = t.null_like.clone();
        grid.alt_like = t.alt_like.clone();
        Ok(grid)
    }
}

/// One row of a data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataRow {
    pub name: String,
    pub y: u32,
    pub n: u32,
    #[serde(default = "default_active")]
    pub active: bool,
}

fn default_active() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub names: Vec<String>,
    pub data: BasketData,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonData {
    Rows(Vec<DataRow>),
    Wrapped { baskets: Vec<DataRow> },
}

impl DataFile {
    /// Reads `name,y,n[,active]` CSV, or JSON (a list of rows or
    /// `{"baskets": [...]}`), chosen by extension.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read data {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let rows = if is_json {
            match serde_json::from_str::<JsonData>(&text) {
                Ok(JsonData::Rows(r)) | Ok(JsonData::Wrapped { baskets: r }) => r,
                Err(e) => return Err(CliError::Data(format!("data: {e}"))),
            }
        } else {
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            reader
                .deserialize()
                .enumerate()
                .map(|(k, r)| r.map_err(|e| CliError::Data(format!("data row {}: {e}", k + 1))))
                .collect::<Result<Vec<DataRow>, _>>()?
        };
        DataFile::from_rows(rows)
    }

    pub fn from_rows(rows: Vec<DataRow>) -> Result<Self, CliError> {
        if rows.is_empty() {
            return Err(CliError::Data("data: no baskets".into()));
        }
        let names = rows.iter().map(|r| r.name.clone()).collect();
        let data = BasketData::new(
            rows.iter().map(|r| r.y).collect(),
            rows.iter().map(|r| r.n).collect(),
            rows.iter().map(|r| r.active).collect(),
        )
        .map_err(|e| CliError::Data(format!("data: {e}")))?;
        Ok(DataFile { names, data })
    }
}

//! Report bodies. Every writer returns the full file contents so runs can
//! be compared byte for byte.

use basketsim_core::tune::TuningResult;
use basketsim_core::{Aggregates, BetaParams, CutoffVector, Method, ScenarioMetrics, WeightMatrix};
use serde::Serialize;

use crate::CliError;

/// Rates are printed with four decimals; missing values as `NA`.
pub fn fmt4(value: Option<f64>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

fn csv_body(rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Operating-characteristics CSV: one row per (scenario, basket), then the
/// scenario metrics with the metric name in the `basket` column, then the
/// cross-scenario aggregates under scenario `aggregate`.
pub fn oc_csv(rows: &[ScenarioMetrics], basket_names: &[String], agg: &Aggregates) -> Result<String, CliError> {
    let mut out = vec![vec![
        "scenario".into(),
        "basket".into(),
        "rejection_rate".into(),
        "mc_se".into(),
    ]];
    for r in rows {
        for (i, name) in basket_names.iter().enumerate() {
            out.push(vec![
                r.scenario.clone(),
                name.clone(),
                fmt4(Some(r.rejection_rate[i])),
                fmt4(Some(r.mc_se[i])),
            ]);
        }
        for (label, value) in [
            ("FPR", r.fpr),
            ("FWER", r.fwer),
            ("FDR", r.fdr),
            ("TPR", r.tpr),
            ("CCR", Some(r.ccr)),
        ] {
            out.push(vec![r.scenario.clone(), label.into(), fmt4(value), "NA".into()]);
        }
    }
    for (label, value) in [
        ("BWER_avg", agg.bwer_avg),
        ("BWER_max", agg.bwer_max),
        ("TPR_avg", agg.tpr_avg),
        ("CCR_avg", agg.ccr_avg),
    ] {
        out.push(vec!["aggregate".into(), label.into(), fmt4(value), "NA".into()]);
    }
    csv_body(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OcReport<'a> {
    pub method: String,
    pub baskets: &'a [String],
    pub cutoffs: &'a CutoffVector,
    pub replicates: usize,
    pub seed: u64,
    pub scenarios: &'a [ScenarioMetrics],
    pub aggregates: &'a Aggregates,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffReport {
    pub method: String,
    pub baskets: Vec<String>,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub cutoffs: CutoffVector,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasketAnalysis {
    pub name: String,
    pub y: u32,
    pub n: u32,
    pub active: bool,
    pub posterior: BetaParams,
    pub post_prob: f64,
    pub borrowing_factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub promising: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub method: String,
    pub p0: f64,
    pub weights: WeightMatrix,
    pub baskets: Vec<BasketAnalysis>,
}

pub fn analysis_csv(report: &AnalysisReport) -> Result<String, CliError> {
    let names: Vec<String> = report.baskets.iter().map(|b| b.name.clone()).collect();
    let mut header: Vec<String> = [
        "basket",
        "y",
        "n",
        "active",
        "shape1",
        "shape2",
        "post_prob",
        "borrowing_factor",
        "cutoff",
        "promising",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(names.iter().map(|n| format!("w_{n}")));
    let mut out = vec![header];
    for (i, b) in report.baskets.iter().enumerate() {
        let mut row = vec![
            b.name.clone(),
            b.y.to_string(),
            b.n.to_string(),
            b.active.to_string(),
            format!("{:.4}", b.posterior.shape1()),
            format!("{:.4}", b.posterior.shape2()),
            fmt4(Some(b.post_prob)),
            fmt4(Some(b.borrowing_factor)),
            fmt4(b.cutoff),
            b.promising.map_or_else(|| "NA".into(), |p| p.to_string()),
        ];
        row.extend(report.weights.row(i).iter().map(|&w| fmt4(Some(w))));
        out.push(row);
    }
    csv_body(out)
}

/// Plain-text table for the terminal.
pub fn analysis_table(report: &AnalysisReport) -> String {
    let width = report.baskets.iter().map(|b| b.name.len()).max().unwrap_or(6).max(6);
    let mut s = format!("method: {}   p0: {}\n\n", report.method, report.p0);
    s += &format!(
        "{:<width$}  {:>4} {:>4}  {:>9} {:>9}  {:>7}  {:>6}  {:>6}  decision\n",
        "basket", "y", "n", "shape1", "shape2", "q", "BF", "Q"
    );
    for b in &report.baskets {
        let decision = match (b.active, b.promising) {
            (false, _) => "stopped",
            (true, Some(true)) => "promising",
            (true, Some(false)) => "not promising",
            (true, None) => "-",
        };
        s += &format!(
            "{:<width$}  {:>4} {:>4}  {:>9.4} {:>9.4}  {:>7.4}  {:>6.3}  {:>6}  {decision}\n",
            b.name,
            b.y,
            b.n,
            b.posterior.shape1(),
            b.posterior.shape2(),
            b.post_prob,
            b.borrowing_factor,
            b.cutoff.map_or_else(|| "-".into(), |c| format!("{c:.3}")),
        );
    }
    s += "\nweights (row borrows from column)\n";
    s += &format!("{:<width$}", "");
    for b in &report.baskets {
        s += &format!("  {:>6.6}", b.name);
    }
    s.push('\n');
    for (i, b) in report.baskets.iter().enumerate() {
        s += &format!("{:<width$}", b.name);
        for w in report.weights.row(i) {
            s += &format!("  {w:>6.2}");
        }
        s.push('\n');
    }
    s
}

fn method_params(m: &Method) -> [Option<f64>; 4] {
    match *m {
        Method::LocalPp { a, delta, .. } => [Some(a), Some(delta), None, None],
        Method::Jsd { epsilon, tau } => [None, None, Some(epsilon), Some(tau)],
        _ => [None; 4],
    }
}

fn fmt_param(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| v.to_string())
}

/// One row per candidate with its cutoffs, aggregates and selection flag.
pub fn tuning_csv(result: &TuningResult) -> Result<String, CliError> {
    let header = [
        "candidate",
        "method",
        "a",
        "delta",
        "epsilon",
        "tau",
        "cutoffs",
        "BWER_avg",
        "BWER_max",
        "TPR_avg",
        "CCR_avg",
        "objective",
        "feasible",
        "selected",
    ];
    let mut out = vec![header.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for (k, c) in result.candidates.iter().enumerate() {
        let [a, delta, eps, tau] = method_params(&c.method);
        let cutoffs = c
            .cutoffs
            .values()
            .iter()
            .map(|q| format!("{q:.4}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push(vec![
            k.to_string(),
            c.method.label(),
            fmt_param(a),
            fmt_param(delta),
            fmt_param(eps),
            fmt_param(tau),
            cutoffs,
            fmt4(c.aggregates.bwer_avg),
            fmt4(c.aggregates.bwer_max),
            fmt4(c.aggregates.tpr_avg),
            fmt4(c.aggregates.ccr_avg),
            fmt4(c.objective),
            c.feasible.to_string(),
            (k == result.best).to_string(),
        ]);
    }
    csv_body(out)
}

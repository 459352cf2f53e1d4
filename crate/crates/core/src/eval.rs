//! Held-out evaluation and the model-selection experiment runner.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::sweep_bic;
use crate::data::{generate_split, GroundTruthSpec};
use crate::error::{Error, Result};
use crate::fab::{self, FitConfig};
use crate::forward_backward::loglik;
use crate::math::{derive_seed, derive_seed_path};
use crate::model::{EmissionKind, HmmParams};
use crate::sequence::SequenceSet;

/// Per-symbol predictive log-likelihood (natural log): the summed sequence
/// log-likelihoods divided by the total observation count.
pub fn predictive_loglik(params: &HmmParams, test: &SequenceSet) -> Result<f64> {
    if test.kind != params.kind() {
        return Err(Error::InvalidData("test data kind does not match the model".into()));
    }
    let mut total = 0.0;
    for seq in &test.sequences {
        total += loglik(params, seq)?;
    }
    Ok(total / test.total_len() as f64)
}

/// Training method run by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fab")]
    Fab,
    #[serde(rename = "em-bic")]
    EmBic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fab => "fab",
            Method::EmBic => "em-bic",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Method::Fab => 1,
            Method::EmBic => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FabPlanConfig {
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for FabPlanConfig {
    fn default() -> Self {
        let d = FitConfig::default();
        FabPlanConfig { epsilon: d.epsilon, tol: d.tol, max_iter: d.max_iter, restarts: d.restarts }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmPlanConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for EmPlanConfig {
    fn default() -> Self {
        let d = FitConfig::default();
        EmPlanConfig { tol: d.tol, max_iter: d.max_iter, restarts: d.restarts }
    }
}

/// Declarative description of a model-selection experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub kind: EmissionKind,
    /// Training lengths, ascending.
    pub lengths: Vec<usize>,
    pub trials: usize,
    pub methods: Vec<Method>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_test_length")]
    pub test_length: usize,
    /// Master seed; every cell derives its own from (seed, method, length,
    /// trial). Required to run.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Per-fit wall-clock budget in seconds.
    #[serde(default)]
    pub time_limit_s: Option<f64>,
    #[serde(default)]
    pub fab: FabPlanConfig,
    #[serde(default)]
    pub em: EmPlanConfig,
    /// Write measured wall times; disable for byte-reproducible reports.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_k_max() -> usize {
    10
}

fn default_test_length() -> usize {
    5000
}

fn default_true() -> bool {
    true
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.lengths.is_empty() {
            return Err(Error::InvalidConfig("lengths must be non-empty".into()));
        }
        if self.lengths.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig("lengths must be sorted ascending".into()));
        }
        if self.lengths.iter().any(|&l| l == 0) {
            return Err(Error::InvalidConfig("lengths must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must be non-empty".into()));
        }
        if self.k_max < 1 {
            return Err(Error::InvalidConfig("k_max must be >= 1".into()));
        }
        if self.test_length < 1 {
            return Err(Error::InvalidConfig("test_length must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read plan {}: {e}", path.display())))?;
        let plan: ExperimentPlan = serde_json::from_str(&text)?;
        plan.validate()?;
        Ok(plan)
    }
}

/// One (method, length, trial) outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub method: Method,
    pub kind: EmissionKind,
    pub length: usize,
    pub trial: usize,
    pub seed: u64,
    pub selected_k: usize,
    /// Per-symbol predictive log-likelihood; absent for failed cells.
    pub pll: Option<f64>,
    pub wall_time_s: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean/stddev summaries over the successful trials of one
/// (method, length) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellAggregate {
    pub method: Method,
    pub length: usize,
    pub trials: usize,
    pub failed: usize,
    pub mean_selected_k: f64,
    pub std_selected_k: f64,
    pub mean_pll: Option<f64>,
    pub std_pll: Option<f64>,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub aggregates: Vec<CellAggregate>,
}

pub const REPORT_CSV_HEADER: &str = "method,kind,length,trial,seed,selected_k,pll,wall_time_s,converged";

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let pll = match r.pll {
                Some(v) => v.to_string(),
                None => "NaN".to_string(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.method.as_str(),
                r.kind.as_str(),
                r.length,
                r.trial,
                r.seed,
                r.selected_k,
                pll,
                r.wall_time_s,
                r.converged
            ));
        }
        out
    }
}

/// Run every cell of the plan, write `report.csv` and `report.json` under
/// `out_dir`, and return the report.
///
/// Cells run in parallel; each derives its seed from (plan seed, method,
/// length, trial), so the report is independent of the worker count. Rows
/// are emitted in plan order (method, then length, then trial). A failed
/// cell becomes a row with an error note; the run continues.
pub fn run_experiment(plan: &ExperimentPlan, out_dir: &Path) -> Result<ExperimentReport> {
    plan.validate()?;
    let master_seed = plan
        .seed
        .ok_or_else(|| Error::InvalidConfig("experiment plans require a seed".into()))?;
    fs::create_dir_all(out_dir)?;

    let mut cells = Vec::new();
    for &method in &plan.methods {
        for &length in &plan.lengths {
            for trial in 0..plan.trials {
                cells.push((method, length, trial));
            }
        }
    }
    let rows: Vec<ExperimentRow> = cells
        .par_iter()
        .map(|&(method, length, trial)| run_cell(plan, master_seed, method, length, trial))
        .collect();

    let aggregates = aggregate(plan, &rows);
    let report = ExperimentReport { rows, aggregates };

    fs::write(out_dir.join("report.csv"), report.to_csv())?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    fs::write(out_dir.join("report.json"), json)?;
    Ok(report)
}

fn run_cell(
    plan: &ExperimentPlan,
    master_seed: u64,
    method: Method,
    length: usize,
    trial: usize,
) -> ExperimentRow {
    let seed = derive_seed_path(
        master_seed,
        &[method.stream_tag(), length as u64, trial as u64],
    );
    let spec = GroundTruthSpec::for_kind(plan.kind);
    let (train, test) = generate_split(&spec, length, plan.test_length, seed);
    let fit_seed = derive_seed(seed, 2);
    let time_limit = plan.time_limit_s.map(Duration::from_secs_f64);

    let mut row = ExperimentRow {
        method,
        kind: plan.kind,
        length,
        trial,
        seed,
        selected_k: 0,
        pll: None,
        wall_time_s: 0.0,
        converged: false,
        error: None,
    };

    let started = Instant::now();
    let fitted: Result<(HmmParams, usize, bool)> = match method {
        Method::Fab => {
            let config = FitConfig {
                k_max: plan.k_max,
                epsilon: plan.fab.epsilon,
                tol: plan.fab.tol,
                max_iter: plan.fab.max_iter,
                restarts: plan.fab.restarts,
                seed: fit_seed,
                time_limit,
                record_timing: plan.record_timing,
                ..FitConfig::default()
            };
            fab::fit(&train, &config).map(|r| (r.params, r.selected_k, r.converged))
        }
        Method::EmBic => {
            let config = FitConfig {
                k_max: plan.k_max,
                tol: plan.em.tol,
                max_iter: plan.em.max_iter,
                restarts: plan.em.restarts,
                seed: fit_seed,
                time_limit,
                record_timing: plan.record_timing,
                ..FitConfig::default()
            };
            sweep_bic(&train, plan.k_max, &config).map(|s| {
                let chosen = s.selected();
                (chosen.params.clone(), s.selected_k, chosen.converged)
            })
        }
    };
    if plan.record_timing {
        row.wall_time_s = started.elapsed().as_secs_f64();
    }

    match fitted {
        Ok((params, selected_k, converged)) => {
            row.selected_k = selected_k;
            row.converged = converged;
            match predictive_loglik(&params, &test) {
                Ok(pll) => row.pll = Some(pll),
                Err(e) => row.error = Some(format!("evaluation failed: {e}")),
            }
        }
        Err(e) => row.error = Some(format!("fit failed: {e}")),
    }
    row
}

fn aggregate(plan: &ExperimentPlan, rows: &[ExperimentRow]) -> Vec<CellAggregate> {
    let mut out = Vec::new();
    for &method in &plan.methods {
        for &length in &plan.lengths {
            let cell: Vec<&ExperimentRow> = rows
                .iter()
                .filter(|r| r.method == method && r.length == length)
                .collect();
            let ok: Vec<&&ExperimentRow> = cell.iter().filter(|r| r.error.is_none()).collect();
            let failed = cell.len() - ok.len();
            let ks: Vec<f64> = ok.iter().map(|r| r.selected_k as f64).collect();
            let plls: Vec<f64> = ok.iter().filter_map(|r| r.pll).collect();
            let times: Vec<f64> = ok.iter().map(|r| r.wall_time_s).collect();
            out.push(CellAggregate {
                method,
                length,
                trials: ok.len(),
                failed,
                mean_selected_k: mean(&ks),
                std_selected_k: stddev(&ks),
                mean_pll: if plls.is_empty() { None } else { Some(mean(&plls)) },
                std_pll: if plls.is_empty() { None } else { Some(stddev(&plls)) },
                mean_wall_time_s: mean(&times),
            });
        }
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

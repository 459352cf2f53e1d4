//! File formats: model and dataset JSON (shared by every tool), fit-report
//! and sweep JSON, and the CSV trace export.
//!
//! JSON numbers are written with shortest-round-trip formatting, which
//! reproduces the exact binary value on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{SweepRecord, SweepResult};
use crate::error::{Error, Result};
use crate::fab::{FitReport, PruneEvent, TracePoint};
use crate::model::{EmissionKind, EmissionModel, HmmParams};
use crate::sequence::{Observations, SequenceSet};

// ── model file ─────────────────────────────────────────────────────────

#[derive(Clone, Serialize, Deserialize)]
struct ModelFile {
    kind: String,
    #[serde(rename = "K")]
    k: usize,
    alpha: Vec<f64>,
    beta: Vec<Vec<f64>>,
    emissions: Vec<EmissionFile>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum EmissionFile {
    Categorical { p: Vec<f64> },
    Gaussian { mean: f64, variance: f64 },
}

fn model_to_file(params: &HmmParams) -> ModelFile {
    let k = params.k();
    ModelFile {
        kind: params.kind().as_str().to_string(),
        k,
        alpha: params.alpha.clone(),
        beta: (0..k).map(|j| params.transition_row(j).to_vec()).collect(),
        emissions: params
            .emissions
            .iter()
            .map(|e| match e {
                EmissionModel::Categorical(p) => EmissionFile::Categorical { p: p.clone() },
                EmissionModel::Gaussian1d { mean, variance } => {
                    EmissionFile::Gaussian { mean: *mean, variance: *variance }
                }
            })
            .collect(),
    }
}

fn model_from_file(file: ModelFile) -> Result<HmmParams> {
    let kind = EmissionKind::parse(&file.kind)?;
    if file.alpha.len() != file.k || file.beta.len() != file.k || file.emissions.len() != file.k {
        return Err(Error::InvalidModel("model file fields disagree on K".into()));
    }
    let mut beta = Vec::with_capacity(file.k * file.k);
    for row in &file.beta {
        if row.len() != file.k {
            return Err(Error::InvalidModel("ragged transition matrix".into()));
        }
        beta.extend_from_slice(row);
    }
    let emissions = file
        .emissions
        .into_iter()
        .map(|e| match (kind, e) {
            (EmissionKind::Categorical, EmissionFile::Categorical { p }) => {
                Ok(EmissionModel::Categorical(p))
            }
            (EmissionKind::Gaussian1d, EmissionFile::Gaussian { mean, variance }) => {
                Ok(EmissionModel::Gaussian1d { mean, variance })
            }
            _ => Err(Error::InvalidModel("emission entries do not match the declared kind".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    HmmParams::new(file.alpha, beta, emissions)
}

pub fn save_model(params: &HmmParams, path: &Path) -> Result<()> {
    write_json(&model_to_file(params), path)
}

pub fn load_model(path: &Path) -> Result<HmmParams> {
    model_from_file(read_json(path)?)
}

// ── dataset file ────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    alphabet: Option<Vec<String>>,
    sequences: Vec<RawSequence>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawSequence {
    Ints(Vec<u64>),
    Floats(Vec<f64>),
}

pub fn save_dataset(set: &SequenceSet, path: &Path) -> Result<()> {
    let file = DatasetFile {
        kind: set.kind.as_str().to_string(),
        alphabet: set.alphabet.clone(),
        sequences: set
            .sequences
            .iter()
            .map(|seq| match seq {
                Observations::Symbols(ids) => {
                    RawSequence::Ints(ids.iter().map(|&v| v as u64).collect())
                }
                Observations::Reals(xs) => RawSequence::Floats(xs.clone()),
            })
            .collect(),
    };
    write_json(&file, path)
}

pub fn load_dataset(path: &Path) -> Result<SequenceSet> {
    let file: DatasetFile = read_json(path)?;
    let kind = EmissionKind::parse(&file.kind)?;
    let sequences = file
        .sequences
        .into_iter()
        .enumerate()
        .map(|(n, raw)| match (kind, raw) {
            (EmissionKind::Categorical, RawSequence::Ints(ids)) => {
                Ok(Observations::Symbols(ids.into_iter().map(|v| v as usize).collect()))
            }
            (EmissionKind::Categorical, RawSequence::Floats(xs)) => {
                // Tolerate integral floats from other serializers.
                xs.into_iter()
                    .map(|x| {
                        if x >= 0.0 && x.fract() == 0.0 {
                            Ok(x as usize)
                        } else {
                            Err(Error::InvalidData(format!(
                                "sequence {n} has non-integral symbol {x}"
                            )))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Observations::Symbols)
            }
            (EmissionKind::Gaussian1d, RawSequence::Floats(xs)) => Ok(Observations::Reals(xs)),
            (EmissionKind::Gaussian1d, RawSequence::Ints(ids)) => {
                Ok(Observations::Reals(ids.into_iter().map(|v| v as f64).collect()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SequenceSet::new(kind, sequences, file.alphabet)
}

// ── fit report ──────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
pub struct FitReportFile {
    pub selected_k: usize,
    pub iterations_run: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub winning_restart: usize,
    pub fic_lb_trace: Vec<TracePoint>,
    pub prune_events: Vec<PruneEvent>,
    pub warnings: Vec<String>,
    model: ModelFile,
}

impl FitReportFile {
    pub fn model(&self) -> Result<HmmParams> {
        model_from_file(self.model.clone())
    }
}

pub fn save_fit_report(report: &FitReport, path: &Path) -> Result<()> {
    let file = FitReportFile {
        selected_k: report.selected_k,
        iterations_run: report.iterations_run,
        converged: report.converged,
        wall_time_s: report.wall_time_s,
        winning_restart: report.winning_restart,
        fic_lb_trace: report.fic_lb_trace.clone(),
        prune_events: report.prune_events.clone(),
        warnings: report.warnings.clone(),
        model: model_to_file(&report.params),
    };
    write_json(&file, path)
}

pub fn load_fit_report(path: &Path) -> Result<FitReportFile> {
    read_json(path)
}

/// Objective trace as CSV: `iteration,k,fic_lb`.
pub fn save_trace_csv(report: &FitReport, path: &Path) -> Result<()> {
    let mut out = String::from("iteration,k,fic_lb\n");
    for p in &report.fic_lb_trace {
        out.push_str(&format!("{},{},{}\n", p.iteration, p.n_states, p.fic_lb));
    }
    fs::write(path, out)?;
    Ok(())
}

// ── sweep ───────────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
pub struct SweepFile {
    pub selected_k: usize,
    pub records: Vec<SweepRecord>,
}

pub fn save_sweep(result: &SweepResult, path: &Path) -> Result<()> {
    let file = SweepFile { selected_k: result.selected_k, records: result.records.clone() };
    write_json(&file, path)
}

pub fn load_sweep(path: &Path) -> Result<SweepFile> {
    read_json(path)
}

/// Sweep records as CSV: `k,loglik,d_total,bic,wall_time_s,converged`.
pub fn save_sweep_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut out = String::from("k,loglik,d_total,bic,wall_time_s,converged\n");
    for r in &result.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k, r.loglik, r.d_total, r.bic, r.wall_time_s, r.converged
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

// ── helpers ─────────────────────────────────────────────────────────────

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidData(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

//! Maximum-likelihood training (Baum-Welch) and the BIC model-order sweep
//! used as the comparison arm. The parameter update here is written
//! independently of the penalized trainer's so the two can be checked
//! against each other.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fab::{init_posteriors, FitConfig};
use crate::forward_backward::forward_backward_indexed;
use crate::math::derive_seed;
use crate::model::{EmissionKind, EmissionModel, HmmParams, VARIANCE_FLOOR};
use crate::posterior::Posterior;
use crate::sequence::{Observations, SequenceSet};

/// A converged (or budget-limited) maximum-likelihood fit at fixed K.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: HmmParams,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub loglik_trace: Vec<f64>,
}

/// One row of the model-order sweep.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepRecord {
    pub k: usize,
    pub loglik: f64,
    pub d_total: usize,
    pub bic: f64,
    pub wall_time_s: f64,
    pub converged: bool,
}

/// Sweep outcome: per-K records plus the score-maximizing K and its fit.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub selected_k: usize,
    /// Fits for K = 1..=k_max, index `k - 1`.
    pub fits: Vec<EmFit>,
}

impl SweepResult {
    pub fn selected(&self) -> &EmFit {
        &self.fits[self.selected_k - 1]
    }
}

/// Baum-Welch to convergence at fixed `k`, best of `config.restarts`
/// (highest final log-likelihood, ties to the lower restart index).
/// `config.k_max` is ignored; the same tolerance/iteration semantics as
/// the penalized trainer apply to the log-likelihood.
pub fn fit_em(data: &SequenceSet, k: usize, config: &FitConfig) -> Result<EmFit> {
    if k < 1 {
        return Err(Error::InvalidConfig("state count must be >= 1".into()));
    }
    config.validate()?;
    data.validate()?;
    let deadline = config.time_limit.map(|d| Instant::now() + d);

    let outcomes: Vec<Result<EmFit>> = (0..config.restarts)
        .into_par_iter()
        .map(|restart| run_em_restart(data, k, config, restart, deadline))
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(outcomes
        .into_iter()
        .reduce(|best, cand| if cand.loglik > best.loglik { cand } else { best })
        .expect("restarts >= 1"))
}

/// One expectation/maximization cycle: the posteriors and log-likelihood
/// of `params`, plus the parameters re-estimated from those posteriors.
pub fn em_iteration(
    params: &HmmParams,
    data: &SequenceSet,
) -> Result<(Vec<Posterior>, f64, HmmParams)> {
    let (posteriors, ll) = e_step(params, data)?;
    let updated = ml_m_step(&posteriors, data)?;
    Ok((posteriors, ll, updated))
}

fn run_em_restart(
    data: &SequenceSet,
    k: usize,
    config: &FitConfig,
    restart: usize,
    deadline: Option<Instant>,
) -> Result<EmFit> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, restart as u64));
    let init = init_posteriors(data, k, &mut rng);
    let mut params = ml_m_step(&init, data)?;

    let mut trace = Vec::new();
    let mut previous: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut loglik = f64::NEG_INFINITY;

    for iteration in 1..=config.max_iter {
        iterations = iteration;
        let (posteriors, ll) = e_step(&params, data)?;
        trace.push(ll);
        loglik = ll;
        if let Some(prev) = previous {
            if ll - prev <= config.tol {
                converged = true;
                break;
            }
        }
        previous = Some(ll);
        params = ml_m_step(&posteriors, data)?;
        if let Some(limit) = deadline {
            if Instant::now() >= limit {
                break;
            }
        }
    }
    if !converged {
        // Exhaustion or deadline exit: the last trace value scored the
        // pre-update parameters, so score the ones being returned.
        let (_, final_ll) = e_step(&params, data)?;
        trace.push(final_ll);
        loglik = final_ll;
    }

    Ok(EmFit { params, loglik, iterations, converged, loglik_trace: trace })
}

fn e_step(params: &HmmParams, data: &SequenceSet) -> Result<(Vec<Posterior>, f64)> {
    let posteriors: Vec<Posterior> = data
        .sequences
        .par_iter()
        .enumerate()
        .map(|(n, seq)| forward_backward_indexed(params, seq, None, n))
        .collect::<Result<_>>()?;
    let ll = posteriors.iter().map(Posterior::log_norm).sum();
    Ok((posteriors, ll))
}

/// Standard Baum-Welch parameter update from expected counts.
fn ml_m_step(posteriors: &[Posterior], data: &SequenceSet) -> Result<HmmParams> {
    let k = posteriors
        .first()
        .map(|p| p.n_states)
        .ok_or_else(|| Error::InvalidData("no posteriors".into()))?;

    let mut alpha = vec![0.0; k];
    let mut beta = vec![0.0; k * k];
    for post in posteriors {
        for s in 0..k {
            alpha[s] += post.gamma_at(0, s);
        }
        for t in 0..post.len() - 1 {
            for j in 0..k {
                for l in 0..k {
                    beta[j * k + l] += post.xi_at(t, j, l);
                }
            }
        }
    }
    crate::math::normalize(&mut alpha);
    for j in 0..k {
        let row = &mut beta[j * k..(j + 1) * k];
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            for x in row.iter_mut() {
                *x /= total;
            }
        } else {
            row.fill(1.0 / k as f64);
        }
    }

    let emissions: Vec<EmissionModel> = match data.kind {
        EmissionKind::Categorical => {
            let v = data.n_symbols()?;
            let mut counts = vec![0.0; k * v];
            for (post, seq) in posteriors.iter().zip(&data.sequences) {
                let ids = match seq {
                    Observations::Symbols(ids) => ids,
                    _ => return Err(Error::InvalidData("categorical data expected".into())),
                };
                for (t, &sym) in ids.iter().enumerate() {
                    for s in 0..k {
                        counts[s * v + sym] += post.gamma_at(t, s);
                    }
                }
            }
            (0..k)
                .map(|s| {
                    let row = &mut counts[s * v..(s + 1) * v];
                    if !(crate::math::normalize(row) > 0.0) {
                        return Err(Error::InvalidData(format!("state {s} has zero occupancy")));
                    }
                    Ok(EmissionModel::Categorical(row.to_vec()))
                })
                .collect::<Result<_>>()?
        }
        EmissionKind::Gaussian1d => {
            let mut mass = vec![0.0; k];
            let mut mean = vec![0.0; k];
            for (post, seq) in posteriors.iter().zip(&data.sequences) {
                let xs = match seq {
                    Observations::Reals(xs) => xs,
                    _ => return Err(Error::InvalidData("gaussian data expected".into())),
                };
                for (t, &x) in xs.iter().enumerate() {
                    for s in 0..k {
                        let g = post.gamma_at(t, s);
                        mass[s] += g;
                        mean[s] += g * x;
                    }
                }
            }
            for s in 0..k {
                if !(mass[s] > 0.0) {
                    return Err(Error::InvalidData(format!("state {s} has zero occupancy")));
                }
                mean[s] /= mass[s];
            }
            let mut var = vec![0.0; k];
            for (post, seq) in posteriors.iter().zip(&data.sequences) {
                let xs = match seq {
                    Observations::Reals(xs) => xs,
                    _ => unreachable!(),
                };
                for (t, &x) in xs.iter().enumerate() {
                    for s in 0..k {
                        let d = x - mean[s];
                        var[s] += post.gamma_at(t, s) * d * d;
                    }
                }
            }
            (0..k)
                .map(|s| EmissionModel::Gaussian1d {
                    mean: mean[s],
                    variance: (var[s] / mass[s]).max(VARIANCE_FLOOR),
                })
                .collect()
        }
    };

    HmmParams::new(alpha, beta, emissions)
}

/// `loglik - (d_total / 2) * log(total_length)`. The sample-size convention
/// is the total observation count over all sequences.
pub fn bic_score(loglik: f64, d_total: usize, total_length: usize) -> f64 {
    assert!(total_length >= 1);
    loglik - d_total as f64 / 2.0 * (total_length as f64).ln()
}

/// Fit K = 1..=k_max, score each with [`bic_score`], select the argmax
/// (ties to the smallest K). Per-K fits draw their seeds from
/// `(config.seed, k)` and may run in parallel; records are collected in K
/// order.
pub fn sweep_bic(data: &SequenceSet, k_max: usize, config: &FitConfig) -> Result<SweepResult> {
    if k_max < 1 {
        return Err(Error::InvalidConfig("k_max must be >= 1".into()));
    }
    let total_length = data.total_len();
    let fits: Vec<(EmFit, f64)> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let sub = FitConfig {
                seed: derive_seed(config.seed, k as u64),
                ..config.clone()
            };
            let start = Instant::now();
            let fit = fit_em(data, k, &sub)?;
            let secs = if config.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
            Ok((fit, secs))
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(k_max);
    let mut selected_k = 1;
    let mut best = f64::NEG_INFINITY;
    for (i, (fit, secs)) in fits.iter().enumerate() {
        let k = i + 1;
        let d_total = fit.params.dims().total();
        let bic = bic_score(fit.loglik, d_total, total_length);
        records.push(SweepRecord {
            k,
            loglik: fit.loglik,
            d_total,
            bic,
            wall_time_s: *secs,
            converged: fit.converged,
        });
        if bic > best {
            best = bic;
            selected_k = k;
        }
    }
    Ok(SweepResult {
        records,
        selected_k,
        fits: fits.into_iter().map(|(f, _)| f).collect(),
    })
}

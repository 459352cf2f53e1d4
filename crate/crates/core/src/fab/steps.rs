//! Posterior initialization and the two half-steps of the training loop.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fab::delta::DeltaRegularizer;
use crate::forward_backward::forward_backward_indexed;
use crate::math::sample_simplex;
use crate::model::{EmissionKind, EmissionModel, HmmParams, VARIANCE_FLOOR};
use crate::posterior::{Multipliers, Posterior};
use crate::sequence::{Observations, SequenceSet};

/// Random-responsibility initialization: every position gets an
/// independent flat draw from the state simplex, and pair marginals are
/// the outer products of adjacent draws.
pub fn init_posteriors(data: &SequenceSet, n_states: usize, rng: &mut ChaCha8Rng) -> Vec<Posterior> {
    let k = n_states;
    data.sequences
        .iter()
        .map(|seq| {
            let t_len = seq.len();
            let mut gamma = vec![0.0; t_len * k];
            for t in 0..t_len {
                sample_simplex(rng, &mut gamma[t * k..(t + 1) * k]);
            }
            let mut xi = vec![0.0; (t_len - 1) * k * k];
            for t in 0..t_len - 1 {
                for j in 0..k {
                    for l in 0..k {
                        xi[t * k * k + j * k + l] = gamma[t * k + j] * gamma[(t + 1) * k + l];
                    }
                }
            }
            let post = Posterior { n_states: k, gamma, xi, log_zeta: vec![0.0; t_len] };
            post.debug_check();
            post
        })
        .collect()
}

/// Posterior update: runs the weighted forward-backward over every
/// sequence with the regularizer as emission multipliers. Returns the
/// posteriors and the summed log normalizers, reduced in sequence order.
pub fn v_step(
    params: &HmmParams,
    data: &SequenceSet,
    delta: &DeltaRegularizer,
) -> Result<(Vec<Posterior>, f64)> {
    let multipliers = Multipliers {
        interior: delta.interior.clone(),
        terminal: delta.terminal.clone(),
    };
    let posteriors: Vec<Posterior> = data
        .sequences
        .par_iter()
        .enumerate()
        .map(|(n, seq)| forward_backward_indexed(params, seq, Some(&multipliers), n))
        .collect::<Result<_>>()?;
    let sum_log_zeta = posteriors.iter().map(Posterior::log_norm).sum();
    Ok((posteriors, sum_log_zeta))
}

/// Parameter update by expected-count maximization. With a single emission
/// family per run the per-state penalty term does not move the argmax, so
/// emissions are plain weighted maximum-likelihood fits.
///
/// Returns the updated model plus the indices of states whose transition
/// row carried no expected mass and was reset to uniform.
pub fn m_step(posteriors: &[Posterior], data: &SequenceSet) -> Result<(HmmParams, Vec<usize>)> {
    let k = posteriors
        .first()
        .map(|p| p.n_states)
        .ok_or_else(|| Error::InvalidData("no posteriors".into()))?;
    if posteriors.len() != data.sequences.len() {
        return Err(Error::InvalidData("posterior count does not match sequence count".into()));
    }
    for (n, (post, seq)) in posteriors.iter().zip(&data.sequences).enumerate() {
        if post.len() != seq.len() {
            return Err(Error::InvalidData(format!("posterior {n} length mismatch")));
        }
    }

    // Initial distribution: first-position marginals pooled over sequences.
    let mut alpha = vec![0.0; k];
    for post in posteriors {
        for s in 0..k {
            alpha[s] += post.gamma_at(0, s);
        }
    }
    crate::math::normalize(&mut alpha);

    // Transition rows: pooled pair marginals, rows normalized.
    let mut beta = vec![0.0; k * k];
    for post in posteriors {
        for t in 0..post.len() - 1 {
            let block = &post.xi[t * k * k..(t + 1) * k * k];
            for (jl, &x) in block.iter().enumerate() {
                beta[jl] += x;
            }
        }
    }
    let mut uniform_rows = Vec::new();
    for j in 0..k {
        let row = &mut beta[j * k..(j + 1) * k];
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            for x in row.iter_mut() {
                *x /= total;
            }
        } else {
            row.fill(1.0 / k as f64);
            uniform_rows.push(j);
        }
    }

    let emissions = match data.kind {
        EmissionKind::Categorical => categorical_emissions(posteriors, data, k)?,
        EmissionKind::Gaussian1d => gaussian_emissions(posteriors, data, k)?,
    };

    let params = HmmParams::new(alpha, beta, emissions)?;
    Ok((params, uniform_rows))
}

fn categorical_emissions(
    posteriors: &[Posterior],
    data: &SequenceSet,
    k: usize,
) -> Result<Vec<EmissionModel>> {
    let v = data.n_symbols()?;
    let mut weights = vec![0.0; k * v];
    for (post, seq) in posteriors.iter().zip(&data.sequences) {
        let symbols = match seq {
            Observations::Symbols(ids) => ids,
            _ => return Err(Error::InvalidData("categorical data expected".into())),
        };
        for (t, &sym) in symbols.iter().enumerate() {
            for s in 0..k {
                weights[s * v + sym] += post.gamma_at(t, s);
            }
        }
    }
    (0..k)
        .map(|s| {
            let row = &mut weights[s * v..(s + 1) * v];
            let total = crate::math::normalize(row);
            if !(total > 0.0) {
                return Err(Error::InvalidData(format!(
                    "state {s} has zero occupancy in the parameter update"
                )));
            }
            Ok(EmissionModel::Categorical(row.to_vec()))
        })
        .collect()
}

fn gaussian_emissions(
    posteriors: &[Posterior],
    data: &SequenceSet,
    k: usize,
) -> Result<Vec<EmissionModel>> {
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
            return Err(Error::InvalidData(format!(
                "state {s} has zero occupancy in the parameter update"
            )));
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
    Ok((0..k)
        .map(|s| EmissionModel::Gaussian1d {
            mean: mean[s],
            variance: (var[s] / mass[s]).max(VARIANCE_FLOOR),
        })
        .collect())
}

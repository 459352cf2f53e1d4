//! Scaled forward-backward over one sequence, with optional per-state
//! emission multipliers.
//!
//! The recursion follows the classic normalized form: forward vectors are
//! rescaled to sum 1 at every position and the scale factors `zeta`
//! accumulate the likelihood. Emission values are computed in log space
//! and shifted by the per-position maximum before exponentiation, so long
//! sequences and tiny multipliers cannot underflow; the shift is folded
//! back into `log_zeta`, which leaves the posteriors untouched.

use crate::error::{Error, Result};
use crate::model::HmmParams;
use crate::posterior::{Multipliers, Posterior};
use crate::sequence::Observations;

/// Log of the effective emission (model emission times multiplier) for
/// every `(t, k)`, plus the per-position shift that brings the maximum to 0.
fn shifted_emissions(
    params: &HmmParams,
    seq: &Observations,
    multipliers: Option<&Multipliers>,
    seq_index: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = params.k();
    let t_len = seq.len();
    let mut ems = vec![0.0; t_len * k];
    let mut shift = vec![0.0; t_len];
    for t in 0..t_len {
        let obs = seq.at(t);
        let mut row_max = f64::NEG_INFINITY;
        for (s, e) in params.emissions.iter().enumerate() {
            let mut lp = e.log_prob(obs)?;
            if let Some(m) = multipliers {
                lp += m.at(t, t_len, s).ln();
            }
            ems[t * k + s] = lp;
            row_max = row_max.max(lp);
        }
        if !row_max.is_finite() {
            return Err(Error::Degenerate {
                sequence: seq_index,
                position: t,
                detail: "every state assigns zero effective emission mass".into(),
            });
        }
        shift[t] = row_max;
        for s in 0..k {
            let v = ems[t * k + s] - row_max;
            ems[t * k + s] = v.exp();
        }
    }
    Ok((ems, shift))
}

/// Run scaled forward-backward and return the full posterior. With
/// multipliers present, the effective emission at `(t, k)` is the model
/// emission times the state's class weight, so the log normalizer is that
/// of the weighted joint.
pub fn forward_backward(
    params: &HmmParams,
    seq: &Observations,
    multipliers: Option<&Multipliers>,
) -> Result<Posterior> {
    forward_backward_indexed(params, seq, multipliers, 0)
}

/// As [`forward_backward`], tagging degeneracy errors with the sequence
/// index for multi-sequence callers.
pub fn forward_backward_indexed(
    params: &HmmParams,
    seq: &Observations,
    multipliers: Option<&Multipliers>,
    seq_index: usize,
) -> Result<Posterior> {
    if seq.is_empty() {
        return Err(Error::InvalidData("empty sequence".into()));
    }
    if seq.kind() != params.kind() {
        return Err(Error::InvalidData("sequence kind does not match model kind".into()));
    }
    if let Some(m) = multipliers {
        m.validate(params.k())?;
    }

    let k = params.k();
    let t_len = seq.len();
    let (ems, shift) = shifted_emissions(params, seq, multipliers, seq_index)?;

    // Forward pass with per-position normalization.
    let mut fwd = vec![0.0; t_len * k];
    let mut log_zeta = vec![0.0; t_len];
    for s in 0..k {
        fwd[s] = params.alpha[s] * ems[s];
    }
    let z0: f64 = fwd[..k].iter().sum();
    if !(z0 > 0.0) || !z0.is_finite() {
        return Err(Error::Degenerate {
            sequence: seq_index,
            position: 0,
            detail: "scaled forward vector vanished".into(),
        });
    }
    for s in 0..k {
        fwd[s] /= z0;
    }
    log_zeta[0] = z0.ln() + shift[0];

    for t in 1..t_len {
        let (prev, cur) = fwd.split_at_mut(t * k);
        let prev = &prev[(t - 1) * k..];
        let cur = &mut cur[..k];
        cur.fill(0.0);
        for j in 0..k {
            let fj = prev[j];
            if fj == 0.0 {
                continue;
            }
            let row = params.transition_row(j);
            for (l, c) in cur.iter_mut().enumerate() {
                *c += fj * row[l];
            }
        }
        let mut z = 0.0;
        for (l, c) in cur.iter_mut().enumerate() {
            *c *= ems[t * k + l];
            z += *c;
        }
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::Degenerate {
                sequence: seq_index,
                position: t,
                detail: "scaled forward vector vanished".into(),
            });
        }
        for c in cur.iter_mut() {
            *c /= z;
        }
        log_zeta[t] = z.ln() + shift[t];
    }

    // Backward pass sharing the forward scale factors; zeta here excludes
    // the log-space shift, which cancels inside the posteriors.
    let mut bwd = vec![0.0; t_len * k];
    for s in 0..k {
        bwd[(t_len - 1) * k + s] = 1.0;
    }
    for t in (0..t_len - 1).rev() {
        let zeta_next = (log_zeta[t + 1] - shift[t + 1]).exp();
        for j in 0..k {
            let row = params.transition_row(j);
            let mut acc = 0.0;
            for l in 0..k {
                acc += row[l] * ems[(t + 1) * k + l] * bwd[(t + 1) * k + l];
            }
            bwd[t * k + j] = acc / zeta_next;
        }
    }

    // Marginals.
    let mut gamma = vec![0.0; t_len * k];
    for t in 0..t_len {
        for s in 0..k {
            gamma[t * k + s] = fwd[t * k + s] * bwd[t * k + s];
        }
    }
    let mut xi = vec![0.0; t_len.saturating_sub(1) * k * k];
    for t in 0..t_len - 1 {
        let zeta_next = (log_zeta[t + 1] - shift[t + 1]).exp();
        let block = &mut xi[t * k * k..(t + 1) * k * k];
        for j in 0..k {
            let fj = fwd[t * k + j];
            if fj == 0.0 {
                continue;
            }
            let row = params.transition_row(j);
            for l in 0..k {
                block[j * k + l] =
                    fj * row[l] * ems[(t + 1) * k + l] * bwd[(t + 1) * k + l] / zeta_next;
            }
        }
    }

    let posterior = Posterior { n_states: k, gamma, xi, log_zeta };
    posterior.debug_check();
    Ok(posterior)
}

/// Log-likelihood of `seq` under `params`: the sum of the forward scale
/// factors with no multipliers applied.
pub fn loglik(params: &HmmParams, seq: &Observations) -> Result<f64> {
    Ok(forward_backward(params, seq, None)?.log_norm())
}

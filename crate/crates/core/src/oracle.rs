//! Exhaustive-enumeration reference for the forward-backward algorithm.
//!
//! Sums over every hidden path explicitly, so it is exponential in the
//! sequence length and only suitable for tiny instances. It shares no code
//! with the scaled recursion it is used to check.

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::model::HmmParams;
use crate::posterior::{Multipliers, Posterior};
use crate::sequence::Observations;

const MAX_PATHS: f64 = 1e6;

/// Exact posterior marginals by summation over all `K^T` hidden paths.
/// Matches the contract of [`crate::forward_backward::forward_backward`],
/// including the per-position log normalizers (log-ratios of successive
/// prefix sums).
pub fn brute_force_posterior(
    params: &HmmParams,
    seq: &Observations,
    multipliers: Option<&Multipliers>,
) -> Result<Posterior> {
    if seq.is_empty() {
        return Err(Error::InvalidData("empty sequence".into()));
    }
    let k = params.k();
    let t_len = seq.len();
    if (k as f64).powi(t_len as i32) > MAX_PATHS {
        return Err(Error::TooLarge(format!("{k}^{t_len} paths")));
    }
    if let Some(m) = multipliers {
        m.validate(k)?;
    }

    // Effective log emission per (t, state).
    let mut ems = vec![0.0; t_len * k];
    for t in 0..t_len {
        for s in 0..k {
            let mut lp = params.emissions[s].log_prob(seq.at(t))?;
            if let Some(m) = multipliers {
                lp += m.at(t, t_len, s).ln();
            }
            ems[t * k + s] = lp;
        }
    }

    let log_weight = |path: &[usize]| -> f64 {
        let mut lw = params.alpha[path[0]].ln() + ems[path[0]];
        for t in 1..path.len() {
            lw += params.transition(path[t - 1], path[t]).ln() + ems[t * k + path[t]];
        }
        lw
    };

    // Prefix log normalizers L_t = log sum over all length-(t+1) prefixes.
    let mut prefix_log_norm = vec![f64::NEG_INFINITY; t_len];
    let mut path = vec![0usize; t_len];
    for t in 0..t_len {
        let mut terms = Vec::with_capacity(k.pow((t + 1) as u32));
        enumerate(k, t + 1, &mut path, 0, &mut |p| terms.push(log_weight(p)));
        prefix_log_norm[t] = log_sum_exp(&terms);
    }
    let total = prefix_log_norm[t_len - 1];
    if !total.is_finite() {
        return Err(Error::Degenerate {
            sequence: 0,
            position: 0,
            detail: "all paths have zero mass".into(),
        });
    }

    let mut gamma = vec![0.0; t_len * k];
    let mut xi = vec![0.0; (t_len - 1) * k * k];
    enumerate(k, t_len, &mut path, 0, &mut |p| {
        let w = (log_weight(p) - total).exp();
        for (t, &s) in p.iter().enumerate() {
            gamma[t * k + s] += w;
        }
        for t in 0..t_len - 1 {
            xi[t * k * k + p[t] * k + p[t + 1]] += w;
        }
    });

    let mut log_zeta = vec![0.0; t_len];
    log_zeta[0] = prefix_log_norm[0];
    for t in 1..t_len {
        log_zeta[t] = prefix_log_norm[t] - prefix_log_norm[t - 1];
    }

    Ok(Posterior { n_states: k, gamma, xi, log_zeta })
}

fn enumerate(k: usize, depth: usize, path: &mut [usize], at: usize, f: &mut impl FnMut(&[usize])) {
    if at == depth {
        f(&path[..depth]);
        return;
    }
    for s in 0..k {
        path[at] = s;
        enumerate(k, depth, path, at + 1, f);
    }
}

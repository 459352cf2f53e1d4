//! Occupancy statistics, the exponentiated per-state regularizer, and the
//! penalized lower-bound objective.

use crate::error::{Error, Result};
use crate::model::ModelDims;
use crate::posterior::Posterior;

/// Floor for the unnormalized regularizer weights. Keeps every weight
/// strictly positive even when an occupancy is small enough to underflow
/// the exponential.
const WEIGHT_FLOOR: f64 = 1e-300;

/// Expected state-occupancy counts accumulated over a posterior set.
///
/// `interior[k]` sums the state-`k` marginals over non-final positions
/// (the positions that own an outgoing transition); `total[k]` sums them
/// over all positions. Length-1 sequences therefore contribute only to
/// `total`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyStats {
    pub interior: Vec<f64>,
    pub total: Vec<f64>,
    /// Number of non-final positions over all sequences.
    pub interior_positions: usize,
    /// Total observation count.
    pub total_positions: usize,
    pub n_sequences: usize,
}

impl OccupancyStats {
    pub fn from_posteriors(posteriors: &[Posterior]) -> Self {
        let k = posteriors.first().map_or(0, |p| p.n_states);
        let mut interior = vec![0.0; k];
        let mut total = vec![0.0; k];
        let mut interior_positions = 0;
        let mut total_positions = 0;
        for post in posteriors {
            let t_len = post.len();
            interior_positions += t_len - 1;
            total_positions += t_len;
            for t in 0..t_len {
                let row = &post.gamma[t * k..(t + 1) * k];
                for (s, &g) in row.iter().enumerate() {
                    total[s] += g;
                    if t + 1 < t_len {
                        interior[s] += g;
                    }
                }
            }
        }
        OccupancyStats {
            interior,
            total,
            interior_positions,
            total_positions,
            n_sequences: posteriors.len(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.total.len()
    }
}

/// Normalized per-state emission weights, one value per position class.
///
/// The unnormalized interior weight of state `k` is
/// `exp(-d_beta[k] / (2 B[k]) - d_phi[k] / (2 C[k]))` with `B` the interior
/// and `C` the total occupancy; the final-position weight drops the
/// transition term. `log_norm_*` store the logs of the normalization
/// constants, which re-enter the objective since the weights are applied
/// in normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRegularizer {
    pub interior: Vec<f64>,
    pub terminal: Vec<f64>,
    pub log_norm_interior: f64,
    pub log_norm_terminal: f64,
}

/// Compute the regularizer from occupancy statistics.
///
/// Every active state must carry positive total occupancy, and positive
/// interior occupancy whenever interior positions exist; states that fall
/// to zero are expected to have been pruned before this point.
pub fn compute_delta(stats: &OccupancyStats, dims: &ModelDims) -> Result<DeltaRegularizer> {
    let k = stats.n_states();
    if dims.beta.len() != k || dims.phi.len() != k {
        return Err(Error::InvalidConfig("dims do not match the state count".into()));
    }
    let has_interior = stats.interior_positions > 0;
    let mut interior = Vec::with_capacity(k);
    let mut terminal = Vec::with_capacity(k);
    for s in 0..k {
        let c = stats.total[s];
        if !(c > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "state {s} has zero total occupancy; prune before computing the regularizer"
            )));
        }
        let phi_term = dims.phi[s] as f64 / (2.0 * c);
        if has_interior {
            let b = stats.interior[s];
            if !(b > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "state {s} has zero interior occupancy; prune before computing the regularizer"
                )));
            }
            let beta_term = dims.beta[s] as f64 / (2.0 * b);
            interior.push((-beta_term - phi_term).exp().max(WEIGHT_FLOOR));
        } else {
            interior.push(1.0);
        }
        terminal.push((-phi_term).exp().max(WEIGHT_FLOOR));
    }
    let norm_i: f64 = interior.iter().sum();
    let norm_t: f64 = terminal.iter().sum();
    for w in interior.iter_mut() {
        *w /= norm_i;
    }
    for w in terminal.iter_mut() {
        *w /= norm_t;
    }
    let delta = DeltaRegularizer {
        interior,
        terminal,
        log_norm_interior: norm_i.ln(),
        log_norm_terminal: norm_t.ln(),
    };
    #[cfg(debug_assertions)]
    {
        let si: f64 = delta.interior.iter().sum();
        let st: f64 = delta.terminal.iter().sum();
        debug_assert!((si - 1.0).abs() < 1e-12 && (st - 1.0).abs() < 1e-12);
        debug_assert!(delta
            .interior
            .iter()
            .chain(delta.terminal.iter())
            .all(|&w| w > 0.0 && w <= 1.0));
    }
    Ok(delta)
}

/// The penalized lower-bound objective.
///
/// `sum_log_zeta` must come from the weighted forward-backward pass driven
/// by `delta`, and `stats`/`delta` must both derive from the same reference
/// posterior (the previous iteration's). The per-position normalizers of
/// the weights are added back — the weights are applied normalized, so
/// their normalization constants are part of the bound, alongside the
/// linearized penalty constants `(log B - 1)` and `(log C - 1)` produced
/// by the tangent bound `log a <= log b + (a - b)/b` evaluated at `b = a`.
pub fn fic_lower_bound(
    sum_log_zeta: f64,
    delta: &DeltaRegularizer,
    stats: &OccupancyStats,
    dims: &ModelDims,
) -> Result<f64> {
    let k = stats.n_states();
    if dims.beta.len() != k || dims.phi.len() != k {
        return Err(Error::InvalidConfig("dims do not match the state count".into()));
    }
    let has_interior = stats.interior_positions > 0;
    let sum_log_norm = stats.interior_positions as f64 * delta.log_norm_interior
        + stats.n_sequences as f64 * delta.log_norm_terminal;
    let mut penalty = dims.alpha as f64 / 2.0 * (stats.n_sequences as f64).ln();
    for s in 0..k {
        let c = stats.total[s];
        if !(c > 0.0) {
            return Err(Error::InvalidConfig(format!("state {s} has zero total occupancy")));
        }
        penalty += dims.phi[s] as f64 / 2.0 * (c.ln() - 1.0);
        if has_interior {
            let b = stats.interior[s];
            if !(b > 0.0) {
                return Err(Error::InvalidConfig(format!("state {s} has zero interior occupancy")));
            }
            penalty += dims.beta[s] as f64 / 2.0 * (b.ln() - 1.0);
        }
    }
    Ok(sum_log_zeta + sum_log_norm - penalty)
}

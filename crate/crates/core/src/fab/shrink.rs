//! Hidden-state pruning by occupancy thresholding.
//!
//! States whose total expected occupancy falls at or below the threshold
//! have their posterior mass zeroed. The surviving mass is renormalized by
//! conditioning each posterior chain on the kept states at every position
//! (a forward-backward pass over the chain itself), which restores
//! per-position normalization and marginal consistency exactly rather
//! than approximately.

use crate::error::Result;
use crate::fab::delta::OccupancyStats;
use crate::posterior::Posterior;

/// Result of one pruning pass. `kept` and `pruned` index the state set the
/// input posteriors were defined over, both ascending; the output
/// posteriors are compacted to the kept states in that order.
#[derive(Debug)]
pub struct ShrinkOutcome {
    pub posteriors: Vec<Posterior>,
    pub kept: Vec<usize>,
    pub pruned: Vec<usize>,
}

/// Prune states with `total occupancy <= epsilon`. If every state falls at
/// or below the threshold, the single largest state survives (ties to the
/// lowest index); the state count never reaches zero.
pub fn shrink(
    posteriors: Vec<Posterior>,
    stats: &OccupancyStats,
    epsilon: f64,
) -> Result<ShrinkOutcome> {
    let k = stats.n_states();
    let mut kept: Vec<usize> = (0..k).filter(|&s| stats.total[s] > epsilon).collect();
    if kept.is_empty() {
        let best = (0..k)
            .max_by(|&a, &b| stats.total[a].partial_cmp(&stats.total[b]).unwrap().then(b.cmp(&a)))
            .expect("at least one state");
        kept = vec![best];
    }
    if kept.len() == k {
        return Ok(ShrinkOutcome { posteriors, kept, pruned: Vec::new() });
    }
    let pruned: Vec<usize> = (0..k).filter(|s| !kept.contains(s)).collect();

    let conditioned: Vec<Posterior> = posteriors
        .iter()
        .map(|post| condition_on_states(post, &kept))
        .collect();

    for post in &conditioned {
        post.debug_check();
    }
    Ok(ShrinkOutcome { posteriors: conditioned, kept, pruned })
}

/// Restrict a posterior chain to a subset of states.
///
/// The chain defined by the input marginals (step kernels
/// `xi[t][j][l] / gamma[t][j]`) is conditioned on every position lying in
/// `kept`, via a scaled forward-backward pass over those kernels. The
/// per-position conditioning constants are folded into `log_zeta`, so the
/// sum remains the log normalizer of the restricted weighted joint.
///
/// A pruned state can carry the entire mass of a position (an
/// initial-distribution lock-in does this on single-sequence data). The
/// conditional there is undefined, so the chain is spliced: the position
/// restarts with a uniform forward vector and the broken junction gets the
/// outer product of its neighbor marginals. All posterior invariants still
/// hold exactly.
fn condition_on_states(post: &Posterior, kept: &[usize]) -> Posterior {
    let k_new = kept.len();
    let t_len = post.len();

    // Forward pass; `spliced[t]` marks positions where the kept states had
    // no mass and a fresh uniform segment starts.
    let mut fwd = vec![0.0; t_len * k_new];
    let mut scale = vec![1.0; t_len];
    let mut spliced = vec![false; t_len];
    for (a, &s) in kept.iter().enumerate() {
        fwd[a] = post.gamma_at(0, s);
    }
    for t in 0..t_len {
        if t > 0 && !spliced[t] {
            let (prev, cur) = fwd.split_at_mut(t * k_new);
            let prev = &prev[(t - 1) * k_new..];
            let cur = &mut cur[..k_new];
            cur.fill(0.0);
            for (b, &j) in kept.iter().enumerate() {
                let g = post.gamma_at(t - 1, j);
                if prev[b] == 0.0 || g == 0.0 {
                    continue;
                }
                let w = prev[b] / g;
                for (a, &l) in kept.iter().enumerate() {
                    cur[a] += w * post.xi_at(t - 1, j, l);
                }
            }
        }
        let row = &mut fwd[t * k_new..(t + 1) * k_new];
        let z: f64 = row.iter().sum();
        if z > 0.0 && z.is_finite() {
            for x in row.iter_mut() {
                *x /= z;
            }
            scale[t] = z;
        } else {
            row.fill(1.0 / k_new as f64);
            scale[t] = 1.0;
            spliced[t] = true;
        }
    }

    // Backward pass restarting at splice points (segment boundaries).
    let mut bwd = vec![0.0; t_len * k_new];
    for a in 0..k_new {
        bwd[(t_len - 1) * k_new + a] = 1.0;
    }
    for t in (0..t_len - 1).rev() {
        if spliced[t + 1] {
            for a in 0..k_new {
                bwd[t * k_new + a] = 1.0;
            }
            continue;
        }
        for (b, &j) in kept.iter().enumerate() {
            let g = post.gamma_at(t, j);
            if g == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for (a, &l) in kept.iter().enumerate() {
                acc += post.xi_at(t, j, l) * bwd[(t + 1) * k_new + a];
            }
            bwd[t * k_new + b] = acc / (g * scale[t + 1]);
        }
    }

    let mut gamma = vec![0.0; t_len * k_new];
    for t in 0..t_len {
        for a in 0..k_new {
            gamma[t * k_new + a] = fwd[t * k_new + a] * bwd[t * k_new + a];
        }
    }
    let mut xi = vec![0.0; (t_len - 1) * k_new * k_new];
    for t in 0..t_len - 1 {
        let block = &mut xi[t * k_new * k_new..(t + 1) * k_new * k_new];
        if spliced[t + 1] {
            for b in 0..k_new {
                for a in 0..k_new {
                    block[b * k_new + a] = gamma[t * k_new + b] * gamma[(t + 1) * k_new + a];
                }
            }
            continue;
        }
        for (b, &j) in kept.iter().enumerate() {
            let g = post.gamma_at(t, j);
            let f = fwd[t * k_new + b];
            if f == 0.0 || g == 0.0 {
                continue;
            }
            for (a, &l) in kept.iter().enumerate() {
                block[b * k_new + a] =
                    f / g * post.xi_at(t, j, l) * bwd[(t + 1) * k_new + a] / scale[t + 1];
            }
        }
    }

    let log_zeta = post
        .log_zeta
        .iter()
        .zip(&scale)
        .map(|(&lz, &z)| lz + z.ln())
        .collect();

    Posterior { n_states: k_new, gamma, xi, log_zeta }
}

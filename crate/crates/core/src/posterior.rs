//! Posterior marginals of the hidden state chain for one sequence.

use crate::error::{Error, Result};

/// Tolerance used by the posterior self-checks.
pub const POSTERIOR_TOL: f64 = 1e-10;

/// Per-state emission weights applied during inference, indexed by position
/// class: one weight per state for non-final positions and one per state
/// for the final position of a sequence. A length-1 sequence has only a
/// final position.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub interior: Vec<f64>,
    pub terminal: Vec<f64>,
}

impl Multipliers {
    /// The weight for state `k` at position `t` of a length-`t_len` sequence.
    #[inline]
    pub fn at(&self, t: usize, t_len: usize, k: usize) -> f64 {
        if t + 1 == t_len {
            self.terminal[k]
        } else {
            self.interior[k]
        }
    }

    pub fn validate(&self, n_states: usize) -> Result<()> {
        if self.interior.len() != n_states || self.terminal.len() != n_states {
            return Err(Error::InvalidConfig(format!(
                "multiplier vectors must have one entry per state ({n_states})"
            )));
        }
        for &w in self.interior.iter().chain(self.terminal.iter()) {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "multipliers must lie in (0, 1], got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// Marginal posteriors for one sequence of length `T` over `n_states`
/// states: `gamma` holds the per-position state marginals (`T x K`,
/// row-major), `xi` the pairwise marginals of adjacent positions
/// (`(T-1) x K x K`; entry `(t, j, l)` is the mass on state `j` at `t`
/// followed by state `l` at `t+1`), and `log_zeta` the per-position log
/// normalizers whose sum is the log normalizer of the (weighted) joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub n_states: usize,
    pub gamma: Vec<f64>,
    pub xi: Vec<f64>,
    pub log_zeta: Vec<f64>,
}

impl Posterior {
    /// Sequence length.
    pub fn len(&self) -> usize {
        self.log_zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_zeta.is_empty()
    }

    #[inline]
    pub fn gamma_at(&self, t: usize, k: usize) -> f64 {
        self.gamma[t * self.n_states + k]
    }

    /// Pair marginal for positions `(t, t+1)`, states `(j, l)`.
    #[inline]
    pub fn xi_at(&self, t: usize, j: usize, l: usize) -> f64 {
        let k = self.n_states;
        self.xi[t * k * k + j * k + l]
    }

    /// Sum of the per-position log normalizers.
    pub fn log_norm(&self) -> f64 {
        self.log_zeta.iter().sum()
    }

    /// Verify normalization and marginal consistency within `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let k = self.n_states;
        let t_len = self.len();
        if self.gamma.len() != t_len * k || self.xi.len() != t_len.saturating_sub(1) * k * k {
            return Err(Error::InvalidData("posterior buffer sizes are inconsistent".into()));
        }
        for t in 0..t_len {
            let row = &self.gamma[t * k..(t + 1) * k];
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidData(format!(
                    "gamma at position {t} sums to {s}"
                )));
            }
            if row.iter().any(|&x| x < -tol) {
                return Err(Error::InvalidData(format!("negative gamma at position {t}")));
            }
        }
        for t in 0..t_len.saturating_sub(1) {
            let block = &self.xi[t * k * k..(t + 1) * k * k];
            let s: f64 = block.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidData(format!(
                    "xi at transition {t} sums to {s}"
                )));
            }
            // Row sums reproduce gamma[t], column sums gamma[t+1].
            for j in 0..k {
                let row_sum: f64 = block[j * k..(j + 1) * k].iter().sum();
                if (row_sum - self.gamma_at(t, j)).abs() > tol {
                    return Err(Error::InvalidData(format!(
                        "xi row {j} at transition {t} disagrees with gamma by {}",
                        (row_sum - self.gamma_at(t, j)).abs()
                    )));
                }
            }
            for l in 0..k {
                let col_sum: f64 = (0..k).map(|j| block[j * k + l]).sum();
                if (col_sum - self.gamma_at(t + 1, l)).abs() > tol {
                    return Err(Error::InvalidData(format!(
                        "xi column {l} at transition {t} disagrees with gamma by {}",
                        (col_sum - self.gamma_at(t + 1, l)).abs()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Invariant check wired to debug builds; a no-op in release builds.
    #[inline]
    pub fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if let Err(e) = self.check_invariants(POSTERIOR_TOL) {
            panic!("posterior invariant violated: {e}");
        }
    }
}

/// Whether the posterior self-checks run on every inference pass in this
/// build.
pub fn invariant_checks_enabled() -> bool {
    cfg!(debug_assertions)
}

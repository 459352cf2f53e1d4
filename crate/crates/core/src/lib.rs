//! Hidden Markov model training with automatic selection of the number of
//! hidden states.
//!
//! The trainer maximizes a penalized variational lower bound on the model
//! evidence: per-state complexity penalties enter the forward-backward
//! recursion as exponentiated emission multipliers, which drives
//! under-supported states toward zero occupancy so they can be pruned
//! during fitting. A maximum-likelihood / BIC sweep is included as the
//! comparison baseline, together with synthetic and text data pipelines
//! and an experiment runner that writes CSV/JSON reports.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod fab;
pub mod forward_backward;
pub mod io;
pub mod math;
pub mod model;
pub mod oracle;
pub mod posterior;
pub mod sequence;

pub use error::{Error, Result};
pub use model::{EmissionKind, EmissionModel, HmmParams, ModelDims, Obs};
pub use posterior::{Multipliers, Posterior};
pub use sequence::{Observations, SequenceSet};

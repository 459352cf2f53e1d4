//! Training with automatic state-count selection.
//!
//! Each iteration alternates a weighted posterior update (V-step) with a
//! penalized parameter update (M-step). The weights — one per state and
//! position class — are exponentiated complexity penalties normalized over
//! states; small or complex states receive smaller weights, lose posterior
//! mass through the recursions, and are pruned once their expected
//! occupancy falls below a threshold. The objective is a lower bound on
//! the penalized evidence approximation and is non-decreasing across
//! iterations at a fixed state count.

mod delta;
mod fit;
mod shrink;
mod steps;

pub use delta::{compute_delta, fic_lower_bound, DeltaRegularizer, OccupancyStats};
pub use fit::{fit, FitConfig, FitReport, InitScheme, PruneEvent, TracePoint};
pub use shrink::{shrink, ShrinkOutcome};
pub use steps::{init_posteriors, m_step, v_step};

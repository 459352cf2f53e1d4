//! Shared fixtures for the benchmark targets.

use fabhmm::data::{generate, GroundTruthSpec};
use fabhmm::model::EmissionKind;
use fabhmm::sequence::SequenceSet;

/// Ground-truth training data of the given kind and length, fixed seed.
pub fn bench_data(kind: EmissionKind, t_len: usize) -> SequenceSet {
    generate(&GroundTruthSpec::for_kind(kind), t_len, 42)
}

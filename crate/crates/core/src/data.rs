//! Synthetic ground-truth generators and text ingestion.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::derive_seed;
use crate::model::{EmissionKind, EmissionModel, HmmParams};
use crate::sequence::{Observations, SequenceSet};

/// Seed stream tags for the train/test draws of one dataset.
const TRAIN_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;

/// The fixed four-state generators used by the synthetic studies.
#[derive(Debug, Clone)]
pub struct GroundTruthSpec {
    pub params: HmmParams,
}

impl GroundTruthSpec {
    /// Four Gaussian states with means (-4, -1, 2, 3), common variance 0.5,
    /// the 0/1-patterned transition matrix normalized to rows of 1/2, and
    /// the chain started deterministically in the first state.
    pub fn gaussian() -> Self {
        let means = [-4.0, -1.0, 2.0, 3.0];
        let beta = vec![
            0.0, 0.5, 0.5, 0.0, //
            0.0, 0.0, 0.5, 0.5, //
            0.5, 0.0, 0.0, 0.5, //
            0.5, 0.5, 0.0, 0.0,
        ];
        let emissions = means
            .iter()
            .map(|&m| EmissionModel::Gaussian1d { mean: m, variance: 0.5 })
            .collect();
        let params = HmmParams::new(vec![1.0, 0.0, 0.0, 0.0], beta, emissions)
            .expect("fixed generator is valid");
        GroundTruthSpec { params }
    }

    /// Four categorical states over an 8-symbol alphabet. Each state emits
    /// three consecutive symbols (cyclically wrapped) with mass 1/3, state
    /// `k` starting at symbol `2k` — one consistent reading of the usual
    /// banded emission table. The transition matrix and start state match
    /// the Gaussian generator; swap in another table via [`Self::custom`].
    pub fn categorical() -> Self {
        let third = 1.0 / 3.0;
        let v = 8;
        let emissions = (0..4)
            .map(|k| {
                let mut p = vec![0.0; v];
                for offset in 0..3 {
                    p[(2 * k + offset) % v] = third;
                }
                EmissionModel::Categorical(p)
            })
            .collect();
        let beta = vec![
            0.0, 0.5, 0.5, 0.0, //
            0.0, 0.0, 0.5, 0.5, //
            0.5, 0.0, 0.0, 0.5, //
            0.5, 0.5, 0.0, 0.0,
        ];
        let params = HmmParams::new(vec![1.0, 0.0, 0.0, 0.0], beta, emissions)
            .expect("fixed generator is valid");
        GroundTruthSpec { params }
    }

    pub fn for_kind(kind: EmissionKind) -> Self {
        match kind {
            EmissionKind::Gaussian1d => Self::gaussian(),
            EmissionKind::Categorical => Self::categorical(),
        }
    }

    /// Use an arbitrary generator, e.g. an alternative reading of the
    /// categorical emission table.
    pub fn custom(params: HmmParams) -> Self {
        GroundTruthSpec { params }
    }
}

fn symbol_alphabet(v: usize) -> Vec<String> {
    (0..v).map(|s| s.to_string()).collect()
}

fn single_sequence_set(spec: &GroundTruthSpec, t_len: usize, rng: &mut ChaCha8Rng) -> SequenceSet {
    let (obs, _) = spec.params.sample(t_len, rng);
    let alphabet = spec.params.n_symbols().map(symbol_alphabet);
    SequenceSet::new(spec.params.kind(), vec![obs], alphabet).expect("generated data is valid")
}

/// Draw one training sequence of length `t_len`.
pub fn generate(spec: &GroundTruthSpec, t_len: usize, seed: u64) -> SequenceSet {
    assert!(t_len >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TRAIN_STREAM));
    single_sequence_set(spec, t_len, &mut rng)
}

/// Draw an independent train/test pair. The training sequence is the same
/// one [`generate`] draws for `seed`.
pub fn generate_split(
    spec: &GroundTruthSpec,
    t_train: usize,
    t_test: usize,
    seed: u64,
) -> (SequenceSet, SequenceSet) {
    let train = generate(spec, t_train, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TEST_STREAM));
    let test = single_sequence_set(spec, t_test, &mut rng);
    (train, test)
}

/// Result of slicing a character stream into train/test sets.
#[derive(Debug, Clone)]
pub struct TextIngest {
    pub train: SequenceSet,
    /// Absent when no test characters were requested or none survived
    /// filtering.
    pub test: Option<SequenceSet>,
    /// Test characters dropped because they never occur in the training
    /// slice.
    pub dropped_from_test: usize,
}

/// Slice the first `train_chars` characters as training data and the next
/// `test_chars` as test data. The alphabet is built from the training
/// slice only (sorted distinct scalar values, no normalization); test
/// characters outside it are dropped and counted.
pub fn ingest_text(raw: &str, train_chars: usize, test_chars: usize) -> Result<TextIngest> {
    if train_chars == 0 {
        return Err(Error::InvalidData("training slice is empty".into()));
    }
    let chars: Vec<char> = raw.chars().collect();
    if chars.len() < train_chars {
        return Err(Error::InvalidData(format!(
            "stream has {} characters but {} were requested for training",
            chars.len(),
            train_chars
        )));
    }
    let train_slice = &chars[..train_chars];
    let test_end = (train_chars + test_chars).min(chars.len());
    let test_slice = &chars[train_chars..test_end];

    let mut distinct: Vec<char> = train_slice.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let index: HashMap<char, usize> = distinct.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let alphabet: Vec<String> = distinct.iter().map(|c| c.to_string()).collect();

    let train_ids: Vec<usize> = train_slice.iter().map(|c| index[c]).collect();
    let mut dropped = 0usize;
    let test_ids: Vec<usize> = test_slice
        .iter()
        .filter_map(|c| {
            let id = index.get(c).copied();
            if id.is_none() {
                dropped += 1;
            }
            id
        })
        .collect();

    let train = SequenceSet::new(
        EmissionKind::Categorical,
        vec![Observations::Symbols(train_ids)],
        Some(alphabet.clone()),
    )?;
    let test = if test_ids.is_empty() {
        None
    } else {
        Some(SequenceSet::new(
            EmissionKind::Categorical,
            vec![Observations::Symbols(test_ids)],
            Some(alphabet),
        )?)
    };
    Ok(TextIngest { train, test, dropped_from_test: dropped })
}

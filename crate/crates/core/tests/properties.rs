//! Property tests: posterior invariants on arbitrary valid inputs, weight
//! scaling behavior, regularizer structure, and file round-trips.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fabhmm::fab::{compute_delta, OccupancyStats};
use fabhmm::forward_backward::{forward_backward, loglik};
use fabhmm::io::{load_dataset, load_model, save_dataset, save_model};
use fabhmm::math::sample_simplex;
use fabhmm::model::{EmissionKind, EmissionModel, HmmParams, ModelDims};
use fabhmm::posterior::Multipliers;
use fabhmm::sequence::{Observations, SequenceSet};

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    sample_simplex(rng, &mut v);
    v
}

/// Instance described by a seed so proptest shrinks over a small space.
fn build_instance(seed: u64, k: usize, t_len: usize, categorical: bool) -> (HmmParams, Observations) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = simplex(&mut rng, k);
    let mut beta = Vec::new();
    for _ in 0..k {
        beta.extend(simplex(&mut rng, k));
    }
    use rand::Rng;
    let (emissions, seq) = if categorical {
        let v = 4;
        let em = (0..k).map(|_| EmissionModel::Categorical(simplex(&mut rng, v))).collect();
        let seq = Observations::Symbols((0..t_len).map(|_| rng.random_range(0..v)).collect());
        (em, seq)
    } else {
        let em = (0..k)
            .map(|_| EmissionModel::Gaussian1d {
                mean: rng.random::<f64>() * 6.0 - 3.0,
                variance: 0.1 + rng.random::<f64>() * 2.0,
            })
            .collect();
        let seq = Observations::Reals((0..t_len).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect());
        (em, seq)
    };
    (HmmParams::new(alpha, beta, emissions).unwrap(), seq)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_invariants_hold_everywhere(
        seed in 0u64..u64::MAX,
        k in 1usize..5,
        t_len in 1usize..40,
        categorical in any::<bool>(),
        weighted in any::<bool>(),
    ) {
        let (params, seq) = build_instance(seed, k, t_len, categorical);
        let m = weighted.then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
            Multipliers {
                interior: (0..k).map(|i| 0.02 + 0.98 * ((seed >> i) % 97) as f64 / 97.0).collect::<Vec<_>>(),
                terminal: {
                    let mut v = vec![0.0; k];
                    sample_simplex(&mut rng, &mut v);
                    v
                },
            }
        });
        let post = forward_backward(&params, &seq, m.as_ref()).unwrap();
        post.check_invariants(1e-10).unwrap();
    }

    #[test]
    fn class_scaling_shifts_only_the_normalizer(
        seed in 0u64..u64::MAX,
        k in 1usize..4,
        t_len in 2usize..30,
        scale_num in 1u32..200,
    ) {
        let (params, seq) = build_instance(seed, k, t_len, true);
        let c = scale_num as f64 / 200.0; // in (0, 1]
        let base = Multipliers { interior: vec![0.5; k], terminal: vec![0.5; k] };
        let scaled = Multipliers {
            interior: base.interior.iter().map(|w| w * c).collect(),
            terminal: base.terminal.clone(),
        };
        let a = forward_backward(&params, &seq, Some(&base)).unwrap();
        let b = forward_backward(&params, &seq, Some(&scaled)).unwrap();
        for (x, y) in a.gamma.iter().zip(b.gamma.iter()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in a.xi.iter().zip(b.xi.iter()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let interior_positions = (t_len - 1) as f64;
        let expected_shift = interior_positions * c.ln();
        prop_assert!((b.log_norm() - a.log_norm() - expected_shift).abs() < 1e-8);
    }

    #[test]
    fn model_files_round_trip(seed in 0u64..u64::MAX, k in 1usize..5, categorical in any::<bool>()) {
        let (params, _) = build_instance(seed, k, 1, categorical);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&params, &path).unwrap();
        prop_assert_eq!(load_model(&path).unwrap(), params);
    }

    #[test]
    fn dataset_files_round_trip(seed in 0u64..u64::MAX, t_len in 1usize..50, categorical in any::<bool>()) {
        let (params, seq) = build_instance(seed, 2, t_len, categorical);
        let set = SequenceSet::new(params.kind(), vec![seq], None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        save_dataset(&set, &path).unwrap();
        prop_assert_eq!(load_dataset(&path).unwrap(), set);
    }

    #[test]
    fn delta_is_normalized_and_monotone_in_occupancy(
        occ in prop::collection::vec(0.5f64..500.0, 2..6),
        d_beta in 0usize..4,
        d_phi in 1usize..4,
    ) {
        let k = occ.len();
        let stats = OccupancyStats {
            interior: occ.iter().map(|c| c * 0.9).collect(),
            total: occ.clone(),
            interior_positions: 10,
            total_positions: 11,
            n_sequences: 1,
        };
        let dims = ModelDims { alpha: k - 1, beta: vec![d_beta; k], phi: vec![d_phi; k] };
        let delta = compute_delta(&stats, &dims).unwrap();
        let si: f64 = delta.interior.iter().sum();
        let st: f64 = delta.terminal.iter().sum();
        prop_assert!((si - 1.0).abs() < 1e-12);
        prop_assert!((st - 1.0).abs() < 1e-12);
        prop_assert!(delta.interior.iter().chain(delta.terminal.iter()).all(|&w| w > 0.0 && w <= 1.0));
        // Equal dims: a strictly larger state never gets a smaller weight.
        for a in 0..k {
            for b in 0..k {
                if occ[a] > occ[b] {
                    prop_assert!(delta.interior[a] >= delta.interior[b]);
                    prop_assert!(delta.terminal[a] >= delta.terminal[b]);
                }
            }
        }
    }
}

#[test]
fn loglik_is_monotone_in_emission_mass_of_observed_symbol() {
    // Single state: raising the observed symbol's mass raises the score.
    let mut last = f64::NEG_INFINITY;
    for p0 in [0.3, 0.5, 0.7] {
        let params = HmmParams::new(
            vec![1.0],
            vec![1.0],
            vec![EmissionModel::Categorical(vec![p0, 1.0 - p0])],
        )
        .unwrap();
        let ll = loglik(&params, &Observations::Symbols(vec![0, 0, 0, 0])).unwrap();
        assert!(ll > last);
        last = ll;
    }

    // Two states: raise one state's mass on the observed symbol, keep
    // everything else fixed; the total-likelihood mixture can only grow.
    let mut last = f64::NEG_INFINITY;
    for p in [0.2, 0.4, 0.6, 0.8] {
        let params = HmmParams::new(
            vec![0.5, 0.5],
            vec![0.6, 0.4, 0.3, 0.7],
            vec![
                EmissionModel::Categorical(vec![p, 1.0 - p]),
                EmissionModel::Categorical(vec![0.5, 0.5]),
            ],
        )
        .unwrap();
        let ll = loglik(&params, &Observations::Symbols(vec![0, 0, 0])).unwrap();
        assert!(ll > last);
        last = ll;
    }
}

//! Forward-backward against the exhaustive path-enumeration reference:
//! every marginal, pair marginal, and per-position normalizer must agree
//! elementwise for small instances, with and without emission weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fabhmm::forward_backward::{forward_backward, loglik};
use fabhmm::math::sample_simplex;
use fabhmm::model::{EmissionKind, EmissionModel, HmmParams};
use fabhmm::oracle::brute_force_posterior;
use fabhmm::posterior::Multipliers;
use fabhmm::sequence::Observations;

const TOL: f64 = 1e-9;

fn random_params(rng: &mut ChaCha8Rng, k: usize, kind: EmissionKind) -> HmmParams {
    let mut alpha = vec![0.0; k];
    sample_simplex(rng, &mut alpha);
    let mut beta = vec![0.0; k * k];
    for j in 0..k {
        sample_simplex(rng, &mut beta[j * k..(j + 1) * k]);
    }
    let emissions = (0..k)
        .map(|_| match kind {
            EmissionKind::Categorical => {
                let v = 3;
                let mut p = vec![0.0; v];
                sample_simplex(rng, &mut p);
                EmissionModel::Categorical(p)
            }
            EmissionKind::Gaussian1d => EmissionModel::Gaussian1d {
                mean: rng.random::<f64>() * 4.0 - 2.0,
                variance: 0.2 + rng.random::<f64>(),
            },
        })
        .collect();
    HmmParams::new(alpha, beta, emissions).unwrap()
}

fn random_sequence(rng: &mut ChaCha8Rng, t_len: usize, kind: EmissionKind) -> Observations {
    match kind {
        EmissionKind::Categorical => {
            Observations::Symbols((0..t_len).map(|_| rng.random_range(0..3)).collect())
        }
        EmissionKind::Gaussian1d => {
            Observations::Reals((0..t_len).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect())
        }
    }
}

fn random_multipliers(rng: &mut ChaCha8Rng, k: usize) -> Multipliers {
    let draw = |rng: &mut ChaCha8Rng| (0..k).map(|_| 0.05 + 0.95 * rng.random::<f64>()).collect();
    Multipliers { interior: draw(rng), terminal: draw(rng) }
}

fn assert_close(label: &str, a: &[f64], b: &[f64], k: usize, t: usize, seed: u64) {
    for (i, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        assert!(
            (x - y).abs() <= TOL,
            "{label}[{i}] differs by {} (K={k}, T={t}, seed={seed})",
            (x - y).abs()
        );
    }
}

fn run_sweep(kind: EmissionKind, with_multipliers: bool, instances: usize) {
    for k in 1..=3usize {
        for t_len in 1..=8usize {
            let mut rng = ChaCha8Rng::seed_from_u64(
                1_000_000 * k as u64 + 1_000 * t_len as u64 + u64::from(with_multipliers),
            );
            for instance in 0..instances {
                let params = random_params(&mut rng, k, kind);
                let seq = random_sequence(&mut rng, t_len, kind);
                let m = with_multipliers.then(|| random_multipliers(&mut rng, k));
                let fast = forward_backward(&params, &seq, m.as_ref()).unwrap();
                let exact = brute_force_posterior(&params, &seq, m.as_ref()).unwrap();
                let seed = instance as u64;
                assert_close("gamma", &fast.gamma, &exact.gamma, k, t_len, seed);
                assert_close("xi", &fast.xi, &exact.xi, k, t_len, seed);
                assert_close("log_zeta", &fast.log_zeta, &exact.log_zeta, k, t_len, seed);
                if !with_multipliers {
                    let ll = loglik(&params, &seq).unwrap();
                    assert!((ll - exact.log_norm()).abs() <= TOL);
                }
            }
        }
    }
}

#[test]
fn categorical_unweighted_matches_enumeration() {
    run_sweep(EmissionKind::Categorical, false, 50);
}

#[test]
fn categorical_weighted_matches_enumeration() {
    run_sweep(EmissionKind::Categorical, true, 50);
}

#[test]
fn gaussian_unweighted_matches_enumeration() {
    run_sweep(EmissionKind::Gaussian1d, false, 50);
}

#[test]
fn gaussian_weighted_matches_enumeration() {
    run_sweep(EmissionKind::Gaussian1d, true, 50);
}

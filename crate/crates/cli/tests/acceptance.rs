//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers (run with `--nocapture` to see them).
//!
//! The heavy shared computation (ten train/test trials at T=2000 with both
//! trainers) runs once and feeds criteria 4, 6, and 8.

use std::process::Command;
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fabhmm::baselines::sweep_bic;
use fabhmm::data::{generate, generate_split, GroundTruthSpec};
use fabhmm::eval::predictive_loglik;
use fabhmm::fab::{self, FitConfig};
use fabhmm::forward_backward::{forward_backward, loglik};
use fabhmm::math::sample_simplex;
use fabhmm::model::{EmissionKind, EmissionModel, HmmParams};
use fabhmm::oracle::brute_force_posterior;
use fabhmm::posterior::Multipliers;
use fabhmm::sequence::Observations;

// ── criterion 1: oracle equivalence ─────────────────────────────────────

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
                let mut p = vec![0.0; 3];
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

#[test]
fn criterion_01_oracle_equivalence() {
    const TOL: f64 = 1e-9;
    let mut checked = 0usize;
    for &kind in &[EmissionKind::Categorical, EmissionKind::Gaussian1d] {
        for k in 1..=3usize {
            for t_len in 1..=8usize {
                for weighted in [false, true] {
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        7_000_000 + 100_000 * k as u64 + 1_000 * t_len as u64 + u64::from(weighted),
                    );
                    for _ in 0..25 {
                        let params = random_params(&mut rng, k, kind);
                        let seq = random_sequence(&mut rng, t_len, kind);
                        let m = weighted.then(|| Multipliers {
                            interior: (0..k).map(|_| 0.05 + 0.95 * rng.random::<f64>()).collect(),
                            terminal: (0..k).map(|_| 0.05 + 0.95 * rng.random::<f64>()).collect(),
                        });
                        let fast = forward_backward(&params, &seq, m.as_ref()).unwrap();
                        let exact = brute_force_posterior(&params, &seq, m.as_ref()).unwrap();
                        for (a, b) in fast
                            .gamma
                            .iter()
                            .chain(fast.xi.iter())
                            .chain(fast.log_zeta.iter())
                            .zip(exact.gamma.iter().chain(exact.xi.iter()).chain(exact.log_zeta.iter()))
                        {
                            assert!(
                                (a - b).abs() <= TOL,
                                "criterion 1 FAIL: {} vs {} (K={k}, T={t_len})",
                                a,
                                b
                            );
                        }
                        if !weighted {
                            let ll = loglik(&params, &seq).unwrap();
                            assert!((ll - exact.log_norm()).abs() <= TOL, "criterion 1 FAIL: loglik");
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    println!("criterion 1 (oracle equivalence): PASS — {checked} instances within 1e-9");
}

// ── criterion 2: objective monotonicity ─────────────────────────────────

#[test]
fn criterion_02_monotone_objective() {
    let mut runs = 0usize;
    let mut comparisons = 0usize;
    for &kind in &[EmissionKind::Gaussian1d, EmissionKind::Categorical] {
        let spec = GroundTruthSpec::for_kind(kind);
        for trial in 0..50u64 {
            let data = generate(&spec, 500, 20_000 + trial);
            let config = FitConfig { k_max: 10, restarts: 1, seed: trial, ..FitConfig::default() };
            let report = fab::fit(&data, &config).unwrap();
            let prune_iters: Vec<usize> =
                report.prune_events.iter().map(|e| e.iteration).collect();
            for pair in report.fic_lb_trace.windows(2) {
                if pair[0].n_states == pair[1].n_states
                    && !prune_iters.contains(&pair[0].iteration)
                {
                    assert!(
                        pair[1].fic_lb >= pair[0].fic_lb - 1e-9 * pair[0].fic_lb.abs(),
                        "criterion 2 FAIL: {} -> {} at iteration {} ({kind:?}, trial {trial})",
                        pair[0].fic_lb,
                        pair[1].fic_lb,
                        pair[1].iteration
                    );
                    comparisons += 1;
                }
            }
            runs += 1;
        }
    }
    assert_eq!(runs, 100);
    println!(
        "criterion 2 (objective monotone over {runs} runs): PASS — {comparisons} same-K steps within relative 1e-9"
    );
}

// ── criterion 3: neutralized reduction to Baum-Welch ────────────────────

#[test]
fn criterion_03_em_reduction() {
    let mut max_diff = 0.0f64;
    for instance in 0..20u64 {
        let kind = if instance % 2 == 0 { EmissionKind::Gaussian1d } else { EmissionKind::Categorical };
        let data = generate(&GroundTruthSpec::for_kind(kind), 80, 31_000 + instance);
        let k = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(instance);
        let init = fab::init_posteriors(&data, k, &mut rng);
        let (params, _) = fab::m_step(&init, &data).unwrap();

        let uniform = fab::DeltaRegularizer {
            interior: vec![1.0 / k as f64; k],
            terminal: vec![1.0 / k as f64; k],
            log_norm_interior: (k as f64).ln(),
            log_norm_terminal: (k as f64).ln(),
        };
        let (fab_posts, _) = fab::v_step(&params, &data, &uniform).unwrap();
        let (fab_params, _) = fab::m_step(&fab_posts, &data).unwrap();
        let (bw_posts, _, bw_params) = fabhmm::baselines::em_iteration(&params, &data).unwrap();

        let mut diff = 0.0f64;
        for (a, b) in fab_posts.iter().zip(&bw_posts) {
            for (x, y) in a.gamma.iter().chain(a.xi.iter()).zip(b.gamma.iter().chain(b.xi.iter())) {
                diff = diff.max((x - y).abs());
            }
        }
        for (x, y) in fab_params.alpha.iter().zip(&bw_params.alpha) {
            diff = diff.max((x - y).abs());
        }
        for (x, y) in fab_params.beta.iter().zip(&bw_params.beta) {
            diff = diff.max((x - y).abs());
        }
        for (ea, eb) in fab_params.emissions.iter().zip(&bw_params.emissions) {
            match (ea, eb) {
                (EmissionModel::Categorical(p), EmissionModel::Categorical(q)) => {
                    for (x, y) in p.iter().zip(q) {
                        diff = diff.max((x - y).abs());
                    }
                }
                (
                    EmissionModel::Gaussian1d { mean: m1, variance: v1 },
                    EmissionModel::Gaussian1d { mean: m2, variance: v2 },
                ) => {
                    diff = diff.max((m1 - m2).abs()).max((v1 - v2).abs());
                }
                _ => panic!("criterion 3 FAIL: emission kinds diverged"),
            }
        }
        assert!(diff <= 1e-10, "criterion 3 FAIL: max deviation {diff} on instance {instance}");
        max_diff = max_diff.max(diff);
    }
    println!("criterion 3 (neutralized iteration = Baum-Welch): PASS — max deviation {max_diff:.3e} over 20 instances");
}

// ── shared ten-trial block for criteria 4, 6, 8 ─────────────────────────

struct GaussianTrials {
    fab_k: Vec<usize>,
    fab_pll: Vec<f64>,
    bic_k: Vec<usize>,
    best_em_pll: Vec<f64>,
}

static GAUSSIAN_T2000: LazyLock<GaussianTrials> = LazyLock::new(|| {
    let spec = GroundTruthSpec::gaussian();
    let mut out = GaussianTrials {
        fab_k: Vec::new(),
        fab_pll: Vec::new(),
        bic_k: Vec::new(),
        best_em_pll: Vec::new(),
    };
    for trial in 0..10u64 {
        let (train, test) = generate_split(&spec, 2000, 5000, 1000 + trial);
        let config = FitConfig { k_max: 10, seed: 77 + trial, ..FitConfig::default() };

        let fab_fit = fab::fit(&train, &config).unwrap();
        out.fab_k.push(fab_fit.selected_k);
        out.fab_pll.push(predictive_loglik(&fab_fit.params, &test).unwrap());

        let sweep = sweep_bic(&train, 10, &config).unwrap();
        out.bic_k.push(sweep.selected_k);
        let pll_bic = predictive_loglik(&sweep.selected().params, &test).unwrap();
        let pll_true_k = predictive_loglik(&sweep.fits[3].params, &test).unwrap();
        out.best_em_pll.push(pll_bic.max(pll_true_k));
    }
    out
});

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mean_usize(xs: &[usize]) -> f64 {
    xs.iter().map(|&k| k as f64).sum::<f64>() / xs.len() as f64
}

#[test]
fn criterion_04_gaussian_state_count_recovery() {
    let trials = &*GAUSSIAN_T2000;
    let mean_2000 = mean_usize(&trials.fab_k);
    assert!(
        (3.5..=4.5).contains(&mean_2000),
        "criterion 4 FAIL: mean selected K at T=2000 is {mean_2000} ({:?})",
        trials.fab_k
    );

    let spec = GroundTruthSpec::gaussian();
    let mut ks_500 = Vec::new();
    for trial in 0..10u64 {
        let train = generate(&spec, 500, 1000 + trial);
        let config = FitConfig { k_max: 10, seed: 77 + trial, ..FitConfig::default() };
        ks_500.push(fab::fit(&train, &config).unwrap().selected_k);
    }
    let mean_500 = mean_usize(&ks_500);
    assert!(
        (3.3..=4.7).contains(&mean_500),
        "criterion 4 FAIL: mean selected K at T=500 is {mean_500} ({ks_500:?})"
    );
    println!(
        "criterion 4 (gaussian state-count recovery): PASS — mean K = {mean_2000} at T=2000, {mean_500} at T=500"
    );
}

#[test]
fn criterion_05_categorical_state_count_recovery() {
    let spec = GroundTruthSpec::categorical();
    let mut ks = Vec::new();
    for trial in 0..10u64 {
        let train = generate(&spec, 2000, 1000 + trial);
        let config = FitConfig { k_max: 10, seed: 77 + trial, ..FitConfig::default() };
        ks.push(fab::fit(&train, &config).unwrap().selected_k);
    }
    let m = mean_usize(&ks);
    assert!(
        (3.3..=5.0).contains(&m),
        "criterion 5 FAIL: mean selected K at T=2000 is {m} ({ks:?})"
    );
    println!("criterion 5 (categorical state-count recovery): PASS — mean K = {m} at T=2000");
}

#[test]
fn criterion_06_bic_does_not_undershoot_fab() {
    let trials = &*GAUSSIAN_T2000;
    let bic = mean_usize(&trials.bic_k);
    let fab_mean = mean_usize(&trials.fab_k);
    assert!(
        bic >= fab_mean,
        "criterion 6 FAIL: mean BIC-selected K {bic} < mean FAB-selected K {fab_mean}"
    );
    println!("criterion 6 (BIC vs FAB state count): PASS — BIC mean {bic}, FAB mean {fab_mean}");
}

#[test]
fn criterion_07_one_state_shrinkage() {
    let spec = GroundTruthSpec::custom(
        HmmParams::new(
            vec![1.0],
            vec![1.0],
            vec![EmissionModel::Gaussian1d { mean: 0.0, variance: 1.0 }],
        )
        .unwrap(),
    );
    let mut selected = Vec::new();
    for seed in 300..310u64 {
        let data = generate(&spec, 250, seed);
        let config = FitConfig {
            k_max: 5,
            restarts: 10,
            tol: 1e-6,
            max_iter: 5000,
            seed,
            ..FitConfig::default()
        };
        selected.push(fab::fit(&data, &config).unwrap().selected_k);
    }
    let ones = selected.iter().filter(|&&k| k == 1).count();
    assert!(
        ones >= 9,
        "criterion 7 FAIL: K=1 selected in {ones}/10 seeds ({selected:?})"
    );
    println!("criterion 7 (one-state shrinkage): PASS — K=1 in {ones}/10 seeds");
}

#[test]
fn criterion_08_pll_competitiveness() {
    let trials = &*GAUSSIAN_T2000;
    let fab_mean = mean(&trials.fab_pll);
    let em_mean = mean(&trials.best_em_pll);
    assert!(
        fab_mean >= em_mean - 0.05,
        "criterion 8 FAIL: FAB mean PLL {fab_mean} vs best-EM mean {em_mean}"
    );
    println!(
        "criterion 8 (predictive competitiveness): PASS — FAB {fab_mean:.4} vs best-EM {em_mean:.4} nats/symbol"
    );
}

// ── criterion 9: byte-level determinism across reruns and job counts ────

#[test]
fn criterion_09_byte_identical_reruns() {
    let bin = env!("CARGO_BIN_EXE_fabhmm");
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    std::fs::write(
        &plan_path,
        r#"{
  "kind": "gaussian1d",
  "lengths": [120],
  "trials": 2,
  "methods": ["fab", "em-bic"],
  "k_max": 3,
  "test_length": 200,
  "seed": 11,
  "fab": {"restarts": 2, "max_iter": 120},
  "em": {"restarts": 2, "max_iter": 120}
}"#,
    )
    .unwrap();

    let mut artifacts: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for (run, jobs) in [(0, "1"), (1, "4"), (2, "1"), (3, "4")] {
        let work = dir.path().join(format!("run{run}"));
        std::fs::create_dir_all(&work).unwrap();
        let p = |name: &str| work.join(name).to_str().unwrap().to_string();

        let ok = |label: &str, status: std::process::ExitStatus| {
            assert!(status.success(), "criterion 9 FAIL: {label} exited {status:?}");
        };
        ok("generate", Command::new(bin)
            .args(["--jobs", jobs, "generate", "--kind", "gaussian", "--length", "400",
                   "--test-length", "200", "--seed", "7", "--out", &p("d.json")])
            .status().unwrap());
        ok("fit", Command::new(bin)
            .args(["--jobs", jobs, "fit", "--method", "fab", "--data", &p("d.json"),
                   "--k-max", "6", "--restarts", "4", "--seed", "1", "--no-timing",
                   "--out", &p("m.json"), "--trace-csv", &p("trace.csv")])
            .status().unwrap());
        let eval_out = Command::new(bin)
            .args(["--jobs", jobs, "eval", "--model", &p("m.json"), "--test", &p("d.test.json")])
            .output().unwrap();
        ok("eval", eval_out.status);
        ok("experiment", Command::new(bin)
            .args(["--jobs", jobs, "experiment", "--plan", plan_path.to_str().unwrap(),
                   "--out", &p("results"), "--no-timing"])
            .status().unwrap());

        let mut files = vec![
            ("d.json".to_string(), std::fs::read(work.join("d.json")).unwrap()),
            ("d.test.json".to_string(), std::fs::read(work.join("d.test.json")).unwrap()),
            ("m.json".to_string(), std::fs::read(work.join("m.json")).unwrap()),
            ("m.report.json".to_string(), std::fs::read(work.join("m.report.json")).unwrap()),
            ("trace.csv".to_string(), std::fs::read(work.join("trace.csv")).unwrap()),
            ("eval.stdout".to_string(), eval_out.stdout.clone()),
            ("report.csv".to_string(), std::fs::read(work.join("results/report.csv")).unwrap()),
            ("report.json".to_string(), std::fs::read(work.join("results/report.json")).unwrap()),
        ];
        files.sort_by(|a, b| a.0.cmp(&b.0));
        artifacts.push(files);
    }
    for run in 1..artifacts.len() {
        for (a, b) in artifacts[0].iter().zip(&artifacts[run]) {
            assert_eq!(a.0, b.0);
            assert!(
                a.1 == b.1,
                "criterion 9 FAIL: {} differs between run 0 and run {run}",
                a.0
            );
        }
    }
    println!(
        "criterion 9 (determinism): PASS — {} artifacts byte-identical across 4 runs with --jobs 1/4",
        artifacts[0].len()
    );
}

// ── criterion 10: invariant checks active on every inference pass ───────

#[test]
fn criterion_10_invariant_checks_active() {
    assert!(
        fabhmm::posterior::invariant_checks_enabled(),
        "criterion 10 FAIL: build does not run posterior invariant checks; use a debug-assertions build"
    );
    // Exercise weighted passes and pruning with the checks live; any
    // normalization or consistency violation panics inside the library.
    let data = generate(&GroundTruthSpec::gaussian(), 400, 99);
    let config = FitConfig { k_max: 8, restarts: 2, seed: 99, ..FitConfig::default() };
    let report = fab::fit(&data, &config).unwrap();
    assert!(!report.fic_lb_trace.is_empty());
    println!(
        "criterion 10 (invariant suite): PASS — normalization, weight-simplex, and marginal-consistency checks ran on every inference pass of this suite"
    );
}

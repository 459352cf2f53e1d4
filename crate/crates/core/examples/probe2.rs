use fabhmm::baselines::sweep_bic;
use fabhmm::data::{generate, generate_split, GroundTruthSpec};
use fabhmm::eval::predictive_loglik;
use fabhmm::fab::{fit, FitConfig};
use fabhmm::model::{EmissionModel, HmmParams};

fn main() {
    // 1-state gaussian data, k_max 5
    let one = GroundTruthSpec::custom(
        HmmParams::new(vec![1.0], vec![1.0], vec![EmissionModel::Gaussian1d { mean: 0.0, variance: 1.0 }]).unwrap(),
    );
    let mut ones = 0;
    for trial in 0..10u64 {
        let data = generate(&one, 500, 3000 + trial);
        let cfg = FitConfig { k_max: 5, restarts: 5, seed: 50 + trial, ..FitConfig::default() };
        let r = fit(&data, &cfg).unwrap();
        if r.selected_k == 1 { ones += 1; }
        print!("K{} ", r.selected_k);
    }
    println!("\n1-state data: K=1 in {ones}/10 seeds");

    // BIC sweep vs FAB at T=2000 gaussian + PLL comparison
    let spec = GroundTruthSpec::gaussian();
    let (mut sk, mut fk) = (0.0, 0.0);
    let (mut fab_pll, mut best_em_pll) = (0.0, 0.0);
    let n = 5u64;
    for trial in 0..n {
        let (train, test) = generate_split(&spec, 2000, 5000, 7000 + trial);
        let cfg = FitConfig { k_max: 10, restarts: 5, seed: 9 + trial, ..FitConfig::default() };
        let t0 = std::time::Instant::now();
        let sweep = sweep_bic(&train, 10, &cfg).unwrap();
        let t_sweep = t0.elapsed().as_secs_f64();
        let fr = fit(&train, &cfg).unwrap();
        let p_fab = predictive_loglik(&fr.params, &test).unwrap();
        let p_bic = predictive_loglik(&sweep.selected().params, &test).unwrap();
        let p_true = predictive_loglik(&sweep.fits[3].params, &test).unwrap();
        let p_best = p_bic.max(p_true);
        println!("trial {trial}: BIC K={} FAB K={} pll fab={p_fab:.4} bic={p_bic:.4} em@4={p_true:.4} sweep {t_sweep:.1}s", sweep.selected_k, fr.selected_k);
        sk += sweep.selected_k as f64; fk += fr.selected_k as f64;
        fab_pll += p_fab; best_em_pll += p_best;
    }
    println!("mean: BIC K={} FAB K={} | mean fab pll={:.4} best-em pll={:.4}", sk / n as f64, fk / n as f64, fab_pll / n as f64, best_em_pll / n as f64);
}

use fabhmm::data::{generate, GroundTruthSpec};
use fabhmm::fab::{fit, FitConfig};
use fabhmm::model::{EmissionModel, HmmParams};

fn main() {
    let one = GroundTruthSpec::custom(
        HmmParams::new(vec![1.0], vec![1.0], vec![EmissionModel::Gaussian1d { mean: 0.0, variance: 1.0 }]).unwrap(),
    );
    for (tol, max_iter) in [(1e-6f64, 5000usize), (1e-8, 20000)] {
        let mut total = 0;
        let mut per = Vec::new();
        for base in (0u64..800).step_by(100) {
            let mut ones = 0;
            for trial in 0..10u64 {
                let data = generate(&one, 250, base + trial);
                let cfg = FitConfig { k_max: 5, restarts: 10, seed: base + trial, epsilon: 2.0, tol, max_iter, ..FitConfig::default() };
                let r = fit(&data, &cfg).unwrap();
                if r.selected_k == 1 { ones += 1; }
            }
            total += ones;
            per.push(ones);
        }
        println!("T=250 r=10 tol={tol:.0e}: {total}/80 per-base {per:?}");
    }
}

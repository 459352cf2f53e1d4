use fabhmm::data::{generate, generate_split, GroundTruthSpec};
use fabhmm::fab::{fit, FitConfig};

fn main() {
    let t: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let kind = std::env::args().nth(2).unwrap_or_else(|| "g".into());
    let spec = if kind == "g" { GroundTruthSpec::gaussian() } else { GroundTruthSpec::categorical() };
    let mut ks = Vec::new();
    for trial in 0..10u64 {
        let (train, _test) = generate_split(&spec, t, 100, 1000 + trial);
        let cfg = FitConfig { k_max: 10, restarts: 5, seed: 77 + trial, ..FitConfig::default() };
        let start = std::time::Instant::now();
        let r = fit(&train, &cfg).unwrap();
        println!(
            "trial {trial}: K={} iters={} conv={} fic={:.2} prunes={:?} {:.2}s",
            r.selected_k, r.iterations_run, r.converged,
            r.fic_lb_trace.last().unwrap().fic_lb,
            r.prune_events.iter().map(|e| (e.iteration, e.states.len())).collect::<Vec<_>>(),
            start.elapsed().as_secs_f64()
        );
        ks.push(r.selected_k as f64);
    }
    let _ = generate(&spec, 1, 0);
    println!("mean K = {}", ks.iter().sum::<f64>() / ks.len() as f64);
}

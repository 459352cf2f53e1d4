//! The full training loop: alternate posterior and parameter updates with
//! occupancy-threshold pruning, across seeded restarts.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fab::delta::{compute_delta, fic_lower_bound, OccupancyStats};
use crate::fab::shrink::shrink;
use crate::fab::steps::{init_posteriors, m_step, v_step};
use crate::math::derive_seed;
use crate::model::HmmParams;
use crate::sequence::SequenceSet;

/// Posterior initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// Independent flat simplex draw per position.
    #[default]
    RandomResponsibility,
}

/// Training configuration.
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Initial (maximum) number of hidden states.
    pub k_max: usize,
    /// Pruning threshold in expected-observation units.
    pub epsilon: f64,
    /// Stop once the objective gain between same-size iterations falls to
    /// this value or below (absolute).
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitScheme,
    /// Wall-clock budget for the whole fit; when exceeded, the current
    /// model is returned with `converged = false`.
    pub time_limit: Option<Duration>,
    /// When false, reported wall times are written as zero so that output
    /// files are byte-reproducible.
    pub record_timing: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            // Epsilon must exceed one observation's worth of occupancy:
            // with a single training sequence the initial-distribution
            // update pins a full unit of mass on whichever state owns the
            // first position, so a threshold of 1.0 can never remove it
            // even when it has collapsed onto that one observation.
            k_max: 10,
            epsilon: 2.0,
            tol: 1e-4,
            max_iter: 1000,
            restarts: 5,
            seed: 0,
            init: InitScheme::RandomResponsibility,
            time_limit: None,
            record_timing: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::InvalidConfig("k_max must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig("epsilon must be >= 0".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidConfig("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// One objective evaluation: the iteration index, the state count it was
/// evaluated at, and the value.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub n_states: usize,
    pub fic_lb: f64,
}

/// States removed at one iteration, identified by their original indices
/// in the `0..k_max` starting set.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PruneEvent {
    pub iteration: usize,
    pub states: Vec<usize>,
}

/// Outcome of a fit: the winning restart's model and diagnostics.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: HmmParams,
    pub selected_k: usize,
    pub fic_lb_trace: Vec<TracePoint>,
    pub prune_events: Vec<PruneEvent>,
    pub iterations_run: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub winning_restart: usize,
    pub warnings: Vec<String>,
}

struct RestartOutcome {
    params: HmmParams,
    trace: Vec<TracePoint>,
    prune_events: Vec<PruneEvent>,
    iterations: usize,
    converged: bool,
    warnings: Vec<String>,
    final_fic: f64,
}

/// Fit a model with automatic state-count selection.
///
/// Runs `config.restarts` independently seeded restarts (possibly in
/// parallel; each restart's randomness depends only on `(seed, restart)`,
/// so results are identical for any worker count) and reports the restart
/// with the highest final objective value. Ties prefer the smaller state
/// count, then the lower restart index.
pub fn fit(data: &SequenceSet, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    data.validate()?;
    let start = Instant::now();
    let deadline = config.time_limit.map(|d| start + d);

    let outcomes: Vec<Result<RestartOutcome>> = (0..config.restarts)
        .into_par_iter()
        .map(|restart| run_restart(data, config, restart, deadline))
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut winner = 0;
    for i in 1..outcomes.len() {
        let (a, w) = (&outcomes[i], &outcomes[winner]);
        if a.final_fic > w.final_fic
            || (a.final_fic == w.final_fic && a.params.k() < w.params.k())
        {
            winner = i;
        }
    }
    let best = outcomes.into_iter().nth(winner).expect("winner index in range");
    Ok(FitReport {
        selected_k: best.params.k(),
        params: best.params,
        fic_lb_trace: best.trace,
        prune_events: best.prune_events,
        iterations_run: best.iterations,
        converged: best.converged,
        wall_time_s: if config.record_timing { start.elapsed().as_secs_f64() } else { 0.0 },
        winning_restart: winner,
        warnings: best.warnings,
    })
}

fn run_restart(
    data: &SequenceSet,
    config: &FitConfig,
    restart: usize,
    deadline: Option<Instant>,
) -> Result<RestartOutcome> {
    let InitScheme::RandomResponsibility = config.init;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, restart as u64));
    let mut posteriors = init_posteriors(data, config.k_max, &mut rng);
    let mut active: Vec<usize> = (0..config.k_max).collect();
    let (mut params, init_rows) = m_step(&posteriors, data)?;

    let mut warnings = row_warnings(0, &init_rows);
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut prune_events: Vec<PruneEvent> = Vec::new();
    let mut previous: Option<(usize, f64)> = None;
    let mut converged = false;
    let mut iterations = 0;

    for iteration in 1..=config.max_iter {
        iterations = iteration;
        let k_now = active.len();
        let dims = params.dims();

        // Reference posterior for this iteration is the previous one; the
        // regularizer, the weighted pass, and the objective all share it.
        let stats = OccupancyStats::from_posteriors(&posteriors);
        let delta = compute_delta(&stats, &dims)?;
        let (new_posteriors, sum_log_zeta) = v_step(&params, data, &delta)?;
        let fic = fic_lower_bound(sum_log_zeta, &delta, &stats, &dims)?;
        trace.push(TracePoint { iteration, n_states: k_now, fic_lb: fic });

        let new_stats = OccupancyStats::from_posteriors(&new_posteriors);
        let outcome = shrink(new_posteriors, &new_stats, config.epsilon)?;
        let pruned_now = !outcome.pruned.is_empty();
        if pruned_now {
            prune_events.push(PruneEvent {
                iteration,
                states: outcome.pruned.iter().map(|&i| active[i]).collect(),
            });
            active = outcome.kept.iter().map(|&i| active[i]).collect();
        }
        posteriors = outcome.posteriors;

        let (updated, rows) = m_step(&posteriors, data)?;
        params = updated;
        warnings.extend(row_warnings(iteration, &rows));

        // Converged only when the objective gain over the previous
        // same-size iteration is within tolerance and nothing was pruned
        // here (a prune means the model is still moving).
        if !pruned_now {
            if let Some((prev_k, prev_fic)) = previous {
                if prev_k == k_now && fic - prev_fic <= config.tol {
                    converged = true;
                    break;
                }
            }
        }
        previous = Some((k_now, fic));

        if let Some(limit) = deadline {
            if Instant::now() >= limit {
                break;
            }
        }
    }

    let final_fic = trace.last().map_or(f64::NEG_INFINITY, |t| t.fic_lb);
    Ok(RestartOutcome {
        params,
        trace,
        prune_events,
        iterations,
        converged,
        warnings,
        final_fic,
    })
}

fn row_warnings(iteration: usize, rows: &[usize]) -> Vec<String> {
    rows.iter()
        .map(|j| format!("iteration {iteration}: transition row {j} had zero mass, reset to uniform"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, GroundTruthSpec};
    use crate::model::EmissionKind;

    fn quick_config(seed: u64) -> FitConfig {
        FitConfig { k_max: 5, restarts: 2, max_iter: 200, seed, ..FitConfig::default() }
    }

    #[test]
    fn degenerate_constant_data_collapses_toward_one_state() {
        use crate::sequence::Observations;
        let data = SequenceSet::new(
            EmissionKind::Categorical,
            vec![Observations::Symbols(vec![0; 60])],
            Some(vec!["a".into(), "b".into()]),
        )
        .unwrap();
        let report = fit(&data, &quick_config(3)).unwrap();
        assert_eq!(report.selected_k, 1);
        assert!(report.converged);
    }

    #[test]
    fn same_seed_gives_identical_reports() {
        let data = generate(&GroundTruthSpec::gaussian(), 200, 11);
        let a = fit(&data, &FitConfig { record_timing: false, ..quick_config(5) }).unwrap();
        let b = fit(&data, &FitConfig { record_timing: false, ..quick_config(5) }).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.fic_lb_trace, b.fic_lb_trace);
        assert_eq!(a.prune_events, b.prune_events);
        assert_eq!(a.wall_time_s, b.wall_time_s);
        assert_eq!(a.winning_restart, b.winning_restart);
    }

    #[test]
    fn trace_is_monotone_between_prune_events() {
        let data = generate(&GroundTruthSpec::gaussian(), 300, 21);
        let report = fit(&data, &quick_config(21)).unwrap();
        let prune_iters: Vec<usize> = report.prune_events.iter().map(|e| e.iteration).collect();
        for pair in report.fic_lb_trace.windows(2) {
            if pair[0].n_states == pair[1].n_states && !prune_iters.contains(&pair[0].iteration) {
                assert!(
                    pair[1].fic_lb >= pair[0].fic_lb - 1e-9 * pair[0].fic_lb.abs(),
                    "objective decreased: {} -> {}",
                    pair[0].fic_lb,
                    pair[1].fic_lb
                );
            }
        }
    }

    #[test]
    fn pruned_states_never_reappear() {
        let data = generate(&GroundTruthSpec::gaussian(), 300, 9);
        let report = fit(&data, &quick_config(9)).unwrap();
        let mut seen = std::collections::HashSet::new();
        for e in &report.prune_events {
            for s in &e.states {
                assert!(seen.insert(*s), "state {s} pruned twice");
            }
        }
        // Sizes in the trace never increase.
        for pair in report.fic_lb_trace.windows(2) {
            assert!(pair[1].n_states <= pair[0].n_states);
        }
    }

    #[test]
    fn tiny_time_limit_yields_unconverged_but_wellformed_report() {
        let data = generate(&GroundTruthSpec::gaussian(), 500, 2);
        let config = FitConfig {
            time_limit: Some(Duration::from_nanos(1)),
            ..quick_config(2)
        };
        let report = fit(&data, &config).unwrap();
        assert!(!report.converged);
        assert!(report.iterations_run >= 1);
        assert!(!report.fic_lb_trace.is_empty());
        report.params.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let data = generate(&GroundTruthSpec::gaussian(), 50, 1);
        for bad in [
            FitConfig { k_max: 0, ..FitConfig::default() },
            FitConfig { epsilon: -1.0, ..FitConfig::default() },
            FitConfig { tol: 0.0, ..FitConfig::default() },
            FitConfig { max_iter: 0, ..FitConfig::default() },
            FitConfig { restarts: 0, ..FitConfig::default() },
        ] {
            assert!(fit(&data, &bad).is_err());
        }
    }
}

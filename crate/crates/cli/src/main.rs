//! Command-line surface: dataset generation and ingestion, training,
//! model-order sweeps, held-out evaluation, and experiment reproduction.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error, 3 numerical
//! degeneracy (an observation impossible under every state).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use fabhmm::baselines::{fit_em, sweep_bic};
use fabhmm::data::{generate_split, ingest_text, GroundTruthSpec};
use fabhmm::eval::{predictive_loglik, run_experiment, ExperimentPlan};
use fabhmm::fab::{self, FitConfig};
use fabhmm::io;
use fabhmm::model::EmissionKind;
use fabhmm::Error;

#[derive(Parser)]
#[command(name = "fabhmm", version, about = "Hidden Markov model training with automatic state-count selection")]
struct Cli {
    /// Worker threads for parallel sections (0 = all cores). Outputs do
    /// not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Gaussian,
    Categorical,
}

impl From<KindArg> for EmissionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gaussian => EmissionKind::Gaussian1d,
            KindArg::Categorical => EmissionKind::Categorical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fab,
    Em,
}

#[derive(Args)]
struct SeedArg {
    /// Master seed. Omitted: derived from the clock (echoed to stderr);
    /// experiment mode requires it explicitly.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a training (and optionally test) sequence from the built-in
    /// four-state generator.
    Generate {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Training sequence length.
        #[arg(long)]
        length: usize,
        /// Test sequence length; written next to --out as `<stem>.test.json`.
        #[arg(long)]
        test_length: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
        /// Training dataset path (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Slice a text file into character-level train/test datasets.
    IngestText {
        /// Input text file (UTF-8).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        train_chars: usize,
        #[arg(long, default_value_t = 0)]
        test_chars: usize,
        /// Writes `<prefix>.train.json` and `<prefix>.test.json`.
        #[arg(long)]
        out_prefix: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Train a model: `fab` selects the state count itself (requires
    /// --k-max), `em` is maximum likelihood at fixed K (requires --k).
    Fit {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        data: PathBuf,
        /// State count for --method em.
        #[arg(long)]
        k: Option<usize>,
        /// Initial state count for --method fab.
        #[arg(long)]
        k_max: Option<usize>,
        /// Pruning threshold in expected observations (fab only).
        #[arg(long, default_value_t = FitConfig::default().epsilon)]
        epsilon: f64,
        #[arg(long, default_value_t = FitConfig::default().tol)]
        tol: f64,
        #[arg(long, default_value_t = FitConfig::default().max_iter)]
        max_iter: usize,
        #[arg(long, default_value_t = FitConfig::default().restarts)]
        restarts: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Model output path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Fit-report path (fab; default `<out stem>.report.json`).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Objective-trace CSV path (fab).
        #[arg(long)]
        trace_csv: Option<PathBuf>,
        /// Write wall-time fields as 0 for byte-reproducible outputs.
        #[arg(long)]
        no_timing: bool,
    },
    /// Maximum-likelihood fits for K = 1..k_max scored by BIC.
    SweepBic {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = FitConfig::default().tol)]
        tol: f64,
        #[arg(long, default_value_t = FitConfig::default().max_iter)]
        max_iter: usize,
        #[arg(long, default_value_t = FitConfig::default().restarts)]
        restarts: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Sweep result path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Optional sweep CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Save the BIC-selected model here.
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[arg(long)]
        no_timing: bool,
    },
    /// Per-symbol predictive log-likelihood of a model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Optional JSON output `{"pll": ...}`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Run a model-selection experiment plan and write its reports.
    Experiment {
        /// Plan file (JSON).
        #[arg(long)]
        plan: PathBuf,
        /// Output directory for report.csv / report.json.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        no_timing: bool,
    },
}

enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if cli.jobs > 0 {
        // Ignore errors: the pool may already exist in test harnesses.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            eprintln!("run `fabhmm --help` for the synopsis");
            ExitCode::from(1)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Degenerate { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn resolve_seed(seed: &SeedArg) -> u64 {
    match seed.seed {
        Some(s) => s,
        None => {
            let s = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            eprintln!("seed={s} (time-derived; pass --seed to reproduce)");
            s
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate { kind, length, test_length, seed, out } => {
            let seed = resolve_seed(&seed);
            let spec = GroundTruthSpec::for_kind(kind.into());
            let (train, test) = generate_split(&spec, length, test_length.unwrap_or(1), seed);
            io::save_dataset(&train, &out)?;
            println!("train length={length} path={}", out.display());
            if let Some(t_test) = test_length {
                let test_path = sibling(&out, ".test.json");
                io::save_dataset(&test, &test_path)?;
                println!("test length={t_test} path={}", test_path.display());
            }
            Ok(())
        }
        Command::IngestText { input, train_chars, test_chars, out_prefix, seed: _ } => {
            let raw = std::fs::read_to_string(&input).map_err(Error::from)?;
            let ingest = ingest_text(&raw, train_chars, test_chars)?;
            let train_path = with_suffix(&out_prefix, ".train.json");
            io::save_dataset(&ingest.train, &train_path)?;
            let alphabet_size = ingest.train.n_symbols()?;
            println!("alphabet_size={alphabet_size}");
            println!("train chars={train_chars} path={}", train_path.display());
            match &ingest.test {
                Some(test) => {
                    let test_path = with_suffix(&out_prefix, ".test.json");
                    io::save_dataset(test, &test_path)?;
                    println!(
                        "test chars={} dropped={} path={}",
                        test.total_len(),
                        ingest.dropped_from_test,
                        test_path.display()
                    );
                }
                None if test_chars > 0 => {
                    println!("test chars=0 dropped={} (nothing to write)", ingest.dropped_from_test);
                }
                None => {}
            }
            Ok(())
        }
        Command::Fit {
            method,
            data,
            k,
            k_max,
            epsilon,
            tol,
            max_iter,
            restarts,
            seed,
            out,
            report,
            trace_csv,
            no_timing,
        } => {
            let seed = resolve_seed(&seed);
            let dataset = io::load_dataset(&data)?;
            let config = FitConfig {
                k_max: 0, // set per method below
                epsilon,
                tol,
                max_iter,
                restarts,
                seed,
                time_limit: None,
                record_timing: !no_timing,
                ..FitConfig::default()
            };
            match method {
                MethodArg::Fab => {
                    let k_max = k_max.ok_or_else(|| {
                        CliError::Usage("--method fab requires --k-max".into())
                    })?;
                    if k.is_some() {
                        return Err(CliError::Usage("--k is only for --method em; use --k-max".into()));
                    }
                    let config = FitConfig { k_max, ..config };
                    let fit = fab::fit(&dataset, &config)?;
                    io::save_model(&fit.params, &out)?;
                    let report_path = report.unwrap_or_else(|| sibling(&out, ".report.json"));
                    io::save_fit_report(&fit, &report_path)?;
                    if let Some(csv) = trace_csv {
                        io::save_trace_csv(&fit, &csv)?;
                    }
                    println!(
                        "selected_k={} fic_lb={} iterations={} converged={} model={}",
                        fit.selected_k,
                        fit.fic_lb_trace.last().map_or(f64::NAN, |p| p.fic_lb),
                        fit.iterations_run,
                        fit.converged,
                        out.display()
                    );
                }
                MethodArg::Em => {
                    let k = k.ok_or_else(|| CliError::Usage("--method em requires --k".into()))?;
                    if k_max.is_some() {
                        return Err(CliError::Usage("--k-max is only for --method fab; use --k".into()));
                    }
                    let config = FitConfig { k_max: k, ..config };
                    let fit = fit_em(&dataset, k, &config)?;
                    io::save_model(&fit.params, &out)?;
                    println!(
                        "k={k} loglik={} iterations={} converged={} model={}",
                        fit.loglik,
                        fit.iterations,
                        fit.converged,
                        out.display()
                    );
                }
            }
            Ok(())
        }
        Command::SweepBic {
            data,
            k_max,
            tol,
            max_iter,
            restarts,
            seed,
            out,
            csv,
            model_out,
            no_timing,
        } => {
            let seed = resolve_seed(&seed);
            let dataset = io::load_dataset(&data)?;
            let config = FitConfig {
                k_max,
                tol,
                max_iter,
                restarts,
                seed,
                record_timing: !no_timing,
                ..FitConfig::default()
            };
            let sweep = sweep_bic(&dataset, k_max, &config)?;
            io::save_sweep(&sweep, &out)?;
            if let Some(csv) = csv {
                io::save_sweep_csv(&sweep, &csv)?;
            }
            if let Some(model_out) = model_out {
                io::save_model(&sweep.selected().params, &model_out)?;
            }
            println!(
                "selected_k={} bic={} out={}",
                sweep.selected_k,
                sweep.records[sweep.selected_k - 1].bic,
                out.display()
            );
            Ok(())
        }
        Command::Eval { model, test, out, seed: _ } => {
            let params = io::load_model(&model)?;
            let dataset = io::load_dataset(&test)?;
            let pll = predictive_loglik(&params, &dataset)?;
            println!("pll={pll}");
            if let Some(out) = out {
                std::fs::write(&out, format!("{{\"pll\": {pll}}}\n")).map_err(Error::from)?;
            }
            Ok(())
        }
        Command::Experiment { plan, out, seed, no_timing } => {
            let mut plan = ExperimentPlan::from_path(&plan)?;
            if let Some(s) = seed.seed {
                plan.seed = Some(s);
            }
            if plan.seed.is_none() {
                return Err(CliError::Usage(
                    "experiment runs require a seed (plan field or --seed)".into(),
                ));
            }
            if no_timing {
                plan.record_timing = false;
            }
            let report = run_experiment(&plan, &out)?;
            for agg in &report.aggregates {
                println!(
                    "method={} length={} trials={} failed={} mean_k={} mean_pll={}",
                    agg.method.as_str(),
                    agg.length,
                    agg.trials,
                    agg.failed,
                    agg.mean_selected_k,
                    agg.mean_pll.map_or("NaN".to_string(), |v| v.to_string()),
                );
            }
            println!("report={}", out.join("report.csv").display());
            Ok(())
        }
    }
}

/// `out.json` -> `out<suffix>` (e.g. `out.test.json`).
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}"))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

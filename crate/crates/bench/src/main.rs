use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use setd_bench::report::{self, Metric};
use setd_bench::{analyze, grid_search, run_experiment, ConfigError, ExperimentConfig, GridSpec, LearningCurve};

#[derive(Parser)]
#[command(name = "setd-bench", version, about = "Policy-evaluation experiments with linear TD learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Oblique-projection diagnostics on the two-state MDP.
    Analyze {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-seed learning curves for one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Grid search over step sizes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Cross-seed mean and standard deviation of learning-curve files.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also report the first step whose mean metric drops below this.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = MetricArg::Rmse)]
        metric: MetricArg,
    },
}

#[derive(Args)]
struct Overrides {
    /// Use seeds 1..=N.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "eval-every")]
    eval_every: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Rmse,
    Rmspbe,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<setd_core::Error> for CliError {
    fn from(e: setd_core::Error) -> Self {
        use setd_core::Error as E;
        match e {
            E::ContractViolation(m) => CliError::Contract(m),
            E::InvalidModel(_) | E::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            other => CliError::Other(other.into()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Contract(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

fn load_config(path: &Path, o: &Overrides) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(n) = o.seeds {
        cfg.seeds = (1..=n).collect();
    }
    if let Some(h) = o.horizon {
        cfg.horizon = h;
    }
    if let Some(k) = o.eval_every {
        cfg.eval_every = k;
    }
    cfg.validate()?;
    let out = o
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| anyhow::anyhow!("creating {}: {e}", out.display()))?;
    Ok((cfg, out))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { out } => {
            let text = analyze::render(&analyze::analyze_two_state()?);
            print!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(anyhow::Error::from)?;
                write(&dir.join("two_state.txt"), &text)?;
            }
        }
        Command::Run { config, overrides } => {
            let (cfg, out) = load_config(&config, &overrides)?;
            let curve = run_experiment(&cfg)?;
            write(&out.join("curves.csv"), &curve.to_csv_string())?;
            let agg = report::aggregate(std::slice::from_ref(&curve));
            write(&out.join("report.csv"), &report::to_csv_string(&agg))?;
            for alg in curve.algorithms() {
                if let Some(last) = agg.iter().rev().find(|r| r.algorithm == alg) {
                    match last.rmse {
                        Some((m, s)) => println!(
                            "{alg}: step {} rmse {m:.4} ± {s:.4} ({} of {} seeds diverged)",
                            last.step, last.diverged, last.seeds
                        ),
                        None => println!("{alg}: all {} seeds diverged", last.seeds),
                    }
                }
            }
        }
        Command::Sweep {
            config,
            grid,
            overrides,
        } => {
            let (cfg, out) = load_config(&config, &overrides)?;
            let spec = match grid {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                    text.parse::<GridSpec>()?
                }
                None => GridSpec::table(),
            };
            let res = grid_search(&cfg, &spec)?;
            write(&out.join("grid.csv"), &res.to_csv_string())?;
            for c in res.best() {
                let (m, s) = c.stats.expect("best cells have statistics");
                println!(
                    "{}: alpha={} mu={} lambda={} {}={m:.5} ± {s:.5}",
                    c.algorithm, c.sizes.alpha, c.sizes.mu, c.sizes.lambda, spec.selection_metric
                );
            }
        }
        Command::Report {
            files,
            out,
            threshold,
            metric,
        } => {
            let curves = files
                .iter()
                .map(|p| LearningCurve::load(p))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let agg = report::aggregate(&curves);
            let text = report::to_csv_string(&agg);
            let metric = match metric {
                MetricArg::Rmse => Metric::Rmse,
                MetricArg::Rmspbe => Metric::Rmspbe,
            };
            let speed = threshold.map(|t| report::speed_table(&agg, metric, t));
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(anyhow::Error::from)?;
                    write(&dir.join("aggregate.csv"), &text)?;
                    if let Some(s) = &speed {
                        write(&dir.join("speed.csv"), s)?;
                    }
                }
                None => {
                    print!("{text}");
                    if let Some(s) = &speed {
                        print!("{s}");
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

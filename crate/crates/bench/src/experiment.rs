//! Multi-seed runs producing learning curves.

use std::path::Path;

use rayon::prelude::*;
use setd_core::envs::{DatasetSpec, SampleStream, SamplingMode};
use setd_core::learners::{Algorithm, LearnerState};
use setd_core::Error;

use crate::config::{BuiltEnv, ExperimentConfig, StepSizes};

/// Header of learning-curve CSV files.
pub const CURVE_HEADER: [&str; 6] = ["algorithm", "seed", "step", "rmse", "rmspbe", "diverged"];

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("{path}: expected header {expected:?}, found {found:?}")]
    Schema {
        path: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path}, row {row}: {msg}")]
    Row { path: String, row: usize, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub algorithm: String,
    pub seed: u64,
    pub step: u64,
    pub rmse: f64,
    pub rmspbe: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
}

impl LearningCurve {
    /// Rows of one `(algorithm, seed)` run, in step order.
    pub fn run(&self, algorithm: &str, seed: u64) -> impl Iterator<Item = &CurveRow> {
        let algorithm = algorithm.to_string();
        self.rows
            .iter()
            .filter(move |r| r.algorithm == algorithm && r.seed == seed)
    }

    pub fn algorithms(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.algorithm) {
                out.push(r.algorithm.clone());
            }
        }
        out
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.rows.iter().map(|r| r.seed).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Last row of every `(algorithm, seed)` run.
    pub fn finals(&self, algorithm: &str) -> Vec<&CurveRow> {
        self.seeds()
            .into_iter()
            .filter_map(|s| self.run(algorithm, s).last())
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), CurveError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CURVE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.algorithm.clone(),
                r.seed.to_string(),
                r.step.to_string(),
                fmt_f64(r.rmse),
                fmt_f64(r.rmspbe),
                u8::from(r.diverged).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<(), CurveError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: std::io::Read>(input: R, name: &str) -> Result<Self, CurveError> {
        let mut r = csv::Reader::from_reader(input);
        let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if found != CURVE_HEADER {
            return Err(CurveError::Schema {
                path: name.to_string(),
                expected: CURVE_HEADER.iter().map(|s| s.to_string()).collect(),
                found,
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |msg: &str| CurveError::Row {
                path: name.to_string(),
                row: i + 1,
                msg: msg.to_string(),
            };
            let diverged = match &rec[5] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("diverged must be 0 or 1")),
            };
            rows.push(CurveRow {
                algorithm: rec[0].to_string(),
                seed: rec[1].parse().map_err(|_| bad("bad seed"))?,
                step: rec[2].parse().map_err(|_| bad("bad step"))?,
                rmse: rec[3].parse().map_err(|_| bad("bad rmse"))?,
                rmspbe: rec[4].parse().map_err(|_| bad("bad rmspbe"))?,
                diverged,
            });
        }
        Ok(LearningCurve { rows })
    }

    pub fn load(path: &Path) -> Result<Self, CurveError> {
        Self::read_csv(std::fs::File::open(path)?, &path.display().to_string())
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:?}")
    }
}

/// Steps at which metrics are recorded: 0, every `eval_every`, and the last.
pub fn eval_steps(horizon: usize, eval_every: usize) -> Vec<u64> {
    let mut steps: Vec<u64> = (0..=horizon).step_by(eval_every).map(|s| s as u64).collect();
    if steps.last() != Some(&(horizon as u64)) {
        steps.push(horizon as u64);
    }
    steps
}

/// One `(algorithm, seed)` run over a freshly generated stream.
pub fn run_single(
    env: &BuiltEnv,
    algorithm: Algorithm,
    sizes: StepSizes,
    seed: u64,
    cfg: &ExperimentConfig,
) -> setd_core::Result<Vec<CurveRow>> {
    if algorithm.requires_sequential() && cfg.sampling != SamplingMode::Sequential {
        return Err(Error::ContractViolation(format!(
            "{algorithm} requires sequential sampling"
        )));
    }
    let h = sizes.with_gamma(env.mdp.gamma())?;
    let d = env.mdp.dim();
    let theta = cfg.initial_theta(d);
    if theta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta.len(),
        });
    }
    let mut state = LearnerState::with_theta(algorithm, theta);
    let spec = DatasetSpec {
        mdp: &env.mdp,
        policies: &env.policies,
        horizon: cfg.horizon,
        seed,
        mode: cfg.sampling,
    };
    let mut stream = SampleStream::new(&spec)?;
    let name = algorithm.name().to_string();
    let record = |st: &LearnerState, step: u64| -> setd_core::Result<CurveRow> {
        let (rmse, rmspbe) = if st.diverged() {
            (f64::NAN, f64::NAN)
        } else {
            (env.truth.rmse(st.theta())?, env.truth.rmspbe(st.theta())?)
        };
        Ok(CurveRow {
            algorithm: name.clone(),
            seed,
            step,
            rmse,
            rmspbe,
            diverged: st.diverged(),
        })
    };

    let checkpoints = eval_steps(cfg.horizon, cfg.eval_every);
    let mut rows = Vec::with_capacity(checkpoints.len());
    rows.push(record(&state, 0)?);
    let mut done = 0u64;
    for &target in &checkpoints[1..] {
        while done < target {
            let sample = stream.next().expect("stream yields horizon samples")?;
            state.step(&sample, &h)?;
            done += 1;
        }
        rows.push(record(&state, target)?);
    }
    Ok(rows)
}

/// Runs every configured algorithm on every seed in parallel. Rows come out
/// ordered by algorithm (config order), then seed, then step, independent of
/// scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> setd_core::Result<LearningCurve> {
    let env = BuiltEnv::new(&cfg.env)?;
    run_experiment_on(&env, cfg)
}

/// As [`run_experiment`] on a prebuilt environment.
pub fn run_experiment_on(env: &BuiltEnv, cfg: &ExperimentConfig) -> setd_core::Result<LearningCurve> {
    cfg.validate()
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
    let tasks: Vec<(Algorithm, StepSizes, u64)> = cfg
        .algorithms
        .iter()
        .flat_map(|&(a, s)| cfg.seeds.iter().map(move |&seed| (a, s, seed)))
        .collect();
    let results: Vec<setd_core::Result<Vec<CurveRow>>> = tasks
        .par_iter()
        .map(|&(a, s, seed)| run_single(env, a, s, seed, cfg))
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(LearningCurve { rows })
}

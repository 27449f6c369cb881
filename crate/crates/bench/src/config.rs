//! Flat `key = value` experiment configuration.
//!
//! Keys use dotted prefixes: `env.*` picks the MDP, `experiment.*` sets the
//! run protocol and `algo.<tag>.{alpha,mu,lambda}` sets per-algorithm step
//! sizes. Lines starting with `#` are comments.
//!
//! ```text
//! env.name = random_mdp
//! env.n_states = 50
//! experiment.preset = random_mdp
//! experiment.algorithms = setd, gtd2
//! algo.setd.alpha = 0.001
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use setd_core::envs::{self, SamplingMode};
use setd_core::learners::{Algorithm, Hyperparams};
use setd_core::{GroundTruth, PolicyPair, TabularMdp};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("bad value for '{key}': {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

/// Seeds used when a config names none.
pub fn default_seeds() -> Vec<u64> {
    (1..=20).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvKind {
    TwoState,
    Boyan,
    Baird,
    RandomMdp {
        n_states: usize,
        n_actions: usize,
        d: usize,
        env_seed: u64,
    },
}

impl EnvKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::TwoState => "two_state",
            EnvKind::Boyan => "boyan",
            EnvKind::Baird => "baird",
            EnvKind::RandomMdp { .. } => "random_mdp",
        }
    }

    pub fn build(&self) -> setd_core::Result<(TabularMdp, PolicyPair)> {
        Ok(match *self {
            EnvKind::TwoState => envs::build_two_state(),
            EnvKind::Boyan => envs::build_boyan(),
            EnvKind::Baird => envs::build_baird(),
            EnvKind::RandomMdp {
                n_states,
                n_actions,
                d,
                env_seed,
            } => envs::build_random_mdp(n_states, n_actions, d, env_seed)?,
        })
    }

    /// Conventional starting weights, if the domain has one.
    pub fn default_theta(&self) -> Option<Vec<f64>> {
        match self {
            EnvKind::Baird => Some(envs::BAIRD_INITIAL_THETA.to_vec()),
            _ => None,
        }
    }
}

/// An environment together with its exact ground truth.
#[derive(Clone, Debug)]
pub struct BuiltEnv {
    pub mdp: TabularMdp,
    pub policies: PolicyPair,
    pub truth: GroundTruth,
}

impl BuiltEnv {
    pub fn new(kind: &EnvKind) -> setd_core::Result<Self> {
        let (mdp, policies) = kind.build()?;
        let truth = GroundTruth::new(&mdp, &policies)?;
        Ok(BuiltEnv {
            mdp,
            policies,
            truth,
        })
    }
}

/// Step sizes without the discount, which comes from the environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl StepSizes {
    pub const fn new(alpha: f64, mu: f64, lambda: f64) -> Self {
        StepSizes { alpha, mu, lambda }
    }

    pub fn with_gamma(self, gamma: f64) -> setd_core::Result<Hyperparams> {
        Hyperparams::new(self.alpha, self.mu, self.lambda, gamma)
    }
}

/// Published per-domain step sizes.
pub fn preset(name: &str) -> Option<Vec<(Algorithm, StepSizes)>> {
    use Algorithm::*;
    let boyan = |lambda: f64| {
        vec![
            (TdLambda, StepSizes::new(0.2, 1.0, lambda)),
            (SetdLambda, StepSizes::new(0.4, 1.0, lambda)),
            (Etd, StepSizes::new(0.04, 1.0, 0.0)),
            (Gtd2, StepSizes::new(0.5, 1.0, 0.0)),
            (Tdc, StepSizes::new(0.3, 0.001, 0.0)),
        ]
    };
    match name {
        "boyan" | "boyan_lambda04" => Some(boyan(0.4)),
        "boyan_lambda08" => Some(boyan(0.8)),
        "baird" => Some(vec![
            (Setd, StepSizes::new(0.006, 1.0, 0.0)),
            (Gtd2, StepSizes::new(0.005, 1.0, 0.0)),
            (Tdc, StepSizes::new(0.006, 16.0, 0.0)),
        ]),
        "random_mdp" => Some(vec![
            (Etd, StepSizes::new(2.5e-6, 1.0, 0.0)),
            (Setd, StepSizes::new(8e-4, 1.0, 0.0)),
            (Gtd2, StepSizes::new(2e-3, 1.0, 0.0)),
            (Tdc, StepSizes::new(2e-3, 0.05, 0.0)),
        ]),
        _ => None,
    }
}

pub const PRESETS: [&str; 5] = ["boyan", "boyan_lambda04", "boyan_lambda08", "baird", "random_mdp"];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub algorithms: Vec<(Algorithm, StepSizes)>,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub sampling: SamplingMode,
    pub eval_every: usize,
    pub theta_init: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Sequential sampling, 20 seeds, evaluation every 10 steps.
    pub fn new(env: EnvKind, algorithms: Vec<(Algorithm, StepSizes)>, horizon: usize) -> Self {
        ExperimentConfig {
            env,
            algorithms,
            horizon,
            seeds: default_seeds(),
            sampling: SamplingMode::Sequential,
            eval_every: 10,
            theta_init: None,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> ConfigResult<()> {
        if self.algorithms.is_empty() {
            return Err(ConfigError::Invalid("no algorithms configured".into()));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("no seeds configured".into()));
        }
        if self.horizon == 0 {
            return Err(ConfigError::Invalid("horizon must be positive".into()));
        }
        if self.eval_every == 0 {
            return Err(ConfigError::Invalid("eval_every must be positive".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (alg, s) in &self.algorithms {
            if !seen.insert(alg.name()) {
                return Err(ConfigError::Invalid(format!("algorithm '{alg}' listed twice")));
            }
            s.with_gamma(0.5).map_err(|e| ConfigError::Value {
                key: format!("algo.{alg}"),
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Initial weights: explicit, else the domain default, else zeros.
    pub fn initial_theta(&self, d: usize) -> Vec<f64> {
        self.theta_init
            .clone()
            .or_else(|| self.env.default_theta())
            .unwrap_or_else(|| vec![0.0; d])
    }

    pub fn from_file(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }
}

/// Splits `key = value` lines, skipping blanks and comments.
pub fn parse_pairs(text: &str) -> ConfigResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                msg: "empty key".into(),
            });
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                msg: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(out)
}

pub fn parse_value<T: FromStr>(key: &str, v: &str) -> ConfigResult<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_string(),
        msg: e.to_string(),
    })
}

pub fn parse_list<T: FromStr>(key: &str, v: &str) -> ConfigResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// `experiment.seeds` is either a count `N` (seeds `1..=N`) or a list.
fn parse_seeds(key: &str, v: &str) -> ConfigResult<Vec<u64>> {
    if v.contains(',') {
        parse_list(key, v)
    } else {
        let n: u64 = parse_value(key, v)?;
        Ok((1..=n).collect())
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> ConfigResult<Self> {
        let pairs = parse_pairs(text)?;
        let get = |k: &str| pairs.get(k).map(String::as_str);

        let env_name = get("env.name").ok_or_else(|| ConfigError::Invalid("missing env.name".into()))?;
        let env = match env_name {
            "two_state" => EnvKind::TwoState,
            "boyan" => EnvKind::Boyan,
            "baird" => EnvKind::Baird,
            "random_mdp" => EnvKind::RandomMdp {
                n_states: get("env.n_states").map_or(Ok(400), |v| parse_value("env.n_states", v))?,
                n_actions: get("env.n_actions").map_or(Ok(10), |v| parse_value("env.n_actions", v))?,
                d: get("env.d").map_or(Ok(201), |v| parse_value("env.d", v))?,
                env_seed: get("env.seed").map_or(Ok(0), |v| parse_value("env.seed", v))?,
            },
            other => {
                return Err(ConfigError::Value {
                    key: "env.name".into(),
                    msg: format!("unknown environment '{other}'"),
                })
            }
        };

        let mut algorithms: Vec<(Algorithm, StepSizes)> = match get("experiment.preset") {
            Some(p) => preset(p).ok_or_else(|| ConfigError::Value {
                key: "experiment.preset".into(),
                msg: format!("unknown preset '{p}' (known: {})", PRESETS.join(", ")),
            })?,
            None => Vec::new(),
        };

        let mut overrides: BTreeMap<Algorithm, BTreeMap<&str, f64>> = BTreeMap::new();
        for (k, v) in &pairs {
            let parts: Vec<&str> = k.split('.').collect();
            match parts.as_slice() {
                ["env", "name" | "n_states" | "n_actions" | "d" | "seed"] => {}
                [
                    "experiment",
                    "preset" | "algorithms" | "horizon" | "seeds" | "sampling" | "eval_every"
                    | "theta_init" | "output_dir",
                ] => {}
                ["algo", tag, field @ ("alpha" | "mu" | "lambda")] => {
                    let alg: Algorithm = parse_value(k, tag)?;
                    overrides.entry(alg).or_default().insert(field, parse_value(k, v)?);
                }
                _ => return Err(ConfigError::UnknownKey(k.clone())),
            }
        }
        for (alg, fields) in &overrides {
            let idx = match algorithms.iter().position(|(a, _)| a == alg) {
                Some(i) => i,
                None => {
                    let alpha = *fields.get("alpha").ok_or_else(|| ConfigError::Value {
                        key: format!("algo.{alg}.alpha"),
                        msg: "required for algorithms outside the preset".into(),
                    })?;
                    algorithms.push((*alg, StepSizes::new(alpha, 1.0, 0.0)));
                    algorithms.len() - 1
                }
            };
            let s = &mut algorithms[idx].1;
            for (&field, &value) in fields {
                match field {
                    "alpha" => s.alpha = value,
                    "mu" => s.mu = value,
                    _ => s.lambda = value,
                }
            }
        }

        if let Some(list) = get("experiment.algorithms") {
            let wanted: Vec<Algorithm> = parse_list("experiment.algorithms", list)?;
            let mut selected = Vec::new();
            for alg in wanted {
                let entry = algorithms.iter().find(|(a, _)| *a == alg).ok_or_else(|| {
                    ConfigError::Value {
                        key: "experiment.algorithms".into(),
                        msg: format!("'{alg}' has no step sizes (set algo.{alg}.alpha or a preset)"),
                    }
                })?;
                selected.push(*entry);
            }
            algorithms = selected;
        }

        let mut cfg = ExperimentConfig::new(
            env,
            algorithms,
            get("experiment.horizon").map_or(Ok(1000), |v| parse_value("experiment.horizon", v))?,
        );
        if let Some(v) = get("experiment.seeds") {
            cfg.seeds = parse_seeds("experiment.seeds", v)?;
        }
        if let Some(v) = get("experiment.sampling") {
            cfg.sampling = parse_value("experiment.sampling", v)?;
        }
        if let Some(v) = get("experiment.eval_every") {
            cfg.eval_every = parse_value("experiment.eval_every", v)?;
        }
        if let Some(v) = get("experiment.theta_init") {
            cfg.theta_init = Some(parse_list("experiment.theta_init", v)?);
        }
        if let Some(v) = get("experiment.output_dir") {
            cfg.output_dir = Some(PathBuf::from(v));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

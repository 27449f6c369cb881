//! Benchmark MDPs and behavior-policy sample generation.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64(seed)`; the
//! ChaCha stream id separates uses of one seed (see [`ENV_STREAM`] and
//! [`DATASET_STREAM`]). Every run seed therefore owns an independent,
//! platform-independent stream, and generated data is bit-reproducible from
//! `(seed, spec)`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::error::{Error, Result};
use crate::model::{FeatureVector, PolicyPair, TabularMdp, TransitionSample};

/// ChaCha stream used when constructing random environments.
pub const ENV_STREAM: u64 = 0;
/// ChaCha stream used when sampling datasets.
pub const DATASET_STREAM: u64 = 1;

/// Header of exported dataset CSV files.
pub const DATASET_HEADER: [&str; 7] = [
    "step",
    "state",
    "action",
    "reward",
    "next_state",
    "rho",
    "episode_end",
];

/// Seeded generator on a given stream.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    /// Trajectories under `π_b`, restarting from the start distribution
    /// after absorption.
    Sequential,
    /// Independent draws `s ~ ξ`, `a ~ π_b(·|s)`, `s′ ~ P(·|s, a)`.
    Iid,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Sequential => "sequential",
            SamplingMode::Iid => "iid",
        })
    }
}

impl FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sequential" | "seq" => Ok(SamplingMode::Sequential),
            "iid" | "i.i.d." => Ok(SamplingMode::Iid),
            other => Err(Error::InvalidModel(format!("unknown sampling mode '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DatasetSpec<'a> {
    pub mdp: &'a TabularMdp,
    pub policies: &'a PolicyPair,
    pub horizon: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

/// Two states, actions left/right moving deterministically to state 1/2,
/// zero rewards, γ = 0.9, features `[1, 2]`. Behavior is uniform, the target
/// always goes right.
pub fn build_two_state() -> (TabularMdp, PolicyPair) {
    let left = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
    let right = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
    let mdp = TabularMdp::new(
        vec![left, right],
        DMatrix::zeros(2, 2),
        0.9,
        DMatrix::from_column_slice(2, 1, &[1.0, 2.0]),
        vec![false; 2],
        DVector::from_element(2, 0.5),
    )
    .expect("two-state MDP is well formed");
    let behavior = DMatrix::from_element(2, 2, 0.5);
    let target = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
    let policies = PolicyPair::new(behavior, target).expect("two-state policies are well formed");
    (mdp, policies)
}

/// Number of states in the Boyan chain, including the absorbing state 0.
pub const BOYAN_STATES: usize = 14;

/// Boyan chain: states 0..=13 with 0 absorbing, episodes start at 13. From
/// `i ≥ 2` move to `i−1` or `i−2` with probability ½ each (reward −3); from 1
/// move to 0 (reward −2). Undiscounted, on-policy, four hat-function
/// features with anchors evenly spaced over `[0, 13]`.
pub fn build_boyan() -> (TabularMdp, PolicyPair) {
    let n = BOYAN_STATES;
    let last = (n - 1) as f64;
    let mut p = DMatrix::zeros(n, n);
    let mut r = DMatrix::zeros(n, 1);
    p[(0, 0)] = 1.0;
    p[(1, 0)] = 1.0;
    r[(1, 0)] = -2.0;
    for i in 2..n {
        p[(i, i - 1)] = 0.5;
        p[(i, i - 2)] = 0.5;
        r[(i, 0)] = -3.0;
    }
    // positions measured in units of the anchor spacing last/3
    let features = DMatrix::from_fn(n, 4, |i, j| {
        let pos = 3.0 * i as f64 / last;
        (1.0 - (pos - (3 - j) as f64).abs()).max(0.0)
    });
    let mut terminal = vec![false; n];
    terminal[0] = true;
    let mut start = DVector::zeros(n);
    start[n - 1] = 1.0;
    let mdp = TabularMdp::new(vec![p], r, 1.0, features, terminal, start)
        .expect("Boyan chain is well formed");
    let policies =
        PolicyPair::on_policy(DMatrix::from_element(n, 1, 1.0)).expect("single-action policy");
    (mdp, policies)
}

/// Conventional starting weights for the Baird experiment.
pub const BAIRD_INITIAL_THETA: [f64; 8] = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 1.0];

/// Baird's 7-state star. Action 0 ("dashed") moves uniformly to one of
/// states 0..=5, action 1 ("solid") moves to state 6. Zero rewards,
/// γ = 0.99, `φ(s_i) = 2e_i + e_8` for the six outer states and
/// `φ(s_7) = e_7 + 2e_8`. Behavior takes dashed with probability 6/7; the
/// target always takes solid.
pub fn build_baird() -> (TabularMdp, PolicyPair) {
    let n = 7;
    let dashed = DMatrix::from_fn(n, n, |_, j| if j < 6 { 1.0 / 6.0 } else { 0.0 });
    let solid = DMatrix::from_fn(n, n, |_, j| if j == 6 { 1.0 } else { 0.0 });
    let mut features = DMatrix::zeros(n, 8);
    for i in 0..6 {
        features[(i, i)] = 2.0;
        features[(i, 7)] = 1.0;
    }
    features[(6, 6)] = 1.0;
    features[(6, 7)] = 2.0;
    let mdp = TabularMdp::new(
        vec![dashed, solid],
        DMatrix::zeros(n, 2),
        0.99,
        features,
        vec![false; n],
        DVector::from_element(n, 1.0 / n as f64),
    )
    .expect("Baird star is well formed");
    let behavior = DMatrix::from_fn(n, 2, |_, a| if a == 0 { 6.0 / 7.0 } else { 1.0 / 7.0 });
    let target = DMatrix::from_fn(n, 2, |_, a| if a == 1 { 1.0 } else { 0.0 });
    let policies = PolicyPair::new(behavior, target).expect("Baird policies are well formed");
    (mdp, policies)
}

/// Random MDP: `P(s′|s,a) ∝ U[0,1] + 10⁻⁵`; behavior, target and start
/// distributions drawn the same way; rewards `R(s,a) ~ U[0,1]`; `d−1`
/// features `~ U[0,1]` plus a constant last feature; γ = 0.95.
pub fn build_random_mdp(
    n_states: usize,
    n_actions: usize,
    d: usize,
    seed: u64,
) -> Result<(TabularMdp, PolicyPair)> {
    if n_states < 2 || n_actions < 1 || d < 2 {
        return Err(Error::InvalidModel(format!(
            "random MDP needs n_states >= 2, n_actions >= 1, d >= 2 (got {n_states}, {n_actions}, {d})"
        )));
    }
    let mut rng = rng_for(seed, ENV_STREAM);
    let transitions: Vec<DMatrix<f64>> = (0..n_actions)
        .map(|_| random_stochastic(&mut rng, n_states, n_states))
        .collect();
    let behavior = random_stochastic(&mut rng, n_states, n_actions);
    let target = random_stochastic(&mut rng, n_states, n_actions);
    let start = random_stochastic(&mut rng, 1, n_states).row(0).transpose();
    let reward = DMatrix::from_fn(n_states, n_actions, |_, _| rng.random::<f64>());
    let features = DMatrix::from_fn(n_states, d, |_, j| {
        if j == d - 1 {
            1.0
        } else {
            rng.random::<f64>()
        }
    });
    let mdp = TabularMdp::new(transitions, reward, 0.95, features, vec![false; n_states], start)?;
    let policies = PolicyPair::new(behavior, target)?;
    Ok((mdp, policies))
}

/// Rows `∝ U[0,1] + 10⁻⁵`, normalized; the last entry absorbs rounding so
/// each row sums to one to within a few ulps.
fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() + 1e-5);
    for mut row in m.row_iter_mut() {
        let total = row.sum();
        row /= total;
    }
    m
}

/// Inverse-CDF draw from a probability row.
fn sample_index<'a>(rng: &mut ChaCha8Rng, probs: impl IntoIterator<Item = &'a f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Lazily generated stream of behavior-policy samples.
pub struct SampleStream<'a> {
    mdp: &'a TabularMdp,
    policies: &'a PolicyPair,
    mode: SamplingMode,
    rng: ChaCha8Rng,
    remaining: usize,
    state: usize,
    iid_weights: Option<DVector<f64>>,
}

impl<'a> SampleStream<'a> {
    pub fn new(spec: &DatasetSpec<'a>) -> Result<Self> {
        if spec.horizon == 0 {
            return Err(Error::InvalidModel("horizon must be positive".into()));
        }
        spec.policies.check_compatible(spec.mdp)?;
        let mut rng = rng_for(spec.seed, DATASET_STREAM);
        let iid_weights = match spec.mode {
            SamplingMode::Iid => Some(analysis::stationary_distribution(spec.mdp, spec.policies)?),
            SamplingMode::Sequential => None,
        };
        let state = match &iid_weights {
            Some(_) => 0,
            None => sample_index(&mut rng, spec.mdp.start_distribution().iter()),
        };
        Ok(SampleStream {
            mdp: spec.mdp,
            policies: spec.policies,
            mode: spec.mode,
            rng,
            remaining: spec.horizon,
            state,
            iid_weights,
        })
    }

    fn draw(&mut self) -> Result<TransitionSample> {
        let mdp = self.mdp;
        let s = match &self.iid_weights {
            Some(w) => sample_index(&mut self.rng, w.iter()),
            None => self.state,
        };
        let a = sample_index(&mut self.rng, self.policies.behavior().row(s).iter());
        let rho = self.policies.importance_ratio(s, a)?;
        let next = sample_index(&mut self.rng, mdp.transition(a).row(s).iter());
        let episode_end = mdp.is_terminal(next);
        let phi_next = if episode_end {
            FeatureVector::zeros(mdp.dim())
        } else {
            mdp.feature(next)
        };
        if self.mode == SamplingMode::Sequential {
            self.state = if episode_end {
                sample_index(&mut self.rng, mdp.start_distribution().iter())
            } else {
                next
            };
        }
        Ok(TransitionSample {
            phi: mdp.feature(s),
            action: a,
            reward: mdp.reward(s, a),
            phi_next,
            rho,
            state_index: s,
            next_state_index: next,
            episode_end,
        })
    }
}

impl Iterator for SampleStream<'_> {
    type Item = Result<TransitionSample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.draw())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Generates `spec.horizon` samples.
pub fn generate_dataset(spec: &DatasetSpec<'_>) -> Result<Vec<TransitionSample>> {
    SampleStream::new(spec)?.collect()
}

/// Sidecar metadata path for an exported dataset (`<path>.meta`).
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes samples as CSV plus a `key = value` sidecar describing the spec.
pub fn export_dataset(path: &Path, spec: &DatasetSpec<'_>, samples: &[TransitionSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DATASET_HEADER)?;
    for (step, s) in samples.iter().enumerate() {
        w.write_record([
            step.to_string(),
            s.state_index.to_string(),
            s.action.to_string(),
            s.reward.to_string(),
            s.next_state_index.to_string(),
            s.rho.to_string(),
            u8::from(s.episode_end).to_string(),
        ])?;
    }
    w.flush()?;

    let mut meta = BufWriter::new(File::create(metadata_path(path))?);
    writeln!(meta, "# dataset sidecar")?;
    writeln!(meta, "mode = {}", spec.mode)?;
    writeln!(meta, "seed = {}", spec.seed)?;
    writeln!(meta, "horizon = {}", spec.horizon)?;
    writeln!(meta, "n_states = {}", spec.mdp.n_states())?;
    writeln!(meta, "n_actions = {}", spec.mdp.n_actions())?;
    writeln!(meta, "d = {}", spec.mdp.dim())?;
    writeln!(meta, "gamma = {}", spec.mdp.gamma())?;
    writeln!(meta, "samples = {}", samples.len())?;
    meta.flush()?;
    Ok(())
}

/// Reads the `key = value` sidecar of an exported dataset.
pub fn read_metadata(csv_path: &Path) -> Result<Vec<(String, String)>> {
    let file = BufReader::new(File::open(metadata_path(csv_path))?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Dataset(format!("bad metadata line '{line}'")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Reads an exported dataset back, rebuilding feature vectors from `mdp`.
pub fn import_dataset(path: &Path, mdp: &TabularMdp) -> Result<Vec<TransitionSample>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != DATASET_HEADER {
        return Err(Error::Dataset(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<&str> {
            rec.get(k)
                .ok_or_else(|| Error::Dataset(format!("row {i}: missing column {}", DATASET_HEADER[k])))
        };
        let parse_usize = |k: usize| -> Result<usize> {
            field(k)?
                .parse()
                .map_err(|_| Error::Dataset(format!("row {i}: bad {}", DATASET_HEADER[k])))
        };
        let parse_f64 = |k: usize| -> Result<f64> {
            field(k)?
                .parse()
                .map_err(|_| Error::Dataset(format!("row {i}: bad {}", DATASET_HEADER[k])))
        };
        let state = parse_usize(1)?;
        let action = parse_usize(2)?;
        let next = parse_usize(4)?;
        if state >= mdp.n_states() || next >= mdp.n_states() || action >= mdp.n_actions() {
            return Err(Error::Dataset(format!("row {i}: index out of range")));
        }
        let episode_end = match field(6)? {
            "0" => false,
            "1" => true,
            other => return Err(Error::Dataset(format!("row {i}: bad episode_end '{other}'"))),
        };
        let phi_next = if mdp.is_terminal(next) {
            FeatureVector::zeros(mdp.dim())
        } else {
            mdp.feature(next)
        };
        out.push(TransitionSample {
            phi: mdp.feature(state),
            action,
            reward: parse_f64(3)?,
            phi_next,
            rho: parse_f64(5)?,
            state_index: state,
            next_state_index: next,
            episode_end,
        });
    }
    Ok(out)
}

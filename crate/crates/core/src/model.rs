//! Shared domain types: feature vectors, tabular MDPs, policy pairs and
//! transition samples.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance on row sums of stochastic tables.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Dense feature activations `φ(s)` for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("feature vector has non-finite entries".into()));
        }
        Ok(FeatureVector(entries))
    }

    pub fn zeros(d: usize) -> Self {
        FeatureVector(vec![0.0; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

impl std::ops::Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Linear value estimate `φᵀθ`.
pub fn value_estimate(theta: &[f64], phi: &FeatureVector) -> Result<f64> {
    if theta.len() != phi.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.len(),
            got: theta.len(),
        });
    }
    Ok(theta.iter().zip(phi.iter()).map(|(t, p)| t * p).sum())
}

/// Finite MDP with linear features.
///
/// Terminal states must self-loop under every action with zero reward. The
/// start distribution is used to begin trajectories and to restart them after
/// absorption; it must put no mass on terminal states.
#[derive(Clone, Debug)]
pub struct TabularMdp {
    transitions: Vec<DMatrix<f64>>,
    reward: DMatrix<f64>,
    gamma: f64,
    features: DMatrix<f64>,
    terminal: Vec<bool>,
    start: DVector<f64>,
}

impl TabularMdp {
    pub fn new(
        transitions: Vec<DMatrix<f64>>,
        reward: DMatrix<f64>,
        gamma: f64,
        features: DMatrix<f64>,
        terminal: Vec<bool>,
        start: DVector<f64>,
    ) -> Result<Self> {
        let n_actions = transitions.len();
        if n_actions == 0 {
            return Err(Error::InvalidModel("at least one action is required".into()));
        }
        let n_states = transitions[0].nrows();
        if n_states == 0 {
            return Err(Error::InvalidModel("at least one state is required".into()));
        }
        for (a, p) in transitions.iter().enumerate() {
            if p.nrows() != n_states || p.ncols() != n_states {
                return Err(Error::InvalidModel(format!(
                    "transition matrix for action {a} is {}x{}, expected {n_states}x{n_states}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            check_stochastic_rows(p, &format!("transition matrix for action {a}"))?;
        }
        if reward.nrows() != n_states || reward.ncols() != n_actions {
            return Err(Error::InvalidModel(format!(
                "reward table is {}x{}, expected {n_states}x{n_actions}",
                reward.nrows(),
                reward.ncols()
            )));
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidModel("reward table has non-finite entries".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidModel(format!("discount {gamma} outside [0, 1]")));
        }
        if features.nrows() != n_states || features.ncols() == 0 {
            return Err(Error::InvalidModel(format!(
                "feature matrix is {}x{}, expected {n_states} rows and at least one column",
                features.nrows(),
                features.ncols()
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("feature matrix has non-finite entries".into()));
        }
        if terminal.len() != n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states,
                got: terminal.len(),
            });
        }
        for (s, _) in terminal.iter().enumerate().filter(|(_, &t)| t) {
            for (a, p) in transitions.iter().enumerate() {
                if (p[(s, s)] - 1.0).abs() > STOCHASTIC_TOL || reward[(s, a)] != 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "terminal state {s} must self-loop with zero reward under action {a}"
                    )));
                }
            }
        }
        if start.len() != n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states,
                got: start.len(),
            });
        }
        check_distribution(start.as_slice(), "start distribution")?;
        if start.iter().zip(&terminal).any(|(&p, &t)| t && p > 0.0) {
            return Err(Error::InvalidModel("start distribution puts mass on a terminal state".into()));
        }
        Ok(TabularMdp {
            transitions,
            reward,
            gamma,
            features,
            terminal,
            start,
        })
    }

    pub fn n_states(&self) -> usize {
        self.reward.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.reward.ncols()
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Transition matrix `P^a`.
    pub fn transition(&self, action: usize) -> &DMatrix<f64> {
        &self.transitions[action]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[(state, action)]
    }

    pub fn rewards(&self) -> &DMatrix<f64> {
        &self.reward
    }

    /// The `|S|×d` feature matrix `Φ`.
    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn feature(&self, state: usize) -> FeatureVector {
        FeatureVector(self.features.row(state).iter().copied().collect())
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    pub fn is_episodic(&self) -> bool {
        self.terminal.iter().any(|&t| t)
    }

    pub fn start_distribution(&self) -> &DVector<f64> {
        &self.start
    }

    /// Copy of this MDP with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        TabularMdp::new(
            self.transitions.clone(),
            self.reward.clone(),
            gamma,
            self.features.clone(),
            self.terminal.clone(),
            self.start.clone(),
        )
    }

    /// Copy of this MDP with a different reward table.
    pub fn with_rewards(&self, reward: DMatrix<f64>) -> Result<Self> {
        TabularMdp::new(
            self.transitions.clone(),
            reward,
            self.gamma,
            self.features.clone(),
            self.terminal.clone(),
            self.start.clone(),
        )
    }

    /// Copy of this MDP with a different feature matrix.
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Self> {
        TabularMdp::new(
            self.transitions.clone(),
            self.reward.clone(),
            self.gamma,
            features,
            self.terminal.clone(),
            self.start.clone(),
        )
    }
}

/// Behavior policy `π_b` and target policy `π` as `|S|×|A|` tables.
#[derive(Clone, Debug)]
pub struct PolicyPair {
    behavior: DMatrix<f64>,
    target: DMatrix<f64>,
}

impl PolicyPair {
    pub fn new(behavior: DMatrix<f64>, target: DMatrix<f64>) -> Result<Self> {
        if behavior.shape() != target.shape() {
            return Err(Error::InvalidModel(format!(
                "behavior table is {:?} but target table is {:?}",
                behavior.shape(),
                target.shape()
            )));
        }
        check_stochastic_rows(&behavior, "behavior policy")?;
        check_stochastic_rows(&target, "target policy")?;
        for s in 0..target.nrows() {
            for a in 0..target.ncols() {
                if target[(s, a)] > 0.0 && behavior[(s, a)] <= 0.0 {
                    return Err(Error::CoverageViolation { state: s, action: a });
                }
            }
        }
        Ok(PolicyPair { behavior, target })
    }

    /// Both policies equal to `policy`.
    pub fn on_policy(policy: DMatrix<f64>) -> Result<Self> {
        PolicyPair::new(policy.clone(), policy)
    }

    pub fn behavior(&self) -> &DMatrix<f64> {
        &self.behavior
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn n_states(&self) -> usize {
        self.behavior.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.behavior.ncols()
    }

    pub fn is_on_policy(&self) -> bool {
        self.behavior == self.target
    }

    /// `ρ = π(a|s) / π_b(a|s)`.
    pub fn importance_ratio(&self, state: usize, action: usize) -> Result<f64> {
        let b = self.behavior[(state, action)];
        if b <= 0.0 {
            return Err(Error::CoverageViolation { state, action });
        }
        let t = self.target[(state, action)];
        if t == b {
            return Ok(1.0);
        }
        Ok(t / b)
    }

    /// Checks that the tables match the MDP's state and action counts.
    pub fn check_compatible(&self, mdp: &TabularMdp) -> Result<()> {
        if self.n_states() != mdp.n_states() || self.n_actions() != mdp.n_actions() {
            return Err(Error::InvalidModel(format!(
                "policy tables are {}x{} but the MDP has {} states and {} actions",
                self.n_states(),
                self.n_actions(),
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }
}

/// One experience tuple generated under the behavior policy.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionSample {
    pub phi: FeatureVector,
    pub action: usize,
    pub reward: f64,
    /// All zeros when the successor is terminal.
    pub phi_next: FeatureVector,
    pub rho: f64,
    pub state_index: usize,
    pub next_state_index: usize,
    pub episode_end: bool,
}

fn check_stochastic_rows(m: &DMatrix<f64>, what: &str) -> Result<()> {
    for (i, row) in m.row_iter().enumerate() {
        if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidModel(format!("{what}: row {i} has invalid probabilities")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidModel(format!("{what}: row {i} sums to {sum}")));
        }
    }
    Ok(())
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidModel(format!("{what} has invalid probabilities")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {sum}")));
    }
    Ok(())
}

//! Incremental linear policy-evaluation learners behind a uniform step
//! interface.
//!
//! Every step touches only length-`d` vectors. Samples carry the
//! importance ratio ρ; terminal successors carry an all-zero `phi_next`.

mod kernels;
mod omega;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::TransitionSample;
use kernels::{axpy, dot, max_abs, touch};

pub use omega::{compute_omega, omega_from_delta, DEGENERATE_SQ_NORM};

/// `‖θ‖∞` above which a run is declared diverged and frozen.
pub const DIVERGENCE_BOUND: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Td,
    TdLambda,
    Setd,
    SetdLambda,
    Etd,
    Gtd2,
    Tdc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Td,
        Algorithm::TdLambda,
        Algorithm::Setd,
        Algorithm::SetdLambda,
        Algorithm::Etd,
        Algorithm::Gtd2,
        Algorithm::Tdc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Td => "td",
            Algorithm::TdLambda => "td_lambda",
            Algorithm::Setd => "setd",
            Algorithm::SetdLambda => "setd_lambda",
            Algorithm::Etd => "etd",
            Algorithm::Gtd2 => "gtd2",
            Algorithm::Tdc => "tdc",
        }
    }

    /// Whether the secondary step-size ratio μ affects the updates.
    pub fn uses_mu(self) -> bool {
        matches!(self, Algorithm::Gtd2 | Algorithm::Tdc)
    }

    /// Whether the trace parameter λ affects the updates.
    pub fn uses_lambda(self) -> bool {
        matches!(self, Algorithm::TdLambda | Algorithm::SetdLambda)
    }

    /// ETD needs consecutive samples to chain (`s′_t = s_{t+1}`).
    pub fn requires_sequential(self) -> bool {
        matches!(self, Algorithm::Etd)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '(', ')'], "_");
        let norm = norm.trim_end_matches('_');
        Ok(match norm {
            "td" | "td0" | "td_0" => Algorithm::Td,
            "td_lambda" | "tdlambda" => Algorithm::TdLambda,
            "setd" => Algorithm::Setd,
            "setd_lambda" | "setdlambda" => Algorithm::SetdLambda,
            "etd" => Algorithm::Etd,
            "gtd2" => Algorithm::Gtd2,
            "tdc" => Algorithm::Tdc,
            _ => return Err(Error::InvalidModel(format!("unknown algorithm '{s}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperparams {
    /// Primary step size α ∈ (0, 1].
    pub alpha: f64,
    /// Secondary ratio, β = α·μ for GTD2/TDC.
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl Hyperparams {
    pub fn new(alpha: f64, mu: f64, lambda: f64, gamma: f64) -> Result<Self> {
        let h = Hyperparams {
            alpha,
            mu,
            lambda,
            gamma,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidModel(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidModel(format!("mu {} must be finite and >= 0", self.mu)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidModel(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidModel(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.alpha * self.mu
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// TD error `r + γφ′ᵀθ − φᵀθ` at the pre-update weights (NaN once frozen).
    pub delta: f64,
    /// Emphasis used by SETD variants, 0 for the other algorithms.
    pub omega: f64,
    pub diverged: bool,
}

/// Mutable learner state owned by a single run.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    algorithm: Algorithm,
    theta: Vec<f64>,
    w: Vec<f64>,
    trace: Vec<f64>,
    followon: f64,
    step_count: u64,
    diverged: bool,
    // successor of the previous sample, for ETD's sequential check
    expected_state: Option<usize>,
}

impl LearnerState {
    /// Zero-initialized weights of dimension `d`.
    pub fn new(algorithm: Algorithm, d: usize) -> Self {
        LearnerState::with_theta(algorithm, vec![0.0; d])
    }

    pub fn with_theta(algorithm: Algorithm, theta: Vec<f64>) -> Self {
        let d = theta.len();
        LearnerState {
            algorithm,
            theta,
            w: vec![0.0; d],
            trace: vec![0.0; d],
            followon: 1.0,
            step_count: 0,
            diverged: false,
            expected_state: None,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Auxiliary weights of GTD2/TDC.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn set_w(&mut self, w: Vec<f64>) -> Result<()> {
        if w.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                got: w.len(),
            });
        }
        self.w = w;
        Ok(())
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    /// ETD follow-on trace `F` that the next step will use.
    pub fn followon(&self) -> f64 {
        self.followon
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Clears traces and the follow-on trace; weights are kept.
    pub fn reset(&mut self) {
        self.trace.iter_mut().for_each(|e| *e = 0.0);
        self.followon = 1.0;
        self.expected_state = None;
    }

    /// Applies one update with the algorithm this state was created for.
    pub fn step(&mut self, sample: &TransitionSample, h: &Hyperparams) -> Result<StepOutcome> {
        match self.algorithm {
            Algorithm::Td | Algorithm::TdLambda => td_lambda_step(self, sample, h),
            Algorithm::Setd => setd_step(self, sample, h),
            Algorithm::SetdLambda => setd_lambda_step(self, sample, h),
            Algorithm::Etd => etd_step(self, sample, h),
            Algorithm::Gtd2 => gtd2_step(self, sample, h),
            Algorithm::Tdc => tdc_step(self, sample, h),
        }
    }

    fn begin(&self, allowed: &[Algorithm], sample: &TransitionSample) -> Result<()> {
        if !allowed.contains(&self.algorithm) {
            return Err(Error::ContractViolation(format!(
                "{} step applied to a {} learner",
                allowed[0], self.algorithm
            )));
        }
        let d = self.theta.len();
        for got in [sample.phi.len(), sample.phi_next.len()] {
            if got != d {
                return Err(Error::DimensionMismatch { expected: d, got });
            }
        }
        Ok(())
    }

    fn frozen(&self) -> Option<StepOutcome> {
        self.diverged.then_some(StepOutcome {
            delta: f64::NAN,
            omega: 0.0,
            diverged: true,
        })
    }

    fn finish(&mut self, delta: f64, omega: f64) -> StepOutcome {
        self.step_count += 1;
        let bound = max_abs(&self.theta);
        if bound.is_nan() || bound > DIVERGENCE_BOUND || self.w.iter().any(|x| !x.is_finite()) {
            self.diverged = true;
        }
        StepOutcome {
            delta,
            omega,
            diverged: self.diverged,
        }
    }
}

#[inline]
fn td_error(theta: &[f64], s: &TransitionSample, gamma: f64) -> f64 {
    s.reward + gamma * dot(&s.phi_next, theta) - dot(&s.phi, theta)
}

/// SETD: `θ ← θ + α·ρ·ω·δ·φ` with ω from [`compute_omega`].
pub fn setd_step(st: &mut LearnerState, s: &TransitionSample, h: &Hyperparams) -> Result<StepOutcome> {
    st.begin(&[Algorithm::Setd], s)?;
    if let Some(out) = st.frozen() {
        return Ok(out);
    }
    let delta = td_error(&st.theta, s, h.gamma);
    let omega = compute_omega(&s.phi, &s.phi_next, h.gamma);
    let scale = h.alpha * delta;
    touch(st.theta.len());
    for (t, p) in st.theta.iter_mut().zip(s.phi.iter()) {
        *t += scale * (s.rho * (omega * p));
    }
    Ok(st.finish(delta, omega))
}

/// SETD(λ): `e ← ρ(λγe + ωφ)`, `θ ← θ + α·δ·e`; the trace is cleared at
/// episode ends.
pub fn setd_lambda_step(
    st: &mut LearnerState,
    s: &TransitionSample,
    h: &Hyperparams,
) -> Result<StepOutcome> {
    st.begin(&[Algorithm::SetdLambda], s)?;
    if let Some(out) = st.frozen() {
        return Ok(out);
    }
    let delta = td_error(&st.theta, s, h.gamma);
    let omega = compute_omega(&s.phi, &s.phi_next, h.gamma);
    let decay = h.lambda * h.gamma;
    touch(st.trace.len());
    for (e, p) in st.trace.iter_mut().zip(s.phi.iter()) {
        *e = s.rho * (decay * *e + omega * p);
    }
    axpy(&mut st.theta, h.alpha * delta, &st.trace);
    if s.episode_end {
        st.trace.iter_mut().for_each(|e| *e = 0.0);
    }
    Ok(st.finish(delta, omega))
}

/// Importance-weighted TD(λ): `e ← ρ(λγe + φ)`, `θ ← θ + α·δ·e`.
///
/// A [`Algorithm::Td`] learner always runs with λ = 0.
pub fn td_lambda_step(
    st: &mut LearnerState,
    s: &TransitionSample,
    h: &Hyperparams,
) -> Result<StepOutcome> {
    st.begin(&[Algorithm::TdLambda, Algorithm::Td], s)?;
    if let Some(out) = st.frozen() {
        return Ok(out);
    }
    let delta = td_error(&st.theta, s, h.gamma);
    let scale = h.alpha * delta;
    if st.algorithm == Algorithm::Td {
        touch(st.theta.len());
        for (t, p) in st.theta.iter_mut().zip(s.phi.iter()) {
            *t += scale * (s.rho * p);
        }
    } else {
        let decay = h.lambda * h.gamma;
        touch(st.trace.len());
        for (e, p) in st.trace.iter_mut().zip(s.phi.iter()) {
            *e = s.rho * (decay * *e + p);
        }
        axpy(&mut st.theta, scale, &st.trace);
        if s.episode_end {
            st.trace.iter_mut().for_each(|e| *e = 0.0);
        }
    }
    Ok(st.finish(delta, 0.0))
}

/// Emphatic TD(0): `θ ← θ + α·F·ρ·δ·φ`, then `F ← 1 + γρF` (reset to 1 at
/// episode ends).
///
/// Samples must chain: each sample's state must be the previous sample's
/// successor unless the previous sample ended an episode.
pub fn etd_step(st: &mut LearnerState, s: &TransitionSample, h: &Hyperparams) -> Result<StepOutcome> {
    st.begin(&[Algorithm::Etd], s)?;
    if let Some(expected) = st.expected_state {
        if expected != s.state_index {
            return Err(Error::ContractViolation(format!(
                "ETD requires sequential samples: expected state {expected}, got {}",
                s.state_index
            )));
        }
    }
    if let Some(out) = st.frozen() {
        return Ok(out);
    }
    let delta = td_error(&st.theta, s, h.gamma);
    axpy(&mut st.theta, h.alpha * st.followon * s.rho * delta, &s.phi);
    if s.episode_end {
        st.followon = 1.0;
        st.expected_state = None;
    } else {
        st.followon = 1.0 + h.gamma * s.rho * st.followon;
        st.expected_state = Some(s.next_state_index);
    }
    Ok(st.finish(delta, 0.0))
}

/// GTD2 (off-policy form with ρ on the TD error in the secondary update):
/// `θ ← θ + αρ(φ − γφ′)(φᵀw)`, `w ← w + β(ρδ − φᵀw)φ`.
pub fn gtd2_step(st: &mut LearnerState, s: &TransitionSample, h: &Hyperparams) -> Result<StepOutcome> {
    st.begin(&[Algorithm::Gtd2], s)?;
    if let Some(out) = st.frozen() {
        return Ok(out);
    }
    let delta = td_error(&st.theta, s, h.gamma);
    let pw = dot(&s.phi, &st.w);
    let a = h.alpha * s.rho * pw;
    axpy(&mut st.theta, a, &s.phi);
    axpy(&mut st.theta, -a * h.gamma, &s.phi_next);
    axpy(&mut st.w, h.beta() * (s.rho * delta - pw), &s.phi);
    Ok(st.finish(delta, 0.0))
}

/// TDC: `θ ← θ + αρ(δφ − γφ′(φᵀw))`, `w` updated as in GTD2.
pub fn tdc_step(st: &mut LearnerState, s: &TransitionSample, h: &Hyperparams) -> Result<StepOutcome> {
    st.begin(&[Algorithm::Tdc], s)?;
    if let Some(out) = st.frozen() {
        return Ok(out);
    }
    let delta = td_error(&st.theta, s, h.gamma);
    let pw = dot(&s.phi, &st.w);
    axpy(&mut st.theta, h.alpha * s.rho * delta, &s.phi);
    axpy(&mut st.theta, -h.alpha * s.rho * h.gamma * pw, &s.phi_next);
    axpy(&mut st.w, h.beta() * (s.rho * delta - pw), &s.phi);
    Ok(st.finish(delta, 0.0))
}

#[cfg(test)]
mod tests;

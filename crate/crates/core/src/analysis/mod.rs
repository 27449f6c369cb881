//! Exact linear-algebraic ground truth for tabular MDPs with linear features.
//!
//! Episodic chains are handled by truncating bootstrapping at terminal
//! states: in the effective kernels every transition into a terminal state,
//! and every row of a terminal state, is zeroed. Terminal values are then 0
//! and `L_π = I − γP_π` stays invertible at γ = 1.

mod emphasis;
mod oracle;
mod projection;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{PolicyPair, TabularMdp};

pub use emphasis::{
    etd_omega, expected_emphasis, frobenius_criterion, oblique_diagnostics, relaxed_objective,
    setd_omega, x_distance, ObliqueDiagnostics,
};
pub use oracle::{omega_oracle, rank1_norms, Rank1Norms};
pub use projection::{
    best_approximation, criterion_reconstruction, fixed_point_solve, optimal_x, projector,
};

/// Markov chains induced by the two policies, plus `ξ`, `R_π` and `L_π`.
#[derive(Clone, Debug)]
pub struct ChainModel {
    /// Effective transition matrix under the target policy.
    pub p_pi: DMatrix<f64>,
    /// Effective transition matrix under the behavior policy.
    pub p_b: DMatrix<f64>,
    /// Expected one-step reward under the target policy.
    pub r_pi: DVector<f64>,
    /// Stationary (or per-episode visitation) distribution of the behavior chain.
    pub xi: DVector<f64>,
    /// `I − γP_π`.
    pub l_pi: DMatrix<f64>,
    /// Feature matrix `Φ`.
    pub phi: DMatrix<f64>,
    pub gamma: f64,
    pub episodic: bool,
}

impl ChainModel {
    pub fn new(mdp: &TabularMdp, policies: &PolicyPair) -> Result<Self> {
        policies.check_compatible(mdp)?;
        let n = mdp.n_states();
        let mut p_pi = induced_kernel(mdp, policies.target());
        let mut p_b = induced_kernel(mdp, policies.behavior());
        let mut r_pi = DVector::from_fn(n, |s, _| {
            (0..mdp.n_actions())
                .map(|a| policies.target()[(s, a)] * mdp.reward(s, a))
                .sum()
        });
        let episodic = mdp.is_episodic();
        if episodic {
            for (s, _) in mdp.terminal_mask().iter().enumerate().filter(|(_, &t)| t) {
                for m in [&mut p_pi, &mut p_b] {
                    m.row_mut(s).fill(0.0);
                    m.column_mut(s).fill(0.0);
                }
                r_pi[s] = 0.0;
            }
        }
        let xi = if episodic {
            episode_visitation(&p_b, mdp.start_distribution())?
        } else {
            stationary_of(&p_b)?
        };
        let l_pi = DMatrix::identity(n, n) - &p_pi * mdp.gamma();
        Ok(ChainModel {
            p_pi,
            p_b,
            r_pi,
            xi,
            l_pi,
            phi: mdp.features().clone(),
            gamma: mdp.gamma(),
            episodic,
        })
    }

    pub fn n_states(&self) -> usize {
        self.xi.len()
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    /// `Ξ` as a dense diagonal matrix.
    pub fn xi_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.xi)
    }

    /// `ΞM` without forming `Ξ`.
    pub fn xi_times(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (mut row, &x) in out.row_iter_mut().zip(self.xi.iter()) {
            row *= x;
        }
        out
    }

    /// `C = ΦᵀΞΦ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.phi.transpose() * self.xi_times(&self.phi)
    }

    /// `Λ = L_πΦ`; row `s` is the expected `Δφ̄(s) = φ(s) − γ E_π[φ(s′)]`.
    pub fn lambda(&self) -> DMatrix<f64> {
        &self.l_pi * &self.phi
    }

    /// Solves `L_π V = R_π`.
    pub fn true_value(&self) -> Result<DVector<f64>> {
        let v = linalg::solve(&self.l_pi, &DMatrix::from_column_slice(self.n_states(), 1, self.r_pi.as_slice()), "L_pi")?;
        Ok(v.column(0).into_owned())
    }

    /// Bellman operator `T v = R_π + γP_π v`.
    pub fn bellman(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.r_pi + &self.p_pi * v * self.gamma
    }
}

/// `P(s, s′) = Σ_a π(a|s) P^a(s, s′)`.
fn induced_kernel(mdp: &TabularMdp, policy: &DMatrix<f64>) -> DMatrix<f64> {
    let n = mdp.n_states();
    let mut p = DMatrix::zeros(n, n);
    for a in 0..mdp.n_actions() {
        let pa = mdp.transition(a);
        for s in 0..n {
            let w = policy[(s, a)];
            if w != 0.0 {
                for j in 0..n {
                    p[(s, j)] += w * pa[(s, j)];
                }
            }
        }
    }
    p
}

/// Unique stationary distribution of a stochastic matrix.
///
/// Solves `(I − Pᵀ + 11ᵀ) ξ = 1`, which is nonsingular exactly when the
/// stationary distribution is unique; periodic irreducible chains are fine.
fn stationary_of(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let a = DMatrix::identity(n, n) - p.transpose() + DMatrix::from_element(n, n, 1.0);
    let x = linalg::solve(&a, &DMatrix::from_element(n, 1, 1.0), "I - P^T + 11^T").map_err(|_| {
        Error::NoStationaryDistribution("behavior chain has more than one closed class".into())
    })?;
    let mut xi = x.column(0).into_owned();
    if xi.iter().any(|&v| !v.is_finite() || v < -1e-9) {
        return Err(Error::NoStationaryDistribution(
            "linear solve produced an invalid distribution".into(),
        ));
    }
    xi.iter_mut().for_each(|v| *v = v.max(0.0));
    let total = xi.sum();
    xi /= total;
    let residual = (p.transpose() * &xi - &xi).amax();
    if residual > 1e-9 {
        return Err(Error::NoStationaryDistribution(format!(
            "stationarity residual {residual:e}"
        )));
    }
    Ok(xi)
}

/// Normalized expected state visitation of one episode from `start`, for a
/// substochastic (terminal-truncated) kernel.
fn episode_visitation(q: &DMatrix<f64>, start: &DVector<f64>) -> Result<DVector<f64>> {
    let n = q.nrows();
    let a = DMatrix::identity(n, n) - q.transpose();
    let visits = linalg::solve(&a, &DMatrix::from_column_slice(n, 1, start.as_slice()), "I - Q^T")
        .map_err(|_| {
            Error::NoStationaryDistribution("episodes do not terminate with probability one".into())
        })?;
    let visits = visits.column(0).into_owned();
    let total = visits.sum();
    if total.is_nan() || total <= 0.0 || visits.iter().any(|&v| v < -1e-9) {
        return Err(Error::NoStationaryDistribution("invalid episode visitation".into()));
    }
    Ok(visits.map(|v| v.max(0.0) / total))
}

/// Stationary distribution `ξ` of the behavior chain (per-episode visitation
/// for episodic MDPs).
pub fn stationary_distribution(mdp: &TabularMdp, policies: &PolicyPair) -> Result<DVector<f64>> {
    Ok(ChainModel::new(mdp, policies)?.xi)
}

/// True value `V_π`, the solution of `L_π V = R_π`.
pub fn true_value(mdp: &TabularMdp, policies: &PolicyPair) -> Result<DVector<f64>> {
    ChainModel::new(mdp, policies)?.true_value()
}

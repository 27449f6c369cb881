//! Diagonal emphasis matrices Ω and how well `ΞΩΦ` approximates `X*`.

use nalgebra::{DMatrix, DVector};

use super::ChainModel;
use crate::error::{Error, Result};
use crate::learners::omega_from_delta;
use crate::linalg;
use crate::model::{PolicyPair, TabularMdp};

/// Diagnostics for one diagonal weighting `Ω` on a given MDP.
#[derive(Clone, Debug)]
pub struct ObliqueDiagnostics {
    pub x_star: DMatrix<f64>,
    /// Diagonal of `Ω`.
    pub omega: DVector<f64>,
    /// `ΞΩΦ`.
    pub x_of_omega: DMatrix<f64>,
    /// `‖ΛᵀΞΩΦ − C‖²_F`.
    pub criterion: f64,
    /// `‖ΞΩΦ − X*‖₂` (spectral norm).
    pub x_distance: f64,
    pub c: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
}

/// Per-state SETD emphasis `ω(s) = max(Δφ̄ᵀφ / ‖Δφ̄‖², 0)` using the
/// expected next feature under the target policy.
pub fn setd_omega(mdp: &TabularMdp, policies: &PolicyPair) -> Result<DVector<f64>> {
    Ok(ChainModel::new(mdp, policies)?.setd_omega())
}

/// Diagonal of `Ω_E`, `f = (I − γP_πᵀ)⁻¹ξ`.
pub fn etd_omega(mdp: &TabularMdp, policies: &PolicyPair) -> Result<DVector<f64>> {
    ChainModel::new(mdp, policies)?.etd_omega()
}

/// Asymptotic expected follow-on trace per state, `f(s)/ξ(s)` (0 where ξ = 0).
pub fn expected_emphasis(mdp: &TabularMdp, policies: &PolicyPair) -> Result<DVector<f64>> {
    let chain = ChainModel::new(mdp, policies)?;
    let f = chain.etd_omega()?;
    Ok(f.zip_map(&chain.xi, |f, x| if x > 0.0 { f / x } else { 0.0 }))
}

/// `‖ΛᵀΞΩΦ − C‖²_F` for the diagonal `omega`.
pub fn frobenius_criterion(mdp: &TabularMdp, policies: &PolicyPair, omega: &DVector<f64>) -> Result<f64> {
    ChainModel::new(mdp, policies)?.frobenius_criterion(omega)
}

/// Spectral norm `‖ΞΩΦ − X*‖₂`.
pub fn x_distance(mdp: &TabularMdp, policies: &PolicyPair, omega: &DVector<f64>) -> Result<f64> {
    let chain = ChainModel::new(mdp, policies)?;
    chain.x_distance(omega, &chain.optimal_x()?)
}

/// State-separable relaxation `Σ_s ξ(s)·‖ω(s)Δφ̄(s)φ(s)ᵀ − φ(s)φ(s)ᵀ‖_F`,
/// which `setd_omega` minimizes state by state.
pub fn relaxed_objective(mdp: &TabularMdp, policies: &PolicyPair, omega: &DVector<f64>) -> Result<f64> {
    ChainModel::new(mdp, policies)?.relaxed_objective(omega)
}

pub fn oblique_diagnostics(
    mdp: &TabularMdp,
    policies: &PolicyPair,
    omega: &DVector<f64>,
) -> Result<ObliqueDiagnostics> {
    ChainModel::new(mdp, policies)?.diagnostics(omega)
}

impl ChainModel {
    pub fn setd_omega(&self) -> DVector<f64> {
        let lambda = self.lambda();
        DVector::from_fn(self.n_states(), |s, _| {
            let phi: Vec<f64> = self.phi.row(s).iter().copied().collect();
            let dphi: Vec<f64> = lambda.row(s).iter().copied().collect();
            omega_from_delta(&phi, &dphi)
        })
    }

    pub fn etd_omega(&self) -> Result<DVector<f64>> {
        let radius = (&self.p_pi * self.gamma)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if radius >= 1.0 - 1e-12 {
            return Err(Error::NonConvergentSeries(format!(
                "spectral radius of gamma*P_pi is {radius}"
            )));
        }
        let f = linalg::solve(
            &self.l_pi.transpose(),
            &DMatrix::from_column_slice(self.n_states(), 1, self.xi.as_slice()),
            "L_pi^T",
        )?;
        Ok(f.column(0).into_owned())
    }

    /// `ΞΩΦ`.
    pub fn x_of_omega(&self, omega: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(omega)?;
        let mut x = self.phi.clone();
        for (s, mut row) in x.row_iter_mut().enumerate() {
            row *= self.xi[s] * omega[s];
        }
        Ok(x)
    }

    pub fn frobenius_criterion(&self, omega: &DVector<f64>) -> Result<f64> {
        let diff = self.lambda().transpose() * self.x_of_omega(omega)? - self.covariance();
        Ok(diff.norm_squared())
    }

    pub fn x_distance(&self, omega: &DVector<f64>, x_star: &DMatrix<f64>) -> Result<f64> {
        Ok(linalg::spectral_norm(&(self.x_of_omega(omega)? - x_star)))
    }

    pub fn relaxed_objective(&self, omega: &DVector<f64>) -> Result<f64> {
        self.check_len(omega)?;
        let lambda = self.lambda();
        let mut total = 0.0;
        for s in 0..self.n_states() {
            let phi = self.phi.row(s);
            let q = lambda.row(s) * omega[s] - phi;
            // rank-1 matrix q φᵀ has Frobenius norm ‖q‖‖φ‖
            total += self.xi[s] * q.norm() * phi.norm();
        }
        Ok(total)
    }

    pub fn diagnostics(&self, omega: &DVector<f64>) -> Result<ObliqueDiagnostics> {
        let x_star = self.optimal_x()?;
        Ok(ObliqueDiagnostics {
            omega: omega.clone(),
            x_of_omega: self.x_of_omega(omega)?,
            criterion: self.frobenius_criterion(omega)?,
            x_distance: self.x_distance(omega, &x_star)?,
            c: self.covariance(),
            lambda: self.lambda(),
            x_star,
        })
    }

    fn check_len(&self, omega: &DVector<f64>) -> Result<()> {
        if omega.len() != self.n_states() {
            return Err(Error::DimensionMismatch {
                expected: self.n_states(),
                got: omega.len(),
            });
        }
        Ok(())
    }
}

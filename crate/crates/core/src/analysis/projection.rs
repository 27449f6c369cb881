use nalgebra::{DMatrix, DVector};

use super::ChainModel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{PolicyPair, TabularMdp};

/// `Π = Φ(ΦᵀΞΦ)⁺ΦᵀΞ`.
pub fn projector(mdp: &TabularMdp, policies: &PolicyPair) -> Result<DMatrix<f64>> {
    Ok(ChainModel::new(mdp, policies)?.projector())
}

/// Best approximation `θ*` and `v* = Φθ* = ΠV` of the true value.
pub fn best_approximation(
    mdp: &TabularMdp,
    policies: &PolicyPair,
) -> Result<(DVector<f64>, DVector<f64>)> {
    ChainModel::new(mdp, policies)?.best_approximation()
}

/// `X* = (L_πᵀ)⁻¹ΞΦ`.
pub fn optimal_x(mdp: &TabularMdp, policies: &PolicyPair) -> Result<DMatrix<f64>> {
    ChainModel::new(mdp, policies)?.optimal_x()
}

/// Fixed point `θ = (YᵀΞL_πΦ)⁻¹YᵀΞR` of the weighted oblique projected
/// Bellman equation for the weighting `Y`.
pub fn fixed_point_solve(
    mdp: &TabularMdp,
    policies: &PolicyPair,
    y: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    ChainModel::new(mdp, policies)?.fixed_point(y)
}

/// Reconstructs `ΞY` from `YᵀΞL_πΦ = C` when `Φ` is square and invertible;
/// the result then coincides with `X*`.
pub fn criterion_reconstruction(mdp: &TabularMdp, policies: &PolicyPair) -> Result<DMatrix<f64>> {
    ChainModel::new(mdp, policies)?.criterion_reconstruction()
}

impl ChainModel {
    pub fn projector(&self) -> DMatrix<f64> {
        let c_pinv = linalg::pinv(&self.covariance());
        &self.phi * c_pinv * self.xi_times(&self.phi).transpose()
    }

    pub fn best_approximation(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        let v = self.true_value()?;
        let rhs = self.xi_times(&self.phi).transpose() * v;
        let theta = linalg::pinv(&self.covariance()) * rhs;
        let v_star = &self.phi * &theta;
        Ok((theta, v_star))
    }

    pub fn optimal_x(&self) -> Result<DMatrix<f64>> {
        linalg::solve(&self.l_pi.transpose(), &self.xi_times(&self.phi), "L_pi^T")
    }

    pub fn fixed_point(&self, y: &DMatrix<f64>) -> Result<DVector<f64>> {
        if y.shape() != self.phi.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.phi.nrows() * self.phi.ncols(),
                got: y.nrows() * y.ncols(),
            });
        }
        let yx = self.xi_times(y).transpose();
        let d = self.dim();
        let projection = &yx * &self.phi;
        linalg::solve(&projection, &DMatrix::identity(d, d), "Y^T Xi Phi")
            .map_err(|_| Error::Singular("Y^T Xi Phi is singular: the oblique projection does not exist".into()))?;
        let system = &yx * self.lambda();
        let rhs = &yx * &self.r_pi;
        let theta = linalg::solve(&system, &DMatrix::from_column_slice(d, 1, rhs.as_slice()), "Y^T Xi L_pi Phi")
            .map_err(|_| Error::Singular("Y^T Xi L_pi Phi is singular: no fixed point".into()))?;
        Ok(theta.column(0).into_owned())
    }

    pub fn criterion_reconstruction(&self) -> Result<DMatrix<f64>> {
        if self.dim() != self.n_states() {
            return Err(Error::ContractViolation(format!(
                "reconstruction needs a square feature matrix, got {}x{}",
                self.n_states(),
                self.dim()
            )));
        }
        // Yᵀ(ΞL_πΦ) = C  ⇔  (ΞL_πΦ)ᵀ Y = Cᵀ
        let m = self.xi_times(&self.lambda());
        let y = linalg::solve(&m.transpose(), &self.covariance().transpose(), "(Xi L_pi Phi)^T")?;
        Ok(self.xi_times(&y))
    }
}

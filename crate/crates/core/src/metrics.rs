//! Error measures against exact ground truth.

use nalgebra::{DMatrix, DVector};

use crate::analysis::ChainModel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{PolicyPair, TabularMdp};

/// Everything needed to score a weight vector, precomputed once per MDP.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub v: DVector<f64>,
    pub xi: DVector<f64>,
    pub projector: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub gamma: f64,
    /// `C⁺` for `C = ΦᵀΞΦ`.
    pub c_pinv: DMatrix<f64>,
    /// `A = ΦᵀΞL_πΦ`.
    pub a: DMatrix<f64>,
    /// `b = ΦᵀΞR_π`.
    pub b: DVector<f64>,
    pub best_theta: DVector<f64>,
}

impl GroundTruth {
    pub fn new(mdp: &TabularMdp, policies: &PolicyPair) -> Result<Self> {
        Self::from_chain(&ChainModel::new(mdp, policies)?)
    }

    pub fn from_chain(chain: &ChainModel) -> Result<Self> {
        let v = chain.true_value()?;
        let xphi_t = chain.xi_times(&chain.phi).transpose();
        let c_pinv = linalg::pinv(&chain.covariance());
        let a = &xphi_t * chain.lambda();
        let b = &xphi_t * &chain.r_pi;
        let best_theta = &c_pinv * (&xphi_t * &v);
        Ok(GroundTruth {
            projector: chain.projector(),
            v,
            xi: chain.xi.clone(),
            phi: chain.phi.clone(),
            gamma: chain.gamma,
            c_pinv,
            a,
            b,
            best_theta,
        })
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    fn check(&self, theta: &[f64]) -> Result<DVector<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        Ok(DVector::from_column_slice(theta))
    }

    /// `√(Σ_s ξ(s)(V(s) − φ(s)ᵀθ)²)`.
    pub fn rmse(&self, theta: &[f64]) -> Result<f64> {
        let theta = self.check(theta)?;
        let err = &self.v - &self.phi * theta;
        Ok(weighted_norm(&self.xi, &err))
    }

    /// `√‖Φθ − Π T Φθ‖²_ξ`, evaluated as `√(gᵀC⁺g)` with `g = b − Aθ`.
    pub fn rmspbe(&self, theta: &[f64]) -> Result<f64> {
        let theta = self.check(theta)?;
        let g = &self.b - &self.a * theta;
        Ok((g.dot(&(&self.c_pinv * &g))).max(0.0).sqrt())
    }

    /// RMSE of the best linear approximation.
    pub fn rmse_floor(&self) -> f64 {
        let err = &self.v - &self.phi * &self.best_theta;
        weighted_norm(&self.xi, &err)
    }
}

fn weighted_norm(xi: &DVector<f64>, err: &DVector<f64>) -> f64 {
    xi.iter()
        .zip(err.iter())
        .map(|(w, e)| w * e * e)
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// ξ-weighted RMSE of `θ` against the true value.
pub fn rmse(theta: &[f64], truth: &GroundTruth) -> Result<f64> {
    truth.rmse(theta)
}

/// Root mean squared projected Bellman error of `θ`.
pub fn rmspbe(theta: &[f64], truth: &GroundTruth) -> Result<f64> {
    truth.rmspbe(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use proptest::prelude::*;

    /// Dense route: form `Π`, apply the Bellman operator, take the ξ-norm.
    fn rmspbe_dense(chain: &ChainModel, theta: &DVector<f64>) -> f64 {
        let n = chain.n_states();
        let xi_phi = DMatrix::from_fn(n, chain.dim(), |s, j| chain.xi[s] * chain.phi[(s, j)]);
        let c = chain.phi.transpose() * &xi_phi;
        let c_inv = c.clone().try_inverse().expect("full-rank test features");
        let proj = &chain.phi * c_inv * xi_phi.transpose();
        let v = &chain.phi * theta;
        let tv = &chain.r_pi + (&chain.p_pi * &v) * chain.gamma;
        let err = &v - proj * tv;
        (0..n).map(|s| chain.xi[s] * err[s] * err[s]).sum::<f64>().sqrt()
    }

    #[test]
    fn two_state_values() {
        let (mdp, pol) = envs::build_two_state();
        let truth = GroundTruth::new(&mdp, &pol).unwrap();
        // zero rewards: V = 0
        assert_eq!(truth.rmse(&[0.0]).unwrap(), 0.0);
        let r = truth.rmse(&[1.0]).unwrap();
        assert!((r - (0.5f64 * 1.0 + 0.5 * 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(truth.rmspbe(&[0.0]).unwrap(), 0.0);
        assert!(matches!(truth.rmse(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rmspbe_matches_dense_route_on_baird() {
        let (mdp, pol) = envs::build_baird();
        let chain = ChainModel::new(&mdp, &pol).unwrap();
        let truth = GroundTruth::from_chain(&chain).unwrap();
        let theta = DVector::from_column_slice(&envs::BAIRD_INITIAL_THETA);
        let fast = truth.rmspbe(theta.as_slice()).unwrap();
        // the features span every value function, so Π = I and the
        // projected error is the plain Bellman residual
        let v = &chain.phi * &theta;
        let err = &v - chain.bellman(&v);
        let slow = (0..7).map(|s| chain.xi[s] * err[s] * err[s]).sum::<f64>().sqrt();
        assert!((fast - slow).abs() < 1e-9 * (1.0 + slow), "{fast} vs {slow}");
    }

    #[test]
    fn floor_is_minimal() {
        let (mdp, pol) = envs::build_boyan();
        let truth = GroundTruth::new(&mdp, &pol).unwrap();
        let floor = truth.rmse_floor();
        for k in 0..4 {
            let mut t = truth.best_theta.clone();
            t[k] += 1e-3;
            assert!(truth.rmse(t.as_slice()).unwrap() >= floor);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rmspbe_agrees_with_dense(seed in 0u64..1000, t in prop::collection::vec(-5.0..5.0f64, 4)) {
            let (mdp, pol) = envs::build_random_mdp(12, 3, 4, seed).unwrap();
            let chain = ChainModel::new(&mdp, &pol).unwrap();
            let truth = GroundTruth::from_chain(&chain).unwrap();
            let theta = DVector::from_vec(t);
            let fast = truth.rmspbe(theta.as_slice()).unwrap();
            let slow = rmspbe_dense(&chain, &theta);
            prop_assert!((fast - slow).abs() < 1e-8 * (1.0 + slow));
            prop_assert!(truth.rmse(theta.as_slice()).unwrap() >= 0.0);
        }
    }
}

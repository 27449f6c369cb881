//! Brute-force reference computations. These deliberately avoid the closed
//! forms they are meant to check.

use nalgebra::{DMatrix, DVector};

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Numeric minimizer of `‖ωΔφφᵀ − φφᵀ‖_F` over `ω ≥ 0` by golden-section
/// search on `[0, ω_max]`, evaluating the explicit `d×d` matrix.
pub fn omega_oracle(phi: &[f64], delta_phi: &[f64]) -> f64 {
    assert_eq!(phi.len(), delta_phi.len());
    let d = phi.len();
    let objective = |w: f64| {
        let mut sq = 0.0;
        for i in 0..d {
            for j in 0..d {
                let e = w * delta_phi[i] * phi[j] - phi[i] * phi[j];
                sq += e * e;
            }
        }
        sq.sqrt()
    };
    let cross: f64 = phi.iter().zip(delta_phi).map(|(a, b)| a * b).sum();
    let sq: f64 = delta_phi.iter().map(|x| x * x).sum();
    let w_max = 10.0 * (cross.abs() / sq.max(1e-12) + 1.0);

    let tol = 1e-10;
    let (mut a, mut b) = (0.0, w_max);
    let mut c = b - INV_GOLDEN * (b - a);
    let mut e = a + INV_GOLDEN * (b - a);
    let (mut fc, mut fe) = (objective(c), objective(e));
    while b - a > tol {
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - INV_GOLDEN * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + INV_GOLDEN * (b - a);
            fe = objective(e);
        }
        if c == e {
            break;
        }
    }
    0.5 * (a + b)
}

/// Norms of the rank-1 matrix `uvᵀ`, each computed a different way.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rank1Norms {
    /// Square root of the entrywise sum of squares.
    pub frobenius: f64,
    /// Sum of singular values of the explicit matrix.
    pub trace_norm: f64,
    /// Largest singular value of the explicit matrix.
    pub sigma_max: f64,
    /// `‖u‖₂·‖v‖₂`.
    pub norm_product: f64,
}

pub fn rank1_norms(u: &[f64], v: &[f64]) -> Rank1Norms {
    let m = DMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j]);
    let frobenius = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sv = if m.is_empty() {
        DVector::zeros(0)
    } else {
        m.singular_values()
    };
    let trace_norm = sv.iter().sum();
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    Rank1Norms {
        frobenius,
        trace_norm,
        sigma_max,
        norm_product: norm(u) * norm(v),
    }
}

//! Closed-form per-sample emphasis ω.

use super::kernels::delta_phi_moments;

/// Below this squared norm of `Δφ` the relaxed objective is flat in ω and
/// ω is taken to be 0.
pub const DEGENERATE_SQ_NORM: f64 = 1e-12;

/// `ω = max(Δφᵀφ / ‖Δφ‖², 0)` with `Δφ = φ − γφ′`.
///
/// This is the nonnegative minimizer of `‖ωΔφφᵀ − φφᵀ‖_F`, i.e. the weight of
/// the projection of `φ` onto `Δφ`.
pub fn compute_omega(phi: &[f64], phi_next: &[f64], gamma: f64) -> f64 {
    let (cross, sq) = delta_phi_moments(phi, phi_next, gamma);
    omega_from_moments(cross, sq)
}

/// Same closed form with `Δφ` given explicitly.
pub fn omega_from_delta(phi: &[f64], delta_phi: &[f64]) -> f64 {
    let cross: f64 = delta_phi.iter().zip(phi).map(|(d, p)| d * p).sum();
    let sq: f64 = delta_phi.iter().map(|d| d * d).sum();
    omega_from_moments(cross, sq)
}

#[inline]
fn omega_from_moments(cross: f64, sq: f64) -> f64 {
    if sq.is_nan() || sq < DEGENERATE_SQ_NORM {
        return 0.0;
    }
    (cross / sq).max(0.0)
}

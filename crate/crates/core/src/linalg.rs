//! Dense solves and pseudo-inverses used by the exact analysis layer.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Pivot ratio above which a solve is reported as ill-conditioned.
pub const CONDITION_WARN: f64 = 1e12;

/// Relative singular-value cutoff for pseudo-inverses.
pub const PINV_RTOL: f64 = 1e-10;

/// Solves `A X = B` by LU with partial pivoting.
///
/// `what` names the system in error and warning messages.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let (lo, hi) = u
        .diagonal()
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &x| (lo.min(x.abs()), hi.max(x.abs())));
    if lo.is_nan() || lo <= 0.0 || !lo.is_finite() || hi / lo > 1e16 {
        return Err(Error::Singular(format!("{what} (pivot ratio {:e})", hi / lo)));
    }
    if hi / lo > CONDITION_WARN {
        warn!("{what} is ill-conditioned (pivot ratio {:e})", hi / lo);
    }
    lu.solve(b)
        .ok_or_else(|| Error::Singular(what.to_string()))
}

/// Moore–Penrose pseudo-inverse, truncating singular values below
/// `PINV_RTOL · σ_max`.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = PINV_RTOL * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

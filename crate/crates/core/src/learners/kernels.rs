//! O(d) vector kernels shared by the step functions.
//!
//! In test builds every kernel adds the number of elements it touches to a
//! thread-local counter so per-step cost can be measured exactly.

#[cfg(test)]
thread_local! {
    static TOUCHED: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

#[inline]
pub(crate) fn touch(_n: usize) {
    #[cfg(test)]
    TOUCHED.with(|c| c.set(c.get() + _n as u64));
}

#[cfg(test)]
pub(crate) fn take_touched() -> u64 {
    TOUCHED.with(|c| c.replace(0))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    touch(a.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y ← y + a·x`
#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    touch(y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Returns `(Δφᵀφ, ‖Δφ‖²)` with `Δφ = φ − γφ′`, without materializing `Δφ`.
#[inline]
pub(crate) fn delta_phi_moments(phi: &[f64], phi_next: &[f64], gamma: f64) -> (f64, f64) {
    touch(phi.len());
    let mut cross = 0.0;
    let mut sq = 0.0;
    for (p, q) in phi.iter().zip(phi_next) {
        let dp = p - gamma * q;
        cross += dp * p;
        sq += dp * dp;
    }
    (cross, sq)
}

#[inline]
pub(crate) fn max_abs(x: &[f64]) -> f64 {
    touch(x.len());
    x.iter().fold(0.0_f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

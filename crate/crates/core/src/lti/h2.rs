use nalgebra::{DMatrix, DVector};

use super::lyap::solve_dlyap;
use super::ss::StateSpace;
use super::stability::is_schur;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tail tolerance used to pick truncation horizons.
pub const HORIZON_TOL: f64 = 1e-12;
pub const HORIZON_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ImpulseResponse<T> {
    /// `g[k]` for `k = 0..=horizon`.
    pub g: Vec<T>,
    pub horizon: usize,
}

impl<T: Real> ImpulseResponse<T> {
    /// `g(k)`, zero for negative or out-of-range `k`.
    #[inline]
    pub fn at(&self, k: isize) -> T {
        if k < 0 {
            T::zero()
        } else {
            self.g.get(k as usize).copied().unwrap_or_else(T::zero)
        }
    }

    pub fn energy(&self) -> T {
        self.g.iter().fold(T::zero(), |s, x| s + *x * *x)
    }
}

/// `g(0) = D`, `g(k) = C A^(k-1) B`.
pub fn impulse_response<T: Real>(ss: &StateSpace<T>, horizon: usize) -> Result<ImpulseResponse<T>> {
    if !ss.is_siso() {
        return Err(Error::Dimension("impulse response needs a SISO model".into()));
    }
    let mut g = Vec::with_capacity(horizon + 1);
    g.push(ss.d0());
    let mut x: DVector<T> = ss.b.column(0).into_owned();
    let c = ss.c.row(0);
    for _ in 0..horizon {
        g.push(c.dot(&x.transpose()));
        x = &ss.a * x;
    }
    Ok(ImpulseResponse { g, horizon })
}

/// `||G||_2^2 = tr(C W C' + D D')` with `W` the controllability gramian.
///
/// When that gramian cannot be certified to the residual tolerance the dual
/// form `tr(B' W_o B + D' D)` is tried before giving up.
pub fn h2_norm_sq<T: Real>(ss: &StateSpace<T>) -> Result<T> {
    let dd = (&ss.d * ss.d.transpose()).trace();
    match controllability_gramian(ss) {
        Ok(w) => Ok((&ss.c * w * ss.c.transpose()).trace() + dd),
        Err(first @ Error::Lyapunov { .. }) => match observability_gramian(ss) {
            Ok(wo) => Ok((ss.b.transpose() * wo * &ss.b).trace() + dd),
            Err(_) => Err(first),
        },
        Err(e) => Err(e),
    }
}

pub fn controllability_gramian<T: Real>(ss: &StateSpace<T>) -> Result<DMatrix<T>> {
    solve_dlyap(&ss.a, &(&ss.b * ss.b.transpose()))
}

pub fn observability_gramian<T: Real>(ss: &StateSpace<T>) -> Result<DMatrix<T>> {
    solve_dlyap(&ss.a.transpose(), &(ss.c.transpose() * &ss.c))
}

/// Number of steps after which `rho^k` falls below `tol`, plus `order` steps
/// of slack for transient growth; capped at [`HORIZON_CAP`].
pub fn horizon_for_radius(rho: f64, order: usize, tol: f64) -> usize {
    if rho <= 0.0 {
        return order.max(1);
    }
    if rho >= 1.0 {
        return HORIZON_CAP;
    }
    let k = (tol.ln() / rho.ln()).ceil();
    if !k.is_finite() || k > HORIZON_CAP as f64 {
        HORIZON_CAP
    } else {
        (order + k as usize).clamp(1, HORIZON_CAP)
    }
}

/// Truncation horizon for impulse sums of a stable model.
pub fn certified_horizon<T: Real>(ss: &StateSpace<T>) -> Result<usize> {
    let t = is_schur(&ss.a)?;
    if !t.stable {
        return Err(Error::NotSchur(t.spectral_radius.as_f64()));
    }
    Ok(horizon_for_radius(
        t.spectral_radius.as_f64(),
        ss.order(),
        HORIZON_TOL,
    ))
}

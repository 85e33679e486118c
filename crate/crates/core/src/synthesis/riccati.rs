//! Discrete algebraic Riccati equation in the general cross-weighted form
//!
//! `X = A'XA - (A'XB + S)(R + B'XB)^-1 (B'XA + S') + Q`.
//!
//! A stabilizing gain is first obtained by structure-preserving doubling on
//! the auxiliary problem `(A, B, I, I)`, which has a stabilizing solution
//! whenever `(A, B)` is stabilizable. Newton-Hewer iteration then converges
//! to the stabilizing solution of the actual equation. This also covers
//! singular `Q - S R^-1 S'` (where doubling from zero would stall on a
//! non-stabilizing fixed point) and `R = 0`. A damped fixed-point iteration
//! is the fallback.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lti::{is_schur, solve_dlyap};
use crate::scalar::Real;

pub const RICCATI_RESIDUAL: f64 = 1e-10;
pub const RICCATI_STOP: f64 = 1e-12;
pub const INNER_CONDITION_LIMIT: f64 = 1e12;
const NEWTON_CAP: usize = 100;
const SDA_CAP: usize = 100;
const FIXED_POINT_CAP: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct DareSolution<T: Real> {
    pub x: DMatrix<T>,
    /// `F = -(R + B'XB)^-1 (B'XA + S')`, so that `A + B F` is Schur.
    pub gain: DMatrix<T>,
    pub residual: T,
    pub closed_loop_radius: T,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Dare<'a, T: Real> {
    pub a: &'a DMatrix<T>,
    pub b: &'a DMatrix<T>,
    pub q: &'a DMatrix<T>,
    pub r: &'a DMatrix<T>,
    pub s: &'a DMatrix<T>,
}

impl<T: Real> Dare<'_, T> {
    fn check(&self) -> Result<()> {
        let n = self.a.nrows();
        let m = self.b.ncols();
        let ok = self.a.ncols() == n
            && self.b.nrows() == n
            && self.q.shape() == (n, n)
            && self.r.shape() == (m, m)
            && self.s.shape() == (n, m);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("inconsistent Riccati data".into()))
        }
    }

    fn inner(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.r + self.b.transpose() * x * self.b
    }

    /// Optimal gain for a given `X`, with the inner-matrix conditioning check.
    fn gain(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        let inner = self.inner(x);
        let cond = condition(&inner);
        if !(cond <= T::lit(INNER_CONDITION_LIMIT)) {
            return Err(Error::RiccatiSingular {
                condition: cond.as_f64(),
            });
        }
        let rhs = self.b.transpose() * x * self.a + self.s.transpose();
        let sol = inner
            .lu()
            .solve(&rhs)
            .ok_or(Error::RiccatiSingular { condition: f64::INFINITY })?;
        Ok(-sol)
    }

    /// Right-hand side of the equation evaluated at `X`.
    fn map(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        let f = self.gain(x)?;
        let cross = self.a.transpose() * x * self.b + self.s;
        Ok(self.a.transpose() * x * self.a + cross * f + self.q)
    }

    pub fn relative_residual(&self, x: &DMatrix<T>) -> Result<T> {
        let r = self.map(x)? - x;
        let scale = x.norm().max(self.q.norm()).max(T::tol(1e-300));
        Ok(r.norm() / scale)
    }
}

pub(crate) fn condition<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::one();
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(T::zero(), |a, s| a.max(*s));
    let min = sv.iter().fold(max, |a, s| a.min(*s));
    if min <= T::zero() {
        T::max_value().unwrap_or_else(T::one)
    } else {
        max / min
    }
}

fn symmetrize<T: Real>(x: DMatrix<T>) -> DMatrix<T> {
    (&x + x.transpose()) * T::lit(0.5)
}

/// Doubling for `X = A'XA - A'XB(I + B'XB)^-1 B'XA + I`.
fn auxiliary_gain<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let id = DMatrix::<T>::identity(n, n);
    let mut ak = a.clone();
    let mut gk = b * b.transpose();
    let mut hk = id.clone();
    let stop = T::tol(RICCATI_STOP);
    for it in 0..SDA_CAP {
        let w = (&id + &gk * &hk)
            .try_inverse()
            .ok_or(Error::RiccatiSingular { condition: f64::INFINITY })?;
        let wa = &w * &ak;
        let h_next = &hk + ak.transpose() * &hk * &wa;
        let g_next = &gk + &ak * &w * &gk * ak.transpose();
        ak = &ak * wa;
        let change = (&h_next - &hk).norm();
        hk = symmetrize(h_next);
        gk = symmetrize(g_next);
        if change <= stop * hk.norm() {
            let x = hk;
            let inner = DMatrix::<T>::identity(b.ncols(), b.ncols()) + b.transpose() * &x * b;
            let sol = inner
                .lu()
                .solve(&(b.transpose() * &x * a))
                .ok_or(Error::RiccatiSingular { condition: f64::INFINITY })?;
            return Ok(-sol);
        }
        if !change.is_finite() || it + 1 == SDA_CAP {
            return Err(Error::RiccatiNoConvergence {
                iterations: it + 1,
                change: change.as_f64(),
            });
        }
    }
    unreachable!()
}

fn newton<T: Real>(eq: &Dare<'_, T>, mut f: DMatrix<T>) -> Result<(DMatrix<T>, usize)> {
    let stop = T::tol(RICCATI_STOP);
    let mut prev: Option<DMatrix<T>> = None;
    for it in 1..=NEWTON_CAP {
        let af = eq.a + eq.b * &f;
        let qf = eq.q + eq.s * &f + f.transpose() * eq.s.transpose() + f.transpose() * eq.r * &f;
        let x = symmetrize(solve_dlyap(&af.transpose(), &symmetrize(qf))?);
        f = eq.gain(&x)?;
        if let Some(p) = &prev {
            let change = (&x - p).norm();
            if change <= stop * x.norm().max(T::one()) {
                return Ok((x, it));
            }
        }
        prev = Some(x);
    }
    let x = prev.unwrap_or_else(|| eq.q.clone());
    Ok((x, NEWTON_CAP))
}

fn damped_fixed_point<T: Real>(eq: &Dare<'_, T>, x0: DMatrix<T>) -> Result<(DMatrix<T>, usize)> {
    let half = T::lit(0.5);
    let stop = T::tol(RICCATI_STOP);
    let mut x = x0;
    let mut change = T::zero();
    for it in 1..=FIXED_POINT_CAP {
        let next = symmetrize(&x * half + eq.map(&x)? * half);
        change = (&next - &x).norm();
        x = next;
        if change <= stop * x.norm().max(T::one()) {
            return Ok((x, it));
        }
    }
    Err(Error::RiccatiNoConvergence {
        iterations: FIXED_POINT_CAP,
        change: change.as_f64(),
    })
}

/// Stabilizing solution of the Riccati equation described by `eq`.
pub fn solve_dare<T: Real>(eq: &Dare<'_, T>) -> Result<DareSolution<T>> {
    eq.check()?;
    let f0 = if is_schur(eq.a)?.stable {
        DMatrix::zeros(eq.b.ncols(), eq.a.nrows())
    } else {
        auxiliary_gain(eq.a, eq.b)?
    };
    let (x, iterations) = match newton(eq, f0.clone()) {
        Ok(v) => v,
        Err(e @ Error::RiccatiSingular { .. }) => return Err(e),
        Err(_) => {
            let a_f = eq.a + eq.b * &f0;
            let q_f = eq.q + f0.transpose() * eq.r * &f0;
            let start = solve_dlyap(&a_f.transpose(), &symmetrize(q_f)).unwrap_or_else(|_| eq.q.clone());
            damped_fixed_point(eq, start)?
        }
    };
    finish(eq, x, iterations)
}

fn finish<T: Real>(eq: &Dare<'_, T>, x: DMatrix<T>, iterations: usize) -> Result<DareSolution<T>> {
    let gain = eq.gain(&x)?;
    let test = is_schur(&(eq.a + eq.b * &gain))?;
    if !test.stable {
        return Err(Error::RiccatiNotStabilizing {
            radius: test.spectral_radius.as_f64(),
        });
    }
    let residual = eq.relative_residual(&x)?;
    if !(residual <= T::tol(RICCATI_RESIDUAL)) {
        return Err(Error::RiccatiResidual {
            residual: residual.as_f64(),
        });
    }
    Ok(DareSolution {
        x,
        gain,
        residual,
        closed_loop_radius: test.spectral_radius,
        iterations,
    })
}

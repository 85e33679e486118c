use nalgebra::DMatrix;

use super::stability::is_schur;
use crate::error::{Error, Result};
use crate::scalar::Real;

const DOUBLING_STOP: f64 = 1e-12;
const DOUBLING_CAP: usize = 200;
const REFINE_CAP: usize = 4;
/// Largest accepted relative residual `||X - A X A' - Q||_F / ||Q||_F`.
pub const LYAP_RESIDUAL: f64 = 1e-10;

/// Solves `X = A X A' + Q` for Schur `A` by doubling.
pub fn solve_dlyap<T: Real>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(format!(
            "dlyap: A is {}x{}, Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let test = is_schur(a)?;
    if !test.stable {
        return Err(Error::NotSchur(test.spectral_radius.as_f64()));
    }

    let qn = q.norm();
    let rel_of = |x: &DMatrix<T>| {
        if qn > T::zero() {
            residual(a, q, x).norm() / qn
        } else {
            x.norm()
        }
    };
    let (x, mut iterations) = doubling(a, q);
    let mut x = (&x + x.transpose()) * T::lit(0.5);
    let mut rel = rel_of(&x);
    // Iterative refinement on the residual while it keeps shrinking.
    for _ in 0..REFINE_CAP {
        if rel <= T::tol(LYAP_RESIDUAL) * T::lit(1e-2) {
            break;
        }
        let (dx, it) = doubling(a, &residual(a, q, &x));
        let next = &x + dx;
        let next = (&next + next.transpose()) * T::lit(0.5);
        let next_rel = rel_of(&next);
        iterations += it;
        if !(next_rel < rel) {
            break;
        }
        x = next;
        rel = next_rel;
    }
    if rel > T::tol(LYAP_RESIDUAL) {
        return Err(Error::Lyapunov {
            residual: rel.as_f64(),
            iterations,
        });
    }
    Ok(x)
}

fn residual<T: Real>(a: &DMatrix<T>, q: &DMatrix<T>, x: &DMatrix<T>) -> DMatrix<T> {
    a * x * a.transpose() + q - x
}

fn doubling<T: Real>(a: &DMatrix<T>, q: &DMatrix<T>) -> (DMatrix<T>, usize) {
    let mut x = q.clone();
    let mut ak = a.clone();
    let stop = T::tol(DOUBLING_STOP);
    for it in 1..=DOUBLING_CAP {
        let inc = &ak * &x * ak.transpose();
        let done = inc.norm() <= stop * x.norm();
        x += inc;
        if done {
            return (x, it);
        }
        ak = &ak * &ak;
    }
    (x, DOUBLING_CAP)
}

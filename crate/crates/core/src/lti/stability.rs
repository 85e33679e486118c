use nalgebra::DMatrix;

use super::roots::{cabs, eigenvalues};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Margin inside the unit circle required of every eigenvalue.
pub const SCHUR_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchurTest<T> {
    pub stable: bool,
    pub spectral_radius: T,
}

pub fn spectral_radius<T: Real>(a: &DMatrix<T>) -> Result<T> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    Ok(eigenvalues(a)?
        .into_iter()
        .map(cabs)
        .fold(T::zero(), |m, r| m.max(r)))
}

/// Schur test with the [`SCHUR_MARGIN`] guard band.
pub fn is_schur<T: Real>(a: &DMatrix<T>) -> Result<SchurTest<T>> {
    let rho = spectral_radius(a)?;
    Ok(SchurTest {
        stable: rho < T::one() - T::tol(SCHUR_MARGIN),
        spectral_radius: rho,
    })
}

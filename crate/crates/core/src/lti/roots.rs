//! Polynomial roots as companion-matrix eigenvalues.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

fn horner<T: Real>(desc: &[T], z: Complex<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &c in desc {
        acc = acc * z + Complex::new(c, T::zero());
    }
    acc
}

fn horner_derivative<T: Real>(desc: &[T], z: Complex<T>) -> Complex<T> {
    let n = desc.len().saturating_sub(1);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (i, &c) in desc.iter().take(n).enumerate() {
        let k = T::lit((n - i) as f64);
        acc = acc * z + Complex::new(c * k, T::zero());
    }
    acc
}

/// Eigenvalues of a square matrix; solver failure is an error.
pub fn eigenvalues<T: Real>(a: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure(n));
    }
    // The QR iteration in nalgebra can stall on block-triangular
    // matrices with nilpotent shift blocks (FIR realizations). The transpose
    // and a fixed orthogonal similarity have the same spectrum and usually
    // break the stall.
    let attempts = [a.clone(), a.transpose(), householder_similarity(a)];
    for m in attempts {
        if let Some(schur) = Schur::try_new(m, T::default_epsilon(), 2000 * n) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::EigenFailure(n))
}

/// `H A H` with `H = I - 2 v v'` for the normalized ramp `v = (1, 2, ..., n)`.
fn householder_similarity<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let v = DMatrix::from_fn(n, 1, |i, _| T::lit((i + 1) as f64)).normalize();
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * T::lit(2.0);
    &h * a * &h
}

/// Roots of `desc[0] x^n + desc[1] x^(n-1) + ... + desc[n]`.
///
/// Exact leading zeros lower the degree; exact trailing zeros are returned as
/// exact roots at the origin. Each companion eigenvalue gets up to three
/// Newton corrections, kept only when they shrink the residual.
pub fn roots_desc<T: Real>(desc: &[T]) -> Result<Vec<Complex<T>>> {
    let first = match desc.iter().position(|c| *c != T::zero()) {
        Some(i) => i,
        None => return Ok(Vec::new()),
    };
    let trimmed = &desc[first..];
    let trailing = trimmed
        .iter()
        .rev()
        .take_while(|c| **c == T::zero())
        .count();
    let core = &trimmed[..trimmed.len() - trailing];
    let mut roots = vec![Complex::new(T::zero(), T::zero()); trailing];

    let n = core.len() - 1;
    if n == 0 {
        return Ok(roots);
    }
    let lead = core[0];
    if n == 1 {
        roots.push(Complex::new(-core[1] / lead, T::zero()));
        return Ok(roots);
    }

    let mut companion = DMatrix::<T>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -core[j + 1] / lead;
    }
    for i in 1..n {
        companion[(i, i - 1)] = T::one();
    }
    for mut z in eigenvalues(&companion)? {
        let mut res = cabs(horner(core, z));
        for _ in 0..3 {
            let dp = horner_derivative(core, z);
            if cabs(dp) == T::zero() {
                break;
            }
            let cand = z - horner(core, z) / dp;
            let cand_res = cabs(horner(core, cand));
            if cand_res < res {
                z = cand;
                res = cand_res;
            } else {
                break;
            }
        }
        roots.push(z);
    }
    Ok(roots)
}

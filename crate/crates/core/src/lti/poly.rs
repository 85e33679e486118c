use num_complex::Complex;

use super::roots::roots_desc;
use crate::error::Result;
use crate::scalar::Real;

/// Polynomial in the delay operator: `coeffs[i]` multiplies `z^-i`.
///
/// Trailing zeros are allowed and carry no meaning; [`Polynomial::normalize`]
/// strips them. The zero polynomial (all coefficients zero, or none at all)
/// has degree 0 by convention; use [`Polynomial::is_zero`] to tell it apart
/// from a nonzero constant.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Real> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `z^-n`.
    pub fn delay(n: usize) -> Self {
        let mut coeffs = vec![T::zero(); n + 1];
        coeffs[n] = T::one();
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient of `z^-i`, zero beyond the stored length.
    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).copied().unwrap_or_else(T::zero)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == T::zero())
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| *c != T::zero())
            .unwrap_or(0)
    }

    pub fn normalize(&self) -> Self {
        let keep = self
            .coeffs
            .iter()
            .rposition(|c| *c != T::zero())
            .map_or(0, |i| i + 1);
        Self {
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    /// Copy padded with zeros to at least `len` coefficients.
    pub fn padded(&self, len: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < len {
            coeffs.resize(len, T::zero());
        }
        Self { coeffs }
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        Self {
            coeffs: (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    /// Product, i.e. the convolution of the coefficient sequences.
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.len() + other.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    pub fn reversed(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self { coeffs }
    }

    /// Value at the complex point `z`, i.e. `sum_i c_i z^-i`.
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let w = Complex::new(T::one(), T::zero()) / z;
        let mut acc = Complex::new(T::zero(), T::zero());
        for &c in self.coeffs.iter().rev() {
            acc = acc * w + Complex::new(c, T::zero());
        }
        acc
    }

    /// Sum of the coefficients, the value at `z = 1`.
    pub fn eval_at_one(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, &c| acc + c)
    }

    /// Deterministic autocorrelation `a(l) = sum_i c_i c_(i+l)` for `l = 0..len`.
    ///
    /// These are the nonnegative-lag coefficients of `P(z^-1) P(z)`.
    pub fn autocorrelation(&self) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|l| {
                (0..n - l).fold(T::zero(), |acc, i| {
                    acc + self.coeffs[i] * self.coeffs[i + l]
                })
            })
            .collect()
    }

    /// Roots in `z` of `z^d P(z)`, where `d` is the degree after normalization.
    ///
    /// Leading zero coefficients are pure delays and contribute no finite root.
    pub fn roots_in_z(&self) -> Result<Vec<Complex<T>>> {
        roots_desc(self.normalize().coeffs())
    }

    /// `gain * prod_i (1 - r_i z^-1)`.
    ///
    /// Complex roots must appear in conjugate pairs for the result to be real;
    /// imaginary residue is discarded.
    pub fn from_roots_in_z(roots: &[Complex<T>], gain: T) -> Self {
        let one = Complex::new(T::one(), T::zero());
        let mut acc = vec![one];
        for &r in roots {
            let mut next = vec![Complex::new(T::zero(), T::zero()); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            acc = next;
        }
        Self {
            coeffs: acc.into_iter().map(|c| c.re * gain).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let n = self.len().max(other.len());
        (0..n).fold(T::zero(), |m, i| m.max((self.coeff(i) - other.coeff(i)).mag()))
    }
}

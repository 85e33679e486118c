use num_complex::Complex;

use super::poly::Polynomial;
use super::roots::roots_desc;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Roots closer than this (absolute distance in the z-plane) cancel in [`RationalTf::reduce`].
pub const ROOT_CANCEL_TOL: f64 = 1e-8;

/// Coefficients below this fraction of a polynomial's largest coefficient are
/// treated as round-off and zeroed before reduction.
pub const COEFF_CHOP: f64 = 1e-12;

/// Rational transfer function `num(z^-1) / den(z^-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalTf<T> {
    pub(crate) num: Polynomial<T>,
    pub(crate) den: Polynomial<T>,
}

impl<T: Real> RationalTf<T> {
    /// Rejects `den[0] == 0`, which would make the system improper (non-causal).
    pub fn new(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self> {
        if den.coeff(0) == T::zero() {
            return Err(Error::Improper);
        }
        Ok(Self { num, den })
    }

    pub fn from_coeffs(num: Vec<T>, den: Vec<T>) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den))
    }

    pub fn from_polynomial(p: Polynomial<T>) -> Self {
        Self {
            num: p,
            den: Polynomial::constant(T::one()),
        }
    }

    pub fn num(&self) -> &Polynomial<T> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<T> {
        &self.den
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Scales so that `den[0] == 1` and strips trailing zeros.
    pub fn monic(&self) -> Self {
        let d0 = self.den.coeff(0);
        let mut num = self.num.scale(T::one() / d0).normalize();
        if num.is_empty() {
            num = Polynomial::constant(T::zero());
        }
        Self {
            num,
            den: self.den.scale(T::one() / d0).normalize(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            num: self
                .num
                .mul(&other.den)
                .add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// `self / (1 + self * loop_gain)`, the negative-feedback closure.
    pub fn feedback(&self, loop_gain: &Self) -> Result<Self> {
        let num = self.num.mul(&loop_gain.den);
        let den = self
            .den
            .mul(&loop_gain.den)
            .add(&self.num.mul(&loop_gain.num));
        Self::new(num, den)
    }

    /// Cancels common pole/zero pairs and returns the monic result.
    ///
    /// Both polynomials are padded to a common length `N + 1`, which makes the
    /// `z^-1` coefficient arrays the descending coefficient arrays of
    /// `z^N num` and `z^N den`. Roots of the two are matched greedily within
    /// [`ROOT_CANCEL_TOL`] and divided out by synthetic division.
    pub fn reduce(&self) -> Result<Self> {
        let len = self.num.len().max(self.den.len());
        let mut num = chop(self.num.padded(len).into_coeffs());
        let mut den = chop(self.den.padded(len).into_coeffs());
        if num.iter().all(|c| *c == T::zero()) {
            return Self::from_coeffs(vec![T::zero()], vec![T::one()]);
        }

        let zeros = roots_desc(&num)?;
        let mut poles = roots_desc(&den)?;
        let tol = T::tol(ROOT_CANCEL_TOL);
        let mut common: Vec<Complex<T>> = Vec::new();
        for z in zeros {
            let best = poles
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (z - p).norm_sqr().sqrt()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            if let Some((i, dist)) = best {
                if dist <= tol {
                    let p = poles.swap_remove(i);
                    common.push((z + p) * Complex::new(T::lit(0.5), T::zero()));
                }
            }
        }

        for r in &common {
            if r.im.mag() <= tol {
                num = deflate_linear(&num, r.re);
                den = deflate_linear(&den, r.re);
            } else if r.im > T::zero() {
                let s = r.re + r.re;
                let p = r.norm_sqr();
                num = deflate_quadratic(&num, s, p);
                den = deflate_quadratic(&den, s, p);
            }
        }
        Self::from_coeffs(chop(num), chop(den)).map(|t| t.monic())
    }

    /// Largest coefficient difference after bringing both to monic form.
    pub fn max_coeff_diff(&self, other: &Self) -> T {
        let a = self.monic();
        let b = other.monic();
        a.num
            .max_abs_diff(&b.num)
            .max(a.den.max_abs_diff(&b.den))
    }
}

fn chop<T: Real>(mut c: Vec<T>) -> Vec<T> {
    let scale = c.iter().fold(T::zero(), |m, x| m.max(x.mag()));
    let cut = scale * T::lit(COEFF_CHOP);
    for x in c.iter_mut() {
        if x.mag() <= cut {
            *x = T::zero();
        }
    }
    c
}

/// Quotient of `desc` by `(x - r)`, remainder dropped.
fn deflate_linear<T: Real>(desc: &[T], r: T) -> Vec<T> {
    let mut out = Vec::with_capacity(desc.len() - 1);
    let mut acc = T::zero();
    for &c in &desc[..desc.len() - 1] {
        acc = acc * r + c;
        out.push(acc);
    }
    out
}

/// Quotient of `desc` by `(x^2 - s x + p)`, remainder dropped.
fn deflate_quadratic<T: Real>(desc: &[T], s: T, p: T) -> Vec<T> {
    let n = desc.len();
    let mut out = vec![T::zero(); n - 2];
    for i in 0..n - 2 {
        let mut v = desc[i];
        if i >= 1 {
            v += s * out[i - 1];
        }
        if i >= 2 {
            v -= p * out[i - 2];
        }
        out[i] = v;
    }
    out
}

//! The random-delay channel: delay law, mean channel, second-order statistics
//! of the channel uncertainty and its minimum-phase spectral factor.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{roots_desc, Polynomial};
use crate::scalar::Real;

/// Allowed deviation of `sum(pmf)` from one.
pub const PMF_TOL: f64 = 1e-12;
/// Spectral zeros closer than this to the unit circle make the factor marginal.
pub const UNIT_CIRCLE_TOL: f64 = 1e-8;
/// Largest accepted coefficient error of `Phi(z^-1) Phi(z)` against `S(z)`.
pub const FACTOR_ROUNDTRIP_TOL: f64 = 1e-10;
/// Number of points in the positivity check of the spectral density.
pub const DENSITY_GRID: usize = 1024;

/// Delay law `p_0..p_tau` and recombination weights `alpha_0..alpha_tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel<T>", into = "RawChannel<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ChannelSpec<T: Real> {
    pmf: Vec<T>,
    weights: Vec<T>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel<T> {
    pmf: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> TryFrom<RawChannel<T>> for ChannelSpec<T> {
    type Error = Error;
    fn try_from(r: RawChannel<T>) -> Result<Self> {
        Self::new(r.pmf, r.weights)
    }
}

impl<T: Real> From<ChannelSpec<T>> for RawChannel<T> {
    fn from(c: ChannelSpec<T>) -> Self {
        RawChannel {
            pmf: c.pmf,
            weights: c.weights,
        }
    }
}

impl<T: Real> ChannelSpec<T> {
    /// Validates the PMF. A PMF that is off by more than [`PMF_TOL`] is
    /// rejected, never renormalized.
    pub fn new(pmf: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidChannel("pmf is empty".into()));
        }
        if pmf.len() != weights.len() {
            return Err(Error::InvalidChannel(format!(
                "pmf has {} entries but weights has {}",
                pmf.len(),
                weights.len()
            )));
        }
        if let Some(i) = pmf.iter().position(|p| !p.is_finite() || *p < T::zero()) {
            return Err(Error::InvalidChannel(format!("pmf[{i}] = {} is not a probability", pmf[i])));
        }
        if let Some(i) = weights.iter().position(|a| !a.is_finite()) {
            return Err(Error::InvalidChannel(format!("weights[{i}] is not finite")));
        }
        let total = pmf.iter().fold(T::zero(), |s, p| s + *p);
        if (total - T::one()).mag() > T::tol(PMF_TOL) {
            return Err(Error::InvalidChannel(format!("pmf sums to {total}, not 1")));
        }
        Ok(Self { pmf, weights })
    }

    /// The zero-delay identity channel.
    pub fn identity() -> Self {
        Self {
            pmf: vec![T::one()],
            weights: vec![T::one()],
        }
    }

    pub fn pmf(&self) -> &[T] {
        &self.pmf
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Largest delay `tau`.
    pub fn tau(&self) -> usize {
        self.pmf.len() - 1
    }

    /// True when the delay is almost surely a single value.
    pub fn is_deterministic(&self) -> bool {
        self.pmf.iter().filter(|p| **p > T::zero()).count() <= 1
    }
}

/// `H(z) = sum_i alpha_i p_i z^-i`, kept at length `tau + 1`.
pub fn mean_channel<T: Real>(spec: &ChannelSpec<T>) -> Polynomial<T> {
    Polynomial::new(
        spec.pmf
            .iter()
            .zip(&spec.weights)
            .map(|(p, a)| *a * *p)
            .collect(),
    )
}

/// Autocorrelation `r(0..=tau)` of the channel uncertainty for a unit input.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoCorr<T> {
    pub r: Vec<T>,
}

impl<T: Real> AutoCorr<T> {
    /// `r(l)` for any integer lag, using `r(-l) = r(l)` and zero beyond `tau`.
    pub fn at(&self, l: isize) -> T {
        self.r
            .get(l.unsigned_abs())
            .copied()
            .unwrap_or_else(T::zero)
    }
}

pub fn autocorrelation<T: Real>(spec: &ChannelSpec<T>) -> AutoCorr<T> {
    let (p, a) = (&spec.pmf, &spec.weights);
    let n = p.len();
    let mut r = vec![T::zero(); n];
    r[0] = (0..n).fold(T::zero(), |s, i| s + a[i] * a[i] * p[i] * (T::one() - p[i]));
    for l in 1..n {
        r[l] = -(0..n - l).fold(T::zero(), |s, i| s + a[i] * a[i + l] * p[i] * p[i + l]);
    }
    AutoCorr { r }
}

/// Two-sided Laurent coefficients of `S(z) = sum_l r(l) z^-l`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDensity<T> {
    /// `coeffs[l + tau]` multiplies `z^-l` for `l = -tau..=tau`.
    pub coeffs: Vec<T>,
    pub tau: usize,
}

impl<T: Real> SpectralDensity<T> {
    pub fn at(&self, l: isize) -> T {
        let i = l + self.tau as isize;
        if i < 0 {
            return T::zero();
        }
        self.coeffs.get(i as usize).copied().unwrap_or_else(T::zero)
    }

    /// `S(e^{j theta})`, which is real.
    pub fn on_circle(&self, theta: T) -> T {
        let mut s = self.at(0);
        for l in 1..=self.tau {
            s += (self.at(l as isize) + self.at(l as isize)) * (theta * T::lit(l as f64)).cos();
        }
        s
    }

    /// `S(1) = sum_l r(l)`.
    pub fn at_one(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |s, c| s + *c)
    }

    /// Minimum of `S` over an equispaced grid of [`DENSITY_GRID`] angles.
    pub fn grid_min(&self) -> T {
        (0..DENSITY_GRID)
            .map(|k| self.on_circle(T::two_pi() * T::lit(k as f64 / DENSITY_GRID as f64)))
            .fold(T::max_value().unwrap_or_else(T::one), |m, s| m.min(s))
    }
}

/// Builds the density table and checks that it is nonnegative on the unit circle.
pub fn spectral_density<T: Real>(spec: &ChannelSpec<T>) -> Result<SpectralDensity<T>> {
    let r = autocorrelation(spec);
    let tau = spec.tau();
    let coeffs = (0..=2 * tau)
        .map(|i| r.at(i as isize - tau as isize))
        .collect();
    let s = SpectralDensity { coeffs, tau };
    let min = s.grid_min();
    if min < -T::tol(1e-12) {
        return Err(Error::Internal(format!(
            "spectral density is negative on the unit circle (min {min})"
        )));
    }
    Ok(s)
}

/// Minimum-phase factor with `Phi(z^-1) Phi(z) = S(z)` and `phi_0 > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFactor<T> {
    pub phi: Polynomial<T>,
    /// Set when the channel carries no uncertainty and `phi` is zero.
    pub degenerate: bool,
}

/// Factors the spectral density of the channel uncertainty.
///
/// Roots of `z^m S(z)` are found from the companion matrix; the ones inside the
/// unit circle build `Phi`, which is scaled to match `r(0)` and then polished
/// with a few Newton steps on the coefficient equations.
pub fn spectral_factor<T: Real>(spec: &ChannelSpec<T>) -> Result<SpectralFactor<T>> {
    let density = spectral_density(spec)?;
    let mut r = autocorrelation(spec).r;
    let energy = spec
        .pmf
        .iter()
        .zip(&spec.weights)
        .fold(T::zero(), |s, (p, a)| s + *a * *a * *p);
    if r[0] <= T::tol(1e-14) * energy || r[0] <= T::zero() {
        return Ok(SpectralFactor {
            phi: Polynomial::zero(),
            degenerate: true,
        });
    }
    let cut = T::tol(1e-14) * r[0];
    while r.len() > 1 && r.last().is_some_and(|x| x.mag() <= cut) {
        r.pop();
    }
    let m = r.len() - 1;
    if m == 0 {
        return Ok(SpectralFactor {
            phi: Polynomial::constant(r[0].sqrt()),
            degenerate: false,
        });
    }

    // Descending coefficients of z^m S(z): r(m), ..., r(0), ..., r(m).
    let desc: Vec<T> = (0..=2 * m)
        .map(|i| r[(i as isize - m as isize).unsigned_abs()])
        .collect();
    let roots = roots_desc(&desc)?;
    let one = T::one();
    let closest = roots
        .iter()
        .map(|z| (z.norm_sqr().sqrt() - one).mag())
        .fold(T::max_value().unwrap_or(one), |m, d| m.min(d));
    let scale = r.iter().fold(T::zero(), |s, x| s + x.mag());
    let flat_zero = roots.iter().any(|z| {
        let rho = z.norm_sqr().sqrt();
        (rho - one).mag() < T::lit(1e-4) && density.on_circle(z.im.atan2(z.re)) <= T::tol(1e-15) * scale
    });
    if closest < T::tol(UNIT_CIRCLE_TOL) || flat_zero {
        return Err(Error::MarginalFactorization {
            distance: closest.as_f64(),
        });
    }
    let inside: Vec<Complex<T>> = roots
        .into_iter()
        .filter(|z| z.norm_sqr() < one)
        .collect();
    if inside.len() != m {
        return Err(Error::Internal(format!(
            "expected {m} spectral zeros inside the unit circle, found {}",
            inside.len()
        )));
    }

    let q = Polynomial::from_roots_in_z(&inside, one);
    let q_energy = q.coeffs().iter().fold(T::zero(), |s, c| s + *c * *c);
    let phi = polish(q.scale((r[0] / q_energy).sqrt()).into_coeffs(), &r);

    let err = roundtrip_error(&phi, &r);
    if err > T::tol(FACTOR_ROUNDTRIP_TOL) {
        return Err(Error::Internal(format!(
            "spectral factor roundtrip error {err}"
        )));
    }
    let phi = Polynomial::new(phi);
    let worst = phi
        .roots_in_z()?
        .iter()
        .map(|z| z.norm_sqr().sqrt())
        .fold(T::zero(), |m, x| m.max(x));
    if worst >= one - T::tol(UNIT_CIRCLE_TOL) {
        return Err(Error::MarginalFactorization {
            distance: (one - worst).mag().as_f64(),
        });
    }
    Ok(SpectralFactor {
        phi,
        degenerate: false,
    })
}

fn roundtrip_error<T: Real>(phi: &[T], r: &[T]) -> T {
    let a = Polynomial::new(phi.to_vec()).autocorrelation();
    (0..r.len().max(a.len()))
        .map(|l| (a.get(l).copied().unwrap_or_else(T::zero) - r.get(l).copied().unwrap_or_else(T::zero)).mag())
        .fold(T::zero(), |m, x| m.max(x))
}

/// Newton steps on `sum_j phi_j phi_{j+l} = r(l)`, each kept only if it helps.
fn polish<T: Real>(mut phi: Vec<T>, r: &[T]) -> Vec<T> {
    let n = phi.len();
    for _ in 0..3 {
        let before = roundtrip_error(&phi, r);
        if before == T::zero() {
            break;
        }
        let a = Polynomial::new(phi.clone()).autocorrelation();
        let f = DVector::from_fn(n, |l, _| a[l] - r[l]);
        let jac = DMatrix::from_fn(n, n, |l, j| {
            let up = if j + l < n { phi[j + l] } else { T::zero() };
            let down = if j >= l { phi[j - l] } else { T::zero() };
            up + down
        });
        let Some(step) = jac.lu().solve(&f) else { break };
        let trial: Vec<T> = phi.iter().zip(step.iter()).map(|(p, s)| *p - *s).collect();
        if roundtrip_error(&trial, r) < before {
            phi = trial;
        } else {
            break;
        }
    }
    phi
}

/// Draws a delay with exactly one uniform from `rng`.
pub fn sample_delay<T: Real, R: RngCore + ?Sized>(spec: &ChannelSpec<T>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    sample_delay_from(spec.pmf(), u)
}

/// Inverse-CDF lookup shared with the simulator's precomputed tables.
#[inline]
pub fn sample_delay_from<T: Real>(pmf: &[T], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in pmf.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

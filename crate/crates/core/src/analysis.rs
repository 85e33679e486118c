//! Mean-square stability of the loop closed over the random-delay channel:
//! small-gain quantity, variance recursion and asymptotic variance.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{mean_channel, spectral_factor, ChannelSpec};
use crate::error::{Error, Result};
use crate::lti::{
    feedback_interconnect, h2_norm_sq, horizon_for_radius, impulse_response, is_schur,
    observability_gramian, Polynomial, StateSpace, HORIZON_CAP, HORIZON_TOL,
};
use crate::scalar::Real;

/// Tail tolerance used when choosing the recursion horizon.
pub const KERNEL_TAIL_TOL: f64 = 1e-8;
/// A recursion trace above this value is declared divergent.
pub const DIVERGENCE_LEVEL: f64 = 1e12;
/// Default bisection tolerance on the gain scale.
pub const BOUNDARY_TOL: f64 = 1e-3;

/// `g_hat[n] = g(n)^2` and `t_hat[n]` for `n = 0..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursionKernels<T> {
    pub g_hat: Vec<T>,
    pub t_hat: Vec<T>,
    pub horizon: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    Recursion,
    Formula,
    Empirical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceTrace<T> {
    pub sigma_sq: Vec<T>,
    pub source: TraceSource,
}

impl<T: Real> VarianceTrace<T> {
    pub fn constant(value: T, horizon: usize) -> Self {
        Self {
            sigma_sq: vec![value; horizon + 1],
            source: TraceSource::Formula,
        }
    }

    pub fn horizon(&self) -> usize {
        self.sigma_sq.len().saturating_sub(1)
    }

    pub fn last(&self) -> T {
        self.sigma_sq.last().copied().unwrap_or_else(T::zero)
    }

    /// First index whose value exceeds [`DIVERGENCE_LEVEL`] or is not finite.
    pub fn divergence_index(&self) -> Option<usize> {
        let level = T::lit(DIVERGENCE_LEVEL);
        self.sigma_sq
            .iter()
            .position(|s| !s.is_finite() || *s > level)
    }
}

/// Outcome of the small-gain test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallGain<T> {
    pub nominal_stable: bool,
    pub spectral_radius: T,
    /// `||Phi G||_2^2`, absent when the nominal loop is unstable.
    pub j: Option<T>,
    pub ms_stable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport<T: Real> {
    pub h: Polynomial<T>,
    pub phi: Polynomial<T>,
    pub degenerate_channel: bool,
    pub g: StateSpace<T>,
    pub nominal_stable: bool,
    pub spectral_radius: T,
    pub h2_g: Option<T>,
    pub j: Option<T>,
    pub ms_stable: bool,
    pub sigma_v_sq: T,
    pub sigma_u_inf: Option<T>,
}

/// `J = ||Phi G||_2^2` through the cascade of `G` with an FIR realization of `Phi`.
pub fn small_gain<T: Real>(g: &StateSpace<T>, phi: &Polynomial<T>) -> Result<SmallGain<T>> {
    let test = is_schur(&g.a)?;
    if !test.stable {
        return Ok(SmallGain {
            nominal_stable: false,
            spectral_radius: test.spectral_radius,
            j: None,
            ms_stable: false,
        });
    }
    let j = h2_norm_sq(&g.series(&StateSpace::fir(phi))?)?;
    Ok(SmallGain {
        nominal_stable: true,
        spectral_radius: test.spectral_radius,
        j: Some(j),
        ms_stable: j < T::one(),
    })
}

/// Builds the nominal loop `G = P K / (1 + P K H)` with `H` the mean channel.
pub fn nominal_loop<T: Real>(
    p: &StateSpace<T>,
    k: &StateSpace<T>,
    spec: &ChannelSpec<T>,
) -> Result<StateSpace<T>> {
    feedback_interconnect(p, k, &StateSpace::fir(&mean_channel(spec)))
}

/// Second-moment kernels of the loop over the channel.
///
/// `t_hat[m]` is the variance over the delay law of `alpha_i g(m - i)`, which
/// equals the half double sum of squared differences weighted by `p_i1 p_i2`.
pub fn recursion_kernels<T: Real>(
    g: &StateSpace<T>,
    spec: &ChannelSpec<T>,
    horizon: usize,
) -> Result<RecursionKernels<T>> {
    if horizon < spec.tau() {
        return Err(Error::Horizon(format!(
            "horizon {horizon} is shorter than the largest delay {}",
            spec.tau()
        )));
    }
    let imp = impulse_response(g, horizon)?;
    if imp.g[0] != T::zero() {
        return Err(Error::NotStrictlyProper(imp.g[0].as_f64()));
    }
    let (p, alpha) = (spec.pmf(), spec.weights());
    let mut a = vec![T::zero(); p.len()];
    let mut t_hat = Vec::with_capacity(horizon + 1);
    for m in 0..=horizon {
        let mut mean = T::zero();
        for i in 0..p.len() {
            a[i] = alpha[i] * imp.at(m as isize - i as isize);
            mean += p[i] * a[i];
        }
        let var = (0..p.len()).fold(T::zero(), |s, i| {
            let d = a[i] - mean;
            s + p[i] * d * d
        });
        t_hat.push(var);
    }
    Ok(RecursionKernels {
        g_hat: imp.g.iter().map(|x| *x * *x).collect(),
        t_hat,
        horizon,
    })
}

/// Forward evaluation of
/// `s_u(k) = sum_{n=1..k} g_hat(n) s_v(k-n) + sum_{n=1..k} t_hat(n) s_u(k-n)`.
///
/// Both sums run in increasing `n`, which keeps the output exactly
/// nondecreasing for a constant input variance.
pub fn variance_recursion<T: Real>(
    kernels: &RecursionKernels<T>,
    sigma_v: &VarianceTrace<T>,
) -> Result<VarianceTrace<T>> {
    let n = kernels.horizon;
    if sigma_v.sigma_sq.len() < n + 1 {
        return Err(Error::Horizon(format!(
            "input trace has {} samples, kernels need {}",
            sigma_v.sigma_sq.len(),
            n + 1
        )));
    }
    let forcing: Vec<T> = (0..=n)
        .map(|k| {
            (1..=k).fold(T::zero(), |s, j| {
                s + kernels.g_hat[j] * sigma_v.sigma_sq[k - j]
            })
        })
        .collect();
    Ok(renewal(&kernels.t_hat, &forcing))
}

/// `s(k) = f(k) + sum_{n=1..k} t(n) s(k-n)`.
fn renewal<T: Real>(t_hat: &[T], forcing: &[T]) -> VarianceTrace<T> {
    let mut s: Vec<T> = Vec::with_capacity(forcing.len());
    for k in 0..forcing.len() {
        let mut acc = T::zero();
        for n in 1..=k {
            let t = t_hat[n];
            if t != T::zero() {
                acc += t * s[k - n];
            }
        }
        s.push(forcing[k] + acc);
    }
    VarianceTrace {
        sigma_sq: s,
        source: TraceSource::Recursion,
    }
}

/// Output-variance recursion for a zero input and a random initial state of
/// `g` with covariance `sigma0`: the forcing is `C A^k sigma0 (A')^k C'`.
pub fn zero_input_recursion<T: Real>(
    g: &StateSpace<T>,
    kernels: &RecursionKernels<T>,
    sigma0: &DMatrix<T>,
) -> Result<VarianceTrace<T>> {
    let n = g.order();
    if sigma0.nrows() != n || sigma0.ncols() != n {
        return Err(Error::Dimension(format!(
            "initial covariance must be {n}x{n}"
        )));
    }
    let mut cov = sigma0.clone();
    let mut forcing = Vec::with_capacity(kernels.horizon + 1);
    for _ in 0..=kernels.horizon {
        forcing.push((&g.c * &cov * g.c.transpose())[(0, 0)]);
        cov = &g.a * cov * g.a.transpose();
    }
    Ok(renewal(&kernels.t_hat, &forcing))
}

/// `S(0) = 1`, `S(k) = sum_{j<k} S(j) t_hat(k - j)`.
pub fn s_hat_sequence<T: Real>(kernels: &RecursionKernels<T>) -> Vec<T> {
    let mut forcing = vec![T::zero(); kernels.horizon + 1];
    forcing[0] = T::one();
    renewal(&kernels.t_hat, &forcing).sigma_sq
}

/// Closed-form limit `||G||^2 s_v / (1 - J)`.
pub fn asymptotic_variance<T: Real>(
    g: &StateSpace<T>,
    phi: &Polynomial<T>,
    sigma_v_sq: T,
) -> Result<T> {
    let sg = small_gain(g, phi)?;
    match sg.j {
        None => Err(Error::NominalUnstable(sg.spectral_radius.as_f64())),
        Some(j) if j >= T::one() => Err(Error::NoFiniteVariance(j.as_f64())),
        Some(j) => Ok(h2_norm_sq(g)? * sigma_v_sq / (T::one() - j)),
    }
}

/// Full analysis of plant `p` under controller `k` over the channel.
pub fn analyze<T: Real>(
    p: &StateSpace<T>,
    k: &StateSpace<T>,
    spec: &ChannelSpec<T>,
    sigma_v_sq: T,
) -> Result<AnalysisReport<T>> {
    if sigma_v_sq < T::zero() || !sigma_v_sq.is_finite() {
        return Err(Error::InvalidInput(format!("input variance {sigma_v_sq}")));
    }
    let h = mean_channel(spec);
    let factor = spectral_factor(spec)?;
    let g = nominal_loop(p, k, spec)?;
    let sg = small_gain(&g, &factor.phi)?;
    let h2_g = if sg.nominal_stable {
        Some(h2_norm_sq(&g)?)
    } else {
        None
    };
    let sigma_u_inf = match (sg.j, h2_g) {
        (Some(j), Some(n2)) if j < T::one() => Some(n2 * sigma_v_sq / (T::one() - j)),
        _ => None,
    };
    Ok(AnalysisReport {
        h,
        phi: factor.phi,
        degenerate_channel: factor.degenerate,
        g,
        nominal_stable: sg.nominal_stable,
        spectral_radius: sg.spectral_radius,
        h2_g,
        j: sg.j,
        ms_stable: sg.ms_stable,
        sigma_v_sq,
        sigma_u_inf,
    })
}

/// Horizon at which the recursion sums are within [`KERNEL_TAIL_TOL`] of
/// their limits.
///
/// The kernel tails are bounded exactly through the observability gramian:
/// `sum_{k>M} g(k)^2 = (A^M B)' W_o (A^M B)` and
/// `sum_{n>N} t_hat(n) <= (tau + 1) max(alpha^2) sum_{k>N-tau} g(k)^2`.
/// When the loop is mean-square stable the tail of the resolvent sequence is
/// estimated from its observed geometric decay over the last window. The
/// horizon doubles until both hold or [`HORIZON_CAP`] is reached.
pub fn certified_recursion_horizon<T: Real>(
    g: &StateSpace<T>,
    spec: &ChannelSpec<T>,
) -> Result<usize> {
    let test = is_schur(&g.a)?;
    if !test.stable {
        return Err(Error::NominalUnstable(test.spectral_radius.as_f64()));
    }
    let wo = observability_gramian(g)?;
    let h2 = h2_norm_sq(g)?;
    let tau = spec.tau();
    let amax = spec
        .weights()
        .iter()
        .fold(T::zero(), |m, a| m.max(*a * *a));
    let tol = T::tol(KERNEL_TAIL_TOL);
    let scale_g = h2.max(T::one());
    let scale_t = (h2 * amax * T::lit((tau + 1) as f64)).max(T::one());

    let mut n = horizon_for_radius(test.spectral_radius.as_f64(), g.order(), HORIZON_TOL)
        .max(tau + 1)
        .min(HORIZON_CAP);
    loop {
        let tail = gramian_tail(g, &wo, n - tau);
        let kernel_ok =
            tail <= tol * scale_g && tail * amax * T::lit((tau + 1) as f64) <= tol * scale_t;
        if kernel_ok {
            let kernels = recursion_kernels(g, spec, n)?;
            let partial = kernels.t_hat.iter().fold(T::zero(), |s, t| s + *t);
            if partial >= T::one() || resolvent_tail_ok(&s_hat_sequence(&kernels), tol) {
                return Ok(n);
            }
        }
        if n >= HORIZON_CAP {
            return Ok(HORIZON_CAP);
        }
        n = (2 * n).min(HORIZON_CAP);
    }
}

fn gramian_tail<T: Real>(g: &StateSpace<T>, wo: &DMatrix<T>, m: usize) -> T {
    let mut x: DVector<T> = g.b.column(0).into_owned();
    for _ in 0..m {
        x = &g.a * x;
        if x.iter().all(|v| *v == T::zero()) {
            return T::zero();
        }
    }
    (x.transpose() * wo * &x)[(0, 0)].max(T::zero())
}

fn resolvent_tail_ok<T: Real>(s: &[T], tol: T) -> bool {
    let n = s.len();
    let w = (n / 10).max(8);
    if n < 2 * w + 1 {
        return false;
    }
    let window_max = |lo: usize, hi: usize| s[lo..hi].iter().fold(T::zero(), |m, x| m.max(*x));
    let last = window_max(n - w, n);
    if last == T::zero() {
        return true;
    }
    let prev = window_max(n - 2 * w, n - w);
    if prev <= T::zero() {
        return false;
    }
    let q = (last / prev).powf(T::one() / T::lit(w as f64));
    if q >= T::one() {
        return false;
    }
    let total = s.iter().fold(T::zero(), |a, x| a + *x);
    last / (T::one() - q) <= tol * total
}

/// Kernels, resolvent and constant-input recursion at the certified horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursionRun<T> {
    pub kernels: RecursionKernels<T>,
    pub trace: VarianceTrace<T>,
}

pub fn run_recursion<T: Real>(
    g: &StateSpace<T>,
    spec: &ChannelSpec<T>,
    sigma_v_sq: T,
    horizon: Option<usize>,
) -> Result<RecursionRun<T>> {
    let n = match horizon {
        Some(n) => n.max(spec.tau()),
        None => certified_recursion_horizon(g, spec)?,
    };
    let kernels = recursion_kernels(g, spec, n)?;
    let trace = variance_recursion(&kernels, &VarianceTrace::constant(sigma_v_sq, n))?;
    Ok(RecursionRun { kernels, trace })
}

/// One row of a gain sweep `K -> kappa K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub kappa: T,
    pub nominal_stable: bool,
    pub j: Option<T>,
    pub sigma_u_inf: Option<T>,
}

fn sweep_point<T: Real>(
    g_of: &(impl Fn(T) -> Result<StateSpace<T>> + Sync),
    phi: &Polynomial<T>,
    sigma_v_sq: T,
    kappa: T,
) -> Result<SweepRow<T>> {
    let g = g_of(kappa)?;
    let sg = small_gain(&g, phi)?;
    let sigma_u_inf = match sg.j {
        Some(j) if j < T::one() => Some(h2_norm_sq(&g)? * sigma_v_sq / (T::one() - j)),
        _ => None,
    };
    Ok(SweepRow {
        kappa,
        nominal_stable: sg.nominal_stable,
        j: sg.j,
        sigma_u_inf,
    })
}

/// Evaluates the loop for every gain scale in `kappas`; rows keep input order.
pub fn sweep<T: Real>(
    p: &StateSpace<T>,
    k: &StateSpace<T>,
    spec: &ChannelSpec<T>,
    sigma_v_sq: T,
    kappas: &[T],
) -> Result<Vec<SweepRow<T>>> {
    let phi = spectral_factor(spec)?.phi;
    let h = StateSpace::fir(&mean_channel(spec));
    let g_of = |kappa: T| feedback_interconnect(p, &k.scale_output(kappa), &h);
    kappas
        .par_iter()
        .map(|kappa| sweep_point(&g_of, &phi, sigma_v_sq, *kappa))
        .collect()
}

/// Bisection for the gain scale where `J(kappa K) = 1`.
///
/// A nominally unstable loop counts as `J >= 1`. `lo` must be mean-square
/// stable and `hi` must not be.
pub fn stability_boundary<T: Real>(
    p: &StateSpace<T>,
    k: &StateSpace<T>,
    spec: &ChannelSpec<T>,
    lo: T,
    hi: T,
    tol: T,
) -> Result<T> {
    let phi = spectral_factor(spec)?.phi;
    let h = StateSpace::fir(&mean_channel(spec));
    let stable_at = |kappa: T| -> Result<bool> {
        let g = feedback_interconnect(p, &k.scale_output(kappa), &h)?;
        Ok(small_gain(&g, &phi)?.ms_stable)
    };
    let (mut lo, mut hi) = (lo, hi);
    if !stable_at(lo)? {
        return Err(Error::InvalidInput(format!(
            "loop is not mean-square stable at the lower bracket {lo}"
        )));
    }
    if stable_at(hi)? {
        return Err(Error::InvalidInput(format!(
            "loop is still mean-square stable at the upper bracket {hi}"
        )));
    }
    let half = T::lit(0.5);
    while (hi - lo).mag() > tol {
        let mid = (lo + hi) * half;
        if stable_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * half)
}

//! Monte Carlo simulation of the loop closed over the random-delay channel.
//!
//! At every instant `k` the plant output `y = C_P x_P` feeds the controller,
//! the controller output `u(k)` is sent with a freshly drawn delay `tau_k`,
//! and the receiver forms `u_d(k) = sum_i alpha_i [tau_{k-i} = i] u(k-i)`
//! from a ring of the last `tau + 1` sent values. The plant is driven by
//! `e(k) = v(k) - u_d(k)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{TraceSource, VarianceTrace};
use crate::channel::{sample_delay_from, ChannelSpec};
use crate::error::{Error, Result};
use crate::lti::StateSpace;
use crate::rng::{CounterRng, TAG_DELAY, TAG_INIT, TAG_INPUT};
use crate::scalar::Real;

/// Trials per reduction block. Fixed so that the summation order does not
/// depend on the number of worker threads.
const BLOCK: usize = 256;
/// Decay verdict threshold relative to `||Sigma_0||_F`.
pub const DECAY_LEVEL: f64 = 1e-4;
/// Fraction of the horizon over which the decayed level must hold.
pub const DECAY_WINDOW: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub enum InputMode<T: Real> {
    /// Gaussian white `v` with the given variance, loop at rest at `k = 0`.
    White { sigma_v_sq: T },
    /// `v = 0`; the initial state `(x_P, x_K)` is Gaussian with covariance `sigma0`.
    ZeroInput { sigma0: DMatrix<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<T: Real> {
    pub p: StateSpace<T>,
    pub k: StateSpace<T>,
    pub spec: ChannelSpec<T>,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub input: InputMode<T>,
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.p.is_siso() || !self.k.is_siso() {
            return Err(Error::Dimension("plant and controller must be SISO".into()));
        }
        if !self.p.is_strictly_proper() {
            return Err(Error::IllPosed("plant must be strictly proper".into()));
        }
        if self.horizon < 1 || self.trials < 1 {
            return Err(Error::InvalidInput("horizon and trials must be at least 1".into()));
        }
        match &self.input {
            InputMode::White { sigma_v_sq } => {
                if !sigma_v_sq.is_finite() || *sigma_v_sq < T::zero() {
                    return Err(Error::InvalidInput(format!("input variance {sigma_v_sq}")));
                }
            }
            InputMode::ZeroInput { sigma0 } => {
                initial_factor(sigma0, self.p.order() + self.k.order())?;
            }
        }
        Ok(())
    }
}

/// Square root `L` with `L L' = sigma0`, after symmetry and PSD checks.
fn initial_factor<T: Real>(sigma0: &DMatrix<T>, n: usize) -> Result<DMatrix<T>> {
    if sigma0.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "initial covariance is {}x{}, the loop has {n} states",
            sigma0.nrows(),
            sigma0.ncols()
        )));
    }
    let scale = sigma0.norm().max(T::one());
    if (sigma0 - sigma0.transpose()).norm() > T::tol(1e-12) * scale {
        return Err(Error::InvalidInput("initial covariance is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(sigma0.clone());
    if eig.eigenvalues.iter().any(|l| *l < -T::tol(1e-12) * scale) {
        return Err(Error::InvalidInput(
            "initial covariance is not positive semidefinite".into(),
        ));
    }
    let roots = eig.eigenvalues.map(|l| l.max(T::zero()).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// One simulated trajectory, indexed by `k = 0..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<T> {
    pub u: Vec<T>,
    pub v: Vec<T>,
    /// Received signal `u_d`.
    pub ud: Vec<T>,
    /// Channel uncertainty `d = u_d - H u`.
    pub d: Vec<T>,
    /// Delay drawn for the sample sent at each instant.
    pub tau: Vec<usize>,
    /// First instant with a non-finite value, if any.
    pub overflow: Option<usize>,
}

/// Flattened loop matrices, row-major.
struct Kernel<T> {
    np: usize,
    nk: usize,
    ap: Vec<T>,
    bp: Vec<T>,
    cp: Vec<T>,
    ak: Vec<T>,
    bk: Vec<T>,
    ck: Vec<T>,
    dk: T,
    alpha: Vec<T>,
    mean_w: Vec<T>,
    pmf: Vec<f64>,
}

struct Work<T> {
    xp: Vec<T>,
    xk: Vec<T>,
    tmp_p: Vec<T>,
    tmp_k: Vec<T>,
    u_ring: Vec<T>,
    tau_ring: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
struct Step<T> {
    u: T,
    v: T,
    ud: T,
    d: T,
    tau: usize,
}

fn flat<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect()
}

impl<T: Real> Kernel<T> {
    fn new(cfg: &SimConfig<T>) -> Self {
        let (p, k, spec) = (&cfg.p, &cfg.k, &cfg.spec);
        Self {
            np: p.order(),
            nk: k.order(),
            ap: flat(&p.a),
            bp: flat(&p.b),
            cp: flat(&p.c),
            ak: flat(&k.a),
            bk: flat(&k.b),
            ck: flat(&k.c),
            dk: k.d0(),
            alpha: spec.weights().to_vec(),
            mean_w: spec
                .weights()
                .iter()
                .zip(spec.pmf())
                .map(|(a, p)| *a * *p)
                .collect(),
            pmf: spec.pmf().iter().map(|p| p.as_f64()).collect(),
        }
    }

    fn work(&self) -> Work<T> {
        let ring = self.alpha.len();
        Work {
            xp: vec![T::zero(); self.np],
            xk: vec![T::zero(); self.nk],
            tmp_p: vec![T::zero(); self.np],
            tmp_k: vec![T::zero(); self.nk],
            u_ring: vec![T::zero(); ring],
            tau_ring: vec![0; ring],
        }
    }

    fn reset(&self, w: &mut Work<T>, x0: Option<&[T]>) {
        w.xp.iter_mut().for_each(|x| *x = T::zero());
        w.xk.iter_mut().for_each(|x| *x = T::zero());
        w.u_ring.iter_mut().for_each(|x| *x = T::zero());
        w.tau_ring.iter_mut().for_each(|x| *x = 0);
        if let Some(x0) = x0 {
            w.xp.copy_from_slice(&x0[..self.np]);
            w.xk.copy_from_slice(&x0[self.np..]);
        }
    }

    /// Advances the loop by one instant.
    #[inline]
    fn step(&self, w: &mut Work<T>, k: usize, tau_k: usize, v: T) -> Step<T> {
        let (np, nk) = (self.np, self.nk);
        let mut y = T::zero();
        for j in 0..np {
            y += self.cp[j] * w.xp[j];
        }
        let mut u = self.dk * y;
        for j in 0..nk {
            u += self.ck[j] * w.xk[j];
        }

        let ring = self.alpha.len();
        let slot = k % ring;
        w.u_ring[slot] = u;
        w.tau_ring[slot] = tau_k;
        let mut ud = T::zero();
        let mut ubar = T::zero();
        for i in 0..ring.min(k + 1) {
            let s = (k - i) % ring;
            let past = w.u_ring[s];
            if w.tau_ring[s] == i {
                ud += self.alpha[i] * past;
            }
            ubar += self.mean_w[i] * past;
        }
        let e = v - ud;

        for i in 0..np {
            let mut acc = self.bp[i] * e;
            for j in 0..np {
                acc += self.ap[i * np + j] * w.xp[j];
            }
            w.tmp_p[i] = acc;
        }
        for i in 0..nk {
            let mut acc = self.bk[i] * y;
            for j in 0..nk {
                acc += self.ak[i * nk + j] * w.xk[j];
            }
            w.tmp_k[i] = acc;
        }
        std::mem::swap(&mut w.xp, &mut w.tmp_p);
        std::mem::swap(&mut w.xk, &mut w.tmp_k);
        Step {
            u,
            v,
            ud,
            d: ud - ubar,
            tau: tau_k,
        }
    }
}

fn draw_delay(pmf: &[f64], seed: u64, trial: u64, k: usize) -> usize {
    let u: f64 = CounterRng::new(seed, trial, k as u64, TAG_DELAY).random();
    sample_delay_from(pmf, u)
}

fn draw_input<T: Real>(sd: T, seed: u64, trial: u64, k: usize) -> T {
    if sd == T::zero() {
        return T::zero();
    }
    let z: f64 = CounterRng::new(seed, trial, k as u64, TAG_INPUT).sample(StandardNormal);
    sd * T::lit(z)
}

fn draw_initial<T: Real>(l: &DMatrix<T>, seed: u64, trial: u64, out: &mut [T]) {
    let mut rng = CounterRng::new(seed, trial, 0, TAG_INIT);
    let z: Vec<T> = (0..l.ncols())
        .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..l.ncols()).fold(T::zero(), |s, j| s + l[(i, j)] * z[j]);
    }
}

/// Simulates one trial with explicitly supplied delays, input and initial state.
pub fn simulate_with<T: Real>(
    cfg: &SimConfig<T>,
    delays: &[usize],
    v: &[T],
    x0: Option<&[T]>,
) -> Result<Path<T>> {
    cfg.validate()?;
    let h = cfg.horizon;
    if delays.len() < h + 1 || v.len() < h + 1 {
        return Err(Error::Horizon(format!("need {} delays and inputs", h + 1)));
    }
    if delays.iter().any(|t| *t > cfg.spec.tau()) {
        return Err(Error::InvalidInput("delay exceeds the channel's largest delay".into()));
    }
    let kernel = Kernel::new(cfg);
    if let Some(x) = x0 {
        if x.len() != kernel.np + kernel.nk {
            return Err(Error::Dimension("initial state length".into()));
        }
    }
    let mut w = kernel.work();
    kernel.reset(&mut w, x0);
    Ok(run(&kernel, &mut w, h, |k| delays[k], |k| v[k]))
}

fn run<T: Real>(
    kernel: &Kernel<T>,
    w: &mut Work<T>,
    horizon: usize,
    mut delay: impl FnMut(usize) -> usize,
    mut input: impl FnMut(usize) -> T,
) -> Path<T> {
    let mut path = Path {
        u: Vec::with_capacity(horizon + 1),
        v: Vec::with_capacity(horizon + 1),
        ud: Vec::with_capacity(horizon + 1),
        d: Vec::with_capacity(horizon + 1),
        tau: Vec::with_capacity(horizon + 1),
        overflow: None,
    };
    for k in 0..=horizon {
        let s = kernel.step(w, k, delay(k), input(k));
        if path.overflow.is_none() && !s.u.is_finite() {
            path.overflow = Some(k);
        }
        path.u.push(s.u);
        path.v.push(s.v);
        path.ud.push(s.ud);
        path.d.push(s.d);
        path.tau.push(s.tau);
    }
    path
}

fn input_sd<T: Real>(mode: &InputMode<T>) -> T {
    match mode {
        InputMode::White { sigma_v_sq } => sigma_v_sq.sqrt(),
        InputMode::ZeroInput { .. } => T::zero(),
    }
}

/// Simulates trial `trial` with random streams derived from `(seed, trial)`.
pub fn simulate_path<T: Real>(cfg: &SimConfig<T>, trial: u64) -> Result<Path<T>> {
    cfg.validate()?;
    let kernel = Kernel::new(cfg);
    let mut w = kernel.work();
    let x0 = match &cfg.input {
        InputMode::ZeroInput { sigma0 } => {
            let l = initial_factor(sigma0, kernel.np + kernel.nk)?;
            let mut x = vec![T::zero(); kernel.np + kernel.nk];
            draw_initial(&l, cfg.seed, trial, &mut x);
            Some(x)
        }
        InputMode::White { .. } => None,
    };
    kernel.reset(&mut w, x0.as_deref());
    let sd = input_sd(&cfg.input);
    let seed = cfg.seed;
    Ok(run(
        &kernel,
        &mut w,
        cfg.horizon,
        |k| draw_delay(&kernel.pmf, seed, trial, k),
        |k| draw_input(sd, seed, trial, k),
    ))
}

/// Across-trial statistics of `u(k)`, `k = 0..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult<T> {
    pub mean_u: Vec<T>,
    /// Sample mean of `u(k)^2`.
    pub var_u: VarianceTrace<T>,
    /// Standard error of `var_u`, from the across-trial spread of `u(k)^2`.
    pub stderr_u: Vec<T>,
    /// Frobenius norm of the empirical covariance of `(x_P, x_K)` (zero-input mode).
    pub cov_norm: Option<Vec<T>>,
    pub trials: usize,
    pub overflow_trials: usize,
}

struct Moments<T> {
    s1: Vec<T>,
    s2: Vec<T>,
    s4: Vec<T>,
    xs: Vec<T>,
    xx: Vec<T>,
    overflow: usize,
}

impl<T: Real> Moments<T> {
    fn new(h: usize, n: usize, states: bool) -> Self {
        let m = if states { h + 1 } else { 0 };
        Self {
            s1: vec![T::zero(); h + 1],
            s2: vec![T::zero(); h + 1],
            s4: vec![T::zero(); h + 1],
            xs: vec![T::zero(); m * n],
            xx: vec![T::zero(); m * n * n],
            overflow: 0,
        }
    }

    fn merge(&mut self, o: &Self) {
        let add = |a: &mut Vec<T>, b: &Vec<T>| a.iter_mut().zip(b).for_each(|(x, y)| *x += *y);
        add(&mut self.s1, &o.s1);
        add(&mut self.s2, &o.s2);
        add(&mut self.s4, &o.s4);
        add(&mut self.xs, &o.xs);
        add(&mut self.xx, &o.xx);
        self.overflow += o.overflow;
    }
}

fn simulate_block<T: Real>(
    cfg: &SimConfig<T>,
    kernel: &Kernel<T>,
    l0: Option<&DMatrix<T>>,
    trials: std::ops::Range<usize>,
) -> Moments<T> {
    let h = cfg.horizon;
    let n = kernel.np + kernel.nk;
    let mut m = Moments::new(h, n, l0.is_some());
    let mut w = kernel.work();
    let mut x0 = vec![T::zero(); n];
    let sd = input_sd(&cfg.input);
    for trial in trials {
        let trial = trial as u64;
        if let Some(l) = l0 {
            draw_initial(l, cfg.seed, trial, &mut x0);
            kernel.reset(&mut w, Some(&x0));
        } else {
            kernel.reset(&mut w, None);
        }
        let mut overflow = false;
        for k in 0..=h {
            if l0.is_some() {
                let base = k * n;
                for i in 0..n {
                    let xi = if i < kernel.np { w.xp[i] } else { w.xk[i - kernel.np] };
                    m.xs[base + i] += xi;
                    for j in 0..n {
                        let xj = if j < kernel.np { w.xp[j] } else { w.xk[j - kernel.np] };
                        m.xx[base * n + i * n + j] += xi * xj;
                    }
                }
            }
            let tau = draw_delay(&kernel.pmf, cfg.seed, trial, k);
            let v = draw_input(sd, cfg.seed, trial, k);
            let s = kernel.step(&mut w, k, tau, v);
            let u2 = s.u * s.u;
            overflow |= !u2.is_finite();
            m.s1[k] += s.u;
            m.s2[k] += u2;
            m.s4[k] += u2 * u2;
        }
        if overflow {
            m.overflow += 1;
        }
    }
    m
}

/// Runs `cfg.trials` independent trials and aggregates per-instant moments.
///
/// Trials are processed in fixed blocks whose partial sums are combined in
/// block order, so the result is identical for any thread schedule.
pub fn estimate_variance<T: Real>(cfg: &SimConfig<T>) -> Result<SimResult<T>> {
    cfg.validate()?;
    let kernel = Kernel::new(cfg);
    let n = kernel.np + kernel.nk;
    let l0 = match &cfg.input {
        InputMode::ZeroInput { sigma0 } => Some(initial_factor(sigma0, n)?),
        InputMode::White { .. } => None,
    };
    let blocks: Vec<std::ops::Range<usize>> = (0..cfg.trials)
        .step_by(BLOCK)
        .map(|s| s..(s + BLOCK).min(cfg.trials))
        .collect();
    let parts: Vec<Moments<T>> = blocks
        .into_par_iter()
        .map(|r| simulate_block(cfg, &kernel, l0.as_ref(), r))
        .collect();
    let mut total = Moments::new(cfg.horizon, n, l0.is_some());
    for p in &parts {
        total.merge(p);
    }

    let nt = T::lit(cfg.trials as f64);
    let mean_u: Vec<T> = total.s1.iter().map(|s| *s / nt).collect();
    let var: Vec<T> = total.s2.iter().map(|s| *s / nt).collect();
    let stderr_u = total
        .s4
        .iter()
        .zip(&var)
        .map(|(s4, m2)| {
            if cfg.trials < 2 {
                return T::zero();
            }
            let spread = (*s4 - nt * *m2 * *m2) / (nt - T::one());
            (spread.max(T::zero()) / nt).sqrt()
        })
        .collect();
    let cov_norm = l0.map(|_| {
        (0..=cfg.horizon)
            .map(|k| {
                let base = k * n;
                let mut fro = T::zero();
                for i in 0..n {
                    for j in 0..n {
                        let mi = total.xs[base + i] / nt;
                        let mj = total.xs[base + j] / nt;
                        let c = total.xx[base * n + i * n + j] / nt - mi * mj;
                        fro += c * c;
                    }
                }
                fro.sqrt()
            })
            .collect()
    });
    Ok(SimResult {
        mean_u,
        var_u: VarianceTrace {
            sigma_sq: var,
            source: TraceSource::Empirical,
        },
        stderr_u,
        cov_norm,
        trials: cfg.trials,
        overflow_trials: total.overflow,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceDecay<T> {
    pub decaying: bool,
    pub threshold: T,
    /// `||Cov(x(k))||_F` for `k = 0..=horizon`.
    pub cov_norm: Vec<T>,
}

/// Empirical state-covariance trace and decay verdict for a zero-input run.
///
/// The verdict is "decaying" when the covariance norm is below
/// `1e-4 ||Sigma_0||_F` over the final tenth of the horizon.
pub fn covariance_decay<T: Real>(cfg: &SimConfig<T>) -> Result<CovarianceDecay<T>> {
    let InputMode::ZeroInput { sigma0 } = &cfg.input else {
        return Err(Error::InvalidInput("covariance decay needs the zero-input mode".into()));
    };
    let threshold = T::lit(DECAY_LEVEL) * sigma0.norm();
    let res = estimate_variance(cfg)?;
    let cov_norm = res.cov_norm.unwrap_or_default();
    let len = cov_norm.len();
    let window = ((len as f64 * DECAY_WINDOW).ceil() as usize).clamp(1, len);
    let decaying = cov_norm[len - window..].iter().all(|c| *c < threshold);
    Ok(CovarianceDecay {
        decaying,
        threshold,
        cov_norm,
    })
}

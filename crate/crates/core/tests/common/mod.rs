#![allow(dead_code)]

use delaynet::channel::ChannelSpec;
use delaynet::lti::{ss_from_tf, Polynomial, RationalTf, StateSpace};
use delaynet::synthesis::synthesize;
use num_complex::Complex;
use rand::rngs::StdRng;
use rand::Rng;

pub type Ss = StateSpace<f64>;

pub fn example_plant() -> Ss {
    StateSpace::from_rows(
        &[vec![1.2, 0.0], vec![1.0, 1.1]],
        &[vec![1.0], vec![0.0]],
        &[vec![1.0, 1.0]],
        &[vec![0.0]],
    )
    .unwrap()
}

pub fn example_channel() -> ChannelSpec<f64> {
    ChannelSpec::new(vec![0.6, 0.3, 0.1], vec![0.6, 0.4, 0.0]).unwrap()
}

pub fn example_controller() -> Ss {
    synthesize(&example_plant(), &example_channel()).unwrap().k
}

pub fn scalar_ss(a: f64, b: f64, c: f64, d: f64) -> Ss {
    StateSpace::from_rows(&[vec![a]], &[vec![b]], &[vec![c]], &[vec![d]]).unwrap()
}

/// Random poles of modulus at most `rmax`, closed under conjugation.
pub fn random_poles(rng: &mut StdRng, order: usize, rmax: f64) -> Vec<Complex<f64>> {
    let mut poles = Vec::with_capacity(order);
    while poles.len() < order {
        let r = rmax * rng.random::<f64>();
        if order - poles.len() >= 2 && rng.random::<bool>() {
            let th = std::f64::consts::PI * rng.random::<f64>();
            poles.push(Complex::from_polar(r, th));
            poles.push(Complex::from_polar(r, -th));
        } else {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            poles.push(Complex::new(s * r, 0.0));
        }
    }
    poles
}

/// Random stable transfer function, strictly proper when `strict` is set.
pub fn random_tf(rng: &mut StdRng, order: usize, strict: bool) -> RationalTf<f64> {
    let den = Polynomial::from_roots_in_z(&random_poles(rng, order, 0.9), 1.0);
    let mut num: Vec<f64> = (0..=order).map(|_| rng.random_range(-2.0..2.0)).collect();
    if strict {
        num[0] = 0.0;
    }
    RationalTf::new(Polynomial::new(num), den).unwrap()
}

/// Random stable strictly proper SISO system of order 1..=4.
pub fn random_stable_loop(rng: &mut StdRng) -> Ss {
    let order = rng.random_range(1..=4);
    ss_from_tf(&random_tf(rng, order, true)).unwrap()
}

/// Random channel with largest delay at most `max_tau`; every delay has
/// positive probability.
pub fn random_channel(rng: &mut StdRng, max_tau: usize) -> ChannelSpec<f64> {
    let n = rng.random_range(1..=max_tau + 1);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let pmf: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    ChannelSpec::new(pmf, weights).unwrap()
}

/// Mean and standard error of the sample mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

//! Optimal output-feedback design for the loop over the random-delay channel.

mod plant;
mod riccati;

use nalgebra::DMatrix;

pub use plant::{
    build_general_plant, build_general_plant_from, check_detectable, check_stabilizable,
    GeneralPlant, PBH_MARGIN, PBH_RANK_TOL,
};
pub use riccati::{
    solve_dare, Dare, DareSolution, INNER_CONDITION_LIMIT, RICCATI_RESIDUAL, RICCATI_STOP,
};

use crate::analysis::nominal_loop;
use crate::channel::{mean_channel, spectral_factor, ChannelSpec};
use crate::error::{Error, Result};
use crate::lti::{h2_norm_sq, is_schur, tf_from_ss, RationalTf, StateSpace};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisResult<T: Real> {
    /// Controller realization, `u = K y`.
    pub k: StateSpace<T>,
    /// Reduced monic transfer function of `k`.
    pub k_tf: RationalTf<T>,
    pub f: DMatrix<T>,
    pub l: DMatrix<T>,
    pub l0: DMatrix<T>,
    pub x: DMatrix<T>,
    pub y: DMatrix<T>,
    pub x_residual: T,
    pub y_residual: T,
    /// Spectral radius of `A + B2 F`.
    pub x_closed_loop_radius: T,
    /// Spectral radius of `A + L C2`.
    pub y_closed_loop_radius: T,
    /// Spectral radius of the nominal loop of `P`, `K` and the mean channel.
    pub loop_radius: T,
    pub j_star: T,
    pub ms_stabilizable: bool,
    pub degenerate: bool,
    pub note: Option<String>,
    pub plant: GeneralPlant<T>,
}

/// Controller matrices from the Riccati gains.
fn controller<T: Real>(
    gp: &GeneralPlant<T>,
    f: &DMatrix<T>,
    l: &DMatrix<T>,
    l0: &DMatrix<T>,
) -> Result<StateSpace<T>> {
    let b2l0 = &gp.b2 * l0;
    StateSpace::new(
        &gp.a + &gp.b2 * f + l * &gp.c2 - &b2l0 * &gp.c2,
        l - b2l0,
        l0 * &gp.c2 - f,
        l0.clone(),
    )
}

/// Cost `||z||` of the general plant in closed loop with `k`, from `v`.
pub fn closed_loop_cost<T: Real>(gp: &GeneralPlant<T>, k: &StateSpace<T>) -> Result<T> {
    let (n, nk) = (gp.order(), k.order());
    let mut a = DMatrix::zeros(n + nk, n + nk);
    a.view_mut((0, 0), (n, n))
        .copy_from(&(&gp.a + &gp.b2 * &k.d * &gp.c2));
    a.view_mut((0, n), (n, nk)).copy_from(&(&gp.b2 * &k.c));
    a.view_mut((n, 0), (nk, n)).copy_from(&(&k.b * &gp.c2));
    a.view_mut((n, n), (nk, nk)).copy_from(&k.a);
    let mut b = DMatrix::zeros(n + nk, 1);
    b.view_mut((0, 0), (n, 1)).copy_from(&gp.b1);
    let mut c = DMatrix::zeros(1, n + nk);
    c.view_mut((0, 0), (1, n))
        .copy_from(&(&gp.c1 + &gp.d12 * &k.d * &gp.c2));
    c.view_mut((0, n), (1, nk)).copy_from(&(&gp.d12 * &k.c));
    h2_norm_sq(&StateSpace::new(a, b, c, DMatrix::zeros(1, 1))?)
}

/// Designs the controller minimizing `||Phi G||_2^2` for plant `p`.
///
/// When the channel is deterministic the cost output vanishes; the control
/// Riccati equation is then replaced by a unit-weight regulator so that a
/// stabilizing controller is still returned, with `J* = 0`.
pub fn synthesize<T: Real>(p: &StateSpace<T>, spec: &ChannelSpec<T>) -> Result<SynthesisResult<T>> {
    let h = mean_channel(spec);
    let factor = spectral_factor(spec)?;
    let gp = build_general_plant(p, &h, &factor.phi)?;
    synthesize_plant(p, spec, gp, factor.degenerate)
}

/// Synthesis on an already assembled general plant.
pub fn synthesize_plant<T: Real>(
    p: &StateSpace<T>,
    spec: &ChannelSpec<T>,
    gp: GeneralPlant<T>,
    degenerate: bool,
) -> Result<SynthesisResult<T>> {
    check_stabilizable(&gp.a, &gp.b2)?;
    check_detectable(&gp.c2, &gp.a)?;

    let n = gp.order();
    let (q, r, s) = if degenerate || gp.cost_vanishes() {
        (DMatrix::identity(n, n), DMatrix::identity(1, 1), DMatrix::zeros(n, 1))
    } else {
        (
            gp.c1.transpose() * &gp.c1,
            gp.d12.transpose() * &gp.d12,
            gp.c1.transpose() * &gp.d12,
        )
    };
    let xs = solve_dare(&Dare {
        a: &gp.a,
        b: &gp.b2,
        q: &q,
        r: &r,
        s: &s,
    })?;

    let at = gp.a.transpose();
    let c2t = gp.c2.transpose();
    let qy = &gp.b1 * gp.b1.transpose();
    let zero_r = DMatrix::zeros(1, 1);
    let zero_s = DMatrix::zeros(n, 1);
    let ys = solve_dare(&Dare {
        a: &at,
        b: &c2t,
        q: &qy,
        r: &zero_r,
        s: &zero_s,
    })?;

    let f = xs.gain.clone();
    let l = ys.gain.transpose();
    let cyc = &gp.c2 * &ys.x * &c2t;
    let cyc_inv = cyc
        .clone()
        .try_inverse()
        .ok_or(Error::RiccatiSingular { condition: f64::INFINITY })?;
    let l0 = &f * &ys.x * &c2t * cyc_inv;

    let k = controller(&gp, &f, &l, &l0)?;
    let k_tf = tf_from_ss(&k)?;
    let g = nominal_loop(p, &k, spec)?;
    let test = is_schur(&g.a)?;
    if !test.stable {
        return Err(Error::Internal(format!(
            "synthesized loop is not internally stable (radius {})",
            test.spectral_radius
        )));
    }
    let (j_star, note) = if degenerate || gp.cost_vanishes() {
        (
            T::zero(),
            Some("channel uncertainty vanishes; any stabilizing controller attains zero cost".to_string()),
        )
    } else {
        (closed_loop_cost(&gp, &k)?, None)
    };

    Ok(SynthesisResult {
        k,
        k_tf,
        f,
        l,
        l0,
        x: xs.x,
        y: ys.x,
        x_residual: xs.residual,
        y_residual: ys.residual,
        x_closed_loop_radius: xs.closed_loop_radius,
        y_closed_loop_radius: ys.closed_loop_radius,
        loop_radius: test.spectral_radius,
        j_star,
        ms_stabilizable: j_star < T::one(),
        degenerate: degenerate || gp.cost_vanishes(),
        note,
        plant: gp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::small_gain;

    fn example_plant() -> StateSpace<f64> {
        StateSpace::from_rows(
            &[vec![1.2, 0.0], vec![1.0, 1.1]],
            &[vec![1.0], vec![0.0]],
            &[vec![1.0, 1.0]],
            &[vec![0.0]],
        )
        .unwrap()
    }

    #[test]
    fn example_design() {
        let spec = ChannelSpec::new(vec![0.6, 0.3, 0.1], vec![0.6, 0.4, 0.0]).unwrap();
        let res = synthesize(&example_plant(), &spec).unwrap();
        assert!(f64::abs(res.j_star - 0.1728) < 1e-3);
        let phi = spectral_factor(&spec).unwrap().phi;
        let g = nominal_loop(&example_plant(), &res.k, &spec).unwrap();
        let j = small_gain(&g, &phi).unwrap().j.unwrap();
        assert!(f64::abs(j - res.j_star) < 1e-8);
    }

    #[test]
    fn deterministic_channel() {
        let p = StateSpace::from_rows(&[vec![0.5]], &[vec![1.0]], &[vec![1.0]], &[vec![0.0]]).unwrap();
        let res = synthesize(&p, &ChannelSpec::identity()).unwrap();
        assert_eq!(res.j_star, 0.0);
        assert!(res.degenerate && res.note.is_some());
    }

    #[test]
    fn undetectable_plant() {
        let p = StateSpace::from_rows(&[vec![1.5]], &[vec![1.0]], &[vec![0.0]], &[vec![0.0]]).unwrap();
        let spec = ChannelSpec::new(vec![0.6, 0.3, 0.1], vec![0.6, 0.4, 0.0]).unwrap();
        let err = synthesize(&p, &spec).unwrap_err();
        assert!(err.is_solver_failure(), "{err}");
    }
}

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lti::{eigenvalues, Polynomial, StateSpace};
use crate::scalar::Real;

/// Modes with modulus at least `1 - PBH_MARGIN` must be controllable/observable.
pub const PBH_MARGIN: f64 = 1e-9;
/// Relative smallest-singular-value threshold of the PBH rank test.
pub const PBH_RANK_TOL: f64 = 1e-9;

/// Aggregate of plant, mean channel and spectral factor with disturbance
/// input `v`, control input `u`, cost output `z = Phi u` and measurement `y`.
///
/// States are ordered `(x_P, x_Phi, x_H)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralPlant<T: Real> {
    pub a: DMatrix<T>,
    pub b1: DMatrix<T>,
    pub b2: DMatrix<T>,
    pub c1: DMatrix<T>,
    pub c2: DMatrix<T>,
    pub d12: DMatrix<T>,
    pub n_p: usize,
    pub n_phi: usize,
    pub n_h: usize,
}

impl<T: Real> GeneralPlant<T> {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// True when the cost output is identically zero.
    pub fn cost_vanishes(&self) -> bool {
        self.c1.iter().chain(self.d12.iter()).all(|x| *x == T::zero())
    }
}

pub fn build_general_plant<T: Real>(
    p: &StateSpace<T>,
    h: &Polynomial<T>,
    phi: &Polynomial<T>,
) -> Result<GeneralPlant<T>> {
    build_general_plant_from(p, &StateSpace::fir(h), &StateSpace::fir(phi))
}

/// Same as [`build_general_plant`] for arbitrary realizations of `H` and `Phi`.
pub fn build_general_plant_from<T: Real>(
    p: &StateSpace<T>,
    h: &StateSpace<T>,
    phi: &StateSpace<T>,
) -> Result<GeneralPlant<T>> {
    for (name, s) in [("P", p), ("H", h), ("Phi", phi)] {
        if !s.is_siso() {
            return Err(Error::Dimension(format!("{name} must be SISO")));
        }
    }
    if !p.is_strictly_proper() {
        return Err(Error::IllPosed("plant must be strictly proper".into()));
    }
    let (np, nf, nh) = (p.order(), phi.order(), h.order());
    let n = np + nf + nh;

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np)).copy_from(&p.a);
    a.view_mut((0, np + nf), (np, nh))
        .copy_from(&(-(&p.b * &h.c)));
    a.view_mut((np, np), (nf, nf)).copy_from(&phi.a);
    a.view_mut((np + nf, np + nf), (nh, nh)).copy_from(&h.a);

    let mut b1 = DMatrix::zeros(n, 1);
    b1.view_mut((0, 0), (np, 1)).copy_from(&p.b);

    let mut b2 = DMatrix::zeros(n, 1);
    b2.view_mut((0, 0), (np, 1)).copy_from(&(&p.b * (-h.d0())));
    b2.view_mut((np, 0), (nf, 1)).copy_from(&phi.b);
    b2.view_mut((np + nf, 0), (nh, 1)).copy_from(&h.b);

    let mut c1 = DMatrix::zeros(1, n);
    c1.view_mut((0, np), (1, nf)).copy_from(&phi.c);

    let mut c2 = DMatrix::zeros(1, n);
    c2.view_mut((0, 0), (1, np)).copy_from(&p.c);

    Ok(GeneralPlant {
        a,
        b1,
        b2,
        c1,
        c2,
        d12: phi.d.clone(),
        n_p: np,
        n_phi: nf,
        n_h: nh,
    })
}

fn complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Modes `lambda` of `a` outside the margin for which `[lambda I - A, B]`
/// loses rank. Returns the first offending mode.
fn pbh_defect<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<Option<Complex<T>>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(None);
    }
    let scale = a.norm().max(b.norm()).max(T::one());
    let ac = complex(a);
    let bc = complex(b);
    for lam in eigenvalues(a)? {
        if lam.norm_sqr().sqrt() < T::one() - T::tol(PBH_MARGIN) {
            continue;
        }
        let mut m = DMatrix::<Complex<T>>::zeros(n, n + b.ncols());
        m.view_mut((0, 0), (n, n))
            .copy_from(&(DMatrix::<Complex<T>>::identity(n, n) * lam - &ac));
        m.view_mut((0, n), (n, b.ncols())).copy_from(&bc);
        let sv = m.singular_values();
        let smin = sv.iter().fold(T::max_value().unwrap_or_else(T::one), |s, x| s.min(*x));
        if smin <= T::tol(PBH_RANK_TOL) * scale {
            return Ok(Some(lam));
        }
    }
    Ok(None)
}

fn mode_name<T: Real>(z: Complex<T>) -> String {
    if z.im == T::zero() {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

pub fn check_stabilizable<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<()> {
    match pbh_defect(a, b)? {
        Some(z) => Err(Error::NotStabilizable { mode: mode_name(z) }),
        None => Ok(()),
    }
}

pub fn check_detectable<T: Real>(c: &DMatrix<T>, a: &DMatrix<T>) -> Result<()> {
    match pbh_defect(&a.transpose(), &c.transpose())? {
        Some(z) => Err(Error::NotDetectable { mode: mode_name(z) }),
        None => Ok(()),
    }
}

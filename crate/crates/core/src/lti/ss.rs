use nalgebra::DMatrix;

use super::poly::Polynomial;
use super::tf::RationalTf;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Discrete-time state-space model `x+ = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
}

impl<T: Real> StateSpace<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "A is {n}x{n} but B has {} rows and C has {} columns",
                b.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Builds a model from row-major nested vectors; an empty `a` means no states.
    pub fn from_rows(a: &[Vec<T>], b: &[Vec<T>], c: &[Vec<T>], d: &[Vec<T>]) -> Result<Self> {
        let n = a.len();
        let m = d.first().map_or(0, |r| r.len());
        let p = d.len();
        Self::new(
            rows_to_matrix(a, n, n)?,
            rows_to_matrix(b, n, m)?,
            rows_to_matrix(c, p, n)?,
            rows_to_matrix(d, p, m)?,
        )
    }

    /// Static SISO gain with no states.
    pub fn gain(k: T) -> Self {
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, 1),
            c: DMatrix::zeros(1, 0),
            d: DMatrix::from_element(1, 1, k),
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|x| *x == T::zero())
    }

    /// Direct feedthrough of a SISO model.
    pub fn d0(&self) -> T {
        self.d[(0, 0)]
    }

    /// Multiplies the output map (`C` and `D`) by `k`.
    pub fn scale_output(&self, k: T) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * k,
            d: &self.d * k,
        }
    }

    /// Change of state coordinates `x = T x'`.
    pub fn similarity(&self, t: &DMatrix<T>) -> Result<Self> {
        let n = self.order();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::Dimension(format!("similarity transform must be {n}x{n}")));
        }
        let ti = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular similarity transform".into()))?;
        Ok(Self {
            a: &ti * &self.a * t,
            b: &ti * &self.b,
            c: &self.c * t,
            d: self.d.clone(),
        })
    }

    /// Cascade: the output of `self` drives `next`.
    pub fn series(&self, next: &Self) -> Result<Self> {
        if self.outputs() != next.inputs() {
            return Err(Error::Dimension(format!(
                "series: {} outputs feed {} inputs",
                self.outputs(),
                next.inputs()
            )));
        }
        let (n1, n2) = (self.order(), next.order());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&next.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&next.b * &self.c));
        let mut b = DMatrix::zeros(n1 + n2, self.inputs());
        b.view_mut((0, 0), (n1, self.inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.inputs()))
            .copy_from(&(&next.b * &self.d));
        let mut c = DMatrix::zeros(next.outputs(), n1 + n2);
        c.view_mut((0, 0), (next.outputs(), n1))
            .copy_from(&(&next.d * &self.c));
        c.view_mut((0, n1), (next.outputs(), n2)).copy_from(&next.c);
        Self::new(a, b, c, &next.d * &self.d)
    }

    /// Shift-register realization of an FIR filter `c0 + c1 z^-1 + ... + cn z^-n`.
    ///
    /// State `j` holds the input delayed by `j + 1` samples, so `D = c0` exactly.
    pub fn fir(p: &Polynomial<T>) -> Self {
        let p = p.normalize();
        if p.is_empty() {
            return Self::gain(T::zero());
        }
        let n = p.len() - 1;
        let mut a = DMatrix::zeros(n, n);
        for i in 1..n {
            a[(i, i - 1)] = T::one();
        }
        let mut b = DMatrix::zeros(n, 1);
        if n > 0 {
            b[(0, 0)] = T::one();
        }
        let c = DMatrix::from_fn(1, n, |_, j| p.coeff(j + 1));
        Self {
            a,
            b,
            c,
            d: DMatrix::from_element(1, 1, p.coeff(0)),
        }
    }
}

fn rows_to_matrix<T: Real>(rows: &[Vec<T>], nr: usize, nc: usize) -> Result<DMatrix<T>> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Dimension(format!("expected a {nr}x{nc} matrix")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Controllable canonical realization of a proper SISO transfer function.
pub fn ss_from_tf<T: Real>(tf: &RationalTf<T>) -> Result<StateSpace<T>> {
    if tf.den().coeff(0) == T::zero() {
        return Err(Error::Improper);
    }
    let tf = tf.monic();
    let n = tf.num().len().max(tf.den().len()).saturating_sub(1);
    let b0 = tf.num().coeff(0);
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -tf.den().coeff(j + 1);
    }
    for i in 1..n {
        a[(i, i - 1)] = T::one();
    }
    let mut b = DMatrix::zeros(n, 1);
    if n > 0 {
        b[(0, 0)] = T::one();
    }
    let c = DMatrix::from_fn(1, n, |_, j| {
        tf.num().coeff(j + 1) - b0 * tf.den().coeff(j + 1)
    });
    StateSpace::new(a, b, c, DMatrix::from_element(1, 1, b0))
}

/// Transfer function of a SISO model before pole/zero cancellation.
///
/// Uses the Faddeev-LeVerrier recursion for the characteristic polynomial and
/// the adjugate of `zI - A`; adequate for the small orders handled here.
pub fn tf_from_ss_unreduced<T: Real>(ss: &StateSpace<T>) -> Result<RationalTf<T>> {
    if !ss.is_siso() {
        return Err(Error::Dimension(format!(
            "transfer function needs a SISO model, got {}x{}",
            ss.outputs(),
            ss.inputs()
        )));
    }
    let n = ss.order();
    let d = ss.d0();
    let mut den = vec![T::one(); n + 1];
    let mut num = vec![d; n + 1];
    let mut m = DMatrix::<T>::identity(n, n);
    for k in 1..=n {
        if k > 1 {
            m = &ss.a * &m + DMatrix::identity(n, n) * den[k - 1];
        }
        let am = &ss.a * &m;
        den[k] = -am.trace() / T::lit(k as f64);
        num[k] = (&ss.c * &m * &ss.b)[(0, 0)];
    }
    for k in 1..=n {
        num[k] += d * den[k];
    }
    RationalTf::from_coeffs(num, den)
}

/// `C (zI - A)^-1 B + D` in reduced, monic form.
pub fn tf_from_ss<T: Real>(ss: &StateSpace<T>) -> Result<RationalTf<T>> {
    tf_from_ss_unreduced(ss)?.reduce()
}

/// Realization of the loop map from the disturbance at the plant input to `u`.
///
/// The plant input is `w - H u` and `u = K P (w - H u)`, so the transfer
/// function is `P K / (1 + P K H)`. States are ordered `(x_P, x_K, x_H)`.
pub fn feedback_interconnect<T: Real>(
    p: &StateSpace<T>,
    k: &StateSpace<T>,
    h: &StateSpace<T>,
) -> Result<StateSpace<T>> {
    for (name, s) in [("P", p), ("K", k), ("H", h)] {
        if !s.is_siso() {
            return Err(Error::Dimension(format!("{name} must be SISO")));
        }
    }
    if !p.is_strictly_proper() {
        return Err(Error::IllPosed(
            "plant has direct feedthrough, the loop may not be well posed".into(),
        ));
    }
    let (np, nk, nh) = (p.order(), k.order(), h.order());
    let n = np + nk + nh;
    let (dk, dh) = (k.d0(), h.d0());

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np))
        .copy_from(&(&p.a - &p.b * &p.c * (dh * dk)));
    a.view_mut((0, np), (np, nk))
        .copy_from(&(&p.b * &k.c * (-dh)));
    a.view_mut((0, np + nk), (np, nh))
        .copy_from(&(-(&p.b * &h.c)));
    a.view_mut((np, 0), (nk, np)).copy_from(&(&k.b * &p.c));
    a.view_mut((np, np), (nk, nk)).copy_from(&k.a);
    a.view_mut((np + nk, 0), (nh, np))
        .copy_from(&(&h.b * &p.c * dk));
    a.view_mut((np + nk, np), (nh, nk)).copy_from(&(&h.b * &k.c));
    a.view_mut((np + nk, np + nk), (nh, nh)).copy_from(&h.a);

    let mut b = DMatrix::zeros(n, 1);
    b.view_mut((0, 0), (np, 1)).copy_from(&p.b);

    let mut c = DMatrix::zeros(1, n);
    c.view_mut((0, 0), (1, np)).copy_from(&(&p.c * dk));
    c.view_mut((0, np), (1, nk)).copy_from(&k.c);

    StateSpace::new(a, b, c, DMatrix::zeros(1, 1))
}

//! Discrete-time LTI building blocks: polynomials in `z^-1`, transfer
//! functions, state-space models and their H2 machinery.

mod h2;
mod lyap;
mod poly;
mod roots;
mod ss;
mod stability;
mod tf;

pub use h2::{
    certified_horizon, controllability_gramian, h2_norm_sq, horizon_for_radius,
    impulse_response, observability_gramian, ImpulseResponse, HORIZON_CAP, HORIZON_TOL,
};
pub use lyap::{solve_dlyap, LYAP_RESIDUAL};
pub use poly::Polynomial;
pub use roots::{eigenvalues, roots_desc};
pub use ss::{feedback_interconnect, ss_from_tf, tf_from_ss, tf_from_ss_unreduced, StateSpace};
pub use stability::{is_schur, spectral_radius, SchurTest, SCHUR_MARGIN};
pub use tf::{RationalTf, COEFF_CHOP, ROOT_CANCEL_TOL};

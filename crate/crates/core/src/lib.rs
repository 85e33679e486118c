//! Mean-square stability analysis, optimal H2 synthesis and Monte Carlo
//! validation for discrete-time feedback loops closed over a channel with
//! i.i.d. random transmission delays.
//!
//! The numerical code is generic over [`Real`](scalar::Real) (`f32` or `f64`);
//! the aliases below fix the common `f64` instantiation.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod io;
pub mod lti;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Polynomial64 = lti::Polynomial<f64>;
pub type RationalTf64 = lti::RationalTf<f64>;
pub type StateSpace64 = lti::StateSpace<f64>;
pub type ChannelSpec64 = channel::ChannelSpec<f64>;
pub type AnalysisReport64 = analysis::AnalysisReport<f64>;
pub type SynthesisResult64 = synthesis::SynthesisResult<f64>;
pub type SimConfig64 = sim::SimConfig<f64>;
pub type SimResult64 = sim::SimResult<f64>;

pub type Polynomial32 = lti::Polynomial<f32>;
pub type StateSpace32 = lti::StateSpace<f32>;
pub type ChannelSpec32 = channel::ChannelSpec<f32>;

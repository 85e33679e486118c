use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::lti::{ss_from_tf, RationalTf, StateSpace};

/// A plant or controller, given either as matrices or as `z^-1` coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    StateSpace {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
        #[serde(rename = "D")]
        d: Vec<Vec<f64>>,
    },
    TransferFunction {
        num: Vec<f64>,
        den: Vec<f64>,
    },
}

impl SystemConfig {
    pub fn to_state_space(&self) -> Result<StateSpace<f64>> {
        match self {
            SystemConfig::StateSpace { a, b, c, d } => {
                if a.is_empty() {
                    // A static gain: B and C may be written as [] or [[]].
                    let rows = d.len();
                    let cols = d.first().map_or(0, |r| r.len());
                    let flat: Vec<f64> = d.iter().flatten().copied().collect();
                    if d.iter().any(|r| r.len() != cols) {
                        return Err(Error::Dimension("D rows have different lengths".into()));
                    }
                    return StateSpace::new(
                        DMatrix::zeros(0, 0),
                        DMatrix::zeros(0, cols),
                        DMatrix::zeros(rows, 0),
                        DMatrix::from_row_slice(rows, cols, &flat),
                    );
                }
                StateSpace::from_rows(a, b, c, d)
            }
            SystemConfig::TransferFunction { num, den } => {
                if num.is_empty() || den.is_empty() {
                    return Err(Error::InvalidInput("empty transfer-function coefficients".into()));
                }
                ss_from_tf(&RationalTf::from_coeffs(num.clone(), den.clone())?)
            }
        }
    }

    pub fn from_state_space(ss: &StateSpace<f64>) -> Self {
        SystemConfig::StateSpace {
            a: rows(&ss.a),
            b: rows(&ss.b),
            c: rows(&ss.c),
            d: rows(&ss.d),
        }
    }
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Exogenous input: white-noise variance and/or initial state covariance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_v_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_covariance: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub plant: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<SystemConfig>,
    pub channel: ChannelSpec<f64>,
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads and parses a config file; the message carries line and column.
    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn plant(&self) -> Result<StateSpace<f64>> {
        self.plant.to_state_space()
    }

    pub fn controller(&self) -> Result<StateSpace<f64>> {
        self.controller
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config has no \"controller\"".into()))?
            .to_state_space()
    }

    /// Input variance, one when unspecified.
    pub fn sigma_v_sq(&self) -> f64 {
        self.input.sigma_v_sq.unwrap_or(1.0)
    }

    /// Initial covariance of `(x_P, x_K)`, identity of size `n` when unspecified.
    pub fn initial_covariance(&self, n: usize) -> Result<DMatrix<f64>> {
        match &self.input.initial_covariance {
            None => Ok(DMatrix::identity(n, n)),
            Some(r) => {
                if r.len() != n || r.iter().any(|row| row.len() != n) {
                    return Err(Error::Dimension(format!(
                        "initial_covariance must be {n}x{n} (plant and controller states)"
                    )));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| r[i][j]))
            }
        }
    }
}

use serde::Serialize;

use super::config::{rows, SystemConfig};
use crate::analysis::{AnalysisReport, SweepRow};
use crate::error::Result;
use crate::lti::{tf_from_ss, RationalTf};
use crate::synthesis::SynthesisResult;

/// Rounds to four decimals for the human-facing echo fields.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TfJson {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl From<&RationalTf<f64>> for TfJson {
    fn from(t: &RationalTf<f64>) -> Self {
        Self {
            num: t.num().coeffs().to_vec(),
            den: t.den().coeffs().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisRounded {
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    #[serde(rename = "Phi")]
    pub phi: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub sigma_u_inf: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisJson {
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    #[serde(rename = "Phi")]
    pub phi: Vec<f64>,
    pub degenerate_channel: bool,
    #[serde(rename = "G")]
    pub g: SystemConfig,
    #[serde(rename = "G_tf")]
    pub g_tf: TfJson,
    pub nominal_stable: bool,
    pub spectral_radius: f64,
    #[serde(rename = "H2_G")]
    pub h2_g: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub ms_stable: bool,
    pub sigma_v_sq: f64,
    pub sigma_u_inf: Option<f64>,
    pub rounded: AnalysisRounded,
}

impl AnalysisJson {
    pub fn new(r: &AnalysisReport<f64>) -> Result<Self> {
        Ok(Self {
            h: r.h.coeffs().to_vec(),
            phi: r.phi.coeffs().to_vec(),
            degenerate_channel: r.degenerate_channel,
            g: SystemConfig::from_state_space(&r.g),
            g_tf: (&tf_from_ss(&r.g)?).into(),
            nominal_stable: r.nominal_stable,
            spectral_radius: r.spectral_radius,
            h2_g: r.h2_g,
            j: r.j,
            ms_stable: r.ms_stable,
            sigma_v_sq: r.sigma_v_sq,
            sigma_u_inf: r.sigma_u_inf,
            rounded: AnalysisRounded {
                h: r.h.coeffs().iter().map(|x| round4(*x)).collect(),
                phi: r.phi.coeffs().iter().map(|x| round4(*x)).collect(),
                j: r.j.map(round4),
                sigma_u_inf: r.sigma_u_inf.map(round4),
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControllerJson {
    pub state_space: SystemConfig,
    pub transfer_function: TfJson,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthesisRounded {
    #[serde(rename = "J_star")]
    pub j_star: f64,
    #[serde(rename = "K_num")]
    pub k_num: Vec<f64>,
    #[serde(rename = "K_den")]
    pub k_den: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthesisJson {
    #[serde(rename = "K")]
    pub k: ControllerJson,
    #[serde(rename = "J_star")]
    pub j_star: f64,
    pub ms_stabilizable: bool,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    #[serde(rename = "L0")]
    pub l0: Vec<Vec<f64>>,
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    #[serde(rename = "Y")]
    pub y: Vec<Vec<f64>>,
    pub riccati_residual_x: f64,
    pub riccati_residual_y: f64,
    pub loop_spectral_radius: f64,
    pub rounded: SynthesisRounded,
}

impl From<&SynthesisResult<f64>> for SynthesisJson {
    fn from(r: &SynthesisResult<f64>) -> Self {
        Self {
            k: ControllerJson {
                state_space: SystemConfig::from_state_space(&r.k),
                transfer_function: (&r.k_tf).into(),
            },
            j_star: r.j_star,
            ms_stabilizable: r.ms_stabilizable,
            degenerate: r.degenerate,
            note: r.note.clone(),
            f: rows(&r.f),
            l: rows(&r.l),
            l0: rows(&r.l0),
            x: rows(&r.x),
            y: rows(&r.y),
            riccati_residual_x: r.x_residual,
            riccati_residual_y: r.y_residual,
            loop_spectral_radius: r.loop_radius,
            rounded: SynthesisRounded {
                j_star: round4(r.j_star),
                k_num: r.k_tf.num().coeffs().iter().map(|x| round4(*x)).collect(),
                k_den: r.k_tf.den().coeffs().iter().map(|x| round4(*x)).collect(),
            },
        }
    }
}

/// Empty cell for absent values.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow<f64>], boundary: Option<f64>) -> String {
    let mut out = String::new();
    if let Some(b) = boundary {
        out.push_str(&format!("# boundary_kappa={b}\n"));
    }
    out.push_str("kappa,J_kappa,sigma_u_inf\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.kappa, cell(r.j), cell(r.sigma_u_inf)));
    }
    out
}

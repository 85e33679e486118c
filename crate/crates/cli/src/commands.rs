use std::path::Path;

use delaynet::analysis::{
    analyze as run_analysis, nominal_loop, run_recursion, stability_boundary, sweep as run_sweep,
    zero_input_recursion, recursion_kernels,
};
use delaynet::io::{sim_csv_columns, AnalysisJson, ProblemConfig, SynthesisJson, sweep_csv};
use delaynet::sim::{estimate_variance, InputMode, SimConfig};
use delaynet::synthesis::synthesize as run_synthesis;
use delaynet::Error;
use nalgebra::DMatrix;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_UNSTABLE: u8 = 3;
pub const EXIT_SOLVER: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            _ if e.is_solver_failure() => EXIT_SOLVER,
            Error::EigenFailure(_)
            | Error::Lyapunov { .. }
            | Error::Internal(_)
            | Error::NotSchur(_) => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn load(path: &Path) -> Result<ProblemConfig, Failure> {
    ProblemConfig::load(path).map_err(Failure::config)
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::config(e.to_string()))
}

pub fn analyze(path: &Path) -> Outcome {
    let cfg = load(path)?;
    let (p, k) = (cfg.plant()?, cfg.controller()?);
    let report = run_analysis(&p, &k, &cfg.channel, cfg.sigma_v_sq())?;
    print!("{}", json(&AnalysisJson::new(&report)?)?);
    Ok(if report.ms_stable { EXIT_OK } else { EXIT_UNSTABLE })
}

pub fn synthesize(path: &Path) -> Outcome {
    let cfg = load(path)?;
    if cfg.controller.is_some() {
        eprintln!("delaynet: warning: the configured controller is ignored by synthesize");
    }
    let result = run_synthesis(&cfg.plant()?, &cfg.channel)?;
    if let Some(note) = &result.note {
        eprintln!("delaynet: note: {note}");
    }
    print!("{}", json(&SynthesisJson::from(&result))?);
    Ok(if result.ms_stabilizable { EXIT_OK } else { EXIT_UNSTABLE })
}

pub fn simulate(
    path: &Path,
    trials: usize,
    horizon: usize,
    seed: Option<u64>,
    zero_input: bool,
    output: Option<&Path>,
) -> Outcome {
    let cfg = load(path)?;
    let (p, k) = (cfg.plant()?, cfg.controller()?);
    let n_sim = p.order() + k.order();
    let input = if zero_input {
        InputMode::ZeroInput {
            sigma0: cfg.initial_covariance(n_sim)?,
        }
    } else {
        InputMode::White {
            sigma_v_sq: cfg.sigma_v_sq(),
        }
    };
    let sim_cfg = SimConfig {
        p: p.clone(),
        k: k.clone(),
        spec: cfg.channel.clone(),
        horizon,
        trials,
        seed: seed.or(cfg.seed).unwrap_or(0),
        input: input.clone(),
    };
    let sim = estimate_variance(&sim_cfg)?;

    let g = nominal_loop(&p, &k, &cfg.channel)?;
    let recursion = match &input {
        InputMode::White { sigma_v_sq } => {
            run_recursion(&g, &cfg.channel, *sigma_v_sq, Some(horizon))?.trace
        }
        InputMode::ZeroInput { sigma0 } => {
            // The mean-channel states start at rest.
            let mut full = DMatrix::zeros(g.order(), g.order());
            full.view_mut((0, 0), (n_sim, n_sim)).copy_from(sigma0);
            let kernels = recursion_kernels(&g, &cfg.channel, horizon.max(cfg.channel.tau()))?;
            zero_input_recursion(&g, &kernels, &full)?
        }
    };
    emit(&sim_csv_columns(&recursion, &sim), output)?;
    if sim.overflow_trials > 0 {
        eprintln!(
            "delaynet: warning: {} of {} trials overflowed",
            sim.overflow_trials, sim.trials
        );
    }
    Ok(EXIT_OK)
}

pub fn sweep(
    path: &Path,
    from: f64,
    to: f64,
    steps: usize,
    bisect_tol: Option<f64>,
    output: Option<&Path>,
) -> Outcome {
    let cfg = load(path)?;
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return Err(Failure::config("sweep needs finite bounds and at least one step"));
    }
    let (p, k) = (cfg.plant()?, cfg.controller()?);
    let kappas: Vec<f64> = if steps == 1 {
        vec![from]
    } else {
        (0..steps)
            .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let rows = run_sweep(&p, &k, &cfg.channel, cfg.sigma_v_sq(), &kappas)?;
    let boundary = match bisect_tol {
        None => None,
        Some(tol) => {
            let stable = |r: &delaynet::analysis::SweepRow<f64>| r.j.is_some_and(|j| j < 1.0);
            let bracket = rows
                .windows(2)
                .find(|w| stable(&w[0]) && !stable(&w[1]))
                .map(|w| (w[0], w[1]));
            match bracket {
                Some((lo, hi)) => Some(stability_boundary(
                    &p, &k, &cfg.channel, lo.kappa, hi.kappa, tol,
                )?),
                None => {
                    eprintln!("delaynet: warning: no stability transition inside the sweep range");
                    None
                }
            }
        }
    };
    emit(&sweep_csv(&rows, boundary), output)?;
    Ok(EXIT_OK)
}

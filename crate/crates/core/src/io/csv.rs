use std::fmt::Write;

use crate::analysis::VarianceTrace;
use crate::scalar::Real;
use crate::sim::SimResult;

/// `k,sigma_sq` rows.
pub fn trace_csv<T: Real>(trace: &VarianceTrace<T>) -> String {
    let mut out = String::from("k,sigma_sq\n");
    for (k, s) in trace.sigma_sq.iter().enumerate() {
        let _ = writeln!(out, "{k},{s}");
    }
    out
}

/// `k,mean_u,var_u,stderr_u[,cov_norm]` rows.
pub fn sim_csv<T: Real>(res: &SimResult<T>) -> String {
    let mut out = String::from("k,mean_u,var_u,stderr_u");
    if res.cov_norm.is_some() {
        out.push_str(",cov_norm");
    }
    out.push('\n');
    for k in 0..res.mean_u.len() {
        let _ = write!(
            out,
            "{k},{},{},{}",
            res.mean_u[k], res.var_u.sigma_sq[k], res.stderr_u[k]
        );
        if let Some(c) = &res.cov_norm {
            let _ = write!(out, ",{}", c[k]);
        }
        out.push('\n');
    }
    out
}

/// `k,var_recursion,var_empirical,stderr,mean_u[,cov_norm]` rows, the
/// analytic trace next to the Monte Carlo estimate.
pub fn sim_csv_columns<T: Real>(recursion: &VarianceTrace<T>, res: &SimResult<T>) -> String {
    let mut out = String::from("k,var_recursion,var_empirical,stderr,mean_u");
    if res.cov_norm.is_some() {
        out.push_str(",cov_norm");
    }
    out.push('\n');
    for k in 0..res.mean_u.len() {
        let rec = recursion.sigma_sq.get(k).map(|v| v.to_string()).unwrap_or_default();
        let _ = write!(
            out,
            "{k},{rec},{},{},{}",
            res.var_u.sigma_sq[k], res.stderr_u[k], res.mean_u[k]
        );
        if let Some(c) = &res.cov_norm {
            let _ = write!(out, ",{}", c[k]);
        }
        out.push('\n');
    }
    out
}

use serde::Serialize;

use super::TraceEntry;
use crate::energy::ProblemSpec;
use crate::error::Result;

/// Observable Palais–Smale proxies along a solver trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsReport {
    pub sup_norm: f64,
    /// No growth trend: the second half of the trace stays within 1.5x of
    /// the first half's supremum.
    pub bounded: bool,
    /// Final residual at most 1e-3 of the largest, or below 1e-6.
    pub residual_vanishing: bool,
    pub norm_non_increasing: bool,
    pub theta: f64,
    pub c4: f64,
    pub p_max_plus: f64,
    pub p_min_minus: f64,
    /// C4 (1/p_M+ - 1/theta) |u_n|^(p_m-) - (1/theta) res_n |u_n| per iterate.
    pub ledger: Vec<f64>,
}

/// Boundedness diagnostics for `trace` with theta = min(theta1, theta2) over
/// the records present and the constant `c4`.
pub fn ps_diagnostics(trace: &[TraceEntry], prob: &ProblemSpec, c4: f64) -> Result<PsReport> {
    let p_max_plus = prob.p_max()?.extrema()?.1;
    let p_min_minus = prob.p_min()?.extrema()?.0;
    let theta = prob
        .f()
        .iter()
        .chain(prob.g().iter())
        .map(|s| s.theta)
        .fold(f64::INFINITY, f64::min);
    let norms: Vec<f64> = trace.iter().map(|e| e.norm).collect();
    let sup_norm = norms.iter().copied().fold(0.0, f64::max);
    let half = norms.len().div_ceil(2);
    let first = norms[..half].iter().copied().fold(0.0, f64::max);
    let second = norms[half..].iter().copied().fold(0.0, f64::max);
    let bounded = sup_norm.is_finite() && second <= 1.5 * first.max(f64::MIN_POSITIVE);
    let max_res = trace.iter().map(|e| e.residual).fold(0.0, f64::max);
    let last_res = trace.last().map_or(0.0, |e| e.residual);
    let ledger = trace
        .iter()
        .map(|e| {
            c4 * (1.0 / p_max_plus - 1.0 / theta) * e.norm.powf(p_min_minus)
                - e.residual * e.norm / theta
        })
        .collect();
    Ok(PsReport {
        sup_norm,
        bounded,
        residual_vanishing: last_res <= 1e-3 * max_res || last_res <= 1e-6,
        norm_non_increasing: norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
        theta,
        c4,
        p_max_plus,
        p_min_minus,
        ledger,
    })
}

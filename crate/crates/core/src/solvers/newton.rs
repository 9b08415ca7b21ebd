use super::deflation::Deflation;
use super::{axpy, Ctx, Run, SolveOptions, SolveReport, Termination};
use crate::energy::ProblemSpec;
use crate::error::{Error, Result};
use crate::linalg::{dot, h1_form, Dense, Scaled, SymBanded};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const MAX_SHIFTS: usize = 30;
const CRITICAL_HALVINGS: usize = 12;

/// Damped Newton for L(u) = b.
///
/// The Jacobian of L is symmetric positive definite, so steps are taken by
/// banded Cholesky and damped by Armijo on the convex merit J(u) - b.u, with
/// residual decrease as the fallback once the merit is flat to rounding. A
/// failed factorisation or line search is retried with the shifted Jacobian
/// DL(u) + tau K. Trace `phi` entries hold the merit.
pub fn solve_operator_equation(
    prob: &ProblemSpec,
    b: &[f64],
    u0: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let n = prob.mesh().num_nodes();
    for v in [b, u0] {
        if v.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: v.len() });
        }
    }
    let ctx = Ctx::new(prob)?;
    let merit = |u: &[f64]| -> Result<f64> { Ok(prob.functional_j(u)? - dot(b, u)) };
    let residual = |u: &[f64]| -> Result<(Vec<f64>, f64)> {
        let r: Vec<f64> = prob.operator_l(u)?.iter().zip(b).map(|(l, b)| l - b).collect();
        let res = prob.residual_norm(&r)?;
        Ok((r, res))
    };
    let mut u = u0.to_vec();
    let mut psi = merit(&u)?;
    let (mut r, mut res) = residual(&u)?;
    let mut trace = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut iterations = opts.max_iter;
    let mut tau = 0.0;
    'outer: for it in 0..=opts.max_iter {
        trace.push(ctx.entry(it, &u, psi, res)?);
        if res <= opts.tol {
            termination = Termination::Converged;
            iterations = it;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        for _ in 0..MAX_SHIFTS {
            let mut jac = SymBanded::for_mesh(prob.mesh());
            prob.assemble_hessian(&u, false, &mut jac)?;
            if tau > 0.0 {
                h1_form(prob.mesh(), &mut Scaled(&mut jac, tau));
            }
            let step = match jac.cholesky() {
                Ok(chol) => chol.solve(&r).iter().map(|x| -x).collect::<Vec<f64>>(),
                Err(_) => {
                    tau = if tau == 0.0 { 1e-8 } else { 10.0 * tau };
                    continue;
                }
            };
            let slope = dot(&r, &step);
            let mut s = 1.0;
            for _ in 0..MAX_HALVINGS {
                let cand = axpy(&u, s, &step);
                if let (Ok(pc), Ok((rc, rres))) = (merit(&cand), residual(&cand)) {
                    if pc <= psi + ARMIJO * s * slope || rres <= (1.0 - ARMIJO * s) * res {
                        u = cand;
                        psi = pc;
                        r = rc;
                        res = rres;
                        tau *= 0.1;
                        if tau < 1e-12 {
                            tau = 0.0;
                        }
                        continue 'outer;
                    }
                }
                s *= 0.5;
            }
            tau = if tau == 0.0 { 1e-8 } else { 10.0 * tau };
        }
        termination = Termination::Singular;
        iterations = it;
        break;
    }
    ctx.report_with_residual("newton", u, res, termination, iterations, trace)
}

/// Newton iteration for phi'(u) = 0 with the full (possibly indefinite)
/// Hessian, optionally deflated. Steps are damped by backtracking on
/// m(u) |phi'(u)|.
pub fn newton_critical(
    prob: &ProblemSpec,
    u0: &[f64],
    opts: &SolveOptions,
    deflation: Option<&Deflation>,
) -> Result<SolveReport> {
    let ctx = Ctx::new(prob)?;
    let run = newton_run(&ctx, u0.to_vec(), opts, deflation)?;
    ctx.report("critical", run.u, run.termination, run.iterations, run.trace)
}

pub(crate) fn newton_run(
    ctx: &Ctx,
    u0: Vec<f64>,
    opts: &SolveOptions,
    deflation: Option<&Deflation>,
) -> Result<Run> {
    let prob = ctx.prob;
    let n = prob.mesh().num_nodes();
    if u0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: u0.len() });
    }
    let factor = |u: &[f64]| deflation.map_or(1.0, |d| d.factor(prob, u));
    let mut u = u0;
    let mut grad = prob.energy_gradient(&u)?;
    let mut res = prob.residual_norm(&grad)?;
    let mut trace = Vec::new();
    for it in 0..=opts.max_iter {
        trace.push(ctx.entry(it, &u, prob.phi(&u)?, res)?);
        if res <= opts.tol {
            return Ok(Run { u, termination: Termination::Converged, iterations: it, trace });
        }
        if it == opts.max_iter {
            break;
        }
        let mut h = Dense::zeros(n);
        prob.assemble_hessian(&u, true, &mut h)?;
        let neg: Vec<f64> = grad.iter().map(|x| -x).collect();
        let Ok(mut step) = h.solve(&neg) else {
            return Ok(Run { u, termination: Termination::Singular, iterations: it, trace });
        };
        if let Some(d) = deflation {
            let denom = 1.0 - d.log_slope(prob, &u, &step);
            if denom.abs() > 1e-12 {
                step.iter_mut().for_each(|x| *x /= denom);
            }
        }
        let merit = factor(&u) * res;
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..CRITICAL_HALVINGS {
            let cand = axpy(&u, s, &step);
            if let Ok(gc) = prob.energy_gradient(&cand) {
                let rc = prob.residual_norm(&gc)?;
                if factor(&cand) * rc <= (1.0 - ARMIJO * s) * merit {
                    u = cand;
                    grad = gc;
                    res = rc;
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            return Ok(Run { u, termination: Termination::LineSearchFailure, iterations: it, trace });
        }
    }
    Ok(Run { u, termination: Termination::IterationCap, iterations: opts.max_iter, trace })
}

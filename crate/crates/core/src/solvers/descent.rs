use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::diagnostics::ps_diagnostics;
use super::hypotheses;
use super::modes::ModeHierarchy;
use super::{axpy, random_direction, Ctx, Run, SolveOptions, SolveReport, Termination};
use crate::energy::{ProblemSpec, Sampler};
use crate::error::{Error, Result};
use crate::linalg::{dot, SymBanded};

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e6;
/// Residual below which a Newton direction is tried first.
const NEWTON_BELOW: f64 = 1e-3;
const NEWTON_HALVINGS: usize = 30;

/// Preconditioned steepest descent on phi with Armijo backtracking and step
/// memory. With `radius`, iterates are projected onto the ball of that H1
/// radius and stationarity is measured by the projected step. Unconstrained
/// runs switch to Newton directions near a minimiser when the Hessian
/// factors; every step still passes the Armijo test on phi.
pub(crate) fn descend(ctx: &Ctx, u0: Vec<f64>, opts: &SolveOptions, radius: Option<f64>) -> Result<Run> {
    let prob = ctx.prob;
    let project = |mut v: Vec<f64>| {
        if let Some(r) = radius {
            let n = prob.h1_norm(&v);
            if n > r {
                v.iter_mut().for_each(|x| *x *= r / n);
            }
        }
        v
    };
    let mut u = project(u0);
    let mut phi = prob.phi(&u)?;
    let mut grad = prob.energy_gradient(&u)?;
    let mut trace = Vec::new();
    let mut step: f64 = 1.0;
    for it in 0..=opts.max_iter {
        let d: Vec<f64> = prob.precondition(&grad).iter().map(|x| -x).collect();
        let res2 = -dot(&grad, &d);
        let res = res2.max(0.0).sqrt();
        trace.push(ctx.entry(it, &u, phi, res)?);
        if res <= opts.tol {
            return Ok(Run { u, termination: Termination::Converged, iterations: it, trace });
        }
        if it == opts.max_iter {
            break;
        }
        if radius.is_none() && res <= NEWTON_BELOW {
            if let Some((cand, pc)) = newton_step(prob, &u, &grad, phi)? {
                u = cand;
                phi = pc;
                grad = prob.energy_gradient(&u)?;
                continue;
            }
        }
        let mut s = (2.0 * step).min(MAX_STEP);
        let accepted = loop {
            if s < MIN_STEP {
                break None;
            }
            let cand = project(axpy(&u, s, &d));
            if let Ok(pc) = prob.phi(&cand) {
                let moved: Vec<f64> = cand.iter().zip(&u).map(|(a, b)| a - b).collect();
                let decrease = prob.h1_inner(&moved, &moved) / s;
                if pc <= phi - ARMIJO * decrease {
                    break Some((cand, pc, moved));
                }
                // near-flat energies: accept a non-increasing step whose slope
                // has dropped enough (approximate Wolfe)
                if pc <= phi {
                    if let Ok(gc) = prob.energy_gradient(&cand) {
                        if dot(&gc, &d) <= (1.0 - 2.0 * ARMIJO) * res2 {
                            break Some((cand, pc, moved));
                        }
                    }
                }
            }
            s *= 0.5;
        };
        let Some((cand, pc, moved)) = accepted else {
            return Ok(Run { u, termination: Termination::LineSearchFailure, iterations: it, trace });
        };
        step = s;
        let stalled = radius.is_some() && prob.h1_norm(&moved) / s <= opts.tol;
        u = cand;
        phi = pc;
        grad = prob.energy_gradient(&u)?;
        if stalled {
            let res = prob.residual_norm(&grad)?;
            trace.push(ctx.entry(it + 1, &u, phi, res)?);
            return Ok(Run { u, termination: Termination::Converged, iterations: it + 1, trace });
        }
    }
    Ok(Run { u, termination: Termination::IterationCap, iterations: opts.max_iter, trace })
}

/// Armijo step on phi along the Newton direction, if the Hessian at u is
/// positive definite.
fn newton_step(prob: &ProblemSpec, u: &[f64], grad: &[f64], phi: f64) -> Result<Option<(Vec<f64>, f64)>> {
    let mut h = SymBanded::for_mesh(prob.mesh());
    prob.assemble_hessian(u, true, &mut h)?;
    let Ok(chol) = h.cholesky() else {
        return Ok(None);
    };
    let d: Vec<f64> = chol.solve(grad).iter().map(|x| -x).collect();
    let slope = dot(grad, &d);
    if !(slope < 0.0) {
        return Ok(None);
    }
    let mut s = 1.0;
    for _ in 0..NEWTON_HALVINGS {
        let cand = axpy(u, s, &d);
        if let Ok(pc) = prob.phi(&cand) {
            if pc <= phi + ARMIJO * s * slope {
                return Ok(Some((cand, pc)));
            }
        }
        s *= 0.5;
    }
    Ok(None)
}

/// Global minimisation of a coercive energy from `u0`.
pub fn minimize_energy(prob: &ProblemSpec, u0: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    if u0.len() != prob.mesh().num_nodes() {
        return Err(Error::LengthMismatch { expected: prob.mesh().num_nodes(), got: u0.len() });
    }
    let ctx = Ctx::new(prob)?;
    let hyp = hypotheses::coercive(prob, &Sampler::default())?;
    let run = descend(&ctx, u0.to_vec(), opts, None)?;
    let mut report = ctx.report("min", run.u, run.termination, run.iterations, run.trace)?;
    let probe = coercivity_probe(prob, opts.probe_rays, 1e3, opts.seed)?;
    report.flags.conditions_verified = Some(hyp.satisfied);
    report.warnings.extend(hyp.warning());
    if run.termination == Termination::LineSearchFailure {
        report.warnings.push(format!(
            "line search found no decrease at iteration {}; solution holds the offending iterate",
            run.iterations
        ));
    }
    let ps = ps_diagnostics(&report.trace, prob, 1.0)?;
    report.flags.ps_bounded = Some(ps.bounded);
    report.ps = Some(ps);
    report.coercivity = Some(probe);
    report.hypotheses.push(hyp);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayProfile {
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    /// Smallest sampled t beyond which phi increases along the ray.
    pub radius: Option<f64>,
    pub max_phi: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub seed: u64,
    pub threshold: f64,
    pub rays: Vec<RayProfile>,
    pub pass: bool,
}

/// phi(t w) on a geometric t grid along `rays` random directions of unit X
/// norm. A ray passes when phi is eventually increasing and exceeds
/// `threshold`.
pub fn coercivity_probe(prob: &ProblemSpec, rays: usize, threshold: f64, seed: u64) -> Result<CoercivityReport> {
    let ctx = Ctx::new(prob)?;
    let modes = ModeHierarchy::new(prob.mesh().clone(), 8.min(prob.mesh().num_nodes()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(rays);
    for _ in 0..rays {
        let mut w = random_direction(&modes, &mut rng);
        let n = ctx.x_norm(&w)?;
        w.iter_mut().for_each(|x| *x /= n);
        let (mut ts, mut phis) = (Vec::new(), Vec::new());
        for k in -16..=96 {
            let t = 2f64.powf(k as f64 / 4.0);
            let Ok(phi) = prob.phi(&w.iter().map(|x| t * x).collect::<Vec<_>>()) else {
                break;
            };
            ts.push(t);
            phis.push(phi);
            if phi > 10.0 * threshold {
                break;
            }
        }
        let mut start = phis.len().saturating_sub(1);
        while start > 0 && phis[start - 1] < phis[start] {
            start -= 1;
        }
        let max_phi = phis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let radius = (start + 1 < phis.len()).then(|| ts[start]);
        out.push(RayProfile {
            pass: radius.is_some() && max_phi > threshold,
            t: ts,
            phi: phis,
            radius,
            max_phi,
        });
    }
    Ok(CoercivityReport {
        seed,
        threshold,
        pass: out.iter().all(|r| r.pass),
        rays: out,
    })
}

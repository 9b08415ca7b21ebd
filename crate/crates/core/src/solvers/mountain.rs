use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::diagnostics::ps_diagnostics;
use super::hypotheses;
use super::modes::ModeHierarchy;
use super::newton::newton_run;
use super::{axpy, random_direction, Ctx, SolveOptions, SolveReport, Termination};
use crate::energy::{ProblemSpec, Sampler};
use crate::error::{Error, Result};
use crate::linalg::dot;

const ARMIJO: f64 = 1e-4;
/// Residual below which the path maximiser is handed to Newton.
const POLISH_BELOW: f64 = 1e-2;
const POLISH_ITERS: usize = 50;
const MAX_MOVE: f64 = 0.25;
const SPREAD: f64 = 4.0;
const GEOMETRY_RADIUS: f64 = 0.5;
const GEOMETRY_SAMPLES: usize = 200;

/// Path deformation from 0 to `e` (phi(e) < 0): the path maximiser is moved
/// by a preconditioned descent step, then the path is re-spaced by H1
/// arclength. Once the maximiser's residual is small, a Newton polish is
/// attempted and kept if it stays positive and close to the ridge.
pub fn mountain_pass(prob: &ProblemSpec, e: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    let n = prob.mesh().num_nodes();
    if e.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: e.len() });
    }
    let phi_e = prob.phi(e)?;
    if !(phi_e < 0.0) {
        return Err(Error::Precondition(format!("endpoint energy {phi_e} is not negative")));
    }
    let m = opts.path_segments.max(2);
    let ctx = Ctx::new(prob)?;
    let hyp = hypotheses::mountain_pass(prob, &Sampler::default())?;
    let geometry = verify_mp_geometry(prob, GEOMETRY_RADIUS, GEOMETRY_SAMPLES, opts.seed)?;

    let mut path: Vec<Vec<f64>> = (0..=m).map(|i| e.iter().map(|x| x * i as f64 / m as f64).collect()).collect();
    let mut energies = path.iter().map(|u| prob.phi(u)).collect::<Result<Vec<f64>>>()?;
    let mut trace = Vec::new();
    let mut step: f64 = 1.0;
    let mut last_polish = f64::INFINITY;
    let mut outcome = None;
    for sweep in 0..=opts.max_iter {
        let mut k = 1;
        for i in 2..m {
            if energies[i] > energies[k] {
                k = i;
            }
        }
        if let Some((u, phi)) = segment_peak(prob, &path[k - 1], &path[k], &path[k + 1], energies[k])? {
            path[k] = u;
            energies[k] = phi;
        }
        let phi_k = energies[k];
        if phi_k <= 0.0 {
            let mut report = ctx.report("mp", path[k].clone(), Termination::RidgeCollapse, sweep, trace)?;
            report.warnings.push(format!("path maximum {phi_k} is not positive"));
            return finish(report, prob, hyp, geometry);
        }
        let grad = prob.energy_gradient(&path[k])?;
        let d: Vec<f64> = prob.precondition(&grad).iter().map(|x| -x).collect();
        let res2 = -dot(&grad, &d);
        let res = res2.max(0.0).sqrt();
        trace.push(ctx.entry(sweep, &path[k], phi_k, res)?);
        if res <= opts.tol {
            outcome = Some((path[k].clone(), Termination::Converged, sweep));
            break;
        }
        if sweep == opts.max_iter {
            break;
        }
        if res <= POLISH_BELOW && res <= 0.1 * last_polish {
            last_polish = res;
            let polish_opts = SolveOptions { max_iter: POLISH_ITERS, ..*opts };
            let run = newton_run(&ctx, path[k].clone(), &polish_opts, None)?;
            if run.termination == Termination::Converged {
                let moved: Vec<f64> = run.u.iter().zip(&path[k]).map(|(a, b)| a - b).collect();
                let phi_new = prob.phi(&run.u)?;
                let close = prob.h1_norm(&moved) <= 0.1 * prob.h1_norm(&path[k]).max(1e-12);
                if phi_new > 0.0 && close {
                    let res = ctx.residual(&run.u)?;
                    trace.push(ctx.entry(sweep + 1, &run.u, phi_new, res)?);
                    outcome = Some((run.u, Termination::Converged, sweep + 1));
                    break;
                }
            }
        }
        // keep the maximiser on the ridge: bounded move relative to its size
        let reach = MAX_MOVE * prob.h1_norm(&path[k]) / prob.h1_norm(&d).max(f64::MIN_POSITIVE);
        let mut s = (2.0 * step).min(1.0).min(reach);
        loop {
            let cand = axpy(&path[k], s, &d);
            if let Ok(pc) = prob.phi(&cand) {
                if pc <= phi_k - ARMIJO * s * res2 || (pc <= phi_k && s < 1e-8) {
                    path[k] = cand;
                    energies[k] = pc;
                    step = s;
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-14 {
                break;
            }
        }
        if respace(prob, &mut path) {
            for i in 1..m {
                energies[i] = prob.phi(&path[i])?;
            }
        }
    }
    let (u, termination, iterations) = match outcome {
        Some(o) => o,
        None => {
            let k = (1..m).fold(1, |k, i| if energies[i] > energies[k] { i } else { k });
            (path[k].clone(), Termination::IterationCap, opts.max_iter)
        }
    };
    let report = ctx.report("mp", u, termination, iterations, trace)?;
    finish(report, prob, hyp, geometry)
}

fn finish(
    mut report: SolveReport,
    prob: &ProblemSpec,
    hyp: hypotheses::HypothesisReport,
    geometry: GeometryReport,
) -> Result<SolveReport> {
    report.flags.conditions_verified = Some(hyp.satisfied);
    report.flags.geometry_verified = Some(geometry.pass);
    report.warnings.extend(hyp.warning());
    if !geometry.pass {
        report.warnings.push("mountain-pass geometry not verified by sampling".into());
    }
    let ps = ps_diagnostics(&report.trace, prob, 1.0)?;
    report.flags.ps_bounded = Some(ps.bounded);
    report.ps = Some(ps);
    report.geometry = Some(geometry);
    report.hypotheses.push(hyp);
    Ok(report)
}

/// Maximum of phi along the polyline a - b - c near the vertex b, by golden
/// section on each adjacent segment; `None` unless it beats phi(b).
fn segment_peak(prob: &ProblemSpec, a: &[f64], b: &[f64], c: &[f64], phi_b: f64) -> Result<Option<(Vec<f64>, f64)>> {
    const GOLD: f64 = 0.618_033_988_749_894_8;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for end in [a, c] {
        let at = |s: f64| -> Vec<f64> { b.iter().zip(end).map(|(x, y)| x + s * (y - x)).collect() };
        let eval = |s: f64| -> f64 { prob.phi(&at(s)).unwrap_or(f64::NEG_INFINITY) };
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x1 = hi - GOLD * (hi - lo);
        let mut x2 = lo + GOLD * (hi - lo);
        let (mut f1, mut f2) = (eval(x1), eval(x2));
        for _ in 0..40 {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - GOLD * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + GOLD * (hi - lo);
                f2 = eval(x2);
            }
        }
        let s = 0.5 * (lo + hi);
        let u = at(s);
        let phi = prob.phi(&u)?;
        if phi > best.as_ref().map_or(phi_b, |(_, p)| *p) {
            best = Some((u, phi));
        }
    }
    Ok(best)
}

/// Redistributes interior path points uniformly in H1 arclength along the
/// current polyline once segment lengths differ by more than `SPREAD`;
/// endpoints stay fixed. Re-spacing every sweep would pull the maximiser
/// back onto the chord it just left.
fn respace(prob: &ProblemSpec, path: &mut [Vec<f64>]) -> bool {
    let m = path.len() - 1;
    let mut cum = vec![0.0; m + 1];
    let (mut shortest, mut longest) = (f64::INFINITY, 0.0f64);
    for i in 1..=m {
        let d: Vec<f64> = path[i].iter().zip(&path[i - 1]).map(|(a, b)| a - b).collect();
        let len = prob.h1_norm(&d);
        shortest = shortest.min(len);
        longest = longest.max(len);
        cum[i] = cum[i - 1] + len;
    }
    let total = cum[m];
    if !(total > 0.0) || longest <= SPREAD * shortest {
        return false;
    }
    let old = path.to_vec();
    let mut seg = 0;
    for (i, slot) in path.iter_mut().enumerate().take(m).skip(1) {
        let target = total * i as f64 / m as f64;
        while seg + 1 < m && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let w = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        *slot = old[seg].iter().zip(&old[seg + 1]).map(|(a, b)| a + w * (b - a)).collect();
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryReport {
    pub seed: u64,
    pub radius: f64,
    pub samples: usize,
    /// min phi over sampled fields of X norm `radius`.
    pub delta: f64,
    /// Per ray: first sampled t with phi(t w) < 0, if any.
    pub ray_crossings: Vec<Option<f64>>,
    pub pass: bool,
}

/// Samples phi on the X-sphere of radius `r` and along rays t w with unit
/// X norm until phi < 0 or t reaches 2^30.
pub fn verify_mp_geometry(prob: &ProblemSpec, r: f64, samples: usize, seed: u64) -> Result<GeometryReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Precondition(format!("sphere radius {r} must lie in (0, 1)")));
    }
    let ctx = Ctx::new(prob)?;
    let modes = ModeHierarchy::new(prob.mesh().clone(), 8.min(prob.mesh().num_nodes()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = || -> Result<Vec<f64>> {
        let mut w = random_direction(&modes, &mut rng);
        let n = ctx.x_norm(&w)?;
        w.iter_mut().for_each(|x| *x /= n);
        Ok(w)
    };
    let mut delta = f64::INFINITY;
    for _ in 0..samples {
        let w: Vec<f64> = unit()?.iter().map(|x| r * x).collect();
        delta = delta.min(prob.phi(&w)?);
    }
    let rays = 10;
    let mut crossings = Vec::with_capacity(rays);
    for _ in 0..rays {
        let w = unit()?;
        let mut hit = None;
        for k in 0..=120 {
            let t = 2f64.powf(k as f64 / 4.0);
            match prob.phi(&w.iter().map(|x| t * x).collect::<Vec<_>>()) {
                Ok(p) if p < 0.0 => {
                    hit = Some(t);
                    break;
                }
                Ok(_) => {}
                Err(_) => break,
            }
        }
        crossings.push(hit);
    }
    Ok(GeometryReport {
        seed,
        radius: r,
        samples,
        delta,
        pass: delta > 0.0 && crossings.iter().all(Option::is_some),
        ray_crossings: crossings,
    })
}

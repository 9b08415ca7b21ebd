use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::deflation::Deflation;
use super::descent::descend;
use super::hypotheses::{self, HypothesisReport};
use super::modes::ModeHierarchy;
use super::newton::newton_run;
use super::{random_direction, Ctx, SolveOptions, SolveReport, Termination};
use crate::energy::{ProblemSpec, Sampler};
use crate::error::{Error, Result};

const SEED_AMPLITUDES: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
/// Multiples of the ray peak t* used as seeds.
const PEAK_MULTIPLIERS: [f64; 5] = [1.0, 0.8, 1.25, 0.6, 1.6];
const NEWTON_ITERS: usize = 100;
const BALL_DESCENT_ITERS: usize = 2000;
const BALL_RADII: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub mode: &'static str,
    pub seed: u64,
    pub requested: usize,
    pub found: usize,
    pub attempts: usize,
    /// One representative u per pair; the partner is -u.
    pub pairs: Vec<SolveReport>,
    /// Residual norm of -u for each pair.
    pub partner_residuals: Vec<f64>,
    /// |phi(-u) - phi(u)| for each pair.
    pub partner_energy_gaps: Vec<f64>,
    pub hypotheses: Vec<HypothesisReport>,
    pub warnings: Vec<String>,
}

fn check_parity(prob: &ProblemSpec, seed: u64) -> Result<()> {
    let odd_needed = [(prob.f(), prob.lambda(), "f"), (prob.g(), prob.mu(), "g")];
    for (spec, weight, name) in odd_needed {
        if let Some(s) = spec {
            if weight != 0.0 && !s.odd {
                return Err(Error::Precondition(format!("{name} is not flagged odd")));
            }
        }
    }
    let ctx = Ctx::new(prob)?;
    let modes = ModeHierarchy::new(prob.mesh().clone(), 8.min(prob.mesh().num_nodes()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..5 {
        let u = random_direction(&modes, &mut rng);
        let n = ctx.x_norm(&u)?;
        let u: Vec<f64> = u.iter().map(|x| x / n).collect();
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let (a, b) = (prob.phi(&u)?, prob.phi(&neg)?);
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(Error::Precondition(format!("energy is not even: {a} vs {b}")));
        }
    }
    Ok(())
}

struct Collector<'a> {
    ctx: &'a Ctx<'a>,
    opts: SolveOptions,
    deflation: Deflation,
    found: Vec<SolveReport>,
    attempts: usize,
}

impl<'a> Collector<'a> {
    fn new(ctx: &'a Ctx<'a>, opts: &SolveOptions) -> Self {
        let mut deflation = Deflation::new(opts.deflation_shift);
        deflation.push(vec![0.0; ctx.prob.mesh().num_nodes()]);
        Collector {
            ctx,
            opts: SolveOptions { max_iter: NEWTON_ITERS, ..*opts },
            deflation,
            found: Vec::new(),
            attempts: 0,
        }
    }

    fn distinct(&self, u: &[f64]) -> Result<bool> {
        let sep = self.opts.separation;
        if self.ctx.x_norm(u)? <= sep {
            return Ok(false);
        }
        for f in &self.found {
            for sign in [1.0, -1.0] {
                let d: Vec<f64> = u.iter().zip(&f.solution).map(|(a, b)| a - sign * b).collect();
                if self.ctx.x_norm(&d)? <= sep {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Deflated Newton from `u0`; keeps the result if converged, distinct
    /// and accepted by `keep`.
    fn try_seed(&mut self, mode: &'static str, u0: Vec<f64>, keep: impl Fn(f64) -> bool) -> Result<bool> {
        self.attempts += 1;
        let run = newton_run(self.ctx, u0, &self.opts, Some(&self.deflation))?;
        if run.termination != Termination::Converged {
            return Ok(false);
        }
        let phi = self.ctx.prob.phi(&run.u)?;
        if !keep(phi) || !self.distinct(&run.u)? {
            return Ok(false);
        }
        // orient each pair so that its mean value is non-negative
        let mut u = run.u;
        if u.iter().sum::<f64>() < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
        self.deflation.push_pair(&u);
        let report = self.ctx.report(mode, u, run.termination, run.iterations, run.trace)?;
        self.found.push(report);
        Ok(true)
    }

    fn finish(
        self,
        mode: &'static str,
        requested: usize,
        hyps: Vec<HypothesisReport>,
        mut warnings: Vec<String>,
    ) -> Result<SearchReport> {
        let mut partner_residuals = Vec::new();
        let mut partner_energy_gaps = Vec::new();
        for r in &self.found {
            let neg: Vec<f64> = r.solution.iter().map(|x| -x).collect();
            partner_residuals.push(self.ctx.residual(&neg)?);
            partner_energy_gaps.push((self.ctx.prob.phi(&neg)? - r.phi).abs());
        }
        if self.found.len() < requested {
            warnings.push(format!("found {} of {requested} requested pairs", self.found.len()));
        }
        Ok(SearchReport {
            mode,
            seed: self.opts.seed,
            requested,
            found: self.found.len(),
            attempts: self.attempts,
            pairs: self.found,
            partner_residuals,
            partner_energy_gaps,
            hypotheses: hyps,
            warnings,
        })
    }
}

/// Finite search for `k` pairs +-u of critical points, seeded from scaled
/// modes of the hierarchy and driven apart by deflation of every found pair
/// and of 0. Pairs are returned sorted by energy.
pub fn multi_solution_search(prob: &ProblemSpec, k: usize, opts: &SolveOptions) -> Result<SearchReport> {
    check_parity(prob, opts.seed)?;
    let ctx = Ctx::new(prob)?;
    let sampler = Sampler::default();
    let hyps = vec![hypotheses::fountain(prob, &sampler)?, hypotheses::power_pairs(prob, true)?];
    let mut warnings = Vec::new();
    if hyps.iter().all(|h| !h.satisfied) {
        warnings.extend(hyps.iter().filter_map(HypothesisReport::warning));
    }
    let levels = (k + 4).max(6).min(prob.mesh().num_nodes());
    let modes = ModeHierarchy::new(prob.mesh().clone(), levels)?;
    let mut c = Collector::new(&ctx, opts);
    'seeds: for j in 0..levels {
        let w = modes.mode(j);
        let amps: Vec<f64> = match ray_peak(prob, w)? {
            Some(t) => PEAK_MULTIPLIERS.iter().map(|m| m * t).collect(),
            None => SEED_AMPLITUDES.to_vec(),
        };
        for amp in amps {
            if c.found.len() >= k {
                break 'seeds;
            }
            let u0: Vec<f64> = w.iter().map(|x| amp * x).collect();
            c.try_seed("multi", u0, |_| true)?;
        }
    }
    c.found.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    c.finish("multi", k, hyps, warnings)
}

/// Location t* of the largest positive value of phi(t w) on the grid
/// t = 2^(i/8), scanned until phi turns negative past the peak or overflows.
fn ray_peak(prob: &ProblemSpec, w: &[f64]) -> Result<Option<f64>> {
    let mut best: Option<(f64, f64)> = None;
    for i in -40..=320 {
        let t = 2f64.powf(i as f64 / 8.0);
        let Ok(phi) = prob.phi(&w.iter().map(|x| t * x).collect::<Vec<_>>()) else {
            break;
        };
        if phi > 0.0 && best.is_none_or(|(_, b)| phi > b) {
            best = Some((t, phi));
        }
        if phi < 0.0 && best.is_some() {
            break;
        }
    }
    Ok(best.map(|(t, _)| t))
}

/// Search for negative-energy pairs near 0: projected descent in H1 balls of
/// radius 2^-j seeded by small multiples of low modes, then deflated Newton
/// polish. Accepts phi < 0 with residual <= tol; pairs are sorted by |phi|
/// descending.
pub fn small_solution_search(prob: &ProblemSpec, opts: &SolveOptions) -> Result<SearchReport> {
    check_parity(prob, opts.seed)?;
    let ctx = Ctx::new(prob)?;
    let hyps = vec![hypotheses::power_pairs(prob, false)?];
    let mut warnings: Vec<String> = hyps.iter().filter_map(HypothesisReport::warning).collect();
    let mut c = Collector::new(&ctx, opts);
    if prob.lambda() == 0.0 && prob.mu() == 0.0 {
        warnings.push("lambda = mu = 0: phi = J >= 0 has no negative values".into());
        return c.finish("small", 0, hyps, warnings);
    }
    let levels = 6.min(prob.mesh().num_nodes());
    let modes = ModeHierarchy::new(prob.mesh().clone(), levels)?;
    let descent_opts = SolveOptions { max_iter: BALL_DESCENT_ITERS, ..*opts };
    for i in 0..BALL_RADII {
        let radius = 2f64.powi(-(i as i32));
        for j in 0..levels {
            let unit = modes.mode(j);
            let scale = 0.5 * radius / prob.h1_norm(unit);
            let u0: Vec<f64> = unit.iter().map(|x| scale * x).collect();
            let run = descend(&ctx, u0, &descent_opts, Some(radius))?;
            if prob.phi(&run.u)? >= 0.0 {
                continue;
            }
            c.try_seed("small", run.u, |phi| phi < 0.0)?;
        }
    }
    c.found.sort_by(|a, b| b.phi.abs().total_cmp(&a.phi.abs()));
    let found = c.found.len();
    c.finish("small", found.max(1), hyps, warnings)
}

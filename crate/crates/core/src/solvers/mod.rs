//! Variational solvers: coercive minimisation, the monotone operator
//! equation, the mountain-pass path method and deflated multi-solution
//! searches, with trajectory diagnostics.

pub mod deflation;
pub mod descent;
pub mod diagnostics;
pub mod hypotheses;
pub mod modes;
pub mod mountain;
pub mod multi;
pub mod newton;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{EnergyBreakdown, ProblemSpec};
use crate::error::Result;
use crate::space::NormContext;

pub use descent::{coercivity_probe, minimize_energy, CoercivityReport, RayProfile};
pub use diagnostics::{ps_diagnostics, PsReport};
pub use hypotheses::{HypothesisItem, HypothesisReport};
pub use modes::ModeHierarchy;
pub use mountain::{mountain_pass, verify_mp_geometry, GeometryReport};
pub use multi::{multi_solution_search, small_solution_search, SearchReport};
pub use newton::{newton_critical, solve_operator_equation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationCap,
    LineSearchFailure,
    Singular,
    RidgeCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub phi: f64,
    pub residual: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Flags {
    pub geometry_verified: Option<bool>,
    pub conditions_verified: Option<bool>,
    pub ps_bounded: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub mode: &'static str,
    pub solution: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub phi: f64,
    /// Dual residual norm of the mode's equation at `solution`.
    pub residual: f64,
    pub x_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub flags: Flags,
    pub warnings: Vec<String>,
    pub trace: Vec<TraceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coercivity: Option<CoercivityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hypotheses: Vec<HypothesisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ps: Option<PsReport>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Residual tolerance in the dual H1 norm.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Number of segments of the mountain-pass path.
    pub path_segments: usize,
    /// Minimum X-norm distance between reported solutions.
    pub separation: f64,
    /// Shift rho of the deflation factor 1 + rho / d^2.
    pub deflation_shift: f64,
    /// Random rays for coercivity and geometry probes.
    pub probe_rays: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 10_000,
            seed: 0,
            path_segments: 21,
            separation: 1e-2,
            deflation_shift: 1.0,
            probe_rays: 10,
        }
    }
}

impl SolveOptions {
    pub fn descent() -> Self {
        Self::default()
    }

    pub fn newton() -> Self {
        SolveOptions {
            max_iter: 500,
            ..Self::default()
        }
    }

    pub fn path() -> Self {
        SolveOptions {
            tol: 1e-6,
            max_iter: 2000,
            ..Self::default()
        }
    }

    pub fn search() -> Self {
        SolveOptions {
            tol: 1e-6,
            max_iter: 500,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Outcome of an inner iteration before it is turned into a report.
pub(crate) struct Run {
    pub u: Vec<f64>,
    pub termination: Termination,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

/// Problem plus cached X-norm evaluator.
pub(crate) struct Ctx<'a> {
    pub prob: &'a ProblemSpec,
    pub norms: NormContext,
}

impl<'a> Ctx<'a> {
    pub fn new(prob: &'a ProblemSpec) -> Result<Self> {
        Ok(Ctx {
            prob,
            norms: NormContext::new(&[prob.p1(), prob.p2()], prob.order())?,
        })
    }

    pub fn x_norm(&self, u: &[f64]) -> Result<f64> {
        self.norms.norm(u)
    }

    /// Dual residual norm of phi'(u).
    pub fn residual(&self, u: &[f64]) -> Result<f64> {
        self.prob.residual_norm(&self.prob.energy_gradient(u)?)
    }

    pub fn entry(&self, iteration: usize, u: &[f64], phi: f64, residual: f64) -> Result<TraceEntry> {
        Ok(TraceEntry {
            iteration,
            phi,
            residual,
            norm: self.x_norm(u)?,
        })
    }

    /// Builds a report with energy, residual and norm recomputed from `u`.
    pub fn report(
        &self,
        mode: &'static str,
        u: Vec<f64>,
        termination: Termination,
        iterations: usize,
        trace: Vec<TraceEntry>,
    ) -> Result<SolveReport> {
        let residual = self.residual(&u)?;
        self.report_with_residual(mode, u, residual, termination, iterations, trace)
    }

    pub fn report_with_residual(
        &self,
        mode: &'static str,
        u: Vec<f64>,
        residual: f64,
        termination: Termination,
        iterations: usize,
        trace: Vec<TraceEntry>,
    ) -> Result<SolveReport> {
        let energy = self.prob.energy(&u)?;
        Ok(SolveReport {
            mode,
            phi: energy.total,
            energy,
            residual,
            x_norm: self.x_norm(&u)?,
            solution: u,
            iterations,
            termination,
            flags: Flags::default(),
            warnings: Vec::new(),
            trace,
            coercivity: None,
            geometry: None,
            hypotheses: Vec::new(),
            ps: None,
        })
    }
}

pub(crate) fn axpy(u: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    u.iter().zip(d).map(|(a, b)| a + s * b).collect()
}

/// Random smooth direction: leading modes with coefficients uniform in
/// [-1, 1] damped by 1 / (1 + j).
pub(crate) fn random_direction(modes: &ModeHierarchy, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let coeffs: Vec<f64> = (0..modes.len())
        .map(|j| rng.gen_range(-1.0..=1.0) / (1.0 + j as f64))
        .collect();
    modes.combine(&coeffs)
}

//! Batch front-end: TOML run configs, mode dispatch and artifact output.

pub mod config;
pub mod output;
pub mod verify;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::energy::{check_conditions, ConditionReport, ProblemSpec, Sampler};
use crate::error::Error;
use crate::exponent::{Region, SubcriticalReport};
use crate::expr::Expr;
use crate::mesh::{DiscreteField, Mesh};
use crate::solvers::{self, hypotheses, HypothesisReport, SearchReport, SolveReport};
use crate::space::{modular, sobolev_norm, x_norm, ModularReport, NormBundle, NormContext};

pub use config::{parse_config, ConfigError, Format, Mode, RunConfig, SchemaError};
pub use output::{write_atomic, IoFailure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// A run that could not produce its report.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Precondition(String),
    Solver(Error),
    Io(IoFailure),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Precondition(_) => EXIT_PRECONDITION,
            Failure::Solver(_) => EXIT_FAILED,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error:\n{e}"),
            Failure::Precondition(m) => write!(f, "precondition failed: {m}"),
            Failure::Solver(e) => write!(f, "solver error: {e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Expression { .. } | Error::InvalidMesh(_) | Error::UnsupportedOrder(_) => {
                Failure::Config(ConfigError {
                    errors: vec![SchemaError {
                        key: String::new(),
                        line: None,
                        column: None,
                        message: e.to_string(),
                    }],
                })
            }
            Error::Precondition(m) => Failure::Precondition(m),
            Error::NotInCPlus { .. } | Error::NonFiniteExponent { .. } | Error::InvalidArgument(_) => {
                Failure::Precondition(e.to_string())
            }
            e => Failure::Solver(e),
        }
    }
}

impl From<IoFailure> for Failure {
    fn from(e: IoFailure) -> Self {
        Failure::Io(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    mode: &'static str,
    seed: u64,
    exit_code: i32,
    summary: &'a str,
    result: T,
    /// Effective configuration as TOML.
    config: String,
}

#[derive(Serialize)]
struct NewtonResult {
    #[serde(flatten)]
    report: SolveReport,
    /// Relative X-norm distance to the manufactured solution.
    #[serde(skip_serializing_if = "Option::is_none")]
    manufactured_relative_error: Option<f64>,
}

#[derive(Serialize)]
struct CheckResult {
    pass: bool,
    p_max_plus: f64,
    conditions: Vec<ConditionReport>,
    subcriticality: Vec<SubcriticalReport>,
    hypotheses: Vec<HypothesisReport>,
}

#[derive(Serialize)]
struct NormsResult {
    p1: NormBundle,
    p2: NormBundle,
    x: NormBundle,
    modular_p1: ModularReport,
    modular_p2: ModularReport,
}

/// Artifacts of a finished mode before they are written.
#[derive(Debug, Clone)]
pub struct Produced {
    pub exit_code: i32,
    pub summary: String,
    /// report.json contents.
    pub json: Vec<u8>,
    /// (file name, contents) pairs.
    pub csv: Vec<(String, String)>,
    /// Nodal values of the primary field, when the mode produces one.
    pub solution: Option<Vec<f64>>,
}

/// Executes the configured mode without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<Produced, Failure> {
    let mode = cfg.mode()?;
    cfg.validate()?;
    match mode {
        Mode::Min | Mode::Newton | Mode::Mp => solve(cfg, mode),
        Mode::Multi | Mode::Small => search(cfg, mode),
        Mode::Check => check(cfg),
        Mode::Norms => norms(cfg),
        Mode::Verify => run_verify(cfg),
    }
}

/// Executes the configured mode and writes its artifacts into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, Failure> {
    let produced = execute(cfg)?;
    let mut files = Vec::new();
    if cfg.output.formats.contains(&Format::Csv) {
        for (name, body) in &produced.csv {
            files.push(write_atomic(out_dir, name, body.as_bytes())?);
        }
    }
    if cfg.output.formats.contains(&Format::Json) {
        files.push(write_atomic(out_dir, "report.json", &produced.json)?);
    }
    Ok(Outcome {
        exit_code: produced.exit_code,
        summary: produced.summary,
        files,
    })
}

fn envelope<T: Serialize>(cfg: &RunConfig, mode: Mode, exit_code: i32, summary: &str, result: T) -> Vec<u8> {
    let env = Envelope {
        mode: mode.name(),
        seed: cfg.seed(),
        exit_code,
        summary,
        result,
        config: cfg.to_toml(),
    };
    let mut out = serde_json::to_vec_pretty(&env).expect("report serialises");
    out.push(b'\n');
    out
}

fn field(mesh: &std::sync::Arc<Mesh>, src: &str) -> Result<Vec<f64>, Failure> {
    Ok(DiscreteField::from_expr(mesh.clone(), &Expr::spatial(src)?).into_values())
}

fn csv(mesh: &std::sync::Arc<Mesh>, values: &[f64]) -> Result<String, Failure> {
    Ok(DiscreteField::new(mesh.clone(), values.to_vec())?.to_csv())
}

fn solve_summary(r: &SolveReport) -> String {
    format!(
        "mode={} phi={:.12e} residual={:.3e} iterations={} termination={}",
        r.mode,
        r.phi,
        r.residual,
        r.iterations,
        serde_json::to_value(r.termination).expect("termination serialises").as_str().unwrap_or("")
    )
}

/// Load vector b_i = int r(x) phi_i(x) dx.
fn load_vector(prob: &ProblemSpec, src: &str) -> Result<Vec<f64>, Failure> {
    let r = Expr::spatial(src)?;
    let mesh = prob.mesh();
    let mut b = vec![0.0; mesh.num_nodes()];
    for qp in mesh.interior_quadrature(prob.order())? {
        let w = qp.weight * r.eval_at(qp.point);
        for (l, &i) in mesh.interior_dofs(&qp).iter().enumerate() {
            b[i] += w * qp.shape[l];
        }
    }
    Ok(b)
}

fn solve(cfg: &RunConfig, mode: Mode) -> Result<Produced, Failure> {
    let prob = cfg.problem()?;
    let mesh = prob.mesh().clone();
    let opts = cfg.options(mode);
    let initial = cfg.solver.initial.as_deref().unwrap_or("0");
    let (report, manufactured) = match mode {
        Mode::Min => (solvers::minimize_energy(&prob, &field(&mesh, initial)?, &opts)?, None),
        Mode::Mp => {
            let e = field(&mesh, cfg.solver.endpoint.as_deref().unwrap_or("0"))?;
            (solvers::mountain_pass(&prob, &e, &opts)?, None)
        }
        _ => {
            let (b, star) = match (&cfg.solver.manufactured, &cfg.solver.rhs) {
                (Some(m), _) => {
                    let star = field(&mesh, m)?;
                    (prob.operator_l(&star)?, Some(star))
                }
                (None, Some(r)) => (load_vector(&prob, r)?, None),
                (None, None) => unreachable!("validated config"),
            };
            let report = solvers::solve_operator_equation(&prob, &b, &field(&mesh, initial)?, &opts)?;
            let err = match star {
                Some(star) => {
                    let norms = NormContext::new(&[prob.p1(), prob.p2()], prob.order())?;
                    let diff: Vec<f64> = report.solution.iter().zip(&star).map(|(a, b)| a - b).collect();
                    let scale = norms.norm(&star)?;
                    let d = norms.norm(&diff)?;
                    Some(if scale > 0.0 { d / scale } else { d })
                }
                None => None,
            };
            (report, err)
        }
    };
    let code = if report.converged() { EXIT_OK } else { EXIT_FAILED };
    let summary = solve_summary(&report);
    let csv = vec![("solution.csv".to_string(), csv(&mesh, &report.solution)?)];
    let solution = Some(report.solution.clone());
    let json = if mode == Mode::Newton {
        envelope(cfg, mode, code, &summary, NewtonResult { report, manufactured_relative_error: manufactured })
    } else {
        envelope(cfg, mode, code, &summary, report)
    };
    Ok(Produced { exit_code: code, summary, json, csv, solution })
}

fn search(cfg: &RunConfig, mode: Mode) -> Result<Produced, Failure> {
    let prob = cfg.problem()?;
    let mesh = prob.mesh().clone();
    let opts = cfg.options(mode);
    let report: SearchReport = if mode == Mode::Multi {
        solvers::multi_solution_search(&prob, cfg.solver.k.unwrap_or(1), &opts)?
    } else {
        solvers::small_solution_search(&prob, &opts)?
    };
    let code = if report.found >= report.requested { EXIT_OK } else { EXIT_FAILED };
    let max_res = report.pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    let iters: usize = report.pairs.iter().map(|p| p.iterations).sum();
    let phis: Vec<String> = report.pairs.iter().map(|p| format!("{:.6e}", p.phi)).collect();
    let summary = format!(
        "mode={} found={}/{} phi=[{}] residual={:.3e} iterations={}",
        mode.name(),
        report.found,
        report.requested,
        phis.join(","),
        max_res,
        iters
    );
    let mut files = Vec::new();
    if let Some(first) = report.pairs.first() {
        files.push(("solution.csv".to_string(), csv(&mesh, &first.solution)?));
    }
    for (k, p) in report.pairs.iter().enumerate() {
        let neg: Vec<f64> = p.solution.iter().map(|x| -x).collect();
        files.push((format!("solution_{}_plus.csv", k + 1), csv(&mesh, &p.solution)?));
        files.push((format!("solution_{}_minus.csv", k + 1), csv(&mesh, &neg)?));
    }
    let solution = report.pairs.first().map(|p| p.solution.clone());
    let json = envelope(cfg, mode, code, &summary, report);
    Ok(Produced { exit_code: code, summary, json, csv: files, solution })
}

fn check(cfg: &RunConfig) -> Result<Produced, Failure> {
    let prob = cfg.problem()?;
    let sampler = Sampler::default();
    let p_max_plus = prob.p_max()?.extrema()?.1;
    let mut conditions = Vec::new();
    if let Some(f) = prob.f() {
        conditions.push(check_conditions(f, p_max_plus, &sampler, Region::Interior));
    }
    if let Some(g) = prob.g() {
        conditions.push(check_conditions(g, p_max_plus, &sampler, Region::Boundary));
    }
    let hyps = vec![
        hypotheses::coercive(&prob, &sampler)?,
        hypotheses::mountain_pass(&prob, &sampler)?,
        hypotheses::fountain(&prob, &sampler)?,
        hypotheses::power_pairs(&prob, true)?,
        hypotheses::power_pairs(&prob, false)?,
    ];
    let pass = conditions.iter().all(|c| c.pass);
    let failed: Vec<&str> = conditions
        .iter()
        .flat_map(|c| c.items.iter().filter(|i| !i.pass).map(|i| i.name.as_str()))
        .collect();
    let regimes: Vec<&str> = hyps.iter().filter(|h| h.satisfied).map(|h| h.regime).collect();
    let summary = format!(
        "mode=check conditions={} failed=[{}] regimes=[{}]",
        if pass { "pass" } else { "fail" },
        failed.join(","),
        regimes.join(",")
    );
    let code = if pass { EXIT_OK } else { EXIT_FAILED };
    let result = CheckResult {
        pass,
        p_max_plus,
        conditions,
        subcriticality: prob.subcriticality()?,
        hypotheses: hyps,
    };
    let json = envelope(cfg, Mode::Check, code, &summary, result);
    Ok(Produced { exit_code: code, summary, json, csv: Vec::new(), solution: None })
}

fn norms(cfg: &RunConfig) -> Result<Produced, Failure> {
    let mesh = cfg.mesh()?;
    let (p1, p2) = cfg.exponents(&mesh)?;
    let values = field(&mesh, cfg.solver.field.as_deref().unwrap_or("0"))?;
    let u = DiscreteField::new(mesh.clone(), values)?;
    let result = NormsResult {
        p1: sobolev_norm(&u, &p1)?,
        p2: sobolev_norm(&u, &p2)?,
        x: x_norm(&u, &p1, &p2)?,
        modular_p1: modular(&u, &p1, Region::Interior)?,
        modular_p2: modular(&u, &p2, Region::Interior)?,
    };
    let summary = format!(
        "mode=norms x_norm={:.12e} sobolev_p1={:.12e} sobolev_p2={:.12e}",
        result.x.x_norm.unwrap_or(f64::NAN),
        result.p1.sobolev(),
        result.p2.sobolev()
    );
    let json = envelope(cfg, Mode::Norms, EXIT_OK, &summary, result);
    Ok(Produced {
        exit_code: EXIT_OK,
        summary,
        json,
        csv: vec![("solution.csv".to_string(), u.to_csv())],
        solution: Some(u.into_values()),
    })
}

fn run_verify(cfg: &RunConfig) -> Result<Produced, Failure> {
    let trials = cfg.verify.map_or(0, |v| v.trials);
    let report = verify::verify(cfg, trials, cfg.seed())?;
    let code = if report.pass { EXIT_OK } else { EXIT_FAILED };
    let counts: Vec<String> = report
        .suites
        .iter()
        .map(|s| format!("{}={}/{}", s.name, s.passed, s.trials))
        .collect();
    let summary = format!(
        "mode=verify {} {}",
        if report.pass { "pass" } else { "fail" },
        counts.join(" ")
    );
    let json = envelope(cfg, Mode::Verify, code, &summary, report);
    Ok(Produced { exit_code: code, summary, json, csv: Vec::new(), solution: None })
}

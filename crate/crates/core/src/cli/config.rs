use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{NonlinearitySpec, ProblemSpec};
use crate::error::Error;
use crate::exponent::ExponentField;
use crate::mesh::Mesh;
use crate::solvers::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Min,
    Newton,
    Mp,
    Multi,
    Small,
    Check,
    Verify,
    Norms,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Min => "min",
            Mode::Newton => "newton",
            Mode::Mp => "mp",
            Mode::Multi => "multi",
            Mode::Small => "small",
            Mode::Check => "check",
            Mode::Verify => "verify",
            Mode::Norms => "norms",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Exponent expressions in x (and y).
    pub p1: String,
    pub p2: String,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
    /// Quadrature order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_cap: Option<f64>,
    pub domain: DomainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<TermConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<TermConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    /// [a, b] for an interval, [lx, ly] for the rectangle [0, lx] x [0, ly].
    pub bounds: Vec<f64>,
    /// [n] or [nx, ny] cells.
    pub resolution: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Power,
    Custom,
}

/// Interior (`f`) or boundary (`g`) nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub kind: TermKind,
    /// Growth exponent expression; the power for `kind = "power"`.
    pub exponent: String,
    /// f(x, y, t) and its primitive F, custom rules only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odd: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deflation_shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_segments: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_rays: Option<usize>,
    /// Number of pairs for the multi search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Initial field u0(x, y) for min and newton.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    /// Path endpoint e(x, y) for mp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Newton right-hand side: b = L(u*) for this u*, or the load of `rhs`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    /// Field measured by the norms mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            formats: default_formats(),
        }
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub trials: usize,
}

/// One schema problem with its location in the config text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub key: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: ")?,
            (Some(l), None) => write!(f, "line {l}: ")?,
            _ => {}
        }
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "`{}`: {}", self.key, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub errors: Vec<SchemaError>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.errors.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn single(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            errors: vec![SchemaError {
                key: key.into(),
                line: None,
                column: None,
                message: message.into(),
            }],
        }
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

/// Line of `key = ...` inside `[section]` (top level when `section` is empty).
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else {
            continue;
        };
        if current == section && k.trim() == key {
            return Some(i + 1);
        }
    }
    None
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| toml_error(text, String::new(), e))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        toml_error(text, if key == "." { String::new() } else { key }, e.into_inner())
    })?;
    let errors = cfg.schema_errors(text);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { errors })
    }
}

fn toml_error(text: &str, key: String, e: toml::de::Error) -> ConfigError {
    let (line, column) = match e.span() {
        Some(s) => {
            let (l, c) = line_col(text, s.start);
            (Some(l), Some(c))
        }
        None => (None, None),
    };
    ConfigError {
        errors: vec![SchemaError {
            key,
            line,
            column,
            message: e.message().trim().to_string(),
        }],
    }
}

impl RunConfig {
    /// Cross-key checks that serde cannot express. `text` is only used to
    /// locate keys.
    fn schema_errors(&self, text: &str) -> Vec<SchemaError> {
        let mut out = Vec::new();
        let mut push = |section: &str, key: &str, anchor: Option<(&str, &str)>, message: String| {
            let (s, k) = anchor.unwrap_or((section, key));
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            out.push(SchemaError {
                key: full,
                line: locate(text, s, k),
                column: None,
                message,
            });
        };
        let d = &self.domain;
        let dims = match d.kind {
            DomainKind::Interval => 1,
            DomainKind::Rectangle => 2,
        };
        let want_bounds = 2;
        if d.bounds.len() != want_bounds {
            push("domain", "bounds", None, format!("expected {want_bounds} numbers, got {}", d.bounds.len()));
        }
        if d.resolution.len() != dims {
            push("domain", "resolution", None, format!("expected {dims} cell counts, got {}", d.resolution.len()));
        }
        for (term, weight, name) in [(&self.f, self.lambda, "lambda"), (&self.g, self.mu, "mu")] {
            let section = if name == "lambda" { "f" } else { "g" };
            match term {
                None if weight != 0.0 => push(
                    "",
                    section,
                    Some(("", name)),
                    format!("missing key: [{section}] block is required when {name} = {weight}"),
                ),
                Some(t) if t.kind == TermKind::Custom => {
                    for (v, key) in [(&t.value, "value"), (&t.primitive, "primitive")] {
                        if v.is_none() {
                            push(section, key, Some((section, "kind")), "missing key for kind = \"custom\"".into());
                        }
                    }
                }
                Some(t) => {
                    for (v, key) in [(&t.value, "value"), (&t.primitive, "primitive")] {
                        if v.is_some() {
                            push(section, key, None, "only allowed for kind = \"custom\"".into());
                        }
                    }
                }
                None => {}
            }
        }
        let s = &self.solver;
        let required: &[(&Option<String>, &str)] = match s.mode {
            Some(Mode::Mp) => &[(&s.endpoint, "endpoint")],
            Some(Mode::Norms) => &[(&s.field, "field")],
            _ => &[],
        };
        for (v, key) in required {
            if v.is_none() {
                push("solver", key, Some(("solver", "mode")), format!("missing key for mode = \"{}\"", s.mode.map_or("", Mode::name)));
            }
        }
        if s.mode == Some(Mode::Multi) && s.k.is_none() {
            push("solver", "k", Some(("solver", "mode")), "missing key for mode = \"multi\"".into());
        }
        if s.mode == Some(Mode::Newton) && s.manufactured.is_some() == s.rhs.is_some() {
            push(
                "solver",
                "manufactured",
                Some(("solver", "mode")),
                "mode = \"newton\" needs exactly one of `manufactured` and `rhs`".into(),
            );
        }
        if s.mode == Some(Mode::Verify) && self.verify.is_none() {
            push("verify", "trials", Some(("solver", "mode")), "missing key for mode = \"verify\"".into());
        }
        out
    }

    /// Re-runs the cross-key checks after command-line overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let errors = self.schema_errors("");
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { errors })
        }
    }

    pub fn mode(&self) -> Result<Mode, ConfigError> {
        self.solver
            .mode
            .ok_or_else(|| ConfigError::single("solver.mode", "missing key: set it in the config or pass --mode"))
    }

    pub fn seed(&self) -> u64 {
        self.solver.seed.unwrap_or(0)
    }

    /// TOML text that parses back to this config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    pub fn mesh(&self) -> crate::Result<Arc<Mesh>> {
        let d = &self.domain;
        let mesh = match d.kind {
            DomainKind::Interval => Mesh::interval(d.bounds[0], d.bounds[1], d.resolution[0])?,
            DomainKind::Rectangle => Mesh::rectangle(d.bounds[0], d.bounds[1], d.resolution[0], d.resolution[1])?,
        };
        Ok(Arc::new(mesh))
    }

    pub fn exponents(&self, mesh: &Arc<Mesh>) -> crate::Result<(ExponentField, ExponentField)> {
        Ok((
            ExponentField::parse(&self.p1, mesh.clone())?,
            ExponentField::parse(&self.p2, mesh.clone())?,
        ))
    }

    pub fn problem(&self) -> crate::Result<ProblemSpec> {
        let mesh = self.mesh()?;
        let (p1, p2) = self.exponents(&mesh)?;
        let mut b = ProblemSpec::builder(p1, p2);
        if let Some(f) = &self.f {
            b = b.interior(self.lambda, f.build(&mesh)?);
        }
        if let Some(g) = &self.g {
            b = b.boundary(self.mu, g.build(&mesh)?);
        }
        if let Some(o) = self.order {
            b = b.order(o);
        }
        if let Some(c) = self.power_cap {
            b = b.power_cap(c);
        }
        b.build()
    }

    /// Solver options: the mode's preset overridden by the solver block.
    pub fn options(&self, mode: Mode) -> SolveOptions {
        let s = &self.solver;
        let mut o = match mode {
            Mode::Newton => SolveOptions::newton(),
            Mode::Mp => SolveOptions::path(),
            Mode::Multi | Mode::Small => SolveOptions::search(),
            _ => SolveOptions::descent(),
        };
        o.seed = self.seed();
        if let Some(v) = s.tol {
            o.tol = v;
        }
        if let Some(v) = s.max_iter {
            o.max_iter = v;
        }
        if let Some(v) = s.separation {
            o.separation = v;
        }
        if let Some(v) = s.deflation_shift {
            o.deflation_shift = v;
        }
        if let Some(v) = s.path_segments {
            o.path_segments = v;
        }
        if let Some(v) = s.probe_rays {
            o.probe_rays = v;
        }
        o
    }
}

impl TermConfig {
    pub fn build(&self, mesh: &Arc<Mesh>) -> crate::Result<NonlinearitySpec> {
        let growth = ExponentField::parse(&self.exponent, mesh.clone())?;
        let mut spec = match self.kind {
            TermKind::Power => NonlinearitySpec::power(growth)?,
            TermKind::Custom => {
                let missing = |k: &str| Error::InvalidArgument(format!("custom rule needs `{k}`"));
                let value = self.value.as_deref().ok_or_else(|| missing("value"))?;
                let primitive = self.primitive.as_deref().ok_or_else(|| missing("primitive"))?;
                NonlinearitySpec::custom(value, primitive, growth)?
            }
        };
        if let Some(v) = self.theta {
            spec.theta = v;
        }
        if let Some(v) = self.threshold {
            spec.threshold = v;
        }
        if let Some(v) = self.c1 {
            spec.c1 = v;
        }
        if let Some(v) = self.c2 {
            spec.c2 = v;
        }
        if let Some(v) = self.odd {
            spec.odd = v;
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
p1 = "2"
p2 = "2"
lambda = 1.0

[domain]
kind = "interval"
bounds = [0.0, 1.0]
resolution = [100]

[f]
kind = "custom"
exponent = "2"
value = "1"
primitive = "t"

[solver]
mode = "min"
"#;

    #[test]
    fn minimal_min_config_parses() {
        let cfg = parse_config(MIN).unwrap();
        assert_eq!(cfg.mode().unwrap(), Mode::Min);
        assert_eq!(cfg.domain.resolution, vec![100]);
        assert_eq!(cfg.output.formats, vec![Format::Csv, Format::Json]);
        let prob = cfg.problem().unwrap();
        assert_eq!(prob.mesh().num_nodes(), 101);
    }

    #[test]
    fn type_mismatch_names_key_and_line() {
        let text = MIN.replace("lambda = 1.0", "lambda = \"two\"");
        let err = parse_config(&text).unwrap_err();
        let e = &err.errors[0];
        assert_eq!(e.key, "lambda");
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("invalid type"), "{e}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = MIN.replace("[solver]\n", "[solver]\ntoll = 1e-8\n");
        let err = parse_config(&text).unwrap_err();
        let e = &err.errors[0];
        assert!(e.message.contains("unknown field `toll`"), "{e}");
        assert_eq!(e.line, Some(18));
    }

    #[test]
    fn missing_g_with_nonzero_mu() {
        let text = MIN.replace("lambda = 1.0", "lambda = 1.0\nmu = 0.5");
        let err = parse_config(&text).unwrap_err();
        let e = &err.errors[0];
        assert_eq!(e.key, "g");
        assert!(e.message.starts_with("missing key"));
        assert_eq!(e.line, Some(5));
    }

    #[test]
    fn mode_specific_keys() {
        let text = MIN.replace("mode = \"min\"", "mode = \"mp\"");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.errors[0].key, "solver.endpoint");
        let text = MIN.replace("mode = \"min\"", "mode = \"multi\"");
        assert_eq!(parse_config(&text).unwrap_err().errors[0].key, "solver.k");
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = parse_config(MIN).unwrap();
        cfg.solver.seed = Some(7);
        cfg.solver.tol = Some(1e-10);
        cfg.f.as_mut().unwrap().threshold = Some(2.5);
        let back = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}

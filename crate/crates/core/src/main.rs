use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use varex::cli::{self, Failure, Mode};

const DEFAULT_OUT: &str = "varex-out";

#[derive(Parser, Debug)]
#[command(name = "varex", version, about = "Variational solvers for (p1(x), p2(x))-Laplacian Neumann problems")]
struct Args {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Mode, overriding `solver.mode`.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Seed, overriding `solver.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: `output.dir`, then $VAREX_OUT, then ./varex-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the summary line.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    SolveMin,
    SolveNewton,
    SolveMp,
    SolveMulti,
    SolveSmall,
    Check,
    Verify,
    Norms,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::SolveMin => Mode::Min,
            Command::SolveNewton => Mode::Newton,
            Command::SolveMp => Mode::Mp,
            Command::SolveMulti => Mode::Multi,
            Command::SolveSmall => Mode::Small,
            Command::Check => Mode::Check,
            Command::Verify => Mode::Verify,
            Command::Norms => Mode::Norms,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match execute(&args) {
        Ok(outcome) => {
            if !args.quiet {
                println!("{}", outcome.summary);
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("varex: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(args: &Args) -> Result<cli::Outcome, Failure> {
    let usage = |m: &str| {
        Failure::Config(cli::ConfigError {
            errors: vec![cli::SchemaError {
                key: String::new(),
                line: None,
                column: None,
                message: m.to_string(),
            }],
        })
    };
    let path = args.config.as_ref().ok_or_else(|| usage("--config <path> is required"))?;
    let text = std::fs::read_to_string(path).map_err(|source| {
        Failure::Io(cli::IoFailure {
            path: path.clone(),
            source,
        })
    })?;
    let mut cfg = cli::parse_config(&text)?;
    let mode = match (args.command.map(Command::mode), args.mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(usage(&format!(
                "subcommand selects mode `{}` but --mode is `{}`",
                a.name(),
                b.name()
            )))
        }
        (Some(m), _) | (None, Some(m)) => Some(m),
        (None, None) => cfg.solver.mode,
    };
    cfg.solver.mode = mode;
    if let Some(seed) = args.seed {
        cfg.solver.seed = Some(seed);
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("VAREX_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    cli::run(&cfg, &out)
}

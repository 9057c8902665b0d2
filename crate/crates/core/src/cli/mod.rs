//! The `algmech` command line front end.
//!
//! ```text
//! algmech simulate <config> [--output PATH] [--max-cond X]
//! algmech verify <config>
//! algmech transform <config> [--output PATH]
//! algmech models
//! ```
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 failed
//! verification. Every failure also prints one JSON line
//! `{"error": ..., "detail": ...}` on stderr.

pub mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::affgebroid;
use crate::algebroid::{self, Classification};
use crate::dynamics::{integrate_with, Options, Trajectory};
use crate::error::Error;
use crate::hamiltonian::{equivalence_check, legendre_transform};
use crate::models::MODELS;
use crate::structure::Structure;

use config::{build_model, initial_states, Config, ConfigError, Model};

/// Environment variable that overrides the verification seed.
pub const SEED_ENV: &str = "ALGMECH_SEED";

#[derive(Debug, Parser)]
#[command(name = "algmech", version, about = "Mechanics on algebroids and affgebroids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the Euler-Lagrange equations and write the trajectory.
    Simulate {
        config: PathBuf,
        /// Write here instead of `output.path` or stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Condition number above which the fiber Hessian counts as singular.
        #[arg(long)]
        max_cond: Option<f64>,
    },
    /// Classify the structure and run the consistency checks.
    Verify { config: PathBuf },
    /// Tabulate the Legendre transform along a segment in momentum space.
    Transform {
        config: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// List the built-in models.
    Models,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Validation(Error),
    #[error("{0}")]
    Numerical(Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Verification(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Validation(e)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
            _ => 2,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
            CliError::Verification(_) => "verification",
        }
    }
}

/// Runs the tool on `args` (including the program name) with the process
/// streams and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let detail = first.strip_prefix("error: ").unwrap_or(first).to_string();
            return report(err, &CliError::Usage(detail), None);
        }
    };
    let result = match cli.command {
        Command::Simulate { config, output, max_cond } => simulate(&config, output, max_cond, out),
        Command::Verify { config } => verify(&config, out),
        Command::Transform { config, output } => transform(&config, output, out),
        Command::Models => list_models(out),
    };
    match result.and_then(|()| quiet(out.flush())) {
        Ok(()) => 0,
        Err(e) => report(err, &e, None),
    }
}

fn report(err: &mut dyn Write, e: &CliError, detail: Option<String>) -> i32 {
    let line = json!({ "error": e.category(), "detail": detail.unwrap_or_else(|| e.to_string()) });
    let _ = writeln!(err, "{line}");
    e.exit_code()
}

fn load(path: &std::path::Path) -> Result<(Config, Model), CliError> {
    let cfg = Config::load(path)?;
    let model = build_model(&cfg)?;
    Ok((cfg, model))
}

fn sink(path: Option<PathBuf>, out: &mut dyn Write, body: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(&p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => quiet(out.write_all(body)),
    }
}

/// A reader that went away (`algmech simulate ... | head`) is not an error.
fn quiet(r: std::io::Result<()>) -> Result<(), CliError> {
    match r {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn simulate(
    path: &std::path::Path,
    output: Option<PathBuf>,
    max_cond: Option<f64>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (cfg, model) = load(path)?;
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("simulate needs a `simulation` section".into()))?;
    let lagrangian = model
        .lagrangian
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("simulate needs a `lagrangian`".into()))?;
    let opts = Options { method: sim.method, max_cond: max_cond.unwrap_or(cfg.max_cond()) };
    let span = cfg.span().expect("simulation present");
    let states = initial_states(&cfg, &model)?;
    span.steps()?;
    // independent trajectories run on their own threads
    let results: Vec<Result<Trajectory, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = states
            .iter()
            .map(|s| {
                let (structure, l, monitors) = (&model.structure, lagrangian, &model.monitors);
                scope.spawn(move || {
                    let mut tr = integrate_with(structure, l, &s.x, &s.y, span, opts)?;
                    for (name, e) in monitors {
                        tr.add_monitor(name, e)?;
                    }
                    Ok(tr)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("integration thread panicked")).collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let body = match cfg.output.format {
        config::Format::Csv => output::trajectories_csv(&runs),
        config::Format::Json => output::trajectories_json(&model, sim.method, &runs),
    };
    sink(output.or(cfg.output.path.clone().map(PathBuf::from)), out, body.as_bytes())
}

#[derive(Debug, Serialize)]
struct BracketCheck {
    pairs: usize,
    points: usize,
    max_residual: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct EquivalenceCheck {
    max_deviation: f64,
    tol: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    schema: u64,
    model: String,
    kind: &'static str,
    classification: Classification,
    bracket_tensor: BracketCheck,
    equivalence: Option<EquivalenceCheck>,
    passed: bool,
}

fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn verify(path: &std::path::Path, out: &mut dyn Write) -> Result<(), CliError> {
    let (cfg, model) = load(path)?;
    let v = &cfg.verify;
    let seed = seed_override()?.unwrap_or(v.seed);
    let classification = model.structure.classify(v.samples, seed, v.tol)?;
    let residual = match &model.structure {
        Structure::Algebroid(a) => algebroid::bracket_tensor_residual(a, v.bracket_pairs, v.samples, seed)?,
        Structure::Affgebroid(s) => affgebroid::bracket_tensor_residual(s, v.bracket_pairs, v.samples, seed)?,
    };
    let bracket_tensor = BracketCheck {
        pairs: v.bracket_pairs,
        points: v.samples,
        max_residual: residual,
        passed: residual <= v.tol,
    };
    let equivalence = match (&model.lagrangian, cfg.span()) {
        (Some(l), Some(span)) => {
            let state = initial_states(&cfg, &model)?.swap_remove(0);
            let dev = equivalence_check(&model.structure, l, &state.x, &state.y, span)?;
            Some(EquivalenceCheck { max_deviation: dev, tol: v.equivalence_tol, passed: dev <= v.equivalence_tol })
        }
        _ => None,
    };
    let passed = classification.is_lie
        && bracket_tensor.passed
        && equivalence.iter().all(|e| e.passed);
    let report = VerifyReport {
        schema: config::SCHEMA_VERSION,
        model: model.name.clone(),
        kind: model.structure.kind(),
        classification,
        bracket_tensor,
        equivalence,
        passed,
    };
    let mut body = serde_json::to_string_pretty(&report).expect("report serializes");
    body.push('\n');
    quiet(out.write_all(body.as_bytes()))?;
    if passed {
        Ok(())
    } else {
        let mut failed = Vec::new();
        if !report.classification.is_lie {
            failed.push("classification");
        }
        if !report.bracket_tensor.passed {
            failed.push("bracket_tensor");
        }
        if report.equivalence.as_ref().is_some_and(|e| !e.passed) {
            failed.push("equivalence");
        }
        Err(CliError::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

fn transform(path: &std::path::Path, output: Option<PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    let (cfg, model) = load(path)?;
    let t = cfg
        .transform
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("transform needs a `transform` section".into()))?;
    let l = model
        .lagrangian
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("transform needs a `lagrangian`".into()))?;
    let (n, d) = (model.structure.n(), model.structure.fiber_dim());
    if t.x.len() != n || t.from.len() != d || t.to.len() != d {
        return Err(ConfigError::Invalid(format!("transform expects |x| = {n} and |from| = |to| = {d}")).into());
    }
    let mut guess = match &t.y_guess {
        Some(g) if g.len() == d => g.clone(),
        Some(_) => return Err(ConfigError::Invalid(format!("transform.y_guess must have length {d}")).into()),
        None => t.from.clone(),
    };
    let mut rows = Vec::with_capacity(t.points);
    for k in 0..t.points {
        let s = if t.points == 1 { 0.0 } else { k as f64 / (t.points - 1) as f64 };
        let xi: Vec<f64> = t.from.iter().zip(&t.to).map(|(a, b)| a + s * (b - a)).collect();
        let (h, y) = legendre_transform(&model.structure, l, &t.x, &xi, &guess)?;
        guess = y.clone();
        rows.push((xi, y, h));
    }
    let body = match cfg.output.format {
        config::Format::Csv => output::transform_csv(d, &rows),
        config::Format::Json => output::transform_json(d, &rows),
    };
    sink(output.or(cfg.output.path.clone().map(PathBuf::from)), out, body.as_bytes())
}

fn list_models(out: &mut dyn Write) -> Result<(), CliError> {
    for (name, description) in MODELS {
        writeln!(out, "{name:<16} {description}")?;
    }
    Ok(())
}

//! `varkit`: command line front end for the variational calculus toolkit.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use varkit_core::jet::IdentityTester;

use commands::{Session, UsageError};
use report::{Inputs, Report};

const DEFAULT_SEED: u64 = 0x5eed_1dea;

#[derive(Parser)]
#[command(name = "varkit", version, about = "Inverse problem checks for polynomial PDE systems")]
struct Cli {
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Helmholtz and Anderson-Duchamp checks for the model's equations.
    CheckVariational { model: PathBuf },
    /// Build a Lagrangian for the equations, or from an energy function (n = m = 1).
    Lagrangian {
        model: PathBuf,
        #[arg(long)]
        energy: Option<String>,
    },
    /// Test whether a vector field is a symmetry of the equations.
    Symmetry {
        model: PathBuf,
        #[arg(long)]
        field: String,
    },
    /// Continuity equation for a field and its conserved current.
    Conservation {
        model: PathBuf,
        #[arg(long)]
        field: String,
        /// Check a declared current instead of constructing one.
        #[arg(long)]
        current: Option<String>,
    },
    /// Split the Lie derivative into its continuity and ECS parts.
    Ecs {
        model: PathBuf,
        #[arg(long)]
        field: String,
    },
    /// Run the full symmetry-to-variationality argument.
    Takens {
        model: PathBuf,
        /// Comma separated points; coordinates within a point separated by ':'.
        #[arg(long)]
        points: Option<String>,
        #[arg(long)]
        trace: bool,
    },
    /// Compare the first variation with the weak form numerically.
    WeakCheck {
        model: PathBuf,
        /// Section name or tuple of polynomials in the base coordinates.
        #[arg(long)]
        section: String,
        /// Test function name or tuple; must vanish with its gradient on the boundary.
        #[arg(long)]
        test: String,
        /// Box bounds a,b[,c,d].
        #[arg(long, allow_hyphen_values = true)]
        domain: String,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long)]
        lagrangian: Option<String>,
        #[arg(long)]
        panels: Option<usize>,
    },
    /// Number of independent Helmholtz conditions.
    Count { n: u64, m: u64 },
}

fn seed() -> Result<u64, UsageError> {
    match std::env::var("VARKIT_SEED") {
        Ok(s) => {
            let s = s.trim();
            let parsed = match s.strip_prefix("0x") {
                Some(h) => u64::from_str_radix(h, 16),
                None => s.parse(),
            };
            parsed.map_err(|_| UsageError(format!("VARKIT_SEED '{s}' is not an integer")))
        }
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn run(cli: Cli, arguments: Vec<String>) -> Result<Report, UsageError> {
    let start = Instant::now();
    let seed = seed()?;
    let tester = IdentityTester { seed, ..IdentityTester::default() };
    let (name, path) = match &cli.command {
        Command::CheckVariational { model } => ("check-variational", Some(model)),
        Command::Lagrangian { model, .. } => ("lagrangian", Some(model)),
        Command::Symmetry { model, .. } => ("symmetry", Some(model)),
        Command::Conservation { model, .. } => ("conservation", Some(model)),
        Command::Ecs { model, .. } => ("ecs", Some(model)),
        Command::Takens { model, .. } => ("takens", Some(model)),
        Command::WeakCheck { model, .. } => ("weak-check", Some(model)),
        Command::Count { .. } => ("count", None),
    };
    let loaded = path.map(|p| commands::load(p)).transpose()?;
    let path_text = path.map(|p| p.display().to_string());
    let inputs = Inputs::new(
        path_text.as_deref().zip(loaded.as_ref().map(|(t, _)| t.as_str())),
        arguments,
    );
    let mut report = Report::new(name, inputs, seed);
    let session = loaded.map(|(_, model)| Session { model, tester });

    match (cli.command, session) {
        (Command::Count { n, m }, _) => commands::count(&mut report, n, m)?,
        (Command::CheckVariational { .. }, Some(s)) => s.check_variational(&mut report)?,
        (Command::Lagrangian { energy, .. }, Some(s)) => s.lagrangian(&mut report, energy.as_deref())?,
        (Command::Symmetry { field, .. }, Some(s)) => s.symmetry(&mut report, &field)?,
        (Command::Conservation { field, current, .. }, Some(s)) => {
            s.conservation(&mut report, &field, current.as_deref())?
        }
        (Command::Ecs { field, .. }, Some(s)) => s.ecs(&mut report, &field)?,
        (Command::Takens { points, trace, .. }, Some(s)) => {
            let pts = match points {
                Some(p) => s.parse_points(&p)?,
                None => s.default_points(),
            };
            s.takens(&mut report, &pts, trace)?
        }
        (Command::WeakCheck { section, test, domain, eps, lagrangian, panels, .. }, Some(s)) => {
            s.weak_check(&mut report, &section, &test, &domain, eps, lagrangian.as_deref(), panels)?
        }
        _ => unreachable!("every model command loads a model"),
    }
    report.finish(start.elapsed().as_millis() as u64);
    Ok(report)
}

fn main() -> ExitCode {
    let arguments: Vec<String> = std::env::args().skip(1).filter(|a| a != "--json").collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let json = cli.json;
    match run(cli, arguments) {
        Ok(report) => {
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

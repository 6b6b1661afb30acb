//! `sdgeo`: run verification checks and integrals on built-in scenarios and
//! print one JSON report per line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sdgeo::scenarios::{self, ScenarioManifold};
use sdgeo::suite::{self, Check, VerifyOptions, Which};
use sdgeo::{GeometryError, ResidualReport};

#[derive(Parser, Debug)]
#[command(name = "sdgeo", version, about = "Numerical checks for pairs of singular distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pointwise checks over seeded random samples.
    Verify(VerifyArgs),
    /// Divergence theorem or integral formula by quadrature.
    Integrate(IntegrateArgs),
    /// List scenario and check names.
    List,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario name (see `sdgeo list`).
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write all reports to FILE as a JSON array.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Check to run; repeatable. Defaults to every check the scenario supports.
    #[arg(long = "check", value_name = "NAME")]
    checks: Vec<String>,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Tolerance on the normalized residual.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Debug)]
struct IntegrateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "stokes|formula")]
    which: String,
    /// Resolution level N, or node counts N,N,... per axis.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    grid: Vec<usize>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Unknown { .. } | GeometryError::Unsupported(_) | GeometryError::Grid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn scenario(name: &str) -> Result<ScenarioManifold, Failure> {
    if !scenarios::SCENARIO_NAMES.contains(&name) {
        return Err(Failure::Usage(format!(
            "unknown scenario `{name}`; expected one of {}",
            scenarios::SCENARIO_NAMES.join(", ")
        )));
    }
    Ok(scenarios::by_name(name)?)
}

fn emit(reports: &[ResidualReport], path: Option<&PathBuf>) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    for r in reports {
        let line = serde_json::to_string(r).map_err(|e| Failure::Runtime(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    if let Some(path) = path {
        let body = serde_json::to_string_pretty(reports).map_err(|e| Failure::Runtime(e.to_string()))?;
        std::fs::write(path, body + "\n").map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<Vec<ResidualReport>, Failure> {
    if args.points == 0 {
        return Err(Failure::Usage("--points must be positive".into()));
    }
    if !(args.tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let checks: Vec<Check> = args.checks.iter().map(|c| c.parse()).collect::<Result<_, _>>()?;
    let s = scenario(&args.common.scenario)?;
    let checks = if checks.is_empty() {
        Check::ALL.into_iter().filter(|&c| c != Check::Contact || s.has_contact()).collect()
    } else {
        checks
    };
    if checks.contains(&Check::Contact) && !s.has_contact() {
        return Err(Failure::Usage(format!("scenario `{}` has no almost contact structure", s.name)));
    }
    let opts = VerifyOptions {
        points: args.points,
        seed: args.common.seed,
        tol: args.tol,
    };
    let mut reports = Vec::with_capacity(checks.len());
    for c in checks {
        match suite::verify_check(&s, c, &opts) {
            Ok(r) => reports.push(r),
            Err(e) => {
                emit(&reports, args.common.report.as_ref())?;
                return Err(e.into());
            }
        }
    }
    Ok(reports)
}

fn integrate(args: &IntegrateArgs) -> Result<Vec<ResidualReport>, Failure> {
    let which: Which = args.which.parse()?;
    let s = scenario(&args.common.scenario)?;
    suite::resolve_grid(&s, &args.grid)?;
    Ok(suite::cmd_integrate(&s, which, &args.grid, args.common.seed)?)
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let (reports, path) = match &cli.command {
        Command::Verify(a) => (verify(a)?, a.common.report.as_ref()),
        Command::Integrate(a) => (integrate(a)?, a.common.report.as_ref()),
        Command::List => {
            println!("scenarios: {}", scenarios::SCENARIO_NAMES.join(" "));
            let names: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
            println!("checks: {}", names.join(" "));
            println!("integrals: stokes formula");
            return Ok(true);
        }
    };
    emit(&reports, path)?;
    Ok(reports.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

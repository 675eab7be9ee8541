mod commands;
mod error;
mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::Report;
use crate::error::CliError;
use crate::scenario::Scenario;

const THREADS_VAR: &str = "PLATOON_RISK_THREADS";

#[derive(Parser)]
#[command(name = "platoon-risk", version, about = "Cascading-collision risk for delayed, noise-driven platoons")]
struct Cli {
    /// Scenario file (JSON). `limits` falls back to the built-in case study.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Relative tolerance of the delay kernel.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,

    /// Overrides the simulation seed in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Per-mode stability check. Exits 0 whether or not the platoon is stable.
    Stability,
    /// Steady-state mean and covariance of the inter-vehicle distances.
    Covariance,
    /// Conditional collision risk.
    Risk {
        #[command(subcommand)]
        kind: RiskKind,
    },
    /// Graph-independent covariance bounds and the feasibility screen.
    Limits,
    /// Monte Carlo estimate of the distance law.
    Simulate {
        /// Also write every retained snapshot as CSV.
        #[arg(long)]
        dump_samples: Option<PathBuf>,
    },
    /// Print the scenario in canonical form, defaults filled in.
    Scenario,
    /// Risk profiles across design changes.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
}

#[derive(Subcommand)]
enum RiskKind {
    /// One exactly observed pair.
    Single,
    /// Several exactly observed pairs.
    Multi,
    /// One pair observed inside a collision range.
    Range,
    /// Every unobserved pair.
    Profile,
}

#[derive(Subcommand)]
enum SweepKind {
    /// Add each candidate link in turn.
    AddEdge,
    /// Remove each candidate link in turn.
    RemoveEdge,
    /// Sinusoidal noise profiles `g_i = (kg sin i + 1) g`.
    Noise {
        #[arg(long = "kg", required = true, num_args = 1..)]
        kg: Vec<f64>,
    },
}

fn load_scenario(path: Option<&Path>, fallback: bool) -> Result<Scenario, CliError> {
    match path {
        Some(p) => Scenario::load(p),
        None if fallback => Ok(Scenario::default()),
        None => Err(CliError::Scenario("--scenario is required for this command".into())),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn render(report: Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).expect("results serialise");
            s.push('\n');
            s
        }
        Format::Csv => report.csv,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| CliError::Scenario(format!("{THREADS_VAR}={v} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Scenario(format!("thread pool: {e}")))?;
    log::debug!("using {n} worker threads");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    if !(cli.tol > 0.0 && cli.tol < 1.0) {
        return Err(CliError::Scenario(format!("--tol {} must lie in (0, 1)", cli.tol)));
    }
    let fallback = matches!(cli.command, Command::Limits | Command::Scenario);
    let s = load_scenario(cli.scenario.as_deref(), fallback)?;
    let tol = cli.tol;
    if let Command::Scenario = cli.command {
        let mut text = s.to_json();
        text.push('\n');
        return emit(&text, cli.out.as_deref());
    }
    let report = match &cli.command {
        Command::Stability => commands::stability(&s)?,
        Command::Covariance => commands::covariance(&s, tol)?,
        Command::Risk { kind } => match kind {
            RiskKind::Single => commands::risk_single(&s, tol)?,
            RiskKind::Multi => commands::risk_multi(&s, tol)?,
            RiskKind::Range => commands::risk_range(&s, tol)?,
            RiskKind::Profile => commands::risk_profile_cmd(&s, tol)?,
        },
        Command::Limits => commands::limits(&s, tol)?,
        Command::Simulate { dump_samples } => {
            let sim = commands::simulate(&s, cli.seed)?;
            if let Some(p) = dump_samples {
                write_atomic(p, &sim.samples.to_csv())?;
                log::info!("wrote {} snapshots to {}", sim.samples.count(), p.display());
            }
            sim.report
        }
        Command::Scenario => unreachable!("handled above"),
        Command::Sweep { kind } => match kind {
            SweepKind::AddEdge => commands::sweep_edges(&s, tol, true)?,
            SweepKind::RemoveEdge => commands::sweep_edges(&s, tol, false)?,
            SweepKind::Noise { kg } => commands::sweep_noise(&s, tol, kg)?,
        },
    };
    emit(&render(report, cli.format), cli.out.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

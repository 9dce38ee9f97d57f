use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lrce::commands::{self, SimulationFlags};
use lrce::export::CsvDir;
use lrce::{load_config, CliError, ResultBundle};

/// Long-run competitive equilibrium with heterogeneous firms.
///
/// Results are written as JSON to stdout or `--out`; plot data as CSV to
/// `--csv-dir`. Log verbosity follows RUST_LOG (default: warn).
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Write the result bundle here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Directory for schedule, measure and histogram CSV files.
    #[arg(long, global = true)]
    csv_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the stationary equilibrium.
    Solve { config: PathBuf },
    /// Long-run supply price at the given market quantities.
    Supply {
        config: PathBuf,
        /// Comma-separated quantities; defaults to supply.quantities in the config.
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
    },
    /// Steady-state surplus maximizing allocation.
    Planner { config: PathBuf },
    /// Equilibrium against the planner.
    Compare { config: PathBuf },
    /// Closed forms of the two-type model in the config's twotype section.
    OracleTwotype {
        config: PathBuf,
        /// Print a plain table to stdout; the JSON bundle then only goes to --out.
        #[arg(long)]
        table: bool,
    },
    /// Firm-level Monte Carlo at the equilibrium price and threshold.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        entrants: Option<u32>,
        #[arg(long)]
        periods: Option<u32>,
        #[arg(long)]
        burn_in: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the model assumptions.
    Validate { config: PathBuf },
}

fn config_path(c: &Command) -> &Path {
    match c {
        Command::Solve { config }
        | Command::Supply { config, .. }
        | Command::Planner { config }
        | Command::Compare { config }
        | Command::OracleTwotype { config, .. }
        | Command::Simulate { config, .. }
        | Command::Validate { config } => config,
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(config_path(&cli.command))?;
    let hash = cfg.hash();
    log::debug!("config hash {hash}");
    let mut csv = match &cli.csv_dir {
        Some(dir) => Some(CsvDir::create(dir)?),
        None => None,
    };
    let mut table = None;
    let result = match &cli.command {
        Command::Solve { .. } => commands::solve(&cfg, csv.as_mut())?,
        Command::Supply { q, .. } => commands::supply(&cfg, q.as_deref(), csv.as_mut())?,
        Command::Planner { .. } => commands::planner(&cfg, csv.as_mut())?,
        Command::Compare { .. } => commands::compare_cmd(&cfg, csv.as_mut())?,
        Command::OracleTwotype { table: t, .. } => {
            let (r, s) = commands::oracle(&cfg)?;
            if *t {
                table = Some(commands::oracle_table(&s));
            }
            r
        }
        Command::Simulate { entrants, periods, burn_in, seed, .. } => {
            let flags = SimulationFlags { entrants: *entrants, periods: *periods, burn_in: *burn_in, seed: *seed };
            commands::simulate(&cfg, &flags, csv.as_mut())?
        }
        Command::Validate { .. } => commands::validate(&cfg)?,
    };
    let bundle = ResultBundle::new(std::env::args().collect(), hash, result);
    let json = bundle.to_json().map_err(|e| CliError::Io(e.to_string()))?;
    match (&cli.out, table) {
        (Some(path), t) => {
            fs::write(path, json + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            if let Some(t) = t {
                print!("{t}");
            }
        }
        (None, Some(t)) => print!("{t}"),
        (None, None) => println!("{json}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code_name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use open_mzi::analysis::Location;
use open_mzi::cli::{self, CliError};
use open_mzi::config::{load_config, parse_locations, GridSpec, LoadedConfig};

#[derive(Parser)]
#[command(
    name = "open-mzi",
    version,
    about = "Polarization dephasing in an open Mach-Zehnder interferometer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace distances, port probabilities and populations on a time grid, as CSV.
    Sweep(SweepArgs),
    /// Estimate the arm path difference from the output-side memory peak.
    Estimate(ConfigArg),
    /// Compare non-CP-divisible intervals with backflow intervals.
    Divisibility(GridArgs),
    /// Compare closed-form states against direct frequency integration.
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Time grid, START:STOP:STEP.
    #[arg(long, value_name = "START:STOP:STEP")]
    grid: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Comma-separated subset of path0,path1,joint,path0_out,path1_out,joint_out.
    #[arg(long, value_name = "LIST")]
    locations: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_name = "LIST")]
    locations: Option<String>,
    /// Number of frequency quadrature points.
    #[arg(long, value_name = "N")]
    n_freq: Option<usize>,
}

fn grid(
    arg: &Option<String>,
    from_file: Option<GridSpec>,
    fallback: GridSpec,
) -> Result<Vec<f64>, CliError> {
    let spec = match arg {
        Some(s) => s
            .parse::<GridSpec>()
            .map_err(|e| CliError::Usage(format!("--grid: {e}")))?,
        None => from_file.unwrap_or(fallback),
    };
    Ok(spec.points())
}

fn locations(
    arg: &Option<String>,
    from_file: Option<Vec<Location>>,
) -> Result<Vec<Location>, CliError> {
    match arg {
        Some(s) => parse_locations(s).map_err(|e| CliError::Usage(format!("--locations: {e}"))),
        None => Ok(from_file.unwrap_or_else(|| Location::ALL.to_vec())),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let mut stdout = io::stdout().lock();
    match command {
        Command::Sweep(args) => {
            let LoadedConfig { config, run } = load_config(&args.grid.config.config)?;
            let times = grid(&args.grid.grid, run.grid, cli::default_sweep_grid(&config))?;
            let locs = locations(&args.locations, run.locations)?;
            let stderr = io::stderr();
            match &args.out {
                Some(path) => {
                    let mut file = BufWriter::new(File::create(path)?);
                    cli::sweep(&config, &times, &locs, &mut file, stderr.lock())?;
                    file.flush()?;
                }
                None => cli::sweep(&config, &times, &locs, &mut stdout, stderr.lock())?,
            }
        }
        Command::Estimate(args) => {
            let LoadedConfig { config, .. } = load_config(&args.config)?;
            let report = cli::estimate(&config)?;
            write!(stdout, "{}", report.render())?;
        }
        Command::Divisibility(args) => {
            let LoadedConfig { config, run } = load_config(&args.config.config)?;
            let times = grid(&args.grid, run.grid, cli::default_output_grid(&config))?;
            let report = cli::divisibility(&config, &times)?;
            write!(stdout, "{}", report.render())?;
            if !report.agree() {
                return Err(CliError::CheckFailed(
                    "divisibility and backflow intervals disagree".into(),
                ));
            }
        }
        Command::OracleCheck(args) => {
            let LoadedConfig { config, run } = load_config(&args.grid.config.config)?;
            let times = match &args.grid.grid {
                Some(_) => grid(&args.grid.grid, None, cli::default_sweep_grid(&config))?,
                None => match run.grid {
                    Some(spec) => spec.points(),
                    None => cli::default_oracle_times(&config, cli::ORACLE_TIMES),
                },
            };
            let locs = locations(&args.locations, run.locations)?;
            let n_freq = args.n_freq.unwrap_or(run.n_freq);
            if n_freq < 3 {
                return Err(CliError::Usage(format!(
                    "--n-freq: need at least 3 points, got {n_freq}"
                )));
            }
            let check = cli::oracle_check(&config, n_freq, &times, &locs)?;
            write!(stdout, "{}", check.render())?;
            if !check.passed() {
                return Err(CliError::CheckFailed(
                    "oracle deviation above threshold".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Model(open_mzi::Error::EstimatorOutOfRegime { .. }) => eprintln!(
                    "error: {e}\nthe arms still interfere at the second beam splitter, so the \
                     output memory peak does not isolate the path difference"
                ),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

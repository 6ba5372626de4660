use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use igsf::experiments::FilterKind;
use igsf::harness::{self, Config, Overrides};
use igsf::FilterError;

#[derive(Parser)]
#[command(
    name = "igsf",
    version,
    about = "Monte Carlo benchmarks for the iterated gain-based filter bank"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured filters and write per-filter CSV files.
    Run(Opts),
    /// Run, then write summary.csv with time-averaged RMSE and win-rates.
    Compare(Opts),
    /// Print the fully resolved configuration.
    PrintConfig(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named experiment when no file is given (growth, tracking, frame5, frame20).
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Filter to run; repeat to select several. Replaces the file's list.
    #[arg(long = "filter")]
    filters: Vec<String>,
}

fn load(opts: &Opts) -> Result<Config, FilterError> {
    let text = match (&opts.config, &opts.experiment) {
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| FilterError::config("--config", format!("{}: {e}", path.display())))?,
        (None, Some(name)) => format!("experiment = \"{}\"\n", name.escape_default()),
        (Some(_), Some(_)) => {
            return Err(FilterError::config(
                "--experiment",
                "give either --config or --experiment",
            ))
        }
        (None, None) => {
            return Err(FilterError::config(
                "--config",
                "a config file or --experiment is required",
            ))
        }
    };
    let filters = opts
        .filters
        .iter()
        .map(|f| {
            f.parse::<FilterKind>()
                .map_err(|_| FilterError::config("--filter", format!("unknown filter `{f}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ov = Overrides {
        seed: opts.seed,
        runs: opts.runs,
        out: opts.out.as_ref().map(|p| p.to_string_lossy().into_owned()),
        filters,
    };
    Config::parse_with(&text, &ov)
}

fn exit_code(e: &FilterError) -> u8 {
    match e {
        FilterError::Config { .. } | FilterError::Parameter(_) | FilterError::Io(_) => 1,
        FilterError::Numerical(_)
        | FilterError::DegenerateWeights(_)
        | FilterError::Dimension { .. } => 2,
    }
}

fn execute(cli: Cli) -> Result<(), FilterError> {
    match cli.command {
        Command::PrintConfig(opts) => print!("{}", load(&opts)?.to_toml()?),
        Command::Run(opts) => {
            let cfg = load(&opts)?;
            let (art, dirs) = harness::main_run(&cfg)?;
            report_warnings(&art);
            for d in dirs {
                println!("{}", d.display());
            }
        }
        Command::Compare(opts) => {
            let cfg = load(&opts)?;
            let (art, path) = harness::compare(&cfg)?;
            report_warnings(&art);
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn report_warnings(art: &igsf::experiments::RunArtifacts) {
    for f in &art.filters {
        for w in &f.warnings {
            eprintln!("warning: {}: {w}", f.spec.label());
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

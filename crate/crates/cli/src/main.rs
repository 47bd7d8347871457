use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use molphase_cli::angle::{parse_angle, parse_list};
use molphase_cli::commands::{self, render_records, render_run, write_file};
use molphase_cli::{CliError, GaugeChoice, OracleConfig, OutputFormat, RunConfig, EXIT_DISAGREE, EXIT_USAGE};
use molphase_core::engine::DEFAULT_SHOTS;

#[derive(Parser)]
#[command(name = "molphase", version, about = "Probe-qubit geometric phase protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol at one angle.
    Run(RunArgs),
    /// Run the protocol over a grid of angles.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated angles (default kπ/6, k = 1..12).
        #[arg(long, value_parser = angle_list)]
        grid: Option<AngleList>,
    },
    /// Compare the protocol phase with the discrete loop phase.
    Oracle {
        #[arg(long, default_value = "2pi", value_parser = parse_angle, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long, default_value_t = 12)]
        loop_points: usize,
        #[arg(long, value_enum, default_value_t = Gauge::None)]
        gauge: Gauge,
    },
    /// Write transpiled OpenQASM 2.0 for the σx and σy circuits.
    Qasm {
        #[arg(long, default_value = "2pi", value_parser = parse_angle, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Output stem; files are <stem>_x.qasm and <stem>_y.qasm.
        #[arg(long, default_value = "protocol")]
        out: PathBuf,
    },
    /// Split levels of a vibronic model file.
    Vibronic {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated mode coordinates.
        #[arg(long, value_parser = angle_list, allow_hyphen_values = true)]
        q: AngleList,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Total angle: radians or forms like 2pi, pi/3.
    #[arg(long, default_value = "2pi", value_parser = parse_angle, allow_hyphen_values = true)]
    phi: f64,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_SHOTS, conflicts_with = "exact")]
    shots: u64,
    /// Exact expectation values instead of sampling.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Depolarizing probability on the probe before readout.
    #[arg(long)]
    noise_p: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct AngleList(Vec<f64>);

fn angle_list(text: &str) -> Result<AngleList, String> {
    parse_list(text).map(AngleList)
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gauge {
    None,
    Half,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

impl From<&RunArgs> for RunConfig {
    fn from(a: &RunArgs) -> Self {
        RunConfig {
            phi_total: a.phi,
            n_steps: a.steps,
            shots: if a.exact { None } else { Some(a.shots) },
            seed: a.seed,
            noise_p: a.noise_p,
            format: a.format.into(),
            out: a.out.clone(),
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = RunConfig::from(&args);
            let outcome = commands::cmd_run(&cfg)?;
            emit(&render_run(&outcome, cfg.format)?, cfg.out.as_ref())?;
        }
        Command::Sweep { run, grid } => {
            let cfg = RunConfig::from(&run);
            let grid = grid.map(|g| g.0).unwrap_or_else(commands::default_grid);
            let records = commands::cmd_sweep(&cfg, &grid)?;
            emit(&render_records(&records, cfg.format)?, cfg.out.as_ref())?;
        }
        Command::Oracle { phi, loop_points, gauge } => {
            let report = commands::cmd_oracle(&OracleConfig {
                phi_total: phi,
                loop_points,
                gauge: match gauge {
                    Gauge::None => GaugeChoice::None,
                    Gauge::Half => GaugeChoice::HalfAngle,
                },
                ..OracleConfig::default()
            })?;
            print!("{}", report.render());
            if !report.passed() {
                return Ok(ExitCode::from(EXIT_DISAGREE as u8));
            }
        }
        Command::Qasm { phi, steps, out } => {
            for path in commands::cmd_qasm(phi, steps, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Vibronic { model, q, format, out } => {
            let report = commands::cmd_vibronic(&model, &q.0)?;
            emit(&report.render(format.into())?, out.as_ref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}

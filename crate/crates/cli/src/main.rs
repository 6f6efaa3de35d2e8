//! `jointstat`: parameter sweeps and Monte Carlo runs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::Failure;
use config::{CommandName, Format, RangeSpec, RunConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Joint-measurement inversion and nonclassicality tests.
///
/// Grids accept comma lists, `start:stop:count` and expressions with `pi`
/// and `sqrt(…)`, e.g. `--theta 0:pi/2:5` or `--t2 1/sqrt(2)`.
#[derive(Parser, Debug)]
#[command(name = "jointstat", version)]
struct Cli {
    /// Command to run; may come from the config file instead.
    #[arg(value_enum)]
    command: Option<CommandName>,

    /// JSON file with the same fields as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// POVM sharpness η (grid).
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    /// Bloch vector length |s| (grid).
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// Beam-splitter transmissivity t² (grid).
    #[arg(long, allow_hyphen_values = true)]
    t2: Option<String>,
    /// Local-oscillator phase θ for cv commands; polar angle of the photon state for eightport.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Thermal photon number n̄ (grid).
    #[arg(long, allow_hyphen_values = true)]
    nbar: Option<String>,
    /// Azimuth φ of the photon state (eightport).
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Coherent amplitude, X quadrature.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Coherent amplitude, Y quadrature.
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<String>,
    /// Number of Monte Carlo samples N.
    #[arg(long)]
    samples: Option<u64>,
    /// RNG seed; required by sampling commands.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Fibonacci sphere directions in the separability LP.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Separability tolerance on the largest entry mismatch.
    #[arg(long)]
    tol: Option<f64>,
    /// Bootstrap resamples for cv-estimate standard errors.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Samples CSV to estimate from instead of simulating.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and sampling.
    #[arg(long)]
    threads: Option<usize>,
}

impl Cli {
    fn run_config(&self) -> RunConfig {
        let grid = |v: &Option<String>| v.clone().map(RangeSpec::Expr);
        RunConfig {
            command: self.command,
            eta: grid(&self.eta),
            s: grid(&self.s),
            t2: grid(&self.t2),
            theta: grid(&self.theta),
            nbar: grid(&self.nbar),
            phi: grid(&self.phi),
            x0: grid(&self.x0),
            y0: grid(&self.y0),
            samples: self.samples,
            seed: self.seed,
            grid_n: self.grid_n,
            tol: self.tol,
            bootstrap: self.bootstrap,
            input: self.input.clone(),
            out: self.out.clone(),
            format: self.format,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    Ok(base.overlay(cli.run_config()))
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let report = pool.install(|| commands::run(&cfg))?;

    let format = cfg.format.unwrap_or_default();
    let written = match &cfg.out {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            report.write(format, &mut w)?;
            w.flush()
        }),
        None => {
            let mut w = io::stdout().lock();
            report.write(format, &mut w).and_then(|_| w.flush())
        }
    };
    written.map_err(|e| Failure::Config(format!("writing output: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("jointstat: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("jointstat: numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

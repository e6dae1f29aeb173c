//! `csfq`: spectra, coherence experiments, gate calibration and randomized
//! benchmarking of a capacitively shunted flux qubit from the command line.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Experiment, Globals};
use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "csfq", version, about = "C-shunt flux qubit simulator")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Skip the readout confusion matrix.
    #[arg(long, global = true)]
    ideal_readout: bool,
    /// Calibration record from a previous `calibrate` run.
    #[arg(long, global = true, value_name = "PATH")]
    cal_file: Option<PathBuf>,
    /// Write the pulse program of every native gate to pulses.json.
    #[arg(long, global = true)]
    dump_pulses: bool,
    /// Write the Pauli transfer matrix and leakage of every native gate to channels.json.
    #[arg(long, global = true)]
    dump_channel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transition frequencies over a flux grid.
    #[command(alias = "spectrum")]
    Sweep,
    /// Virtual T1, Ramsey or echo measurement with a fit.
    Coherence {
        #[arg(value_enum)]
        experiment: Experiment,
    },
    /// Rabi, error-amplification and DRAG calibration of the native gates.
    Calibrate,
    /// Reference and optionally interleaved randomized benchmarking.
    Rb {
        /// Gate to interleave, e.g. xhalf, x, yhalf.
        #[arg(long, value_name = "GATE")]
        interleave: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let g = Globals {
        seed: cli.seed,
        out: cli.out,
        ideal_readout: cli.ideal_readout,
        cal_file: cli.cal_file,
        dump_pulses: cli.dump_pulses,
        dump_channel: cli.dump_channel,
    };
    match cli.command {
        Command::Sweep => commands::sweep(&cfg, &g),
        Command::Coherence { experiment } => commands::coherence(&cfg, &g, experiment),
        Command::Calibrate => commands::calibrate_cmd(&cfg, &g),
        Command::Rb { interleave } => commands::rb(&cfg, &g, interleave.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

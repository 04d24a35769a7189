//! Single binary over the tracking post-processing toolkit: simulate
//! drift scenes, run MBPP or DBPP over candidate streams, generate
//! training pairs, evaluate trajectories, and merge reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format/config error.
//! Log verbosity is controlled by `RUST_LOG`.

mod commands;
mod config;
mod report;

use clap::{Parser, Subcommand};
use commands::track::Mode;
use config::RunConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "trackpost",
    version,
    about = "Motion-gated post-processing toolkit for single-object trackers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic similar-object scenes (candidate stream + ground truth)
    Simulate {
        /// TOML run config; defaults are used when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Override the scene seed
        #[arg(long)]
        seed: Option<u64>,
        /// Generate this many scenes (seeds counting up), one subdirectory each
        #[arg(long, default_value_t = 1)]
        batch: usize,
        /// Print the resolved config and exit
        #[arg(long)]
        print_config: bool,
    },
    /// Run post-processing over a candidate stream and write a trajectory
    Track {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Candidate-stream file (observation or response-frame records)
        #[arg(long)]
        stream: PathBuf,
        /// mbpp (motion-gated relocation) or dbpp (max-response baseline)
        #[arg(long, value_enum)]
        mode: Mode,
        /// Trajectory output file ("x,y,w,h" per line)
        #[arg(long)]
        out: PathBuf,
        /// Override the drift gate
        #[arg(long)]
        conf: Option<f64>,
        /// Write per-frame decision diagnostics (JSON lines, mbpp only)
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        #[arg(long)]
        print_config: bool,
    },
    /// Evaluate trajectories against ground truth (files or directories)
    Eval {
        /// Trajectory file, or directory of trajectory files
        #[arg(long)]
        traj: PathBuf,
        /// Ground-truth file, or directory matched by file name
        #[arg(long)]
        gt: PathBuf,
        /// Report output (JSON)
        #[arg(long)]
        out: PathBuf,
        /// Subset file (TOML, [[subset]] tables) for attribute breakdown
        #[arg(long)]
        subsets: Option<PathBuf>,
        /// Directory for per-sequence curve CSVs
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Sequence name when evaluating a single file (default: file stem)
        #[arg(long)]
        name: Option<String>,
    },
    /// Build template/search training pairs from a detection manifest
    Pairgen {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Detection manifest (JSON lines)
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for pair PNGs and pairs.jsonl
        #[arg(long)]
        out: PathBuf,
        /// Number of pairs to draw
        #[arg(long)]
        epoch_size: usize,
        /// Scheduler seed
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        print_config: bool,
    },
    /// Merge evaluation reports into a comparison table with deltas
    Report {
        /// Report files; the first is the baseline for delta columns
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Merged comparison output (JSON)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-sequence CSV output
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            batch,
            print_config,
        } => {
            let config = RunConfig::load(config.as_deref())?;
            if print_config {
                print!("{}", config.to_toml());
                return Ok(());
            }
            commands::simulate::run(commands::simulate::Args {
                config,
                out,
                seed,
                batch,
            })
        }
        Command::Track {
            config,
            stream,
            mode,
            out,
            conf,
            diagnostics,
            print_config,
        } => {
            let mut config = RunConfig::load(config.as_deref())?;
            if let Some(conf) = conf {
                config.mbpp.conf = conf;
                config.validate()?;
            }
            if print_config {
                print!("{}", config.to_toml());
                return Ok(());
            }
            commands::track::run(commands::track::Args {
                config,
                stream,
                mode,
                out,
                diagnostics,
            })
        }
        Command::Eval {
            traj,
            gt,
            out,
            subsets,
            curves,
            name,
        } => commands::evaluate::run(commands::evaluate::Args {
            traj,
            gt,
            out,
            subsets,
            curves,
            name,
        }),
        Command::Pairgen {
            config,
            manifest,
            out,
            epoch_size,
            seed,
            print_config,
        } => {
            let config = RunConfig::load(config.as_deref())?;
            if print_config {
                print!("{}", config.to_toml());
                return Ok(());
            }
            commands::pairs::run(commands::pairs::Args {
                config,
                manifest,
                out,
                epoch_size,
                seed,
            })
        }
        Command::Report { inputs, out, csv } => {
            commands::report::run(commands::report::Args { inputs, out, csv })
        }
    }
}

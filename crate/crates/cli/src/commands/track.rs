//! `trackpost track`: run motion-gated or detection-only post-processing
//! over a candidate stream and write the trajectory.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use std::io::Write;
use std::path::PathBuf;
use trackpost::mbpp;
use trackpost::simulator;
use trackpost::stream::{self, StreamReadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Mbpp,
    Dbpp,
}

pub struct Args {
    pub config: RunConfig,
    pub stream: PathBuf,
    pub mode: Mode,
    pub out: PathBuf,
    pub diagnostics: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let options = StreamReadOptions {
        candidates: args.config.candidates.n,
        nms_threshold: args.config.candidates.nms_threshold,
    };
    let parsed = stream::read_stream_from_path(&args.stream, &options)
        .with_context(|| format!("cannot read stream {}", args.stream.display()))?;

    let trajectory = match args.mode {
        Mode::Dbpp => {
            if let Some(path) = &args.diagnostics {
                log::warn!("--diagnostics ignored in dbpp mode ({})", path.display());
            }
            simulator::dbpp_trajectory(&parsed.header.init_box, &parsed.observations)
        }
        Mode::Mbpp => {
            let filter = args.config.filter.build()?;
            let (trajectory, diagnostics) = mbpp::run_sequence(
                &parsed.observations,
                &parsed.header.init_box,
                args.config.mbpp,
                filter,
            )?;
            if let Some(path) = &args.diagnostics {
                let mut file = std::io::BufWriter::new(
                    std::fs::File::create(path)
                        .with_context(|| format!("cannot write {}", path.display()))?,
                );
                for diag in &diagnostics {
                    writeln!(file, "{}", serde_json::to_string(diag)?)?;
                }
            }
            trajectory
        }
    };

    stream::write_trajectory_to_path(&args.out, &trajectory)?;
    log::info!(
        "wrote {} ({} frames, mode {:?})",
        args.out.display(),
        trajectory.len(),
        args.mode
    );
    Ok(())
}

//! `trackpost report`: merge evaluation reports into a comparison table
//! with delta columns against the first input.

use crate::report::{self, EvalReport};
use anyhow::{bail, Result};
use std::path::PathBuf;

pub struct Args {
    pub inputs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    if args.inputs.is_empty() {
        bail!("report needs at least one input");
    }
    let mut labels = Vec::new();
    let mut reports = Vec::new();
    for path in &args.inputs {
        labels.push(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        );
        reports.push(EvalReport::load(path)?);
    }

    let comparison = report::compare(labels, &reports);
    print!("{}", report::render_table(&comparison));

    if let Some(path) = &args.out {
        let text = serde_json::to_string_pretty(&comparison).expect("comparison serializes");
        std::fs::write(path, text + "\n")?;
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, report::render_csv(&comparison))?;
    }
    Ok(())
}

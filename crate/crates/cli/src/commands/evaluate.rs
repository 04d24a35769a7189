//! `trackpost eval`: OPE metrics for one sequence or a directory of
//! sequences, with optional subset breakdown and curve dumps.

use crate::report::EvalReport;
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use trackpost::eval::{self, EvalCurve, SequenceSummary};
use trackpost::stream;

pub struct Args {
    pub traj: PathBuf,
    pub gt: PathBuf,
    pub out: PathBuf,
    pub subsets: Option<PathBuf>,
    pub curves: Option<PathBuf>,
    pub name: Option<String>,
}

pub fn run(args: Args) -> Result<()> {
    let pairs = collect_pairs(&args)?;

    let results: Vec<(SequenceSummary, [EvalCurve; 3])> = pairs
        .par_iter()
        .map(|(name, traj_path, gt_path)| evaluate_one(name, traj_path, gt_path))
        .collect::<Result<_>>()?;

    if let Some(dir) = &args.curves {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create curve directory {}", dir.display()))?;
        for (summary, curves) in &results {
            for (suffix, curve) in ["success", "precision", "norm_precision"]
                .iter()
                .zip(curves)
            {
                let path = dir.join(format!("{}_{suffix}.csv", summary.name));
                write_curve(&path, curve)?;
            }
        }
    }

    let sequences: Vec<SequenceSummary> = results.into_iter().map(|(s, _)| s).collect();

    let subset_report = match &args.subsets {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read subset file {}", path.display()))?;
            let specs = eval::parse_subsets(&text)?;
            Some(eval::attribute_report(&sequences, &specs)?)
        }
    };

    let report = EvalReport::new(sequences, subset_report.as_ref());
    report.save(&args.out)?;
    log::info!(
        "wrote {} ({} sequences, mean AUC {:.4})",
        args.out.display(),
        report.total_sequences,
        report.global.auc
    );
    Ok(())
}

/// Either a single (traj file, gt file) pair or two directories matched by
/// file name.
fn collect_pairs(args: &Args) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    if args.traj.is_dir() != args.gt.is_dir() {
        bail!(
            "--traj and --gt must both be files or both directories ({} vs {})",
            args.traj.display(),
            args.gt.display()
        );
    }
    if !args.traj.is_dir() {
        let name = match &args.name {
            Some(name) => name.clone(),
            None => stem(&args.traj),
        };
        return Ok(vec![(name, args.traj.clone(), args.gt.clone())]);
    }

    let mut pairs = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&args.traj)
        .with_context(|| format!("cannot list {}", args.traj.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for traj_path in entries.into_iter().filter(|p| p.is_file()) {
        let file_name = traj_path.file_name().expect("file has a name");
        let gt_path = args.gt.join(file_name);
        if !gt_path.is_file() {
            bail!(
                "no ground truth for {}: {} missing",
                traj_path.display(),
                gt_path.display()
            );
        }
        pairs.push((stem(&traj_path), traj_path, gt_path));
    }
    if pairs.is_empty() {
        bail!("no trajectory files found in {}", args.traj.display());
    }
    Ok(pairs)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn evaluate_one(
    name: &str,
    traj_path: &Path,
    gt_path: &Path,
) -> Result<(SequenceSummary, [EvalCurve; 3])> {
    let traj = stream::read_trajectory_from_path(traj_path)
        .with_context(|| format!("cannot read trajectory {}", traj_path.display()))?;
    let gt = stream::read_trajectory_from_path(gt_path)
        .with_context(|| format!("cannot read ground truth {}", gt_path.display()))?;

    let success = eval::success_curve(&traj, &gt)?;
    let precision = eval::precision_curve(&traj, &gt)?;
    let (norm, skipped) = eval::norm_precision_curve(&traj, &gt)?;
    if skipped > 0 {
        log::warn!("{name}: skipped {skipped} degenerate ground-truth frames in norm precision");
    }
    let summary = SequenceSummary {
        name: name.to_string(),
        frames: traj.len(),
        auc: success.summary,
        precision: precision.summary,
        norm_precision: norm.summary,
    };
    Ok((summary, [success, precision, norm]))
}

fn write_curve(path: &Path, curve: &EvalCurve) -> Result<()> {
    let mut text = String::from("threshold,value\n");
    for (t, v) in curve.thresholds.iter().zip(&curve.values) {
        text.push_str(&format!("{t},{v}\n"));
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

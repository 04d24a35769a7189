//! One-pass-evaluation metrics: success/AUC, precision, normalized
//! precision, plus attribute-subset reporting.
//!
//! Conventions (normative for this toolkit, following the OTB/TrackingNet
//! lineage):
//! - success: 101 thresholds 0.00..=1.00 step 0.01, a frame passes when
//!   `overlap > t` (strict); AUC is the mean of the curve values.
//! - precision: 51 thresholds 0..=50 px step 1, a frame passes when
//!   `center error <= t`; P is the value at 20 px.
//! - normalized precision: center error scaled per-axis by the ground-truth
//!   box size, 101 thresholds 0.0..=0.5 step 0.005, `error <= t`; P-Norm is
//!   the mean of the curve values. Frames with a degenerate ground-truth
//!   box are skipped and counted.
//!
//! Frame 0 (the init frame) participates in the metrics.

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use serde::{Deserialize, Serialize};

/// Threshold-indexed curve with its scalar summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    /// AUC for success and norm-precision, the 20 px value for precision.
    pub summary: f64,
}

/// Named list of sequences forming one attribute subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub name: String,
    pub sequences: Vec<String>,
}

/// The three OPE summaries for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSummary {
    pub name: String,
    pub frames: usize,
    pub auc: f64,
    pub precision: f64,
    pub norm_precision: f64,
}

/// Mean AUC / P / P-Norm over a set of sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub auc: f64,
    pub precision: f64,
    pub norm_precision: f64,
}

/// Per-subset means together with the complement-subset means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetRow {
    pub name: String,
    pub sequences: usize,
    pub mean: MetricTriple,
    pub complement_sequences: usize,
    pub complement_mean: MetricTriple,
}

/// Subset breakdown over a set of per-sequence results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeReport {
    pub total_sequences: usize,
    pub global: MetricTriple,
    pub subsets: Vec<SubsetRow>,
}

fn check_lengths(traj: &[BBox], gt: &[BBox]) -> Result<()> {
    if traj.len() != gt.len() {
        return Err(Error::LengthMismatch {
            traj: traj.len(),
            gt: gt.len(),
        });
    }
    if traj.is_empty() {
        return Err(Error::config("cannot evaluate an empty trajectory"));
    }
    Ok(())
}

fn center_error(a: &BBox, b: &BBox) -> f64 {
    let (acx, acy) = a.center();
    let (bcx, bcy) = b.center();
    ((acx - bcx).powi(2) + (acy - bcy).powi(2)).sqrt()
}

/// Overlap-threshold success curve; summary is the AUC.
pub fn success_curve(traj: &[BBox], gt: &[BBox]) -> Result<EvalCurve> {
    check_lengths(traj, gt)?;
    let overlaps: Vec<f64> = traj.iter().zip(gt).map(|(t, g)| iou(t, g)).collect();
    let thresholds: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let n = overlaps.len() as f64;
    let values: Vec<f64> = thresholds
        .iter()
        .map(|&t| overlaps.iter().filter(|&&o| o > t).count() as f64 / n)
        .collect();
    let summary = values.iter().sum::<f64>() / values.len() as f64;
    Ok(EvalCurve {
        thresholds,
        values,
        summary,
    })
}

/// Center-error precision curve; summary is the value at 20 px.
pub fn precision_curve(traj: &[BBox], gt: &[BBox]) -> Result<EvalCurve> {
    check_lengths(traj, gt)?;
    let errors: Vec<f64> = traj.iter().zip(gt).map(|(t, g)| center_error(t, g)).collect();
    let thresholds: Vec<f64> = (0..=50).map(|i| i as f64).collect();
    let n = errors.len() as f64;
    let values: Vec<f64> = thresholds
        .iter()
        .map(|&t| errors.iter().filter(|&&e| e <= t).count() as f64 / n)
        .collect();
    let summary = values[20];
    Ok(EvalCurve {
        thresholds,
        values,
        summary,
    })
}

/// Size-normalized precision curve; summary is the AUC over [0, 0.5].
/// Returns the curve and the number of frames skipped for degenerate
/// ground-truth boxes.
pub fn norm_precision_curve(traj: &[BBox], gt: &[BBox]) -> Result<(EvalCurve, usize)> {
    check_lengths(traj, gt)?;
    let mut errors = Vec::with_capacity(traj.len());
    let mut skipped = 0usize;
    for (t, g) in traj.iter().zip(gt) {
        if g.is_degenerate() {
            skipped += 1;
            continue;
        }
        let (tcx, tcy) = t.center();
        let (gcx, gcy) = g.center();
        let dx = (tcx - gcx) / g.w;
        let dy = (tcy - gcy) / g.h;
        errors.push((dx * dx + dy * dy).sqrt());
    }
    if errors.is_empty() {
        return Err(Error::config(
            "every ground-truth box is degenerate; norm precision undefined",
        ));
    }
    let thresholds: Vec<f64> = (0..=100).map(|i| i as f64 * 0.005).collect();
    let n = errors.len() as f64;
    let values: Vec<f64> = thresholds
        .iter()
        .map(|&t| errors.iter().filter(|&&e| e <= t).count() as f64 / n)
        .collect();
    let summary = values.iter().sum::<f64>() / values.len() as f64;
    Ok((
        EvalCurve {
            thresholds,
            values,
            summary,
        },
        skipped,
    ))
}

/// All three summaries for one sequence.
pub fn evaluate_sequence(name: &str, traj: &[BBox], gt: &[BBox]) -> Result<SequenceSummary> {
    let success = success_curve(traj, gt)?;
    let precision = precision_curve(traj, gt)?;
    let (norm, _) = norm_precision_curve(traj, gt)?;
    Ok(SequenceSummary {
        name: name.to_string(),
        frames: traj.len(),
        auc: success.summary,
        precision: precision.summary,
        norm_precision: norm.summary,
    })
}

fn mean_triple(rows: &[&SequenceSummary]) -> MetricTriple {
    let n = rows.len() as f64;
    if rows.is_empty() {
        return MetricTriple {
            auc: 0.0,
            precision: 0.0,
            norm_precision: 0.0,
        };
    }
    MetricTriple {
        auc: rows.iter().map(|r| r.auc).sum::<f64>() / n,
        precision: rows.iter().map(|r| r.precision).sum::<f64>() / n,
        norm_precision: rows.iter().map(|r| r.norm_precision).sum::<f64>() / n,
    }
}

/// Per-subset and complement means over per-sequence results. Every subset
/// sequence must exist in `results`.
pub fn attribute_report(
    results: &[SequenceSummary],
    subsets: &[SubsetSpec],
) -> Result<AttributeReport> {
    let all: Vec<&SequenceSummary> = results.iter().collect();
    let global = mean_triple(&all);

    let mut rows = Vec::with_capacity(subsets.len());
    for subset in subsets {
        if subset.sequences.is_empty() {
            return Err(Error::config(format!("subset '{}' is empty", subset.name)));
        }
        let mut members = Vec::new();
        for name in &subset.sequences {
            let found = results.iter().find(|r| &r.name == name).ok_or_else(|| {
                Error::UnknownSequence {
                    subset: subset.name.clone(),
                    sequence: name.clone(),
                }
            })?;
            members.push(found);
        }
        let complement: Vec<&SequenceSummary> = results
            .iter()
            .filter(|r| !subset.sequences.contains(&r.name))
            .collect();
        rows.push(SubsetRow {
            name: subset.name.clone(),
            sequences: members.len(),
            mean: mean_triple(&members),
            complement_sequences: complement.len(),
            complement_mean: mean_triple(&complement),
        });
    }

    Ok(AttributeReport {
        total_sequences: results.len(),
        global,
        subsets: rows,
    })
}

#[derive(Deserialize)]
struct SubsetFile {
    subset: Vec<SubsetSpec>,
}

/// Parse a subset file: TOML with one or more `[[subset]]` tables.
pub fn parse_subsets(text: &str) -> Result<Vec<SubsetSpec>> {
    let file: SubsetFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
    for s in &file.subset {
        if s.sequences.is_empty() {
            return Err(Error::config(format!("subset '{}' is empty", s.name)));
        }
    }
    Ok(file.subset)
}

/// The bundled similar-object subset of the UOT100 benchmark.
pub fn uot100_similar_subsets() -> Vec<SubsetSpec> {
    parse_subsets(include_str!("../data/uot100_similar_subsets.toml"))
        .expect("bundled subset file parses")
}

//! Evaluation report document and report merging.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use trackpost::eval::{AttributeReport, MetricTriple, SequenceSummary};

/// The conventions header written into every report.
pub const CONVENTIONS: &str = "success: overlap > t over 101 thresholds on [0,1], AUC = curve mean; \
     precision: center error <= t over 0..=50 px, P = value at 20 px; \
     norm-precision: per-axis size-normalized center error <= t over [0,0.5], P-Norm = curve mean";

/// Output of `trackpost eval`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: String,
    pub conventions: String,
    pub total_sequences: usize,
    pub global: MetricTriple,
    pub sequences: Vec<SequenceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets: Option<SerializedAttributeReport>,
}

/// AttributeReport in an owned, deserializable form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SerializedAttributeReport {
    pub global: MetricTriple,
    pub subsets: Vec<SubsetSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub name: String,
    pub sequences: usize,
    pub mean: MetricTriple,
    pub complement_sequences: usize,
    pub complement_mean: MetricTriple,
}

impl From<&AttributeReport> for SerializedAttributeReport {
    fn from(report: &AttributeReport) -> Self {
        Self {
            global: report.global,
            subsets: report
                .subsets
                .iter()
                .map(|row| SubsetSummary {
                    name: row.name.clone(),
                    sequences: row.sequences,
                    mean: row.mean,
                    complement_sequences: row.complement_sequences,
                    complement_mean: row.complement_mean,
                })
                .collect(),
        }
    }
}

impl EvalReport {
    pub fn new(sequences: Vec<SequenceSummary>, subsets: Option<&AttributeReport>) -> Self {
        let n = sequences.len() as f64;
        let global = MetricTriple {
            auc: sequences.iter().map(|s| s.auc).sum::<f64>() / n,
            precision: sequences.iter().map(|s| s.precision).sum::<f64>() / n,
            norm_precision: sequences.iter().map(|s| s.norm_precision).sum::<f64>() / n,
        };
        Self {
            kind: "ope-report".into(),
            conventions: CONVENTIONS.into(),
            total_sequences: sequences.len(),
            global,
            sequences,
            subsets: subsets.map(SerializedAttributeReport::from),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read report {}", path.display()))?;
        let report: EvalReport = serde_json::from_str(&text)
            .with_context(|| format!("invalid report {}", path.display()))?;
        if report.kind != "ope-report" {
            bail!("{} is not an ope-report document", path.display());
        }
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write report {}", path.display()))?;
        Ok(())
    }
}

/// Side-by-side comparison of several reports; deltas are relative to the
/// first input (the baseline).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub kind: String,
    pub inputs: Vec<String>,
    pub global: Vec<MetricTriple>,
    /// `global[i] - global[0]`, entry 0 included as zeros.
    pub delta_vs_first: Vec<MetricTriple>,
    pub sequences: Vec<SequenceComparison>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceComparison {
    pub name: String,
    /// One triple per input; None when the input lacks the sequence.
    pub per_input: Vec<Option<MetricTriple>>,
}

pub fn compare(labels: Vec<String>, reports: &[EvalReport]) -> ComparisonReport {
    let base = reports[0].global;
    let global: Vec<MetricTriple> = reports.iter().map(|r| r.global).collect();
    let delta_vs_first = global
        .iter()
        .map(|g| MetricTriple {
            auc: g.auc - base.auc,
            precision: g.precision - base.precision,
            norm_precision: g.norm_precision - base.norm_precision,
        })
        .collect();

    let mut names: Vec<String> = Vec::new();
    for report in reports {
        for sequence in &report.sequences {
            if !names.contains(&sequence.name) {
                names.push(sequence.name.clone());
            }
        }
    }
    let sequences = names
        .into_iter()
        .map(|name| SequenceComparison {
            per_input: reports
                .iter()
                .map(|r| {
                    r.sequences.iter().find(|s| s.name == name).map(|s| MetricTriple {
                        auc: s.auc,
                        precision: s.precision,
                        norm_precision: s.norm_precision,
                    })
                })
                .collect(),
            name,
        })
        .collect();

    ComparisonReport {
        kind: "comparison-report".into(),
        inputs: labels,
        global,
        delta_vs_first,
        sequences,
    }
}

/// Render the comparison as an aligned text table (percent scale).
pub fn render_table(report: &ComparisonReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "input", "AUC", "P", "P-Norm", "dAUC", "dP", "dP-Norm"
    ));
    for ((label, g), d) in report
        .inputs
        .iter()
        .zip(&report.global)
        .zip(&report.delta_vs_first)
    {
        out.push_str(&format!(
            "{:<24} {:>8.2} {:>8.2} {:>8.2} {:>+8.2} {:>+8.2} {:>+8.2}\n",
            label,
            g.auc * 100.0,
            g.precision * 100.0,
            g.norm_precision * 100.0,
            d.auc * 100.0,
            d.precision * 100.0,
            d.norm_precision * 100.0,
        ));
    }
    out
}

/// Per-sequence CSV: one row per sequence, AUC/P/P-Norm per input.
pub fn render_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("sequence");
    for label in &report.inputs {
        out.push_str(&format!(",{label}_auc,{label}_p,{label}_pnorm"));
    }
    out.push('\n');
    for sequence in &report.sequences {
        out.push_str(&sequence.name);
        for triple in &sequence.per_input {
            match triple {
                Some(t) => out.push_str(&format!(
                    ",{:.6},{:.6},{:.6}",
                    t.auc, t.precision, t.norm_precision
                )),
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Metric, MetricSummary, Variant};
use crate::error::{Error, Result};

/// One (embedding, model, variant) cell of the benchmark matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub embedding: String,
    pub model: String,
    pub variant: Variant,
    pub summary: MetricSummary,
}

pub const MATRIX_CSV_HEADER: [&str; 7] = ["embedding", "model", "variant", "metric", "mean", "sd", "n"];

/// Long format: one row per (cell, metric), in the given cell order.
pub fn write_matrix_csv(path: &Path, cells: &[MatrixCell]) -> Result<()> {
    let file = crate::graph::io::create(path)?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| Error::Serde(format!("{}: {e}", path.display()));
    w.write_record(MATRIX_CSV_HEADER).map_err(csv_err)?;
    for cell in cells {
        for metric in Metric::ALL {
            w.write_record([
                cell.embedding.as_str(),
                cell.model.as_str(),
                cell.variant.as_str(),
                metric.as_str(),
                &cell.summary.mean_of(metric).to_string(),
                &cell.summary.sd_of(metric).to_string(),
                &cell.summary.n.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn first_seen<'a>(it: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for v in it {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Embeddings as rows; for each metric a block of model columns. Cells of
/// `variant` only; missing cells print as `-`.
pub fn render_markdown(cells: &[MatrixCell], variant: Variant) -> String {
    let cells: Vec<&MatrixCell> = cells.iter().filter(|c| c.variant == variant).collect();
    let embeddings = first_seen(cells.iter().map(|c| c.embedding.as_str()));
    let models = first_seen(cells.iter().map(|c| c.model.as_str()));
    let mut out = String::new();
    let mut header = vec!["Embedding".to_string()];
    for metric in Metric::ALL {
        for m in &models {
            header.push(format!("{} {m}", metric.label()));
        }
    }
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for e in &embeddings {
        let mut row = vec![e.to_string()];
        for metric in Metric::ALL {
            for m in &models {
                let v = cells
                    .iter()
                    .find(|c| c.embedding == *e && c.model == *m)
                    .map(|c| format!("{:.3}", c.summary.mean_of(metric)))
                    .unwrap_or_else(|| "-".into());
                row.push(v);
            }
        }
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out
}

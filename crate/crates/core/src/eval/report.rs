//! Aggregated benchmark metrics as TSV or an aligned text table.

use std::fmt::Write as _;

use serde::Serialize;

pub const CUTOFFS: [usize; 3] = [10, 20, 30];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Metric {
    #[serde(rename = "mAP")]
    Map,
    #[serde(rename = "Recall")]
    Recall,
    #[serde(rename = "nDCG")]
    Ndcg,
}

impl Metric {
    /// Column order of the report.
    pub const ALL: [Metric; 3] = [Metric::Map, Metric::Recall, Metric::Ndcg];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Map => "mAP",
            Metric::Recall => "Recall",
            Metric::Ndcg => "nDCG",
        }
    }

    fn index(self) -> usize {
        match self {
            Metric::Map => 0,
            Metric::Recall => 1,
            Metric::Ndcg => 2,
        }
    }
}

/// Values indexed by metric, then cutoff position in [`CUTOFFS`].
pub type MetricGrid = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub values: MetricGrid,
    /// Instances that produced a ranking.
    pub evaluated: usize,
    /// Instances whose retrieval failed; excluded from the means.
    pub failed: usize,
}

impl ReportRow {
    pub fn get(&self, metric: Metric, cutoff: usize) -> Option<f64> {
        let c = CUTOFFS.iter().position(|&x| x == cutoff)?;
        Some(self.values[metric.index()][c])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub instance_count: usize,
    pub rows: Vec<ReportRow>,
}

impl MetricsReport {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn get(&self, label: &str, metric: Metric, cutoff: usize) -> Option<f64> {
        self.row(label)?.get(metric, cutoff)
    }

    fn header() -> Vec<String> {
        let mut h = vec!["Retriever".to_string()];
        for m in Metric::ALL {
            for c in CUTOFFS {
                h.push(format!("{}@{c}", m.label()));
            }
        }
        h.push("evaluated".into());
        h.push("failed".into());
        h
    }

    fn cells(row: &ReportRow) -> Vec<String> {
        let mut cells = vec![row.label.clone()];
        for m in Metric::ALL {
            for v in row.values[m.index()] {
                cells.push(format!("{v:.3}"));
            }
        }
        cells.push(row.evaluated.to_string());
        cells.push(row.failed.to_string());
        cells
    }

    pub fn to_tsv(&self) -> String {
        let mut out = Self::header().join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&Self::cells(row).join("\t"));
            out.push('\n');
        }
        out
    }

    /// Aligned table: one row per retriever, metric groups separated by `|`.
    pub fn to_table(&self) -> String {
        let header = Self::header();
        let body: Vec<Vec<String>> = self.rows.iter().map(Self::cells).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                body.iter()
                    .map(|r| r[i].len())
                    .chain([header[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let render = |cells: &[String]| {
            let mut line = String::new();
            for (i, cell) in cells.iter().enumerate() {
                if i == 0 {
                    let _ = write!(line, "{cell:<w$}", w = widths[0]);
                } else {
                    let sep = if i > 1 && (i - 1) % CUTOFFS.len() == 0 { " | " } else { "  " };
                    let _ = write!(line, "{sep}{cell:>w$}", w = widths[i]);
                }
            }
            line.trim_end().to_string()
        };
        let head = render(&header);
        let mut out = format!("{head}\n{}\n", "-".repeat(head.len()));
        for row in &body {
            out.push_str(&render(row));
            out.push('\n');
        }
        let _ = writeln!(out, "instances: {}", self.instance_count);
        out
    }
}

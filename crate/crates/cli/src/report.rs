//! Confusion-matrix evaluation of the color-space selector.

use std::fmt::Write as _;

use lumaswitch::colorspace::FeatureVector;
use lumaswitch::skinfilter::ColorSpaceId;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub file: String,
    pub features: FeatureVector,
    pub predicted: ColorSpaceId,
    #[serde(rename = "true")]
    pub truth: ColorSpaceId,
}

/// Rows are the true best space, columns the predicted one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub labels: [ColorSpaceId; 3],
    pub confusion: [[usize; 3]; 3],
    /// Share of each true class predicted correctly, in percent; `None` for
    /// classes absent from the manifest.
    pub per_class_percent: [Option<f64>; 3],
    pub overall_accuracy: f64,
    pub total: usize,
    pub records: Vec<EvalRecord>,
}

impl EvaluationReport {
    pub fn from_records(records: Vec<EvalRecord>) -> Self {
        let mut confusion = [[0usize; 3]; 3];
        for r in &records {
            confusion[r.truth.index()][r.predicted.index()] += 1;
        }
        let per_class_percent = std::array::from_fn(|i| {
            let row: usize = confusion[i].iter().sum();
            (row > 0).then(|| 100.0 * confusion[i][i] as f64 / row as f64)
        });
        let total = records.len();
        let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
        let overall_accuracy = if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        };
        Self {
            labels: ColorSpaceId::ALL,
            confusion,
            per_class_percent,
            overall_accuracy,
            total,
            records,
        }
    }

    /// Aligned text table: counts per cell, percent correct per row.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "confusion matrix (rows: true space, columns: predicted)"
        );
        let _ = write!(out, "{:<8}", "");
        for l in self.labels {
            let _ = write!(out, "{:>8}", l.name());
        }
        let _ = writeln!(out, "{:>11}", "correct");
        for (i, row) in self.confusion.iter().enumerate() {
            let _ = write!(out, "{:<8}", self.labels[i].name());
            for c in row {
                let _ = write!(out, "{c:>8}");
            }
            match self.per_class_percent[i] {
                Some(p) => {
                    let _ = writeln!(out, "{:>10.2}%", p);
                }
                None => {
                    let _ = writeln!(out, "{:>11}", "-");
                }
            }
        }
        let _ = writeln!(
            out,
            "overall accuracy: {:.2}% ({} images)",
            100.0 * self.overall_accuracy,
            self.total
        );
        out
    }
}

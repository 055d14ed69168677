//! Accuracy-matrix input for the statistics pipeline.
//!
//! CSV layout: a header row `classifier[,original],<attacker>...`, then one
//! row per classifier. The `original` column is optional; without it the
//! per-attacker Wilcoxon tests are skipped.

use std::path::Path;

use super::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix {
    pub classifiers: Vec<String>,
    pub attackers: Vec<String>,
    /// Per-classifier accuracy on unmodified data, aligned with `classifiers`.
    pub original: Option<Vec<f64>>,
    /// Rows = classifiers, columns = attackers.
    pub adversarial: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn new(
        classifiers: Vec<String>,
        attackers: Vec<String>,
        original: Option<Vec<f64>>,
        adversarial: Vec<Vec<f64>>,
    ) -> Result<Self, StatsError> {
        let n = classifiers.len();
        if adversarial.len() != n {
            return Err(StatsError::Shape(format!(
                "{n} classifiers but {} adversarial rows",
                adversarial.len()
            )));
        }
        if let Some(orig) = &original {
            if orig.len() != n {
                return Err(StatsError::Shape(format!(
                    "{n} classifiers but {} original accuracies",
                    orig.len()
                )));
            }
        }
        for (i, row) in adversarial.iter().enumerate() {
            if row.len() != attackers.len() {
                return Err(StatsError::Shape(format!(
                    "row {i} has {} entries for {} attackers",
                    row.len(),
                    attackers.len()
                )));
            }
        }
        Ok(AccuracyMatrix { classifiers, attackers, original, adversarial })
    }

    pub fn n_classifiers(&self) -> usize {
        self.classifiers.len()
    }

    pub fn n_attackers(&self) -> usize {
        self.attackers.len()
    }

    /// One attacker's accuracy column.
    pub fn column(&self, attacker_idx: usize) -> Vec<f64> {
        self.adversarial.iter().map(|row| row[attacker_idx]).collect()
    }

    pub fn read_csv(path: &Path) -> Result<Self, StatsError> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| {
            StatsError::Input(format!("{}: {e}", path.display()))
        })?;
        let headers = reader
            .headers()
            .map_err(|e| StatsError::Input(format!("{}: {e}", path.display())))?
            .clone();
        if headers.len() < 2 {
            return Err(StatsError::Input(
                "accuracy matrix needs a classifier column and at least one attacker".into(),
            ));
        }
        let has_original = headers.get(1) == Some("original");
        let attacker_start = if has_original { 2 } else { 1 };
        let attackers: Vec<String> =
            headers.iter().skip(attacker_start).map(str::to_string).collect();
        if attackers.is_empty() {
            return Err(StatsError::Input("no attacker columns".into()));
        }

        let mut classifiers = Vec::new();
        let mut original = if has_original { Some(Vec::new()) } else { None };
        let mut adversarial = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| StatsError::Input(format!("{}: {e}", path.display())))?;
            let parse = |field: &str| -> Result<f64, StatsError> {
                field.trim().parse::<f64>().map_err(|e| {
                    StatsError::Input(format!(
                        "{} row {}: bad accuracy `{field}`: {e}",
                        path.display(),
                        row_idx + 2
                    ))
                })
            };
            classifiers.push(record.get(0).unwrap_or("").to_string());
            if let Some(orig) = original.as_mut() {
                orig.push(parse(record.get(1).unwrap_or(""))?);
            }
            let row: Result<Vec<f64>, _> =
                record.iter().skip(attacker_start).map(parse).collect();
            adversarial.push(row?);
        }
        AccuracyMatrix::new(classifiers, attackers, original, adversarial)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), StatsError> {
        let mut out = String::from("classifier");
        if self.original.is_some() {
            out.push_str(",original");
        }
        for attacker in &self.attackers {
            out.push(',');
            out.push_str(attacker);
        }
        out.push('\n');
        for (i, name) in self.classifiers.iter().enumerate() {
            out.push_str(name);
            if let Some(orig) = &self.original {
                out.push_str(&format!(",{:?}", orig[i]));
            }
            for value in &self.adversarial[i] {
                out.push_str(&format!(",{value:?}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| {
            StatsError::Input(format!("write {}: {e}", path.display()))
        })
    }
}

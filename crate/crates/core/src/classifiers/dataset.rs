use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::label::Label;
use crate::store::FeatureRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Feature rows with their class labels. All rows share one dimension.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledDataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
    ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self, ClassifierError> {
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::with_ids(rows, labels, ids)
    }

    pub fn with_ids(
        rows: Vec<Vec<f64>>,
        labels: Vec<Label>,
        ids: Vec<String>,
    ) -> Result<Self, ClassifierError> {
        if rows.len() != labels.len() || ids.len() != rows.len() {
            return Err(ClassifierError::LabelCount(labels.len(), rows.len()));
        }
        if let Some(first) = rows.first().map(Vec::len) {
            if let Some(bad) = rows.iter().find(|r| r.len() != first) {
                return Err(ClassifierError::RaggedRows {
                    first,
                    other: bad.len(),
                });
            }
        }
        Ok(Self { rows, labels, ids })
    }

    /// Labelled records only; unlabelled rows are skipped.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a FeatureRecord>) -> Self {
        let mut out = Self::default();
        for r in records {
            if let Some(label) = r.label {
                out.rows.push(r.vector.values().to_vec());
                out.labels.push(label);
                out.ids.push(r.vector.source_id.clone());
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> {
        self.rows.iter().map(Vec::as_slice).zip(self.labels.iter().copied())
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }

    /// The only label present, if the set is non-empty and single-class.
    pub fn single_class(&self) -> Option<Label> {
        let first = *self.labels.first()?;
        self.labels.iter().all(|&l| l == first).then_some(first)
    }

    /// Applies `f` to every row, keeping labels and ids.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        Self {
            rows: self.rows.iter().map(|r| f(r)).collect(),
            labels: self.labels.clone(),
            ids: self.ids.clone(),
        }
    }
}

//! The fixed classifier grid and its tabular report.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    evaluate, train, BoostParams, ClassifierConfig, ClassifierError, Family, ForestParams,
    LabeledDataset, MetricsReport, SvmKernel, SvmParams,
};
use crate::label::Label;

/// k values of the published table; k = 1 appears only in the prose.
pub const GRID_K: [usize; 6] = [3, 5, 7, 11, 13, 15];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub classifier: String,
    pub setting: String,
    pub config: ClassifierConfig,
    /// Listed in the method description but absent from the results table.
    pub text_only: bool,
}

impl GridEntry {
    fn new(config: ClassifierConfig, setting: impl Into<String>, text_only: bool) -> Self {
        Self {
            classifier: config.family.name().to_string(),
            setting: setting.into(),
            config,
            text_only,
        }
    }
}

/// Configurations in table order: k-NN, SVM kernels, LDA, decision tree,
/// random forest, gradient boosting. With `include_k1` an extra k-NN row
/// (k = 1) is placed first and marked text-only.
pub fn standard_grid(seed: u64, include_k1: bool) -> Vec<GridEntry> {
    let mut out = Vec::new();
    if include_k1 {
        out.push(GridEntry::new(
            ClassifierConfig::new(Family::Knn { k: 1 }, seed),
            "k = 1",
            true,
        ));
    }
    for k in GRID_K {
        out.push(GridEntry::new(
            ClassifierConfig::new(Family::Knn { k }, seed),
            format!("k = {k}"),
            false,
        ));
    }
    for kernel in SvmKernel::ALL {
        out.push(GridEntry::new(
            ClassifierConfig::new(Family::Svm(SvmParams::with_kernel(kernel)), seed),
            kernel.name(),
            false,
        ));
    }
    out.push(GridEntry::new(ClassifierConfig::new(Family::Lda, seed), "", false));
    out.push(GridEntry::new(
        ClassifierConfig::new(Family::DecisionTree, seed),
        "",
        false,
    ));
    out.push(GridEntry::new(
        ClassifierConfig::new(Family::RandomForest(ForestParams::default()), seed),
        "",
        false,
    ));
    out.push(GridEntry::new(
        ClassifierConfig::new(Family::GBoost(BoostParams::default()), seed),
        "",
        false,
    ));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub entry: GridEntry,
    pub report: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub rows: Vec<GridRow>,
}

/// Trains and evaluates every entry. Entries run concurrently; each model
/// is trained single-threaded and the output keeps entry order.
pub fn run_grid(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    entries: &[GridEntry],
) -> Result<GridTable, ClassifierError> {
    let rows = entries
        .par_iter()
        .map(|entry| {
            let model = train(&entry.config, train_set)?;
            let report = evaluate(&model, test_set)?;
            Ok(GridRow {
                entry: entry.clone(),
                report,
            })
        })
        .collect::<Result<Vec<_>, ClassifierError>>()?;
    Ok(GridTable { rows })
}

impl GridTable {
    pub fn row(&self, classifier: &str, setting: &str) -> Option<&GridRow> {
        self.rows
            .iter()
            .find(|r| r.entry.classifier == classifier && r.entry.setting == setting)
    }

    /// Rows that belong to the published table (text-only rows excluded).
    pub fn table_rows(&self) -> impl Iterator<Item = &GridRow> {
        self.rows.iter().filter(|r| !r.entry.text_only)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "classifier,setting,class,precision,recall,f1_score,accuracy_pct,text_only\n",
        );
        for row in &self.rows {
            for label in Label::ALL {
                let m = row.report.class(label);
                let _ = writeln!(
                    out,
                    "{},{},{},{:.2},{:.2},{:.2},{},{}",
                    row.entry.classifier,
                    row.entry.setting,
                    label,
                    m.precision,
                    m.recall,
                    m.f1,
                    row.report.accuracy_percent(),
                    row.entry.text_only
                );
            }
        }
        out
    }

    /// Aligned plain-text rendering with the columns
    /// Classifiers | Classes | Precision | Recall | F1-score | Accuracy (%).
    pub fn render_text(&self) -> String {
        let name = |r: &GridRow| {
            let mut s = r.entry.classifier.clone();
            if !r.entry.setting.is_empty() {
                s.push(' ');
                s.push_str(&r.entry.setting);
            }
            if r.entry.text_only {
                s.push_str(" *");
            }
            s
        };
        let width = self
            .rows
            .iter()
            .map(|r| name(r).len())
            .max()
            .unwrap_or(0)
            .max("Classifiers".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<10}  {:>9}  {:>6}  {:>8}  {:>12}",
            "Classifiers", "Classes", "Precision", "Recall", "F1-score", "Accuracy (%)"
        );
        let _ = writeln!(out, "{}", "-".repeat(width + 57));
        for row in &self.rows {
            for (i, label) in Label::ALL.into_iter().enumerate() {
                let m = row.report.class(label);
                let (lead, acc) = if i == 0 {
                    (name(row), format!("{}%", row.report.accuracy_percent()))
                } else {
                    (String::new(), String::new())
                };
                let _ = writeln!(
                    out,
                    "{:<width$}  {:<10}  {:>9.2}  {:>6.2}  {:>8.2}  {:>12}",
                    lead, label, m.precision, m.recall, m.f1, acc
                );
            }
        }
        if self.rows.iter().any(|r| r.entry.text_only) {
            out.push_str("* not part of the published table\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = standard_grid(0, false);
        assert_eq!(g.len(), 14);
        assert_eq!(g[0].setting, "k = 3");
        assert_eq!(g[6].setting, "linear");
        assert_eq!(g[9].setting, "sigmoid");
        let tail: Vec<_> = g[10..].iter().map(|e| e.classifier.as_str()).collect();
        assert_eq!(tail, ["LDA", "Decision-Tree", "Random Forest", "Gboost"]);

        let with_k1 = standard_grid(0, true);
        assert_eq!(with_k1.len(), 15);
        assert!(with_k1[0].text_only);
        assert_eq!(with_k1.iter().filter(|e| !e.text_only).count(), 14);
    }
}

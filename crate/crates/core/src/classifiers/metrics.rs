use serde::{Deserialize, Serialize};

use super::{ClassifierError, LabeledDataset, TrainedModel};
use crate::label::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Nothing was predicted as this class, so precision is reported as 0.
    pub precision_undefined: bool,
}

/// Per-class precision/recall/F1 and overall accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: [ClassMetrics; 2],
    pub accuracy: f64,
    /// `confusion[actual][predicted]`, indexed Deepfake-2 = 0, Deepfake-3 = 1.
    pub confusion: [[usize; 2]; 2],
    pub total: usize,
}

impl MetricsReport {
    pub fn from_confusion(confusion: [[usize; 2]; 2]) -> Self {
        let total: usize = confusion.iter().flatten().sum();
        let correct = confusion[0][0] + confusion[1][1];
        let class = |c: usize| {
            let tp = confusion[c][c] as f64;
            let predicted = (confusion[0][c] + confusion[1][c]) as f64;
            let support = confusion[c][0] + confusion[c][1];
            let precision_undefined = predicted == 0.0;
            let precision = if precision_undefined { 0.0 } else { tp / predicted };
            let recall = if support == 0 { 0.0 } else { tp / support as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label: Label::from_index(c),
                precision,
                recall,
                f1,
                support,
                precision_undefined,
            }
        };
        Self {
            classes: [class(0), class(1)],
            accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
            confusion,
            total,
        }
    }

    pub fn class(&self, label: Label) -> &ClassMetrics {
        &self.classes[label.index()]
    }

    /// Accuracy as a whole percentage, rounded half away from zero.
    pub fn accuracy_percent(&self) -> u32 {
        (self.accuracy * 100.0).round() as u32
    }
}

pub fn evaluate(model: &TrainedModel, data: &LabeledDataset) -> Result<MetricsReport, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let mut confusion = [[0usize; 2]; 2];
    for (x, actual) in data.iter() {
        let predicted = model.predict(x)?;
        confusion[actual.index()][predicted.index()] += 1;
    }
    Ok(MetricsReport::from_confusion(confusion))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let r = MetricsReport::from_confusion([[100, 0], [0, 100]]);
        for c in &r.classes {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy_percent(), 100);
    }

    #[test]
    fn constant_predictor() {
        let r = MetricsReport::from_confusion([[100, 0], [100, 0]]);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.class(Label::Deepfake2).recall, 1.0);
        assert_eq!(r.class(Label::Deepfake3).recall, 0.0);
        assert!(r.class(Label::Deepfake3).precision_undefined);
        assert_eq!(r.class(Label::Deepfake3).precision, 0.0);
        assert_eq!(r.class(Label::Deepfake3).f1, 0.0);
    }

    #[test]
    fn random_forest_row_counts() {
        let r = MetricsReport::from_confusion([[76, 24], [14, 86]]);
        assert_eq!(r.accuracy_percent(), 81);
        assert_eq!(r.class(Label::Deepfake2).recall, 0.76);
        assert_eq!(r.class(Label::Deepfake3).recall, 0.86);
        assert_eq!(format!("{:.2}", r.class(Label::Deepfake2).precision), "0.84");
        assert_eq!(format!("{:.2}", r.class(Label::Deepfake3).precision), "0.78");
        assert_eq!(format!("{:.2}", r.class(Label::Deepfake2).f1), "0.80");
        assert_eq!(format!("{:.2}", r.class(Label::Deepfake3).f1), "0.82");
    }
}

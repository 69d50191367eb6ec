use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ClassifierError, LabeledDataset};
use crate::label::Label;

/// Relative ridge added to the pooled covariance diagonal.
const RIDGE: f64 = 1e-6;

/// Two-class Fisher discriminant with a shared (pooled) covariance.
///
/// Predicts Deepfake-3 when `weights . x + bias > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub class_means: [Vec<f64>; 2],
    pub weights: Vec<f64>,
    pub bias: f64,
    pub ridge: f64,
}

impl LdaModel {
    pub fn fit(data: &LabeledDataset) -> Result<Self, ClassifierError> {
        let d = data.dimension();
        let counts = data.class_counts();
        let mut means = [DVector::zeros(d), DVector::zeros(d)];
        for (row, label) in data.iter() {
            means[label.index()] += DVector::from_column_slice(row);
        }
        for c in 0..2 {
            means[c] /= counts[c] as f64;
        }

        let mut scatter = DMatrix::<f64>::zeros(d, d);
        for (row, label) in data.iter() {
            let centred = DVector::from_column_slice(row) - &means[label.index()];
            scatter.ger(1.0, &centred, &centred, 1.0);
        }
        let dof = if data.len() > 2 { data.len() - 2 } else { data.len() };
        let mut cov = scatter / dof as f64;
        let trace = cov.trace();
        let ridge = if trace > 0.0 {
            RIDGE * trace / d as f64
        } else {
            RIDGE
        };
        for i in 0..d {
            cov[(i, i)] += ridge;
        }

        let diff = &means[1] - &means[0];
        let chol = cov.cholesky().ok_or(ClassifierError::SingularCovariance)?;
        let w = chol.solve(&diff);
        let midpoint = (&means[0] + &means[1]) * 0.5;
        let prior = (counts[1] as f64 / counts[0] as f64).ln();
        let bias = -w.dot(&midpoint) + prior;

        Ok(Self {
            class_means: [
                means[0].iter().copied().collect(),
                means[1].iter().copied().collect(),
            ],
            weights: w.iter().copied().collect(),
            bias,
            ridge,
        })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        if self.decision(x) > 0.0 {
            Label::Deepfake3
        } else {
            Label::Deepfake2
        }
    }
}

use serde::{Deserialize, Serialize};

use super::tree::RegressionTree;
use super::LabeledDataset;
use crate::label::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
        }
    }
}

/// Binary logistic gradient boosting.
///
/// Each round fits a least-squares tree to the residuals `y - p` and sets
/// leaf values with one Newton step, `sum(r) / sum(p (1 - p))`. The raw
/// score starts at the log-odds of the Deepfake-3 prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoost {
    pub init_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl GradientBoost {
    pub fn fit(data: &LabeledDataset, params: &BoostParams) -> Self {
        let n = data.len();
        let y: Vec<f64> = data
            .labels()
            .iter()
            .map(|&l| if l == Label::Deepfake3 { 1.0 } else { 0.0 })
            .collect();
        let pos = y.iter().sum::<f64>();
        let init_score = (pos / (n as f64 - pos)).ln();
        let mut raw = vec![init_score; n];
        let mut trees = Vec::with_capacity(params.rounds);

        for _ in 0..params.rounds {
            let p: Vec<f64> = raw.iter().map(|&z| sigmoid(z)).collect();
            let residual: Vec<f64> = y.iter().zip(&p).map(|(y, p)| y - p).collect();
            let tree = RegressionTree::fit(data.rows(), &residual, params.max_depth, |idx| {
                let num: f64 = idx.iter().map(|&i| residual[i]).sum();
                let den: f64 = idx.iter().map(|&i| p[i] * (1.0 - p[i])).sum();
                if den.abs() < 1e-150 {
                    0.0
                } else {
                    num / den
                }
            });
            for (i, r) in raw.iter_mut().enumerate() {
                *r += params.learning_rate * tree.predict(data.row(i));
            }
            trees.push(tree);
        }
        Self {
            init_score,
            learning_rate: params.learning_rate,
            trees,
        }
    }

    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.init_score
            + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw_score(x))
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        if self.raw_score(x) > 0.0 {
            Label::Deepfake3
        } else {
            Label::Deepfake2
        }
    }
}

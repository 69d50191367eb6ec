use serde::{Deserialize, Serialize};

use super::{ClassifierError, LabeledDataset};
use crate::label::Label;

/// Stored training rows; prediction is an unweighted Euclidean majority vote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl KnnModel {
    pub fn fit(data: &LabeledDataset, k: usize) -> Result<Self, ClassifierError> {
        if k == 0 {
            return Err(ClassifierError::ZeroK);
        }
        Ok(Self {
            k,
            rows: data.rows().to_vec(),
            labels: data.labels().to_vec(),
        })
    }

    /// Ties in the vote go to the class of the single nearest neighbour;
    /// ties in distance go to the earlier training row.
    pub fn predict(&self, x: &[f64]) -> Label {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_unstable_by(cmp);
        let mut votes = [0usize; 2];
        for &(_, i) in &dist {
            votes[self.labels[i].index()] += 1;
        }
        match votes[0].cmp(&votes[1]) {
            std::cmp::Ordering::Greater => Label::Deepfake2,
            std::cmp::Ordering::Less => Label::Deepfake3,
            std::cmp::Ordering::Equal => self.labels[dist[0].1],
        }
    }
}

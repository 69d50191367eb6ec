//! Classical two-class classifiers over feature vectors.
//!
//! Six families are available: k-nearest neighbours, an SMO-trained SVM
//! with four kernels, linear discriminant analysis, a CART decision tree, a
//! random forest and logistic gradient boosting. All of them are
//! deterministic for a given [`ClassifierConfig`] and training set, and a
//! [`TrainedModel`] serializes to versioned JSON.

mod dataset;
mod gboost;
mod grid;
mod knn;
mod lda;
mod metrics;
mod svm;
mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{LabeledDataset, Split};
pub use gboost::{BoostParams, GradientBoost};
pub use grid::{run_grid, standard_grid, GridEntry, GridRow, GridTable};
pub use knn::KnnModel;
pub use lda::LdaModel;
pub use metrics::{evaluate, ClassMetrics, MetricsReport};
pub use svm::{scale_gamma, solve_dual, DualSolution, KernelSpec, SvmKernel, SvmModel, SvmParams};
pub use tree::{DecisionTree, ForestParams, RandomForest, TreeParams};

use crate::label::Label;

/// Bumped whenever the serialized layout of [`TrainedModel`] changes.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("training set contains only {0}; both classes are required")]
    SingleClass(Label),
    #[error("input has {actual} features, model expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("rows have inconsistent lengths ({first} vs {other})")]
    RaggedRows { first: usize, other: usize },
    #[error("{0} labels for {1} feature rows")]
    LabelCount(usize, usize),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("covariance matrix is not positive definite even after regularization")]
    SingularCovariance,
    #[error("model file uses schema version {found}, this build reads {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("malformed model file: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Knn { k: usize },
    Svm(SvmParams),
    Lda,
    DecisionTree,
    RandomForest(ForestParams),
    GBoost(BoostParams),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Knn { .. } => "k-NN",
            Family::Svm(_) => "SVM",
            Family::Lda => "LDA",
            Family::DecisionTree => "Decision-Tree",
            Family::RandomForest(_) => "Random Forest",
            Family::GBoost(_) => "Gboost",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub family: Family,
    pub seed: u64,
}

impl ClassifierConfig {
    pub fn new(family: Family, seed: u64) -> Self {
        Self { family, seed }
    }

    pub fn knn(k: usize) -> Self {
        Self::new(Family::Knn { k }, 0)
    }

    pub fn svm(kernel: SvmKernel) -> Self {
        Self::new(Family::Svm(SvmParams::with_kernel(kernel)), 0)
    }

    pub fn lda() -> Self {
        Self::new(Family::Lda, 0)
    }

    pub fn decision_tree() -> Self {
        Self::new(Family::DecisionTree, 0)
    }

    pub fn random_forest(seed: u64) -> Self {
        Self::new(Family::RandomForest(ForestParams::default()), seed)
    }

    pub fn gboost() -> Self {
        Self::new(Family::GBoost(BoostParams::default()), 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Knn(KnnModel),
    Svm(SvmModel),
    Lda(LdaModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    Boost(GradientBoost),
}

/// A fitted classifier together with the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub config: ClassifierConfig,
    pub dimension: usize,
    pub params: ModelParams,
    /// Free-form provenance such as toolkit version and config hash.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, String>,
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<Label, ClassifierError> {
        if x.len() != self.dimension {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        Ok(match &self.params {
            ModelParams::Knn(m) => m.predict(x),
            ModelParams::Svm(m) => m.predict(x),
            ModelParams::Lda(m) => m.predict(x),
            ModelParams::Tree(m) => m.predict(x),
            ModelParams::Forest(m) => m.predict(x),
            ModelParams::Boost(m) => m.predict(x),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        #[derive(Deserialize)]
        struct Probe {
            schema_version: u32,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.schema_version != MODEL_SCHEMA_VERSION {
            return Err(ClassifierError::SchemaVersion {
                found: probe.schema_version,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }
}

/// Fits a model of the configured family.
pub fn train(
    config: &ClassifierConfig,
    data: &LabeledDataset,
) -> Result<TrainedModel, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if !matches!(config.family, Family::Knn { .. }) {
        if let Some(only) = data.single_class() {
            return Err(ClassifierError::SingleClass(only));
        }
    }
    let params = match &config.family {
        Family::Knn { k } => ModelParams::Knn(KnnModel::fit(data, *k)?),
        Family::Svm(p) => ModelParams::Svm(SvmModel::fit(data, p)),
        Family::Lda => ModelParams::Lda(LdaModel::fit(data)?),
        Family::DecisionTree => {
            ModelParams::Tree(DecisionTree::fit(data, &TreeParams::default()))
        }
        Family::RandomForest(p) => ModelParams::Forest(RandomForest::fit(data, p, config.seed)),
        Family::GBoost(p) => ModelParams::Boost(GradientBoost::fit(data, p)),
    };
    Ok(TrainedModel {
        schema_version: MODEL_SCHEMA_VERSION,
        config: config.clone(),
        dimension: data.dimension(),
        params,
        provenance: BTreeMap::new(),
    })
}

/// Free-function form of [`TrainedModel::predict`].
pub fn predict(model: &TrainedModel, x: &[f64]) -> Result<Label, ClassifierError> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LabeledDataset {
        LabeledDataset::new(
            vec![vec![0.0, 0.0], vec![0.1, 0.2], vec![5.0, 5.0], vec![5.5, 4.9]],
            vec![
                Label::Deepfake2,
                Label::Deepfake2,
                Label::Deepfake3,
                Label::Deepfake3,
            ],
        )
        .unwrap()
    }

    #[test]
    fn dimension_is_checked() {
        let m = train(&ClassifierConfig::lda(), &tiny()).unwrap();
        assert!(matches!(
            m.predict(&[1.0]),
            Err(ClassifierError::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn single_class_rejected_except_knn() {
        let d = LabeledDataset::new(vec![vec![0.0], vec![1.0]], vec![Label::Deepfake3; 2])
            .unwrap();
        assert!(matches!(
            train(&ClassifierConfig::lda(), &d),
            Err(ClassifierError::SingleClass(Label::Deepfake3))
        ));
        let m = train(&ClassifierConfig::knn(1), &d).unwrap();
        assert_eq!(m.predict(&[0.2]).unwrap(), Label::Deepfake3);
    }

    #[test]
    fn empty_rejected() {
        let d = LabeledDataset::new(vec![], vec![]).unwrap();
        assert!(matches!(
            train(&ClassifierConfig::knn(3), &d),
            Err(ClassifierError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn schema_version_checked() {
        let m = train(&ClassifierConfig::decision_tree(), &tiny()).unwrap();
        let text = m.to_json().replace("\"schema_version\": 1", "\"schema_version\": 99");
        assert!(matches!(
            TrainedModel::from_json(&text),
            Err(ClassifierError::SchemaVersion { found: 99, .. })
        ));
    }

    #[test]
    fn json_roundtrip_all_families() {
        let configs = [
            ClassifierConfig::knn(3),
            ClassifierConfig::svm(SvmKernel::Rbf),
            ClassifierConfig::lda(),
            ClassifierConfig::decision_tree(),
            ClassifierConfig::random_forest(3),
            ClassifierConfig::gboost(),
        ];
        for c in &configs {
            let m = train(c, &tiny()).unwrap();
            let back = TrainedModel::from_json(&m.to_json()).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_json(), m.to_json());
        }
    }
}

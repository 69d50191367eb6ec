//! Style-transfer operators, dataset construction, and property checks.

pub mod dataset;
pub mod operator;
pub mod properties;

pub use dataset::{
    build_dataset, DatasetError, DatasetManifest, DatasetOptions, ImageInput, ManifestEntry,
    ManifestHeader, SplitCounts, MANIFEST_FILE,
};
pub use operator::{ExternalTransfer, OperatorError, ProxyTransfer, StyleTransferOp, PROXY_ID};
pub use properties::{
    aggregate, check_associativity, check_commutativity, check_neutral,
    default_neutral_candidates, run_pairs, run_triples, AggregateStats, MetricStats, Property,
    PropertyError, PropertyReport, DEFAULT_THRESHOLD,
};

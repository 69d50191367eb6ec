use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Seed used whenever `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

/// Detect repeated style-transfer manipulation in face images.
///
/// Worker threads default to the number of CPUs; set BALLISTICS_WORKERS to
/// override. Exit codes: 2 bad arguments, 3 I/O failure, 4 invalid data.
#[derive(Debug, Parser)]
#[command(name = "ballistics", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the 63 AC-coefficient Laplacian scales of every image.
    Extract(ExtractArgs),
    /// Fit one classifier on a feature CSV.
    Train(TrainArgs),
    /// Score a trained model on labelled features.
    Evaluate(EvaluateArgs),
    /// Train and score the full classifier grid.
    Grid(GridArgs),
    /// Per-class mean scale for each AC index.
    Fig4(Fig4Args),
    /// Build a Deepfake-2 / Deepfake-3 image dataset.
    MakeDataset(MakeDatasetArgs),
    /// Structural similarity of two images, with an optional map.
    Ssim(SsimArgs),
    /// Compare the RGB histograms of two images.
    HistCompare(HistCompareArgs),
    /// Check neutral element, commutativity or associativity of an operator.
    Properties(PropertiesArgs),
}

// Fields marked `serde(skip)` name outputs or tuning knobs; they are left
// out of the config hash so relocating a run does not change its artifacts.

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    /// Image directory. Subdirectories named Deepfake-2 and Deepfake-3 label
    /// their contents; otherwise images are read from the directory itself.
    #[arg(long)]
    pub images: PathBuf,
    /// Label for every image when the directory has no class subfolders.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    /// Dataset manifest; rows are restricted to the relevant split and
    /// missing labels are taken from it.
    #[arg(long = "split-manifest")]
    pub split_manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    /// knn:K, svm:linear|poly|rbf|sigmoid, lda, tree, rf or gboost.
    #[arg(long, default_value = "rf")]
    pub classifier: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Write the metrics report as JSON here.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long = "split-manifest")]
    pub split_manifest: PathBuf,
    /// Prepend the k = 1 nearest-neighbour row, marked as not tabulated.
    #[arg(long)]
    pub include_k1: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Also write an aligned plain-text table.
    #[arg(long)]
    #[serde(skip)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct Fig4Args {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum OpKind {
    /// Per-channel mean/std matching, fully offline.
    Proxy,
}

#[derive(Debug, Args, Serialize)]
pub struct OperatorArgs {
    #[arg(long, value_enum, default_value = "proxy")]
    pub op: OpKind,
    /// External engine command with {source}, {target} and {output}
    /// placeholders; replaces --op.
    #[arg(long = "op-command")]
    pub op_command: Option<String>,
    /// Engine name recorded in place of the command template.
    #[arg(long = "engine-id", requires = "op_command")]
    pub engine_id: Option<String>,
    /// Engine seed recorded alongside the engine name.
    #[arg(long = "engine-seed", requires = "op_command")]
    pub engine_seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MakeDatasetArgs {
    #[arg(long, required_unless_present = "synthetic")]
    pub sources: Option<PathBuf>,
    #[arg(long, required_unless_present = "synthetic")]
    pub targets1: Option<PathBuf>,
    #[arg(long, required_unless_present = "synthetic")]
    pub targets2: Option<PathBuf>,
    /// Generate sources and both target pools instead of reading them.
    #[arg(long, conflicts_with_all = ["sources", "targets1", "targets2"])]
    pub synthetic: bool,
    /// Side length of synthetic images.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Images per synthetic target pool.
    #[arg(long, default_value_t = 200)]
    pub target_pool: usize,
    #[arg(long, default_value_t = 1200)]
    pub train: usize,
    #[arg(long, default_value_t = 200)]
    pub test: usize,
    #[command(flatten)]
    pub operator: OperatorArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Chains committed per batch.
    #[arg(long, default_value_t = 64)]
    #[serde(skip)]
    pub batch: usize,
    /// Upper bound on concurrent operator calls (defaults to the worker count).
    #[arg(long)]
    #[serde(skip)]
    pub max_concurrent: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SsimArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Save the SSIM map as an 8-bit grayscale PNG.
    #[arg(long)]
    #[serde(skip)]
    pub map: Option<PathBuf>,
    /// Write the JSON result here as well as to standard output.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum MetricChoice {
    All,
    Correlation,
    ChiSquare,
    Bhattacharyya,
}

#[derive(Debug, Args, Serialize)]
pub struct HistCompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub metric: MetricChoice,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum PropertyChoice {
    Neutral,
    Commutativity,
    Associativity,
}

#[derive(Debug, Args, Serialize)]
pub struct PropertiesArgs {
    #[arg(long, value_enum, default_value = "associativity")]
    pub property: PropertyChoice,
    #[command(flatten)]
    pub operator: OperatorArgs,
    /// Number of operand tuples (images, for the neutral check).
    #[arg(long, default_value_t = 1000)]
    pub triples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Image pool; a synthetic face pool is generated when omitted.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Size of the synthetic pool.
    #[arg(long, default_value_t = 200)]
    pub pool: usize,
    /// Side length of synthetic images.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// SSIM at or above which a property counts as satisfied.
    #[arg(long, default_value_t = 0.99)]
    pub threshold: f64,
    /// Directory for reports.json, reports.csv and aggregate files.
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

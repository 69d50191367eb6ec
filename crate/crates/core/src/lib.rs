//! Forensic ballistics for style-transfer deepfakes.
//!
//! Decides whether a face image went through one (Deepfake-2) or two
//! (Deepfake-3) generative style-transfer passes. The pipeline:
//!
//! 1. [`imaging`]: decode, convert to luma, cut into 8×8 blocks.
//! 2. [`dct`]: orthonormal 2-D DCT-II per block, zigzag ordering.
//! 3. [`features`]: one Laplacian scale `beta` per AC position, 63 per image.
//! 4. [`classifiers`]: k-NN, SVM, LDA, decision tree, random forest and
//!    gradient boosting over those vectors, plus the evaluation grid.
//! 5. [`similarity`] and [`ballistics`]: SSIM and histogram comparisons, the
//!    style-transfer operator contract, the dataset builder and the
//!    algebraic-property harness.
//!
//! ```
//! use deepfake_ballistics::{features, imaging::RasterImage};
//!
//! let img = RasterImage::from_fn(32, 32, |x, y| [(x * 8) as u8, (y * 8) as u8, 128]);
//! let betas = features::extract_features(&img, "ramp").unwrap();
//! assert_eq!(betas.values().len(), 63);
//! ```

pub mod ballistics;
pub mod classifiers;
pub mod dct;
pub mod features;
pub mod imaging;
pub mod label;
pub mod similarity;
pub mod store;
pub mod synth;

pub use features::BetaVector;
pub use imaging::RasterImage;
pub use label::Label;

/// Crate version, embedded in every artifact written by the toolkit.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

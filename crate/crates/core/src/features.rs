//! Laplacian scale features over AC coefficient positions.
//!
//! For every image, each of the 63 AC scan positions is pooled across all
//! blocks and summarised by the scale `beta = sigma / sqrt(2)` of a
//! zero-centred Laplacian. The resulting 63-vector is the forensic feature.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dct::{dct2_8x8, zigzag};
use crate::imaging::{self, ImagingError, RasterImage};

/// Number of AC coefficients per 8×8 block.
pub const AC_COUNT: usize = 63;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("need at least 2 samples to estimate a scale, got {0}")]
    TooFewSamples(usize),
    #[error("AC position {0} outside 1..=63")]
    BadPosition(usize),
    #[error("feature vector has {0} entries, expected 63")]
    Length(usize),
    #[error("feature vector contains a negative or non-finite value at AC index {0}")]
    InvalidValue(usize),
    #[error("cannot average an empty set of feature vectors")]
    EmptySet,
}

/// Zero-centred Laplacian fitted to one AC position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianModel {
    pub mu: f64,
    pub beta: f64,
    pub position: usize,
}

impl LaplacianModel {
    pub fn density(&self, x: f64) -> f64 {
        if self.beta == 0.0 {
            return if x == self.mu { f64::INFINITY } else { 0.0 };
        }
        (-(x - self.mu).abs() / self.beta).exp() / (2.0 * self.beta)
    }
}

/// The 63 Laplacian scales of one image, indexed by AC scan position - 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaVector {
    values: Vec<f64>,
    pub source_id: String,
}

impl BetaVector {
    pub fn new(source_id: impl Into<String>, values: Vec<f64>) -> Result<Self, FeatureError> {
        if values.len() != AC_COUNT {
            return Err(FeatureError::Length(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(FeatureError::InvalidValue(i + 1));
        }
        Ok(Self {
            values,
            source_id: source_id.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Scale of AC position `i` in `1..=63`.
    pub fn beta(&self, i: usize) -> f64 {
        self.values[i - 1]
    }
}

/// Fits the Laplacian scale to coefficients from one AC position.
///
/// The standard deviation is the population one, taken about the sample
/// mean; the location of the returned model is fixed at zero.
pub fn estimate_beta(samples: &[f64], position: usize) -> Result<LaplacianModel, FeatureError> {
    if !(1..=AC_COUNT).contains(&position) {
        return Err(FeatureError::BadPosition(position));
    }
    if samples.len() < 2 {
        return Err(FeatureError::TooFewSamples(samples.len()));
    }
    // shifting by the first sample keeps identical inputs at exactly zero
    let pivot = samples[0];
    let n = samples.len() as f64;
    let mean = samples.iter().map(|x| x - pivot).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|x| (x - pivot - mean) * (x - pivot - mean))
        .sum::<f64>()
        / n;
    Ok(LaplacianModel {
        mu: 0.0,
        beta: var.sqrt() / std::f64::consts::SQRT_2,
        position,
    })
}

/// Runs the full block-DCT pipeline on an image and returns its features.
pub fn extract_features(
    img: &RasterImage,
    source_id: impl Into<String>,
) -> Result<BetaVector, FeatureError> {
    let luma = imaging::to_luminance(img);
    let blocks = imaging::partition_blocks(&luma)?;
    // per-position columns, so each scale sees all blocks at once
    let mut columns: Vec<Vec<f64>> = (0..AC_COUNT)
        .map(|_| Vec::with_capacity(blocks.len()))
        .collect();
    for block in &blocks {
        let scan = zigzag(&dct2_8x8(block));
        for (col, &c) in columns.iter_mut().zip(scan[1..].iter()) {
            col.push(c);
        }
    }
    let values = if blocks.len() < 2 {
        // a single block has no spread at any position
        vec![0.0; AC_COUNT]
    } else {
        columns
            .iter()
            .enumerate()
            .map(|(i, col)| estimate_beta(col, i + 1).map(|m| m.beta))
            .collect::<Result<Vec<_>, _>>()?
    };
    BetaVector::new(source_id, values)
}

/// Loads and extracts every file, in parallel; output order follows `paths`.
///
/// Source ids are file stems.
pub fn extract_files(paths: &[PathBuf]) -> Vec<Result<BetaVector, FeatureError>> {
    paths
        .par_iter()
        .map(|p| {
            let img = imaging::load_image(p)?;
            extract_features(&img, source_id_for(p))
        })
        .collect()
}

pub fn source_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Component-wise mean of a set of feature vectors.
pub fn average_betas<'a, I>(features: I) -> Result<Vec<f64>, FeatureError>
where
    I: IntoIterator<Item = &'a BetaVector>,
{
    let mut sum = vec![0.0; AC_COUNT];
    let mut n = 0usize;
    for f in features {
        for (s, v) in sum.iter_mut().zip(f.values()) {
            *s += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(FeatureError::EmptySet);
    }
    Ok(sum.into_iter().map(|s| s / n as f64).collect())
}

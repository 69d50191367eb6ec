//! SSIM with a local score map, and RGB histogram comparison.
//!
//! The histogram metrics follow the OpenCV `compareHist` definitions for
//! `HISTCMP_CORREL`, `HISTCMP_CHISQR` and `HISTCMP_BHATTACHARYYA`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{to_luminance, ImagingError, LumaImage, RasterImage};

const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

/// Bins per channel.
pub const HIST_BINS: usize = 256;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("images differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("image is {0}x{1}; SSIM needs at least 11x11")]
    TooSmallForWindow(usize, usize),
    #[error("histograms have {0} and {1} bins")]
    LayoutMismatch(usize, usize),
    #[error("correlation is undefined: a histogram has zero variance")]
    UndefinedCorrelation,
    #[error("histogram has no mass")]
    EmptyHistogram,
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Mean SSIM and the per-window map behind it.
///
/// `map[r * map_width + c]` is the score of the window centred on pixel
/// `(c + offset, r + offset)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimResult {
    pub mean_score: f64,
    #[serde(skip)]
    pub map: Vec<f64>,
    pub map_width: usize,
    pub map_height: usize,
    pub offset: usize,
}

impl SsimResult {
    /// Writes the map as 8-bit gray, score `s` becoming `round(255 (s + 1) / 2)`.
    pub fn save_map_png(&self, path: impl AsRef<Path>) -> Result<(), SimilarityError> {
        let pixels = self.map_pixels();
        let path = path.as_ref();
        image::save_buffer_with_format(
            path,
            &pixels,
            self.map_width as u32,
            self.map_height as u32,
            image::ExtendedColorType::L8,
            image::ImageFormat::Png,
        )
        .map_err(|e| {
            SimilarityError::Imaging(ImagingError::Encode {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
        })
    }

    pub fn map_pixels(&self) -> Vec<u8> {
        self.map
            .iter()
            .map(|s| (255.0 * (s + 1.0) / 2.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable "valid" Gaussian filtering of a `w`×`h` plane.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                acc += kv * horiz[(y + i) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// SSIM on BT.601 luminance with an 11×11 Gaussian window (sigma 1.5).
pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<SsimResult, SimilarityError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(SimilarityError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    ssim_luma(&to_luminance(a), &to_luminance(b))
}

pub fn ssim_luma(a: &LumaImage, b: &LumaImage) -> Result<SsimResult, SimilarityError> {
    let (w, h) = (a.width(), a.height());
    if w != b.width() || h != b.height() {
        return Err(SimilarityError::DimensionMismatch(w, h, b.width(), b.height()));
    }
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(SimilarityError::TooSmallForWindow(w, h));
    }
    let k = gaussian_kernel();
    let (x, y) = (a.data(), b.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(x, w, h, &k);
    let mu_y = filter_valid(y, w, h, &k);
    let e_xx = filter_valid(&xx, w, h, &k);
    let e_yy = filter_valid(&yy, w, h, &k);
    let e_xy = filter_valid(&xy, w, h, &k);

    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let map: Vec<f64> = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let sxx = e_xx[i] - mx * mx;
            let syy = e_yy[i] - my * my;
            let sxy = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
                / ((mx * mx + my * my + c1) * (sxx + syy + c2))
        })
        .collect();
    let mean_score = map.iter().sum::<f64>() / map.len() as f64;
    Ok(SsimResult {
        mean_score,
        map,
        map_width: w - SSIM_WINDOW + 1,
        map_height: h - SSIM_WINDOW + 1,
        offset: SSIM_WINDOW / 2,
    })
}

/// Three concatenated 256-bin channel histograms (R, then G, then B),
/// normalized jointly so all 768 bins sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RgbHistogram {
    pub bins: Vec<f64>,
    pub pixel_count: usize,
}

impl RgbHistogram {
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.bins[c * HIST_BINS..(c + 1) * HIST_BINS]
    }

    pub fn total_mass(&self) -> f64 {
        self.bins.iter().sum()
    }
}

pub fn rgb_histogram(img: &RasterImage) -> RgbHistogram {
    let mut counts = vec![0u64; 3 * HIST_BINS];
    for [r, g, b] in img.pixels() {
        counts[r as usize] += 1;
        counts[HIST_BINS + g as usize] += 1;
        counts[2 * HIST_BINS + b as usize] += 1;
    }
    let total = 3 * img.pixel_count() as u64;
    let bins = counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect();
    RgbHistogram {
        bins,
        pixel_count: img.pixel_count(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMetric {
    Correlation,
    ChiSquare,
    Bhattacharyya,
}

impl HistogramMetric {
    pub const ALL: [HistogramMetric; 3] = [
        HistogramMetric::Correlation,
        HistogramMetric::ChiSquare,
        HistogramMetric::Bhattacharyya,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HistogramMetric::Correlation => "Correlation",
            HistogramMetric::ChiSquare => "Chi-Square",
            HistogramMetric::Bhattacharyya => "Bhattacharyya distance",
        }
    }
}

pub fn compare(
    h1: &RgbHistogram,
    h2: &RgbHistogram,
    method: HistogramMetric,
) -> Result<f64, SimilarityError> {
    compare_bins(&h1.bins, &h2.bins, method)
}

/// Compares two histograms with the same bin layout.
///
/// * Correlation: Pearson correlation of the bin vectors, in `[-1, 1]`.
/// * Chi-square: `sum over h1 > 0 of (h1 - h2)^2 / h1`, in `[0, inf)`.
///   Not symmetric.
/// * Bhattacharyya: `sqrt(1 - sum sqrt(h1 h2) / sqrt(sum h1 * sum h2))`,
///   in `[0, 1]`.
pub fn compare_bins(h1: &[f64], h2: &[f64], method: HistogramMetric) -> Result<f64, SimilarityError> {
    if h1.len() != h2.len() {
        return Err(SimilarityError::LayoutMismatch(h1.len(), h2.len()));
    }
    if h1.is_empty() {
        return Err(SimilarityError::EmptyHistogram);
    }
    match method {
        HistogramMetric::Correlation => {
            let n = h1.len() as f64;
            let m1 = h1.iter().sum::<f64>() / n;
            let m2 = h2.iter().sum::<f64>() / n;
            let (mut s12, mut s11, mut s22) = (0.0, 0.0, 0.0);
            for (a, b) in h1.iter().zip(h2) {
                let (da, db) = (a - m1, b - m2);
                s12 += da * db;
                s11 += da * da;
                s22 += db * db;
            }
            if s11 == 0.0 || s22 == 0.0 {
                return Err(SimilarityError::UndefinedCorrelation);
            }
            Ok((s12 / (s11 * s22).sqrt()).clamp(-1.0, 1.0))
        }
        HistogramMetric::ChiSquare => Ok(h1
            .iter()
            .zip(h2)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| (a - b) * (a - b) / a)
            .sum()),
        HistogramMetric::Bhattacharyya => {
            let s1: f64 = h1.iter().sum();
            let s2: f64 = h2.iter().sum();
            if s1 <= 0.0 || s2 <= 0.0 {
                return Err(SimilarityError::EmptyHistogram);
            }
            let bc: f64 = h1.iter().zip(h2).map(|(a, b)| (a * b).sqrt()).sum();
            Ok((1.0 - bc / (s1 * s2).sqrt()).max(0.0).sqrt())
        }
    }
}

//! Algebraic-property checks for a style-transfer operator: neutral
//! element, commutativity and associativity, scored with SSIM and RGB
//! histogram comparisons.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dataset::ImageInput;
use super::operator::{OperatorError, StyleTransferOp};
use crate::imaging::{ImagingError, RasterImage};
use crate::similarity::{self, HistogramMetric, SimilarityError, SsimResult};

/// SSIM at or above which a property is considered to hold.
pub const DEFAULT_THRESHOLD: f64 = 0.99;

#[derive(Debug, Error)]
pub enum PropertyError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("need at least {needed} images in the pool, got {got}")]
    PoolTooSmall { needed: usize, got: usize },
    #[error("no candidates to check")]
    NoCandidates,
    #[error("cannot aggregate an empty batch")]
    EmptyBatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    Neutral,
    Commutativity,
    Associativity,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Neutral => "Neutral",
            Property::Commutativity => "Commutativity",
            Property::Associativity => "Associativity",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub operands: Vec<String>,
    pub ssim: SsimResult,
    /// Histogram scores; absent for neutral-element checks.
    pub correlation: Option<f64>,
    pub chi_square: Option<f64>,
    pub bhattacharyya: Option<f64>,
    pub threshold: f64,
    pub satisfied: bool,
    pub verdict: String,
}

impl PropertyReport {
    fn new(
        property: Property,
        operands: Vec<String>,
        ssim: SsimResult,
        hist: Option<[f64; 3]>,
        threshold: f64,
    ) -> Self {
        let satisfied = ssim.mean_score >= threshold;
        let verdict = format!(
            "SSIM {:.4} {} {threshold}: {}",
            ssim.mean_score,
            if satisfied { ">=" } else { "<" },
            if satisfied { "holds" } else { "does not hold" }
        );
        Self {
            property,
            operands,
            ssim,
            correlation: hist.map(|h| h[0]),
            chi_square: hist.map(|h| h[1]),
            bhattacharyya: hist.map(|h| h[2]),
            threshold,
            satisfied,
            verdict,
        }
    }

    /// SSIM 1 with correlation 1, chi-square 0 and Bhattacharyya 0.
    pub fn is_perfect_match(&self) -> bool {
        self.ssim.mean_score == 1.0
            && self.correlation.is_none_or(|c| c == 1.0)
            && self.chi_square.is_none_or(|c| c == 0.0)
            && self.bhattacharyya.is_none_or(|c| c == 0.0)
    }
}

fn histogram_scores(x: &RasterImage, y: &RasterImage) -> Result<[f64; 3], SimilarityError> {
    let (hx, hy) = (similarity::rgb_histogram(x), similarity::rgb_histogram(y));
    let mut out = [0.0; 3];
    for (slot, metric) in out.iter_mut().zip(HistogramMetric::ALL) {
        *slot = similarity::compare(&hx, &hy, metric)?;
    }
    Ok(out)
}

fn compare_pair(
    property: Property,
    operands: Vec<String>,
    x: &RasterImage,
    y: &RasterImage,
    threshold: f64,
) -> Result<PropertyReport, PropertyError> {
    let ssim = similarity::ssim(x, y)?;
    let hist = histogram_scores(x, y)?;
    Ok(PropertyReport::new(property, operands, ssim, Some(hist), threshold))
}

/// All-white, all-black, and `a` itself, each at `a`'s size.
pub fn default_neutral_candidates(a: &ImageInput) -> Result<Vec<ImageInput>, ImagingError> {
    let img = a.load()?;
    let (w, h) = (img.width(), img.height());
    Ok(vec![
        ImageInput::memory("white", RasterImage::filled(w, h, [255; 3])),
        ImageInput::memory("black", RasterImage::filled(w, h, [0; 3])),
        a.clone(),
    ])
}

/// For each candidate `phi`, scores `SSIM(a, a ⊕ phi)`.
pub fn check_neutral(
    op: &dyn StyleTransferOp,
    a: &ImageInput,
    candidates: &[ImageInput],
    threshold: f64,
) -> Result<Vec<PropertyReport>, PropertyError> {
    if candidates.is_empty() {
        return Err(PropertyError::NoCandidates);
    }
    let img = a.load()?;
    candidates
        .iter()
        .map(|phi| {
            let out = op.apply(&img, &*phi.load()?)?;
            let ssim = similarity::ssim(&img, &out)?;
            Ok(PropertyReport::new(
                Property::Neutral,
                vec![a.id().to_string(), phi.id().to_string()],
                ssim,
                None,
                threshold,
            ))
        })
        .collect()
}

/// Compares `a ⊕ b` with `b ⊕ a`. Both operands must share a size.
pub fn check_commutativity(
    op: &dyn StyleTransferOp,
    a: &ImageInput,
    b: &ImageInput,
    threshold: f64,
) -> Result<PropertyReport, PropertyError> {
    let (ia, ib) = (a.load()?, b.load()?);
    let x = op.apply(&ia, &ib)?;
    let y = op.apply(&ib, &ia)?;
    compare_pair(
        Property::Commutativity,
        vec![a.id().to_string(), b.id().to_string()],
        &x,
        &y,
        threshold,
    )
}

/// Compares `(a ⊕ b) ⊕ c` with `a ⊕ (b ⊕ c)`.
pub fn check_associativity(
    op: &dyn StyleTransferOp,
    a: &ImageInput,
    b: &ImageInput,
    c: &ImageInput,
    threshold: f64,
) -> Result<PropertyReport, PropertyError> {
    let (ia, ib, ic) = (a.load()?, b.load()?, c.load()?);
    let x = op.apply(&op.apply(&ia, &ib)?, &ic)?;
    let y = op.apply(&ia, &op.apply(&ib, &ic)?)?;
    compare_pair(
        Property::Associativity,
        vec![a.id().to_string(), b.id().to_string(), c.id().to_string()],
        &x,
        &y,
        threshold,
    )
}

/// Draws `count` operand tuples of `k` distinct pool indices. Draw `i` uses
/// its own ChaCha8 stream, so the sample does not depend on thread count.
pub fn sample_tuples(pool_len: usize, k: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            index::sample(&mut rng, pool_len, k).into_vec()
        })
        .collect()
}

fn ensure_pool(pool: &[ImageInput], needed: usize) -> Result<(), PropertyError> {
    if pool.len() < needed {
        return Err(PropertyError::PoolTooSmall {
            needed,
            got: pool.len(),
        });
    }
    Ok(())
}

/// Associativity over `count` seeded random triples of distinct images.
pub fn run_triples(
    op: &dyn StyleTransferOp,
    pool: &[ImageInput],
    count: usize,
    seed: u64,
    threshold: f64,
) -> Result<Vec<PropertyReport>, PropertyError> {
    ensure_pool(pool, 3)?;
    sample_tuples(pool.len(), 3, count, seed)
        .par_iter()
        .map(|t| check_associativity(op, &pool[t[0]], &pool[t[1]], &pool[t[2]], threshold))
        .collect()
}

/// Commutativity over `count` seeded random pairs of distinct images.
pub fn run_pairs(
    op: &dyn StyleTransferOp,
    pool: &[ImageInput],
    count: usize,
    seed: u64,
    threshold: f64,
) -> Result<Vec<PropertyReport>, PropertyError> {
    ensure_pool(pool, 2)?;
    sample_tuples(pool.len(), 2, count, seed)
        .par_iter()
        .map(|t| check_commutativity(op, &pool[t[0]], &pool[t[1]], threshold))
        .collect()
}

/// Population mean and variance of one score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub variance: f64,
}

impl MetricStats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Self { mean, variance })
    }
}

impl fmt::Display for MetricStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} (with variance = {:.4})", self.mean, self.variance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub batch_size: usize,
    pub ssim: MetricStats,
    pub correlation: Option<MetricStats>,
    pub chi_square: Option<MetricStats>,
    pub bhattacharyya: Option<MetricStats>,
    pub satisfied: usize,
}

pub fn aggregate(reports: &[PropertyReport]) -> Result<AggregateStats, PropertyError> {
    let ssim: Vec<f64> = reports.iter().map(|r| r.ssim.mean_score).collect();
    let ssim = MetricStats::of(&ssim).ok_or(PropertyError::EmptyBatch)?;
    let collect = |f: fn(&PropertyReport) -> Option<f64>| {
        let v: Vec<f64> = reports.iter().filter_map(f).collect();
        MetricStats::of(&v)
    };
    Ok(AggregateStats {
        batch_size: reports.len(),
        ssim,
        correlation: collect(|r| r.correlation),
        chi_square: collect(|r| r.chi_square),
        bhattacharyya: collect(|r| r.bhattacharyya),
        satisfied: reports.iter().filter(|r| r.satisfied).count(),
    })
}

impl AggregateStats {
    /// One `Metric: mean (with variance = v)` line per available score.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Batch size: {}", self.batch_size);
        let _ = writeln!(out, "SSIM: {}", self.ssim);
        for (name, stats) in [
            (HistogramMetric::Correlation.name(), self.correlation),
            (HistogramMetric::ChiSquare.name(), self.chi_square),
            (HistogramMetric::Bhattacharyya.name(), self.bhattacharyya),
        ] {
            if let Some(s) = stats {
                let _ = writeln!(out, "{name}: {s}");
            }
        }
        out
    }
}

/// One row per report:
/// `property,operands,ssim,correlation,chi_square,bhattacharyya,satisfied`.
/// Operand ids are joined with `+`; absent scores are empty fields.
pub fn reports_csv(reports: &[PropertyReport]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    let mut out = String::from("property,operands,ssim,correlation,chi_square,bhattacharyya,satisfied\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{:.17e},{},{},{},{}",
            r.property,
            r.operands.join("+"),
            r.ssim.mean_score,
            opt(r.correlation),
            opt(r.chi_square),
            opt(r.bhattacharyya),
            r.satisfied
        );
    }
    out
}

/// Loads every pool image once so batch runs do not decode repeatedly.
pub fn preload(pool: &[ImageInput]) -> Result<Vec<ImageInput>, ImagingError> {
    pool.par_iter()
        .map(|p| {
            Ok(ImageInput::Memory {
                id: p.id().to_string(),
                image: match p {
                    ImageInput::Memory { image, .. } => Arc::clone(image),
                    ImageInput::File { .. } => p.load()?,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballistics::ProxyTransfer;

    fn report_with(corr: f64) -> PropertyReport {
        PropertyReport::new(
            Property::Associativity,
            vec![],
            SsimResult {
                mean_score: 1.0,
                map: vec![],
                map_width: 0,
                map_height: 0,
                offset: 5,
            },
            Some([corr, 0.0, 0.0]),
            DEFAULT_THRESHOLD,
        )
    }

    #[test]
    fn aggregate_hand_values() {
        let one = aggregate(&[report_with(0.8)]).unwrap();
        assert_eq!(one.correlation.unwrap().variance, 0.0);
        let two = aggregate(&[report_with(0.8), report_with(1.0)]).unwrap();
        let c = two.correlation.unwrap();
        assert!((c.mean - 0.9).abs() < 1e-15);
        assert!((c.variance - 0.01).abs() < 1e-15);
        assert!(matches!(aggregate(&[]), Err(PropertyError::EmptyBatch)));
    }

    #[test]
    fn render_shape() {
        let stats = AggregateStats {
            batch_size: 1000,
            ssim: MetricStats { mean: 0.5, variance: 0.0 },
            correlation: Some(MetricStats { mean: 0.863, variance: 0.0034 }),
            chi_square: Some(MetricStats { mean: 14.255, variance: 31.2064 }),
            bhattacharyya: None,
            satisfied: 0,
        };
        let text = stats.render();
        assert!(text.contains("Correlation: 0.863 (with variance = 0.0034)\n"));
        assert!(text.contains("Chi-Square: 14.255 (with variance = 31.2064)\n"));
        assert!(!text.contains("Bhattacharyya"));
    }

    #[test]
    fn tuples_are_distinct_and_reproducible() {
        let a = sample_tuples(10, 3, 200, 7);
        assert_eq!(a, sample_tuples(10, 3, 200, 7));
        assert_ne!(a, sample_tuples(10, 3, 200, 8));
        for t in &a {
            assert!(t[0] != t[1] && t[1] != t[2] && t[0] != t[2]);
            assert!(t.iter().all(|&i| i < 10));
        }
    }

    #[test]
    fn neutral_defaults() {
        let a = ImageInput::memory(
            "a",
            RasterImage::from_fn(24, 24, |x, y| [(x * 9) as u8, (y * 9) as u8, 90]),
        );
        let cands = default_neutral_candidates(&a).unwrap();
        let reports = check_neutral(&ProxyTransfer, &a, &cands, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(reports.len(), 3);
        assert!(!reports[1].satisfied);
        assert!(reports[2].satisfied);
        assert!(reports[2].is_perfect_match());
        assert!(reports.iter().all(|r| r.correlation.is_none()));
    }
}

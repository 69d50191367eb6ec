//! Style-transfer operators: the `source ⊕ target` contract, an offline
//! statistics-matching proxy, and an adapter that shells out to an
//! external engine.

use std::path::PathBuf;
use std::process::Command;

use thiserror::Error;

use crate::imaging::{self, ImagingError, RasterImage};

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("operator input is empty")]
    EmptyInput,
    #[error("command template is empty")]
    EmptyTemplate,
    #[error("command template lacks the {0} placeholder")]
    MissingPlaceholder(&'static str),
    #[error("failed to launch external engine: {0}")]
    Spawn(std::io::Error),
    #[error("external engine exited with {status}: {stderr}")]
    EngineFailed { status: String, stderr: String },
    #[error("engine output is {got_w}x{got_h}, source is {want_w}x{want_h}")]
    OutputSize {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("temporary workspace: {0}")]
    Workspace(std::io::Error),
}

/// A binary style-transfer operation: attributes of `target` are carried
/// onto `source`. Output has the source's dimensions.
pub trait StyleTransferOp: Sync {
    /// Identifier recorded in manifests and reports.
    fn id(&self) -> String;

    fn apply(&self, source: &RasterImage, target: &RasterImage)
        -> Result<RasterImage, OperatorError>;
}

/// Per-channel mean/std matching.
///
/// Each channel of the source is standardised and rescaled to the target's
/// channel statistics, `round((s - mu_s) * sigma_t / sigma_s + mu_t)`
/// clamped to `[0, 255]`. A flat source channel becomes the target mean.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProxyTransfer;

pub const PROXY_ID: &str = "proxy-affine-v1";

/// Population mean and standard deviation of each channel.
pub fn channel_stats(img: &RasterImage) -> [(f64, f64); 3] {
    let n = img.pixel_count() as f64;
    let mut out = [(0.0, 0.0); 3];
    for (c, stat) in out.iter_mut().enumerate() {
        let mean = img.channel(c).map(f64::from).sum::<f64>() / n;
        let var = img
            .channel(c)
            .map(|v| {
                let d = f64::from(v) - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        *stat = (mean, var.sqrt());
    }
    out
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

impl StyleTransferOp for ProxyTransfer {
    fn id(&self) -> String {
        PROXY_ID.to_string()
    }

    fn apply(
        &self,
        source: &RasterImage,
        target: &RasterImage,
    ) -> Result<RasterImage, OperatorError> {
        if source.pixel_count() == 0 || target.pixel_count() == 0 {
            return Err(OperatorError::EmptyInput);
        }
        let src = channel_stats(source);
        let tgt = channel_stats(target);
        // per-channel lookup table: the map only depends on the input value
        let mut lut = [[0u8; 256]; 3];
        for c in 0..3 {
            let (ms, ss) = src[c];
            let (mt, st) = tgt[c];
            for (v, slot) in lut[c].iter_mut().enumerate() {
                *slot = if ss == 0.0 {
                    quantize(mt)
                } else {
                    quantize((v as f64 - ms) * (st / ss) + mt)
                };
            }
        }
        let data = source
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| lut[i % 3][v as usize])
            .collect();
        Ok(RasterImage::new(source.width(), source.height(), data)?)
    }
}

/// Runs a user-supplied command per application.
///
/// The template is split on whitespace; `{source}`, `{target}` and
/// `{output}` inside any token are replaced by PNG paths in a scratch
/// directory. A nonzero exit status is an operator failure.
#[derive(Clone, Debug)]
pub struct ExternalTransfer {
    template: Vec<String>,
    pub engine_id: Option<String>,
    pub seed: Option<u64>,
}

impl ExternalTransfer {
    pub fn new(template: &str) -> Result<Self, OperatorError> {
        let tokens: Vec<String> = template.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(OperatorError::EmptyTemplate);
        }
        for p in ["{source}", "{target}", "{output}"] {
            if !tokens.iter().any(|t| t.contains(p)) {
                return Err(OperatorError::MissingPlaceholder(p));
            }
        }
        Ok(Self {
            template: tokens,
            engine_id: None,
            seed: None,
        })
    }

    pub fn with_engine(mut self, engine_id: impl Into<String>, seed: Option<u64>) -> Self {
        self.engine_id = Some(engine_id.into());
        self.seed = seed;
        self
    }

    pub fn template(&self) -> String {
        self.template.join(" ")
    }
}

impl StyleTransferOp for ExternalTransfer {
    fn id(&self) -> String {
        let engine = self.engine_id.clone().unwrap_or_else(|| self.template());
        match self.seed {
            Some(s) => format!("external:{engine}:seed={s}"),
            None => format!("external:{engine}"),
        }
    }

    fn apply(
        &self,
        source: &RasterImage,
        target: &RasterImage,
    ) -> Result<RasterImage, OperatorError> {
        let dir = tempfile::tempdir().map_err(OperatorError::Workspace)?;
        let paths: [PathBuf; 3] = [
            dir.path().join("source.png"),
            dir.path().join("target.png"),
            dir.path().join("output.png"),
        ];
        source.save_png(&paths[0])?;
        target.save_png(&paths[1])?;
        let args: Vec<String> = self
            .template
            .iter()
            .map(|t| {
                t.replace("{source}", &paths[0].to_string_lossy())
                    .replace("{target}", &paths[1].to_string_lossy())
                    .replace("{output}", &paths[2].to_string_lossy())
            })
            .collect();
        let out = Command::new(&args[0])
            .args(&args[1..])
            .output()
            .map_err(OperatorError::Spawn)?;
        if !out.status.success() {
            return Err(OperatorError::EngineFailed {
                status: out.status.to_string(),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        let img = imaging::load_image(&paths[2])?;
        if img.width() != source.width() || img.height() != source.height() {
            return Err(OperatorError::OutputSize {
                got_w: img.width(),
                got_h: img.height(),
                want_w: source.width(),
                want_h: source.height(),
            });
        }
        Ok(img)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker() -> RasterImage {
        RasterImage::from_fn(16, 16, |x, y| {
            if (x / 2 + y / 2) % 2 == 0 {
                [40, 60, 80]
            } else {
                [200, 180, 160]
            }
        })
    }

    #[test]
    fn self_transfer_preserves_image() {
        let a = checker();
        assert_eq!(ProxyTransfer.apply(&a, &a).unwrap(), a);
    }

    #[test]
    fn black_target_gives_black() {
        let out = ProxyTransfer
            .apply(&checker(), &RasterImage::filled(8, 8, [0, 0, 0]))
            .unwrap();
        assert!(out.data().iter().all(|&v| v == 0));
        assert_eq!((out.width(), out.height()), (16, 16));
    }

    #[test]
    fn flat_source_takes_target_mean() {
        let target = RasterImage::from_fn(4, 1, |x, _| [x as u8 * 10, 100, 7]);
        let out = ProxyTransfer
            .apply(&RasterImage::filled(3, 3, [9, 9, 9]), &target)
            .unwrap();
        assert!(out.pixels().all(|p| p == [15, 100, 7]));
    }

    #[test]
    fn checker_moves_to_target_mean() {
        let target = RasterImage::from_fn(32, 32, |x, y| {
            let v = 100 + ((x * 7 + y * 3) % 40) as u8;
            [v, v + 10, v - 20]
        });
        let out = ProxyTransfer.apply(&checker(), &target).unwrap();
        let (got, want) = (channel_stats(&out), channel_stats(&target));
        for c in 0..3 {
            assert!((got[c].0 - want[c].0).abs() <= 1.0);
        }
    }

    #[test]
    fn template_validation() {
        assert!(matches!(
            ExternalTransfer::new("  "),
            Err(OperatorError::EmptyTemplate)
        ));
        assert!(matches!(
            ExternalTransfer::new("cp {source} out.png"),
            Err(OperatorError::MissingPlaceholder("{target}"))
        ));
        let op = ExternalTransfer::new("engine --src={source} {target} -o {output}")
            .unwrap()
            .with_engine("stargan-v2", Some(4));
        assert_eq!(op.id(), "external:stargan-v2:seed=4");
    }

    #[cfg(unix)]
    #[test]
    fn external_engines() {
        let src = checker();
        let tgt = RasterImage::filled(16, 16, [1, 2, 3]);

        let copy = ExternalTransfer::new("env TARGET={target} cp {source} {output}").unwrap();
        assert_eq!(copy.apply(&src, &tgt).unwrap(), src);

        let take_target = ExternalTransfer::new("env SRC={source} cp {target} {output}").unwrap();
        assert_eq!(take_target.apply(&src, &tgt).unwrap(), tgt);

        let failing = ExternalTransfer::new("false {source} {target} {output}").unwrap();
        assert!(matches!(
            failing.apply(&src, &tgt),
            Err(OperatorError::EngineFailed { .. })
        ));

        let small = RasterImage::filled(8, 8, [0, 0, 0]);
        assert!(matches!(
            take_target.apply(&src, &small),
            Err(OperatorError::OutputSize { got_w: 8, .. })
        ));
    }
}

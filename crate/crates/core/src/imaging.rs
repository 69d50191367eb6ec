//! Image ingestion, luminance conversion and 8×8 block partitioning.
//!
//! Every downstream stage works on [`RasterImage`] (8-bit RGB) or on the
//! real-valued [`LumaImage`] derived from it. Blocks are cut on the 8-pixel
//! grid starting at the top-left corner; the right and bottom remainders are
//! dropped rather than padded.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};
use thiserror::Error;

/// Side length of a transform block.
pub const BLOCK_SIZE: usize = 8;

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("image file not found: {0}")]
    NotFound(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("unsupported color model in {path}: {model}")]
    UnsupportedColorModel { path: PathBuf, model: String },
    #[error("image is {width}x{height}, at least 8x8 is required")]
    TooSmall { width: usize, height: usize },
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("cannot write {path}: {reason}")]
    Encode { path: PathBuf, reason: String },
}

/// 8-bit RGB image, row-major, channels interleaved in R, G, B order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImagingError> {
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(ImagingError::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image where every pixel has the same color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds an image by evaluating `f(x, y)` at each pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Samples of a single channel (0 = R, 1 = G, 2 = B).
    pub fn channel(&self, c: usize) -> impl Iterator<Item = u8> + '_ {
        self.data.iter().skip(c).step_by(3).copied()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ImagingError> {
        let path = path.as_ref();
        image::save_buffer_with_format(
            path,
            &self.data,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
            ImageFormat::Png,
        )
        .map_err(|e| ImagingError::Encode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// Real-valued single-channel image with samples in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LumaImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LumaImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImagingError> {
        if data.len() != width * height {
            return Err(ImagingError::BufferLength {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data: data.into_iter().map(|v| v.clamp(0.0, 255.0)).collect(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// One 8×8 tile of luminance samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Block8 {
    /// Row-major samples, `samples[r * 8 + c]`.
    pub samples: [f64; 64],
    /// Pixel coordinates `(row, col)` of the top-left sample; multiples of 8.
    pub origin: (usize, usize),
}

/// Decodes a PNG or JPEG file into 8-bit RGB.
///
/// Gray images are replicated across the three channels and 16-bit images
/// are reduced to 8 bits. Four-component (CMYK/YCCK) JPEGs are rejected.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage, ImagingError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            ImagingError::NotFound(path.to_path_buf())
        } else {
            ImagingError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    decode_image(&bytes).map_err(|e| match e {
        DecodeFailure::Unsupported(model) => ImagingError::UnsupportedColorModel {
            path: path.to_path_buf(),
            model,
        },
        DecodeFailure::Corrupt(reason) => ImagingError::Decode {
            path: path.to_path_buf(),
            reason,
        },
    })
}

enum DecodeFailure {
    Unsupported(String),
    Corrupt(String),
}

fn decode_image(bytes: &[u8]) -> Result<RasterImage, DecodeFailure> {
    if bytes.is_empty() {
        return Err(DecodeFailure::Corrupt("empty file".into()));
    }
    let format =
        image::guess_format(bytes).map_err(|e| DecodeFailure::Corrupt(e.to_string()))?;
    match format {
        ImageFormat::Png => {}
        ImageFormat::Jpeg => {
            if let Some(n) = jpeg_component_count(bytes) {
                if n == 4 {
                    return Err(DecodeFailure::Unsupported("CMYK".into()));
                }
                if n != 1 && n != 3 {
                    return Err(DecodeFailure::Unsupported(format!("{n} components")));
                }
            }
        }
        other => {
            return Err(DecodeFailure::Corrupt(format!(
                "unsupported container {other:?}, expected PNG or JPEG"
            )))
        }
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| DecodeFailure::Corrupt(e.to_string()))?;
    Ok(from_dynamic(decoded))
}

fn from_dynamic(img: DynamicImage) -> RasterImage {
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    RasterImage {
        width: w as usize,
        height: h as usize,
        data: rgb.into_raw(),
    }
}

/// Reads the component count from the first SOF marker of a JPEG stream.
fn jpeg_component_count(bytes: &[u8]) -> Option<u8> {
    let mut i = 2;
    while i + 4 <= bytes.len() {
        if bytes[i] != 0xFF {
            return None;
        }
        let marker = bytes[i + 1];
        if marker == 0xFF {
            i += 1;
            continue;
        }
        // standalone markers carry no length field
        if marker == 0x01 || (0xD0..=0xD7).contains(&marker) {
            i += 2;
            continue;
        }
        let len = u16::from_be_bytes([bytes[i + 2], bytes[i + 3]]) as usize;
        let is_sof = (0xC0..=0xCF).contains(&marker) && !matches!(marker, 0xC4 | 0xC8 | 0xCC);
        if is_sof {
            return bytes.get(i + 9).copied();
        }
        if marker == 0xDA {
            return None;
        }
        i += 2 + len;
    }
    None
}

/// BT.601 luma, `Y = 0.299 R + 0.587 G + 0.114 B`, without rounding.
///
/// Gray pixels map to their own value exactly.
pub fn to_luminance(img: &RasterImage) -> LumaImage {
    let data = img
        .pixels()
        .map(|[r, g, b]| {
            if r == g && g == b {
                f64::from(r)
            } else {
                (LUMA_R * f64::from(r) + LUMA_G * f64::from(g) + LUMA_B * f64::from(b))
                    .clamp(0.0, 255.0)
            }
        })
        .collect();
    LumaImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Cuts the image into non-overlapping 8×8 blocks in row-major block order.
pub fn partition_blocks(img: &LumaImage) -> Result<Vec<Block8>, ImagingError> {
    if img.width < BLOCK_SIZE || img.height < BLOCK_SIZE {
        return Err(ImagingError::TooSmall {
            width: img.width,
            height: img.height,
        });
    }
    let rows = img.height / BLOCK_SIZE;
    let cols = img.width / BLOCK_SIZE;
    let mut blocks = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let (oy, ox) = (br * BLOCK_SIZE, bc * BLOCK_SIZE);
            let mut samples = [0.0; 64];
            for r in 0..BLOCK_SIZE {
                let start = (oy + r) * img.width + ox;
                samples[r * BLOCK_SIZE..(r + 1) * BLOCK_SIZE]
                    .copy_from_slice(&img.data[start..start + BLOCK_SIZE]);
            }
            blocks.push(Block8 {
                samples,
                origin: (oy, ox),
            });
        }
    }
    Ok(blocks)
}

//! Deterministic synthetic face-like images.
//!
//! Used as an offline corpus for the dataset builder and the property
//! harness when no real photographs are at hand. Each image is a soft
//! background gradient, a skin-toned head ellipse with eyes and mouth, a
//! hair cap, smooth low-frequency shading and fine grain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ballistics::ImageInput;
use crate::imaging::RasterImage;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinearly interpolated random grid: smooth shading in `[-1, 1]`.
struct ValueNoise {
    cells: usize,
    grid: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, cells: usize) -> Self {
        let grid = (0..(cells + 1) * (cells + 1))
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        Self { cells, grid }
    }

    fn at(&self, u: f64, v: f64) -> f64 {
        let (fx, fy) = (u * self.cells as f64, v * self.cells as f64);
        let (x0, y0) = (
            (fx.floor() as usize).min(self.cells - 1),
            (fy.floor() as usize).min(self.cells - 1),
        );
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let g = |x: usize, y: usize| self.grid[y * (self.cells + 1) + x];
        let top = g(x0, y0) * (1.0 - tx) + g(x0 + 1, y0) * tx;
        let bottom = g(x0, y0 + 1) * (1.0 - tx) + g(x0 + 1, y0 + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn in_ellipse(u: f64, v: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> f64 {
    let d = ((u - cx) / rx).powi(2) + ((v - cy) / ry).powi(2);
    // soft edge over roughly 10% of the radius
    ((1.0 - d) * 5.0).clamp(0.0, 1.0)
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

/// A `width × height` face-like image determined by `seed`.
pub fn face(seed: u64, width: usize, height: usize) -> RasterImage {
    let mut rng = rng_for(seed, 0);
    let mut color = |lo: f64, hi: f64| -> [f64; 3] {
        [
            rng.random_range(lo..hi),
            rng.random_range(lo..hi),
            rng.random_range(lo..hi),
        ]
    };
    let bg_top = color(30.0, 220.0);
    let bg_bottom = color(30.0, 220.0);
    let hair = color(10.0, 120.0);
    let mut rng = rng_for(seed, 1);
    let tone: f64 = rng.random_range(0.35..1.0);
    let skin = [
        90.0 + 150.0 * tone,
        60.0 + 130.0 * tone,
        45.0 + 110.0 * tone,
    ];
    let cx = rng.random_range(0.42..0.58);
    let cy = rng.random_range(0.48..0.58);
    let rx = rng.random_range(0.24..0.32);
    let ry = rng.random_range(0.32..0.40);
    let eye_dx = rx * rng.random_range(0.35..0.5);
    let eye_y = cy - ry * rng.random_range(0.1..0.3);
    let mouth_y = cy + ry * rng.random_range(0.45..0.6);
    let shading = ValueNoise::new(&mut rng, 4);
    let texture = ValueNoise::new(&mut rng, 12);
    let mut grain = rng_for(seed, 2);

    RasterImage::from_fn(width, height, |x, y| {
        let u = (x as f64 + 0.5) / width as f64;
        let v = (y as f64 + 0.5) / height as f64;
        let mut px = mix(bg_top, bg_bottom, v);
        let head = in_ellipse(u, v, cx, cy, rx, ry);
        px = mix(px, skin, head);
        let hair_cap = in_ellipse(u, v, cx, cy - ry * 0.55, rx * 1.1, ry * 0.6)
            * (v < cy - ry * 0.3) as u8 as f64;
        px = mix(px, hair, hair_cap);
        for side in [-1.0, 1.0] {
            let eye = in_ellipse(u, v, cx + side * eye_dx, eye_y, rx * 0.16, ry * 0.07);
            px = mix(px, [35.0, 25.0, 20.0], eye);
        }
        let mouth = in_ellipse(u, v, cx, mouth_y, rx * 0.35, ry * 0.06);
        px = mix(px, [150.0, 60.0, 65.0], mouth);

        let light = 1.0 + 0.18 * shading.at(u, v);
        let tex = 10.0 * texture.at(u, v);
        let g: f64 = grain.random_range(-6.0..6.0);
        [
            clamp_u8(px[0] * light + tex + g),
            clamp_u8(px[1] * light + tex + g),
            clamp_u8(px[2] * light + tex + g),
        ]
    })
}

/// Remaps each channel affinely onto the requested `(mean, std)` pairs.
pub fn restyle(img: &RasterImage, stats: [(f64, f64); 3]) -> RasterImage {
    let current = crate::ballistics::operator::channel_stats(img);
    let data = img
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = i % 3;
            let (m, s) = current[c];
            let (mt, st) = stats[c];
            let z = if s == 0.0 { 0.0 } else { (f64::from(v) - m) / s };
            clamp_u8(z * st + mt)
        })
        .collect();
    RasterImage::new(img.width(), img.height(), data).expect("same layout")
}

/// Channel-statistics family of a target pool.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetStyle {
    pub mean: (f64, f64),
    pub std: (f64, f64),
    /// Per-channel offsets added to the drawn mean, `[r, g, b]`.
    pub tint: [f64; 3],
}

impl TargetStyle {
    /// Low-contrast, warm references.
    pub const MUTED: TargetStyle = TargetStyle {
        mean: (110.0, 150.0),
        std: (10.0, 35.0),
        tint: [12.0, 0.0, -12.0],
    };
    /// High-contrast, cool references.
    pub const VIVID: TargetStyle = TargetStyle {
        mean: (95.0, 145.0),
        std: (28.0, 62.0),
        tint: [-10.0, 0.0, 10.0],
    };

    fn draw(&self, rng: &mut ChaCha8Rng) -> [(f64, f64); 3] {
        let mean = rng.random_range(self.mean.0..self.mean.1);
        let std = rng.random_range(self.std.0..self.std.1);
        let mut out = [(0.0, 0.0); 3];
        for (c, slot) in out.iter_mut().enumerate() {
            let jitter = rng.random_range(-0.1..0.1);
            *slot = (mean + self.tint[c], std * (1.0 + jitter));
        }
        out
    }
}

/// A target face drawn from `style`.
pub fn styled_target(seed: u64, width: usize, height: usize, style: TargetStyle) -> RasterImage {
    let base = face(seed, width, height);
    let mut rng = rng_for(seed, 3);
    restyle(&base, style.draw(&mut rng))
}

/// Sources and two target pools with disjoint identifiers.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub sources: Vec<ImageInput>,
    pub targets1: Vec<ImageInput>,
    pub targets2: Vec<ImageInput>,
}

/// Builds `n_sources` faces (`src_*`), `n_targets` muted first-pass
/// targets (`t1_*`) and `n_targets` vivid second-pass targets (`t2_*`).
/// The two target pools play the role of references taken from different
/// photo collections.
pub fn synthetic_corpus(
    n_sources: usize,
    n_targets: usize,
    size: usize,
    seed: u64,
) -> SyntheticCorpus {
    use rayon::prelude::*;
    // disjoint seed ranges per pool
    let sub = |pool: u64, i: usize| {
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(pool << 40)
            .wrapping_add(i as u64)
    };
    let sources = (0..n_sources)
        .into_par_iter()
        .map(|i| ImageInput::memory(format!("src_{i:05}"), face(sub(1, i), size, size)))
        .collect();
    let targets1 = (0..n_targets)
        .into_par_iter()
        .map(|i| {
            let img = styled_target(sub(2, i), size, size, TargetStyle::MUTED);
            ImageInput::memory(format!("t1_{i:05}"), img)
        })
        .collect();
    let targets2 = (0..n_targets)
        .into_par_iter()
        .map(|i| {
            let img = styled_target(sub(3, i), size, size, TargetStyle::VIVID);
            ImageInput::memory(format!("t2_{i:05}"), img)
        })
        .collect();
    SyntheticCorpus {
        sources,
        targets1,
        targets2,
    }
}

/// `n` plain faces with ids `face_*`, for the property harness.
pub fn face_pool(n: usize, size: usize, seed: u64) -> Vec<ImageInput> {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(i as u64);
            ImageInput::memory(format!("face_{i:05}"), face(s, size, size))
        })
        .collect()
}

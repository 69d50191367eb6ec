//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the code under test except
//! for plain data types.

#![allow(dead_code)]

use std::f64::consts::PI;

use deepfake_ballistics::classifiers::LabeledDataset;
use deepfake_ballistics::imaging::RasterImage;
use deepfake_ballistics::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Textbook 2-D DCT-II, evaluated straight from the double-sum definition.
pub fn naive_dct(samples: &[f64; 64]) -> [f64; 64] {
    let alpha = |k: usize| if k == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
    let mut out = [0.0; 64];
    for u in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                for y in 0..8 {
                    acc += (samples[x * 8 + y] - 128.0)
                        * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos()
                        * ((2 * y + 1) as f64 * v as f64 * PI / 16.0).cos();
                }
            }
            out[u * 8 + v] = alpha(u) * alpha(v) * acc;
        }
    }
    out
}

/// JPEG scan order generated by walking anti-diagonals, alternating
/// direction. Returns `order[k] = row * 8 + col`.
pub fn zigzag_walk() -> [usize; 64] {
    let mut order = [0; 64];
    let mut k = 0;
    for s in 0..15usize {
        let cells: Vec<(usize, usize)> = (0..=s)
            .filter_map(|r| {
                let c = s.checked_sub(r)?;
                (r < 8 && c < 8).then_some((r, c))
            })
            .collect();
        // even diagonals run bottom-left to top-right
        let cells: Vec<_> = if s % 2 == 0 {
            cells.into_iter().rev().collect()
        } else {
            cells
        };
        for (r, c) in cells {
            order[k] = r * 8 + c;
            k += 1;
        }
    }
    order
}

/// BT.601 luma written out independently.
pub fn luma(p: [u8; 3]) -> f64 {
    if p[0] == p[1] && p[1] == p[2] {
        return f64::from(p[0]);
    }
    0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])
}

/// Brute-force feature extraction: luma, naive DCT per block, walk order,
/// then `sqrt(population variance / 2)` per AC position.
pub fn brute_force_betas(img: &RasterImage) -> Vec<f64> {
    let (bw, bh) = (img.width() / 8, img.height() / 8);
    let order = zigzag_walk();
    let mut cols = vec![Vec::new(); 63];
    for by in 0..bh {
        for bx in 0..bw {
            let mut s = [0.0; 64];
            for r in 0..8 {
                for c in 0..8 {
                    s[r * 8 + c] = luma(img.pixel(bx * 8 + c, by * 8 + r));
                }
            }
            let d = naive_dct(&s);
            for k in 1..64 {
                cols[k - 1].push(d[order[k]]);
            }
        }
    }
    cols.iter()
        .map(|c| {
            let n = c.len() as f64;
            let m = c.iter().sum::<f64>() / n;
            (c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n / 2.0).sqrt()
        })
        .collect()
}

/// Laplace(0, beta) by inverse-CDF sampling.
pub fn laplace_samples(beta: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let u: f64 = r.random_range(-0.5..0.5);
            -beta * u.signum() * (1.0 - 2.0 * u.abs()).ln()
        })
        .collect()
}

/// Standard normal by Box-Muller.
pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.random_range(f64::EPSILON..1.0);
    let u2: f64 = r.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Two isotropic unit-variance Gaussian blobs in `dim` dimensions whose
/// centres sit `separation` apart along the all-ones direction, straddling
/// the origin.
pub fn blobs(per_class: usize, dim: usize, separation: f64, seed: u64) -> LabeledDataset {
    let mut r = rng(seed);
    let shift = separation / (dim as f64).sqrt();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * per_class {
        let label = if i % 2 == 0 { Label::Deepfake2 } else { Label::Deepfake3 };
        let offset = if label == Label::Deepfake3 { shift } else { 0.0 };
        rows.push((0..dim).map(|_| offset - shift / 2.0 + normal(&mut r)).collect());
        labels.push(label);
    }
    LabeledDataset::new(rows, labels).unwrap()
}

/// Means at `-1` and `+1` in every coordinate, spread `0.1`.
pub fn separable_blobs(per_class: usize, dim: usize, seed: u64) -> LabeledDataset {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * per_class {
        let (label, centre) = if i % 2 == 0 { (Label::Deepfake2, -1.0) } else { (Label::Deepfake3, 1.0) };
        rows.push((0..dim).map(|_| centre + 0.1 * normal(&mut r)).collect());
        labels.push(label);
    }
    LabeledDataset::new(rows, labels).unwrap()
}

pub fn accuracy(pred: impl Fn(&[f64]) -> Label, data: &LabeledDataset) -> f64 {
    let hits = data.iter().filter(|(x, l)| pred(x) == *l).count();
    hits as f64 / data.len() as f64
}

/// Adds uniform integer noise in `[-amp, amp]` to every channel, clamped.
pub fn add_noise(img: &RasterImage, amp: i32, seed: u64) -> RasterImage {
    let mut r = rng(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| (i32::from(v) + r.random_range(-amp..=amp)).clamp(0, 255) as u8)
        .collect();
    RasterImage::new(img.width(), img.height(), data).unwrap()
}

pub fn random_image(w: usize, h: usize, seed: u64) -> RasterImage {
    let mut r = rng(seed);
    RasterImage::from_fn(w, h, |_, _| [r.random(), r.random(), r.random()])
}

/// Smooth mid-range image that stays well inside `[0, 255]` under the
/// proxy operator's affine maps.
pub fn gentle(seed: u64, w: usize, h: usize) -> RasterImage {
    let mut r = rng(seed);
    let (a, b, c): (f64, f64, f64) = (r.random_range(0.1..0.4), r.random_range(0.1..0.4), r.random_range(0.0..6.3));
    let base: f64 = r.random_range(100.0..150.0);
    let amp: f64 = r.random_range(15.0..35.0);
    let tint: [f64; 3] = [r.random_range(-10.0..10.0), 0.0, r.random_range(-10.0..10.0)];
    RasterImage::from_fn(w, h, |x, y| {
        let v = base + amp * ((x as f64 * a + c).sin() * (y as f64 * b).cos());
        let n: f64 = r.random_range(-3.0..3.0);
        [
            (v + tint[0] + n).round() as u8,
            (v + tint[1] + n).round() as u8,
            (v + tint[2] + n).round() as u8,
        ]
    })
}

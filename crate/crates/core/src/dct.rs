//! Orthonormal 8×8 DCT-II and the JPEG zigzag scan.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::imaging::Block8;

/// JPEG level shift applied to samples before the forward transform.
pub const LEVEL_SHIFT: f64 = 128.0;

/// `ZIGZAG[i]` is the row-major position (`u * 8 + v`) read at scan index `i`.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Frequency-domain block; `coefficients[u * 8 + v]` with `u` the vertical
/// (row) frequency and `v` the horizontal (column) frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffBlock {
    pub coefficients: [f64; 64],
}

impl CoeffBlock {
    pub fn dc(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.coefficients[u * 8 + v]
    }
}

/// `basis[u][x] = alpha(u) * cos((2x + 1) u pi / 16)`.
fn basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut t = [[0.0; 8]; 8];
        for (u, row) in t.iter_mut().enumerate() {
            let alpha = if u == 0 {
                1.0 / (2.0 * 2f64.sqrt())
            } else {
                0.5
            };
            for (x, c) in row.iter_mut().enumerate() {
                *c = alpha * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
            }
        }
        t
    })
}

/// Forward 2-D DCT of the level-shifted block, computed separably.
pub fn dct2_8x8(block: &Block8) -> CoeffBlock {
    let c = basis();
    let mut shifted = [0.0; 64];
    for (d, s) in shifted.iter_mut().zip(block.samples.iter()) {
        *d = s - LEVEL_SHIFT;
    }
    // rows: tmp[x][v] = sum_y f[x][y] c[v][y]
    let mut tmp = [0.0; 64];
    for x in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += shifted[x * 8 + y] * c[v][y];
            }
            tmp[x * 8 + v] = acc;
        }
    }
    let mut out = [0.0; 64];
    for u in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += c[u][x] * tmp[x * 8 + v];
            }
            out[u * 8 + v] = acc;
        }
    }
    CoeffBlock { coefficients: out }
}

/// Inverse of [`dct2_8x8`], including the level shift back to pixel range.
pub fn idct2_8x8(coeffs: &CoeffBlock) -> [f64; 64] {
    let c = basis();
    let f = &coeffs.coefficients;
    let mut tmp = [0.0; 64];
    for u in 0..8 {
        for y in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += f[u * 8 + v] * c[v][y];
            }
            tmp[u * 8 + y] = acc;
        }
    }
    let mut out = [0.0; 64];
    for x in 0..8 {
        for y in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += c[u][x] * tmp[u * 8 + y];
            }
            out[x * 8 + y] = acc + LEVEL_SHIFT;
        }
    }
    out
}

/// Reorders coefficients into scan order; index 0 is DC, 1..=63 are AC.
pub fn zigzag(coeffs: &CoeffBlock) -> [f64; 64] {
    let mut out = [0.0; 64];
    for (o, &pos) in out.iter_mut().zip(ZIGZAG.iter()) {
        *o = coeffs.coefficients[pos];
    }
    out
}

pub fn unzigzag(scan: &[f64; 64]) -> CoeffBlock {
    let mut coefficients = [0.0; 64];
    for (&v, &pos) in scan.iter().zip(ZIGZAG.iter()) {
        coefficients[pos] = v;
    }
    CoeffBlock { coefficients }
}

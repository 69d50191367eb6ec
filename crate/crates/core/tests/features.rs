mod common;

use deepfake_ballistics::dct::{dct2_8x8, idct2_8x8, zigzag, ZIGZAG};
use deepfake_ballistics::features::{estimate_beta, extract_features};
use deepfake_ballistics::imaging::{partition_blocks, to_luminance, Block8, RasterImage};
use proptest::prelude::*;
use rand::Rng;

fn random_block(r: &mut rand_chacha::ChaCha8Rng) -> Block8 {
    let mut samples = [0.0; 64];
    for s in &mut samples {
        *s = r.random_range(0.0..=255.0);
    }
    Block8 {
        samples,
        origin: (0, 0),
    }
}

#[test]
fn dct_matches_double_sum_definition() {
    let mut r = common::rng(1);
    for _ in 0..200 {
        let b = random_block(&mut r);
        let fast = dct2_8x8(&b).coefficients;
        let slow = common::naive_dct(&b.samples);
        for (a, e) in fast.iter().zip(slow) {
            assert!((a - e).abs() < 1e-9, "{a} vs {e}");
        }
    }
}

#[test]
fn dct_round_trip_and_energy() {
    let mut r = common::rng(2);
    for _ in 0..1000 {
        let b = random_block(&mut r);
        let c = dct2_8x8(&b);
        let back = idct2_8x8(&c);
        for (x, y) in back.iter().zip(b.samples) {
            assert!((x - y).abs() < 1e-9);
        }
        let spatial: f64 = b.samples.iter().map(|s| (s - 128.0).powi(2)).sum();
        let freq: f64 = c.coefficients.iter().map(|v| v * v).sum();
        assert!((spatial - freq).abs() / spatial.max(1e-300) < 1e-6);
    }
}

#[test]
fn scan_order_matches_diagonal_walk() {
    let walk = common::zigzag_walk();
    assert_eq!(ZIGZAG, walk);
    let mut seen = [false; 64];
    for &i in &ZIGZAG {
        assert!(!seen[i]);
        seen[i] = true;
    }
    let mut coefficients = [0.0; 64];
    for (i, c) in coefficients.iter_mut().enumerate() {
        *c = i as f64;
    }
    let scan = zigzag(&deepfake_ballistics::dct::CoeffBlock { coefficients });
    assert_eq!(&scan[..4], &[0.0, 1.0, 8.0, 16.0]);
    assert_eq!(scan[63], 63.0);
}

#[test]
fn constant_block_has_only_dc() {
    let b = Block8 {
        samples: [200.0; 64],
        origin: (0, 0),
    };
    let c = dct2_8x8(&b);
    assert!((c.dc() - 8.0 * 72.0).abs() < 1e-12);
    assert!(c.coefficients[1..].iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn beta_recovers_laplace_scale() {
    for (k, truth) in [0.5, 2.0, 10.0].into_iter().enumerate() {
        let xs = common::laplace_samples(truth, 1_000_000, 100 + k as u64);
        let est = estimate_beta(&xs, 1).unwrap().beta;
        assert!(
            ((est - truth) / truth).abs() < 0.01,
            "beta {truth}: estimated {est}"
        );
    }
}

#[test]
fn beta_hand_value() {
    // {-2, 0, 2}: mean 0, population variance 8/3
    let m = estimate_beta(&[-2.0, 0.0, 2.0], 5).unwrap();
    assert!((m.beta - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(m.mu, 0.0);
}

#[test]
fn constant_image_gives_zero_vector() {
    let v = extract_features(&RasterImage::filled(64, 48, [90, 90, 90]), "flat").unwrap();
    assert!(v.values().iter().all(|&b| b == 0.0));
}

#[test]
fn extraction_matches_brute_force() {
    for seed in 0..3 {
        let img = common::random_image(64, 64, seed);
        let got = extract_features(&img, "x").unwrap();
        let want = common::brute_force_betas(&img);
        for (g, w) in got.values().iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * w.max(1.0), "{g} vs {w}");
        }
    }
    // non-multiple-of-8 sizes crop the remainder
    let img = common::random_image(70, 61, 9);
    let cropped = RasterImage::from_fn(64, 56, |x, y| img.pixel(x, y));
    assert_eq!(
        extract_features(&img, "a").unwrap().values(),
        extract_features(&cropped, "b").unwrap().values()
    );
}

#[test]
fn gray_pixels_are_exact_luma() {
    let img = RasterImage::from_fn(16, 8, |x, y| {
        let v = (x * 13 + y * 7) as u8;
        [v, v, v]
    });
    let l = to_luminance(&img);
    for y in 0..8 {
        for x in 0..16 {
            assert_eq!(l.get(x, y), f64::from(img.pixel(x, y)[0]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_count(w in 8usize..90, h in 8usize..90) {
        let img = RasterImage::filled(w, h, [1, 2, 3]);
        let blocks = partition_blocks(&to_luminance(&img)).unwrap();
        prop_assert_eq!(blocks.len(), (w / 8) * (h / 8));
    }

    /// The features pool blocks without regard to position, so swapping two
    /// whole blocks leaves them unchanged up to summation order.
    #[test]
    fn block_permutation_invariance(seed in 0u64..1000, a in 0usize..16, b in 0usize..16) {
        let img = common::random_image(32, 32, seed);
        let (ax, ay, bx, by) = ((a % 4) * 8, (a / 4) * 8, (b % 4) * 8, (b / 4) * 8);
        let swapped = RasterImage::from_fn(32, 32, |x, y| {
            let (bxi, byi) = (x / 8 * 8, y / 8 * 8);
            if (bxi, byi) == (ax, ay) {
                img.pixel(bx + x % 8, by + y % 8)
            } else if (bxi, byi) == (bx, by) {
                img.pixel(ax + x % 8, ay + y % 8)
            } else {
                img.pixel(x, y)
            }
        });
        let p = extract_features(&img, "p").unwrap();
        let q = extract_features(&swapped, "q").unwrap();
        for (u, v) in p.values().iter().zip(q.values()) {
            prop_assert!((u - v).abs() <= 1e-10 * u.max(1.0));
        }
    }

    #[test]
    fn betas_are_finite_and_nonnegative(seed in 0u64..10_000) {
        let v = extract_features(&common::random_image(24, 16, seed), "r").unwrap();
        prop_assert!(v.values().iter().all(|b| b.is_finite() && *b >= 0.0));
    }
}

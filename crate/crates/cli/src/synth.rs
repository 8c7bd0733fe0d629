//! Deterministic synthetic datasets.
//!
//! Travel times: coordinates are drawn uniformly in a box of latitude and
//! longitude degrees around a city centre `x0`, and the shortest-path proxy
//! is `y = a·‖x − x0‖₂·(1 + noise)` seconds with `a = 15000 s/deg` and
//! `noise ~ N(0, 0.1²)` clamped to `[−0.5, 0.5]`.
//!
//! Digits: seven-segment glyphs on a 16×16 canvas with random integer
//! shifts of up to one pixel, per-segment intensity in `[0.6, 1]` and
//! additive `N(0, 0.15²)` pixel noise clipped to `[0, 1]`.

use crate::ingest::{rescale, LabeledImage, CLASSES};
use drcert::DataPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const CENTRE: [f64; 2] = [40.4168, -3.7038];
pub const HALF_SPAN: f64 = 0.075;
pub const SECONDS_PER_DEGREE: f64 = 15_000.0;
pub const CANVAS: usize = 16;

pub fn travel_times(n: usize, seed: u64) -> Vec<DataPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::<f64>::new(0.0, 0.1).expect("valid normal");
    (0..n)
        .map(|_| {
            let x = vec![
                CENTRE[0] + rng.random_range(-HALF_SPAN..HALF_SPAN),
                CENTRE[1] + rng.random_range(-HALF_SPAN..HALF_SPAN),
            ];
            let dist = ((x[0] - CENTRE[0]).powi(2) + (x[1] - CENTRE[1]).powi(2)).sqrt();
            let factor = 1.0 + noise.sample(&mut rng).clamp(-0.5, 0.5);
            DataPoint::regression(x, SECONDS_PER_DEGREE * dist * factor)
        })
        .collect()
}

/// Segments `a..g` lit for each digit.
const SEGMENTS: [[bool; 7]; CLASSES] = [
    [true, true, true, true, true, true, false],
    [false, true, true, false, false, false, false],
    [true, true, false, true, true, false, true],
    [true, true, true, true, false, false, true],
    [false, true, true, false, false, true, true],
    [true, false, true, true, false, true, true],
    [true, false, true, true, true, true, true],
    [true, true, true, false, false, false, false],
    [true, true, true, true, true, true, true],
    [true, true, true, true, false, true, true],
];

/// Pixel rectangles `(row0, row1, col0, col1)` (half-open) of each segment.
const SEGMENT_BOXES: [(i32, i32, i32, i32); 7] = [
    (2, 4, 4, 12),
    (2, 8, 10, 12),
    (8, 14, 10, 12),
    (12, 14, 4, 12),
    (8, 14, 4, 6),
    (2, 8, 4, 6),
    (7, 9, 4, 12),
];

pub fn digit_image(label: usize, rng: &mut ChaCha8Rng) -> LabeledImage {
    let noise = Normal::<f64>::new(0.0, 0.15).expect("valid normal");
    let (dr, dc) = (rng.random_range(-1..=1), rng.random_range(-1..=1));
    let mut pixels = vec![0.0; CANVAS * CANVAS];
    for (seg, &(r0, r1, c0, c1)) in SEGMENT_BOXES.iter().enumerate() {
        let intensity = rng.random_range(0.6..=1.0);
        if !SEGMENTS[label][seg] {
            continue;
        }
        for r in (r0 + dr)..(r1 + dr) {
            for c in (c0 + dc)..(c1 + dc) {
                if (0..CANVAS as i32).contains(&r) && (0..CANVAS as i32).contains(&c) {
                    let px = &mut pixels[r as usize * CANVAS + c as usize];
                    *px = f64::max(*px, intensity);
                }
            }
        }
    }
    for px in pixels.iter_mut() {
        *px = (*px + noise.sample(rng)).clamp(0.0, 1.0);
    }
    LabeledImage { label, side: CANVAS, pixels }
}

/// `n` digits with labels cycling through the classes, rendered at the
/// canvas size and rescaled to `side`.
pub fn digits(n: usize, side: usize, seed: u64) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let im = digit_image(k % CLASSES, &mut rng);
            LabeledImage { label: im.label, side, pixels: rescale(&im.pixels, CANVAS, side) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn travel_times_scale_with_distance() {
        let pts = travel_times(200, 1);
        assert!(pts.iter().all(|p| p.y[0] >= 0.0 && p.y[0] <= 1.5 * SECONDS_PER_DEGREE * HALF_SPAN * 2f64.sqrt()));
        assert_eq!(pts, travel_times(200, 1));
    }

    #[test]
    fn digits_have_expected_shape() {
        let ims = digits(30, 8, 2);
        assert_eq!(ims.len(), 30);
        assert!(ims.iter().all(|im| im.pixels.len() == 64 && im.pixels.iter().all(|v| (0.0..=1.0).contains(v))));
        assert_eq!(ims[13].label, 3);
        let eight = digit_image(8, &mut ChaCha8Rng::seed_from_u64(0));
        let one = digit_image(1, &mut ChaCha8Rng::seed_from_u64(0));
        let ink = |im: &LabeledImage| im.pixels.iter().sum::<f64>();
        assert!(ink(&eight) > ink(&one));
    }
}

//! Weight-free extractor: an 8×8×8 joint RGB histogram (512 values, summing
//! to one) followed by an 8×8 average-pooled grayscale thumbnail (64 values).

use crate::dataset::ImageTensor;

pub const HISTOGRAM_BINS: usize = 8;
pub const THUMBNAIL_SIDE: usize = 8;
pub const BASELINE_DIM: usize = HISTOGRAM_BINS * HISTOGRAM_BINS * HISTOGRAM_BINS + THUMBNAIL_SIDE * THUMBNAIL_SIDE;

pub(crate) const BASELINE_ID: &str = "baseline:histogram8x8x8+thumbnail8x8:v1";

fn bin(v: f32) -> usize {
    ((v * HISTOGRAM_BINS as f32).floor() as usize).min(HISTOGRAM_BINS - 1)
}

/// Histogram cell `(r, g, b)` lives at `r * 64 + g * 8 + b`.
pub fn baseline_extract(img: &ImageTensor) -> Vec<f64> {
    let mut out = vec![0f64; BASELINE_DIM];
    let total = (img.height() * img.width()) as f64;

    let mut counts = vec![0u64; HISTOGRAM_BINS.pow(3)];
    for px in img.pixels().chunks_exact(3) {
        let cell = (bin(px[0]) * HISTOGRAM_BINS + bin(px[1])) * HISTOGRAM_BINS + bin(px[2]);
        counts[cell] += 1;
    }
    for (o, &c) in out.iter_mut().zip(&counts) {
        *o = c as f64 / total;
    }

    let thumb = &mut out[HISTOGRAM_BINS.pow(3)..];
    let rows = block_bounds(img.height());
    let cols = block_bounds(img.width());
    for (by, &(y0, y1)) in rows.iter().enumerate() {
        for (bx, &(x0, x1)) in cols.iter().enumerate() {
            let mut sum = 0f64;
            for y in y0..y1 {
                for x in x0..x1 {
                    let [r, g, b] = img.pixel(y, x);
                    sum += (f64::from(r) + f64::from(g) + f64::from(b)) / 3.0;
                }
            }
            thumb[by * THUMBNAIL_SIDE + bx] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    out
}

// Block i covers [floor(i*n/8), floor((i+1)*n/8)), widened to one pixel for
// images narrower than the thumbnail.
fn block_bounds(n: usize) -> Vec<(usize, usize)> {
    (0..THUMBNAIL_SIDE)
        .map(|i| {
            let start = (i * n / THUMBNAIL_SIDE).min(n - 1);
            let end = ((i + 1) * n / THUMBNAIL_SIDE).max(start + 1).min(n);
            (start, end)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    #[test]
    fn solid_red() {
        let f = baseline_extract(&ImageTensor::solid(224, 224, [1.0, 0.0, 0.0]));
        assert_eq!(f.len(), 576);
        let red_cell = 7 * 64;
        for (i, &v) in f[..512].iter().enumerate() {
            assert_eq!(v, if i == red_cell { 1.0 } else { 0.0 });
        }
        assert!(f[512..].iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn solid_black() {
        let f = baseline_extract(&ImageTensor::solid(224, 224, [0.0; 3]));
        assert_eq!(f[0], 1.0);
        assert!(f[1..512].iter().all(|&v| v == 0.0));
        assert!(f[512..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn block_bounds_cover_axis() {
        assert_eq!(block_bounds(224)[7], (196, 224));
        assert_eq!(block_bounds(4)[0], (0, 1));
        assert!(block_bounds(4).iter().all(|&(a, b)| b > a && b <= 4));
    }

    fn random_image(seed: u64, h: usize, w: usize) -> ImageTensor {
        let mut rng = SeededRng::new(seed);
        let pixels = (0..h * w * 3).map(|_| rng.next_f64() as f32).collect();
        ImageTensor::new(h, w, pixels).unwrap()
    }

    proptest! {
        #[test]
        fn histogram_matches_bruteforce_binning(seed: u64, h in 1usize..30, w in 1usize..30) {
            let img = random_image(seed, h, w);
            let f = baseline_extract(&img);
            // Oracle: count each cell independently by scanning every pixel.
            let mut brute = vec![0f64; 512];
            for y in 0..h {
                for x in 0..w {
                    let p = img.pixel(y, x);
                    let idx: Vec<usize> = p.iter().map(|&v| ((v * 8.0) as usize).min(7)).collect();
                    brute[idx[0] * 64 + idx[1] * 8 + idx[2]] += 1.0;
                }
            }
            for (a, b) in f[..512].iter().zip(&brute) {
                prop_assert!((a - b / (h * w) as f64).abs() < 1e-15);
            }
            let sum: f64 = f[..512].iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(f.iter().all(|v| v.is_finite()));
        }

        #[test]
        fn bit_deterministic(seed: u64) {
            let img = random_image(seed, 16, 16);
            let a: Vec<u64> = baseline_extract(&img).iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = baseline_extract(&img).iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}

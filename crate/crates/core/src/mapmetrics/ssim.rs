//! Structural similarity over a uniform sliding window.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::gridmap::OccupancyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimConfig {
    /// Side length of the square window in cells.
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 7,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

/// Summed-area table with one extra leading row and column of zeros.
struct Integral {
    w: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(w: usize, h: usize, value: impl Fn(usize) -> f64) -> Self {
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += value(y * w + x);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Self { w, data }
    }

    fn window_sum(&self, x0: usize, y0: usize, n: usize) -> f64 {
        let s = self.w + 1;
        let (x1, y1) = (x0 + n, y0 + n);
        self.data[y1 * s + x1] - self.data[y0 * s + x1] - self.data[y1 * s + x0] + self.data[y0 * s + x0]
    }
}

/// Mean SSIM over every fully contained window of two 8-bit rasters
/// (population statistics within each window).
pub fn ssim_pixels(a: &[u8], b: &[u8], width: usize, height: usize, config: &SsimConfig) -> Result<f64, EvalError> {
    if a.len() != width * height || b.len() != width * height {
        return Err(EvalError::InvalidInput("pixel buffer does not match dimensions".into()));
    }
    let n = config.window;
    if n == 0 || n > width || n > height {
        return Err(EvalError::InvalidInput(format!(
            "window {n} does not fit a {width}x{height} image"
        )));
    }
    let c1 = (config.k1 * config.dynamic_range).powi(2);
    let c2 = (config.k2 * config.dynamic_range).powi(2);
    let sa = Integral::new(width, height, |i| a[i] as f64);
    let sb = Integral::new(width, height, |i| b[i] as f64);
    let saa = Integral::new(width, height, |i| (a[i] as f64).powi(2));
    let sbb = Integral::new(width, height, |i| (b[i] as f64).powi(2));
    let sab = Integral::new(width, height, |i| a[i] as f64 * b[i] as f64);
    let area = (n * n) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for y in 0..=height - n {
        for x in 0..=width - n {
            // window sums of integer pixels are exact, so these numerators are too
            let (ta, tb) = (sa.window_sum(x, y, n), sb.window_sum(x, y, n));
            let mu_a = ta / area;
            let mu_b = tb / area;
            let var_a = (area * saa.window_sum(x, y, n) - ta * ta) / (area * area);
            let var_b = (area * sbb.window_sum(x, y, n) - tb * tb) / (area * area);
            let cov = (area * sab.window_sum(x, y, n) - ta * tb) / (area * area);
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// SSIM of the 8-bit map encodings (occupied 0, unknown 205, free 254).
pub fn ssim(candidate: &OccupancyGrid, reference: &OccupancyGrid, config: &SsimConfig) -> Result<f64, EvalError> {
    if candidate.width() != reference.width() || candidate.height() != reference.height() {
        return Err(EvalError::DimensionMismatch(
            candidate.width(),
            candidate.height(),
            reference.width(),
            reference.height(),
        ));
    }
    ssim_pixels(
        &candidate.to_pixels(),
        &reference.to_pixels(),
        candidate.width(),
        candidate.height(),
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use crate::gridmap::CellState;
    use proptest::prelude::*;

    #[test]
    fn constant_black_vs_white() {
        let cfg = SsimConfig::default();
        let a = vec![0u8; 100];
        let b = vec![255u8; 100];
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = c1 / (255.0f64.powi(2) + c1);
        let s = ssim_pixels(&a, &b, 10, 10, &cfg).unwrap();
        assert!((s - expected).abs() < 1e-9);
        assert!((expected - 1.0e-4).abs() < 1e-6);
    }

    #[test]
    fn dimension_and_window_errors() {
        let cfg = SsimConfig::default();
        let a = OccupancyGrid::filled(10, 10, 0.1, Pose2D::default(), CellState::Free).unwrap();
        let b = OccupancyGrid::filled(10, 11, 0.1, Pose2D::default(), CellState::Free).unwrap();
        assert!(matches!(ssim(&a, &b, &cfg), Err(EvalError::DimensionMismatch(..))));
        let small = OccupancyGrid::filled(5, 5, 0.1, Pose2D::default(), CellState::Free).unwrap();
        assert!(ssim(&small, &small, &cfg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn bounded_symmetric_and_reflexive(
            w in 7usize..20, h in 7usize..20,
            seed in any::<u64>(),
        ) {
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 56) as u8 };
            let a: Vec<u8> = (0..w * h).map(|_| next()).collect();
            let b: Vec<u8> = (0..w * h).map(|_| next()).collect();
            let cfg = SsimConfig::default();
            let ab = ssim_pixels(&a, &b, w, h, &cfg).unwrap();
            let ba = ssim_pixels(&b, &a, w, h, &cfg).unwrap();
            prop_assert!((-1.0..=1.0).contains(&ab));
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((ssim_pixels(&a, &a, w, h, &cfg).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}

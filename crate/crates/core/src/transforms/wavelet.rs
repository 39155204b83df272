//! Orthonormal separable 2-D discrete wavelet transform with periodic
//! boundary handling.
//!
//! Each level filters the rows then the columns of the current approximation
//! block with a quadrature-mirror pair and downsamples by two; the next level
//! recurses on the top-left quadrant. The analysis operator is orthonormal,
//! so the synthesis transform is its exact transpose and `W^H W = I` to
//! machine precision. Real and imaginary parts transform independently
//! (the filter taps are real).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ComplexImage;

/// Filter bank and level count for [`dwt2`] / [`idwt2`].
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletSpec {
    taps: Vec<f64>,
    levels: usize,
}

impl WaveletSpec {
    /// Validates an orthonormal lowpass filter: even tap count,
    /// `sum taps = sqrt(2)` and `sum taps^2 = 1` (to 1e-12).
    pub fn new(taps: Vec<f64>, levels: usize) -> Result<Self> {
        if taps.len() < 2 || taps.len() % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "wavelet filter needs an even tap count >= 2, got {}",
                taps.len()
            )));
        }
        if levels == 0 {
            return Err(Error::InvalidParams("wavelet levels must be at least 1".into()));
        }
        let sum: f64 = taps.iter().sum();
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-12 || (energy - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "wavelet taps not orthonormally scaled: sum = {sum}, energy = {energy}"
            )));
        }
        Ok(Self { taps, levels })
    }

    /// Daubechies 4-tap orthonormal filter.
    pub fn daubechies4(levels: usize) -> Self {
        let s3 = 3f64.sqrt();
        let d = 4.0 * 2f64.sqrt();
        let taps = vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d];
        Self::new(taps, levels).expect("daubechies4 taps are orthonormal")
    }

    /// Lowpass analysis taps.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Decomposition depth.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Highpass taps by alternating flip: `g[k] = (-1)^k h[L-1-k]`.
    fn highpass(&self) -> Vec<f64> {
        let l = self.taps.len();
        (0..l)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * self.taps[l - 1 - k]
            })
            .collect()
    }

    /// Checks that `m` and `n` are divisible by `2^levels`.
    pub fn validate_dims(&self, m: usize, n: usize) -> Result<()> {
        let div = 1usize
            .checked_shl(self.levels as u32)
            .ok_or_else(|| Error::InvalidParams(format!("wavelet levels {} too large", self.levels)))?;
        if m % div != 0 || n % div != 0 {
            return Err(Error::DimensionNotDivisible { m, n, levels: self.levels });
        }
        Ok(())
    }
}

/// One periodized analysis step on a lane of even length: first half of the
/// output is the approximation, second half the detail.
fn analyze_lane(lane: &mut [Complex64], lo: &[f64], hi: &[f64], tmp: &mut [Complex64]) {
    let l = lane.len();
    let half = l / 2;
    for i in 0..half {
        let mut a = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for (k, (&hl, &hh)) in lo.iter().zip(hi).enumerate() {
            let v = lane[(2 * i + k) % l];
            a += v * hl;
            d += v * hh;
        }
        tmp[i] = a;
        tmp[half + i] = d;
    }
    lane.copy_from_slice(&tmp[..l]);
}

/// Transpose of [`analyze_lane`].
fn synthesize_lane(lane: &mut [Complex64], lo: &[f64], hi: &[f64], tmp: &mut [Complex64]) {
    let l = lane.len();
    let half = l / 2;
    for v in tmp[..l].iter_mut() {
        *v = Complex64::new(0.0, 0.0);
    }
    for i in 0..half {
        let a = lane[i];
        let d = lane[half + i];
        for (k, (&hl, &hh)) in lo.iter().zip(hi).enumerate() {
            tmp[(2 * i + k) % l] += a * hl + d * hh;
        }
    }
    lane.copy_from_slice(&tmp[..l]);
}

/// Multi-level forward transform; approximation lands in the top-left
/// `m/2^levels x n/2^levels` block, details in the standard quadrant layout.
pub fn dwt2(img: &ComplexImage, spec: &WaveletSpec) -> Result<ComplexImage> {
    let (m, n) = (img.rows(), img.cols());
    spec.validate_dims(m, n)?;
    let lo = spec.taps().to_vec();
    let hi = spec.highpass();
    let mut data = img.data().to_vec();
    let mut tmp = vec![Complex64::new(0.0, 0.0); m.max(n)];
    let mut col = vec![Complex64::new(0.0, 0.0); m];

    for level in 0..spec.levels() {
        let mc = m >> level;
        let nc = n >> level;
        for r in 0..mc {
            analyze_lane(&mut data[r * n..r * n + nc], &lo, &hi, &mut tmp);
        }
        for c in 0..nc {
            for r in 0..mc {
                col[r] = data[r * n + c];
            }
            analyze_lane(&mut col[..mc], &lo, &hi, &mut tmp);
            for r in 0..mc {
                data[r * n + c] = col[r];
            }
        }
    }
    ComplexImage::new(m, n, data)
}

/// Exact inverse (and adjoint) of [`dwt2`].
pub fn idwt2(coeffs: &ComplexImage, spec: &WaveletSpec) -> Result<ComplexImage> {
    let (m, n) = (coeffs.rows(), coeffs.cols());
    spec.validate_dims(m, n)?;
    let lo = spec.taps().to_vec();
    let hi = spec.highpass();
    let mut data = coeffs.data().to_vec();
    let mut tmp = vec![Complex64::new(0.0, 0.0); m.max(n)];
    let mut col = vec![Complex64::new(0.0, 0.0); m];

    for level in (0..spec.levels()).rev() {
        let mc = m >> level;
        let nc = n >> level;
        for c in 0..nc {
            for r in 0..mc {
                col[r] = data[r * n + c];
            }
            synthesize_lane(&mut col[..mc], &lo, &hi, &mut tmp);
            for r in 0..mc {
                data[r * n + c] = col[r];
            }
        }
        for r in 0..mc {
            synthesize_lane(&mut data[r * n..r * n + nc], &lo, &hi, &mut tmp);
        }
    }
    ComplexImage::new(m, n, data)
}

//! Unitary, non-centered 2-D discrete Fourier transforms.
//!
//! Both directions carry the 1/sqrt(m*n) scale, so `fft2` is unitary and
//! `ifft2` is simultaneously its inverse and its adjoint. The DC component
//! sits at index (0, 0); nothing is fftshifted.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::model::ComplexImage;

/// Process-wide plan cache; planning is much slower than executing for the
/// small repeated lengths this crate uses.
fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (len, direction == FftDirection::Forward);
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(key)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            planner.plan_fft(len, direction)
        })
        .clone()
}

/// Unitary forward 2-D DFT: X[p,q] = 1/sqrt(mn) * sum x[i,j] e^{-2pi i (pi/m + qj/n)}.
pub fn fft2(img: &ComplexImage) -> ComplexImage {
    transform(img, FftDirection::Forward)
}

/// Unitary inverse 2-D DFT; exact inverse and adjoint of [`fft2`].
pub fn ifft2(img: &ComplexImage) -> ComplexImage {
    transform(img, FftDirection::Inverse)
}

fn transform(img: &ComplexImage, direction: FftDirection) -> ComplexImage {
    let (m, n) = (img.rows(), img.cols());
    let mut data = img.data().to_vec();

    let row_fft = plan(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); row_fft.get_inplace_scratch_len()];
    for r in 0..m {
        row_fft.process_with_scratch(&mut data[r * n..(r + 1) * n], &mut scratch);
    }

    let col_fft = plan(m, direction);
    scratch.resize(col_fft.get_inplace_scratch_len().max(1), Complex64::new(0.0, 0.0));
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for c in 0..n {
        for r in 0..m {
            col[r] = data[r * n + c];
        }
        col_fft.process_with_scratch(&mut col, &mut scratch);
        for r in 0..m {
            data[r * n + c] = col[r];
        }
    }

    let scale = 1.0 / ((m * n) as f64).sqrt();
    for v in &mut data {
        *v *= scale;
    }
    ComplexImage::new(m, n, data).expect("transform preserves shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(m: usize, n: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(m, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    #[test]
    fn impulse_transforms_to_constant_plane() {
        let mut img = ComplexImage::zeros(4, 4);
        img.set(0, 0, Complex64::new(1.0, 0.0));
        let spec = fft2(&img);
        for v in spec.data() {
            assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-14, "got {v}");
        }
    }

    #[test]
    fn round_trip_and_norm_preservation() {
        for &(m, n, seed) in &[(4usize, 4usize, 1u64), (8, 8, 2), (16, 12, 3), (64, 64, 4)] {
            let x = random_image(m, n, seed);
            let fx = fft2(&x);
            assert!(
                (fx.norm2() - x.norm2()).abs() / x.norm2() <= 1e-12,
                "unitarity violated at {m}x{n}"
            );
            let back = ifft2(&fx);
            let err = (&back - &x).norm2() / x.norm2();
            assert!(err <= 1e-12, "round trip error {err} at {m}x{n}");
        }
    }

    #[test]
    fn ifft2_is_adjoint_of_fft2() {
        let u = random_image(8, 8, 5);
        let v = random_image(8, 8, 6);
        let lhs = fft2(&u).dot(&v);
        let rhs = u.dot(&ifft2(&v));
        assert!((lhs - rhs).norm() <= 1e-12 * u.norm2() * v.norm2());
    }

    #[test]
    fn dc_sample_is_mean_scaled() {
        let x = random_image(8, 8, 7);
        let sum: Complex64 = x.data().iter().sum();
        let spec = fft2(&x);
        assert!((spec.at(0, 0) - sum / 8.0).norm() < 1e-13);
    }
}

//! Circulant and Jacobi preconditioners for the inner linear system.
//!
//! The system operator `A` (see [`crate::encoding`]) is not circulant because
//! sensitivity weighting and sampling do not commute with the DFT, but it is
//! close to circulant. The best circulant approximation in the Frobenius
//! sense is `M = F^H diag(k) F` with `k = diag(F A F^H)`, and every entry of
//! `k` has a closed form that costs a handful of FFTs to evaluate:
//!
//! * the difference penalties are exactly diagonalized by `F` with symbol
//!   `k_d[p, q] = 4 - 2 cos(2 pi p / m) - 2 cos(2 pi q / n)`;
//! * `gamma W^H W = gamma I` contributes the constant `gamma`;
//! * for the data term, `F S_i F^H` is circulant with kernel
//!   `g_i = fft2(s_i) / sqrt(N)`, so the diagonal of `(F S_i F^H)^H R (F S_i F^H)`
//!   is the circular correlation `k[j] = sum_d |g_i[d]|^2 r[j + d]` of the
//!   kernel power with the mask. Summed over coils and evaluated with the
//!   correlation theorem this is
//!
//!   ```text
//!     w   = sum_i |fft2(s_i)|^2
//!     k_c = ifft2(conj(fft2(w)) .* fft2(r)) / sqrt(N)
//!   ```
//!
//!   (`w = N h` absorbs one factor of `sqrt(N)` from the unitary convolution
//!   theorem, leaving the single `1 / sqrt(N)` above).
//!
//! Applying `M^{-1}` costs two FFTs and one pointwise product. The Jacobi
//! alternative `diag(A)` also has a closed form here: sampling contributes
//! the constant fraction `f = sampled / N` to every image pixel, so
//! `diag(A)[j] = mu f sum_i |s_i[j]|^2 + 4 lambda + gamma`, which is nearly
//! constant for normalized sensitivities and therefore barely changes the
//! conjugate gradient trajectory.

use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CoilSet, ComplexImage, ReconParams, SamplingMask};
use crate::transforms::{fft2, ifft2, k_d_diag};

/// Any diagonal entry at or below this magnitude makes the preconditioner
/// unusable and is reported as an error instead of being inverted.
pub const SINGULAR_TOL: f64 = 1e-14;

/// Preconditioner selection as exposed on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecondKind {
    None,
    Jacobi,
    Circulant,
}

impl FromStr for PrecondKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "jacobi" => Ok(Self::Jacobi),
            "circulant" => Ok(Self::Circulant),
            other => Err(Error::InvalidParams(format!(
                "unknown preconditioner {other:?}, expected none, jacobi or circulant"
            ))),
        }
    }
}

impl std::fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Jacobi => "jacobi",
            Self::Circulant => "circulant",
        })
    }
}

fn check_geometry(sens: &CoilSet, mask: &SamplingMask) -> Result<()> {
    if sens.rows() != mask.rows() || sens.cols() != mask.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sensitivities are {}x{} but mask is {}x{}",
            sens.rows(),
            sens.cols(),
            mask.rows(),
            mask.cols()
        )));
    }
    Ok(())
}

/// DFT-domain diagonal of the circulant approximation to the data term
/// `sum_i (R F S_i)^H (R F S_i)`. The result is real and nonnegative up to
/// rounding; the small imaginary residue of the FFT evaluation is dropped.
pub fn k_c_diag(sens: &CoilSet, mask: &SamplingMask) -> Result<Vec<f64>> {
    check_geometry(sens, mask)?;
    let (m, n) = (sens.rows(), sens.cols());
    let mut w = vec![0.0f64; m * n];
    for i in 0..sens.ncoils() {
        let spectrum = fft2(sens.coil(i));
        for (acc, v) in w.iter_mut().zip(spectrum.data()) {
            *acc += v.norm_sqr();
        }
    }
    let w_image = ComplexImage::new(m, n, w.iter().map(|&v| Complex64::new(v, 0.0)).collect())?;
    let f_w = fft2(&w_image);
    let f_r = fft2(&mask.to_image());
    let scale = 1.0 / ((m * n) as f64).sqrt();
    let product = ComplexImage::new(
        m,
        n,
        f_w.data()
            .iter()
            .zip(f_r.data())
            .map(|(a, b)| a.conj() * b * scale)
            .collect(),
    )?;
    Ok(ifft2(&product).data().iter().map(|v| v.re).collect())
}

/// `M = F^H diag(k) F` with `k = mu k_c + lambda k_d + gamma`; applying the
/// inverse costs two FFTs and one pointwise product.
#[derive(Clone, Debug)]
pub struct CirculantPreconditioner {
    m: usize,
    n: usize,
    k: Vec<f64>,
    k_inv: Vec<f64>,
    build_seconds: f64,
}

impl CirculantPreconditioner {
    /// Assembles the DFT-domain diagonal. Requires `gamma > 0` so that the
    /// wavelet identity term keeps the diagonal bounded away from zero; a
    /// vanishing entry is still guarded against and reported.
    pub fn build(sens: &CoilSet, mask: &SamplingMask, params: &ReconParams) -> Result<Self> {
        let start = Instant::now();
        params.validate()?;
        if params.gamma <= 0.0 {
            return Err(Error::InvalidParams(
                "the circulant preconditioner requires gamma > 0".into(),
            ));
        }
        check_geometry(sens, mask)?;
        let (m, n) = (sens.rows(), sens.cols());
        let k_c = k_c_diag(sens, mask)?;
        let k_d = k_d_diag(m, n);
        let mut k = vec![0.0f64; m * n];
        for j in 0..m * n {
            k[j] = params.mu * k_c[j] + params.lambda * k_d.data()[j].re + params.gamma;
        }
        if let Some((j, &v)) = k.iter().enumerate().find(|(_, v)| v.abs() <= SINGULAR_TOL) {
            return Err(Error::SingularPreconditioner(format!(
                "diagonal entry {j} is {v:.3e}, magnitude at or below {SINGULAR_TOL:.0e}"
            )));
        }
        let k_inv = k.iter().map(|&v| 1.0 / v).collect();
        Ok(Self { m, n, k, k_inv, build_seconds: start.elapsed().as_secs_f64() })
    }

    /// Solves `M z = r` as `z = ifft2(k^{-1} .* fft2(r))`.
    pub fn apply(&self, r: &ComplexImage) -> ComplexImage {
        assert!(
            r.rows() == self.m && r.cols() == self.n,
            "preconditioner built for {}x{}, applied to {}x{}",
            self.m,
            self.n,
            r.rows(),
            r.cols()
        );
        let mut spectrum = fft2(r);
        for (v, &inv) in spectrum.data_mut().iter_mut().zip(&self.k_inv) {
            *v *= inv;
        }
        ifft2(&spectrum)
    }

    /// DFT-domain diagonal `k` (row-major, zero frequency first).
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Wall-clock seconds spent in [`Self::build`].
    pub fn build_seconds(&self) -> f64 {
        self.build_seconds
    }
}

/// `M = diag(A)`, evaluated from the closed form
/// `diag(A)[j] = mu f sum_i |s_i[j]|^2 + 4 lambda + gamma` with
/// `f = sampled / N`.
#[derive(Clone, Debug)]
pub struct JacobiPreconditioner {
    m: usize,
    n: usize,
    diag: Vec<f64>,
    diag_inv: Vec<f64>,
    build_seconds: f64,
}

impl JacobiPreconditioner {
    /// Assembles `diag(A)` without touching the operator itself.
    pub fn build(sens: &CoilSet, mask: &SamplingMask, params: &ReconParams) -> Result<Self> {
        let start = Instant::now();
        params.validate()?;
        check_geometry(sens, mask)?;
        let (m, n) = (sens.rows(), sens.cols());
        let f = mask.sampled_count() as f64 / (m * n) as f64;
        let mut diag = vec![4.0 * params.lambda + params.gamma; m * n];
        for i in 0..sens.ncoils() {
            for (d, v) in diag.iter_mut().zip(sens.coil(i).data()) {
                *d += params.mu * f * v.norm_sqr();
            }
        }
        if let Some((j, &v)) = diag.iter().enumerate().find(|(_, v)| v.abs() <= SINGULAR_TOL) {
            return Err(Error::SingularPreconditioner(format!(
                "diagonal entry {j} is {v:.3e}, magnitude at or below {SINGULAR_TOL:.0e}"
            )));
        }
        let diag_inv = diag.iter().map(|&v| 1.0 / v).collect();
        Ok(Self { m, n, diag, diag_inv, build_seconds: start.elapsed().as_secs_f64() })
    }

    /// Solves `M z = r` pointwise.
    pub fn apply(&self, r: &ComplexImage) -> ComplexImage {
        assert!(
            r.rows() == self.m && r.cols() == self.n,
            "preconditioner built for {}x{}, applied to {}x{}",
            self.m,
            self.n,
            r.rows(),
            r.cols()
        );
        let data = r.data().iter().zip(&self.diag_inv).map(|(v, &inv)| v * inv).collect();
        ComplexImage::new(self.m, self.n, data).expect("shape preserved")
    }

    /// Image-domain diagonal of `A` (row-major).
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Wall-clock seconds spent in [`Self::build`].
    pub fn build_seconds(&self) -> f64 {
        self.build_seconds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MaskKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_coil(m: usize, n: usize) -> CoilSet {
        CoilSet::new(vec![ComplexImage::from_fn(m, n, |_, _| Complex64::new(1.0, 0.0))]).unwrap()
    }

    fn random_coils(m: usize, n: usize, ncoils: usize, seed: u64) -> CoilSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CoilSet::new(
            (0..ncoils)
                .map(|_| {
                    ComplexImage::from_fn(m, n, |_, _| {
                        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                    })
                })
                .collect(),
        )
        .unwrap()
    }

    fn full_mask(m: usize, n: usize) -> SamplingMask {
        SamplingMask::from_cells(m, n, vec![1; m * n], 1.0, MaskKind::Random, 0).unwrap()
    }

    fn checker_mask(m: usize, n: usize) -> SamplingMask {
        let cells = (0..m * n).map(|j| ((j / n + j % n) % 2) as u8).collect();
        SamplingMask::from_cells(m, n, cells, 2.0, MaskKind::Random, 0).unwrap()
    }

    #[test]
    fn uniform_coil_full_mask_gives_unit_data_diagonal() {
        let k_c = k_c_diag(&uniform_coil(8, 8), &full_mask(8, 8)).unwrap();
        for v in k_c {
            assert!((v - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn uniform_coil_reproduces_the_mask() {
        let mask = checker_mask(4, 6);
        let k_c = k_c_diag(&uniform_coil(4, 6), &mask).unwrap();
        for (j, v) in k_c.iter().enumerate() {
            assert!((v - mask.cells()[j] as f64).abs() <= 1e-12, "cell {j}: {v}");
        }
    }

    #[test]
    fn k_c_matches_direct_correlation() {
        let (m, n) = (4, 6);
        let sens = random_coils(m, n, 2, 9);
        let mask = checker_mask(m, n);
        let k_c = k_c_diag(&sens, &mask).unwrap();

        // Reference: k[j] = sum_d h[d] r[j + d] with h the mean kernel power.
        let nn = (m * n) as f64;
        let mut h = vec![0.0f64; m * n];
        for i in 0..sens.ncoils() {
            let spectrum = fft2(sens.coil(i));
            for (acc, v) in h.iter_mut().zip(spectrum.data()) {
                *acc += v.norm_sqr() / nn;
            }
        }
        for p in 0..m {
            for q in 0..n {
                let mut expected = 0.0;
                for a in 0..m {
                    for b in 0..n {
                        let r = mask.cells()[((p + a) % m) * n + (q + b) % n] as f64;
                        expected += h[a * n + b] * r;
                    }
                }
                let got = k_c[p * n + q];
                assert!((got - expected).abs() <= 1e-12, "({p},{q}): {got} vs {expected}");
            }
        }
    }

    #[test]
    fn circulant_apply_inverts_a_known_diagonal() {
        // Uniform coil and full mask with mu = gamma = 1, lambda = 0 make
        // k identically 2, so applying the inverse halves the input.
        let mut params = ReconParams::set1();
        params.mu = 1.0;
        params.lambda = 0.0;
        params.gamma = 1.0;
        params.wavelet_levels = 1;
        let pre = CirculantPreconditioner::build(&uniform_coil(8, 8), &full_mask(8, 8), &params).unwrap();
        for v in pre.k() {
            assert!((v - 2.0).abs() <= 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = ComplexImage::from_fn(8, 8, |_, _| Complex64::new(rng.gen(), rng.gen()));
        let z = pre.apply(&r);
        assert!((&z - &r.scaled(Complex64::new(0.5, 0.0))).max_abs() <= 1e-12);
    }

    #[test]
    fn doubling_all_weights_exactly_doubles_the_diagonal() {
        let sens = random_coils(8, 8, 3, 21);
        let mask = checker_mask(8, 8);
        let p1 = ReconParams::set1();
        let mut p2 = ReconParams::set1();
        p2.mu *= 2.0;
        p2.lambda *= 2.0;
        p2.gamma *= 2.0;
        let a = CirculantPreconditioner::build(&sens, &mask, &p1).unwrap();
        let b = CirculantPreconditioner::build(&sens, &mask, &p2).unwrap();
        for (x, y) in a.k().iter().zip(b.k()) {
            assert_eq!(2.0 * x, *y, "scaling by two must be exact");
        }
    }

    #[test]
    fn gamma_zero_is_rejected() {
        let mut params = ReconParams::set1();
        params.gamma = 0.0;
        let err = CirculantPreconditioner::build(&uniform_coil(4, 4), &full_mask(4, 4), &params);
        assert!(matches!(err, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn vanishing_diagonal_is_rejected() {
        let mut params = ReconParams::set1();
        params.mu = 0.0;
        params.lambda = 0.0;
        params.gamma = 1e-20;
        let err = CirculantPreconditioner::build(&uniform_coil(4, 4), &full_mask(4, 4), &params);
        assert!(matches!(err, Err(Error::SingularPreconditioner(_))));
    }

    #[test]
    fn jacobi_closed_form_and_apply() {
        // One uniform coil, half the cells sampled: diag = mu/2 + 4 lambda + gamma.
        let params = ReconParams::set1();
        let pre = JacobiPreconditioner::build(&uniform_coil(4, 6), &checker_mask(4, 6), &params).unwrap();
        let expected = params.mu * 0.5 + 4.0 * params.lambda + params.gamma;
        for v in pre.diag() {
            assert!((v - expected).abs() <= 1e-15);
        }
        let r = ComplexImage::from_fn(4, 6, |i, j| Complex64::new(i as f64, j as f64));
        let z = pre.apply(&r);
        assert!((&z - &r.scaled(Complex64::new(1.0 / expected, 0.0))).max_abs() <= 1e-12);
    }

    #[test]
    fn precond_kind_parses_and_prints() {
        assert_eq!("none".parse::<PrecondKind>().unwrap(), PrecondKind::None);
        assert_eq!("jacobi".parse::<PrecondKind>().unwrap(), PrecondKind::Jacobi);
        assert_eq!("circulant".parse::<PrecondKind>().unwrap(), PrecondKind::Circulant);
        assert!("circ".parse::<PrecondKind>().is_err());
        assert_eq!(PrecondKind::Circulant.to_string(), "circulant");
    }
}

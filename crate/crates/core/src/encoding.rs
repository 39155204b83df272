//! The coil-wise encoding model and the Split Bregman system operator.
//!
//! Per coil, the forward model measures `R F S_i x`: sensitivity weighting,
//! unitary DFT, then the binary sampling mask. The inner linear system of the
//! reconstruction applies
//!
//! ```text
//!   A x = mu * sum_i (R F S_i)^H (R F S_i) x
//!       + lambda * (D_x^H D_x + D_y^H D_y) x + gamma * x
//! ```
//!
//! where the wavelet term `gamma W^H W` is folded to `gamma I` because `W` is
//! orthonormal. `A` is Hermitian positive semi-definite by construction and
//! positive definite whenever `gamma > 0`. Everything is matrix-free: one
//! forward/adjoint pass costs two FFTs per coil. Terms whose weight is
//! exactly zero are skipped entirely.
//!
//! Coil sums accumulate sequentially in coil order, so repeated runs produce
//! bitwise-identical results.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CoilSet, ComplexImage, ReconParams, SamplingMask};
use crate::transforms::{dx, dx_adj, dy, dy_adj, fft2, idwt2, ifft2, WaveletSpec};

/// Immutable bundle of everything the operators need: sensitivities, mask,
/// weights and the wavelet configuration.
#[derive(Clone, Debug)]
pub struct EncodingContext {
    sens: CoilSet,
    mask: SamplingMask,
    mask_image: ComplexImage,
    params: ReconParams,
    wavelet: WaveletSpec,
}

impl EncodingContext {
    /// Validates parameter ranges and dimension agreement. The wavelet
    /// divisibility constraint applies only when `gamma > 0` (otherwise the
    /// wavelet branch never runs).
    pub fn new(
        sens: CoilSet,
        mask: SamplingMask,
        params: ReconParams,
        wavelet: WaveletSpec,
    ) -> Result<Self> {
        params.validate()?;
        if sens.rows() != mask.rows() || sens.cols() != mask.cols() {
            return Err(Error::DimensionMismatch(format!(
                "sensitivities are {}x{} but mask is {}x{}",
                sens.rows(),
                sens.cols(),
                mask.rows(),
                mask.cols()
            )));
        }
        let mask_image = mask.to_image();
        if params.gamma > 0.0 {
            let spec = WaveletSpec::new(wavelet.taps().to_vec(), params.wavelet_levels)?;
            spec.validate_dims(sens.rows(), sens.cols())?;
            return Ok(Self { sens, mask, mask_image, params, wavelet: spec });
        }
        Ok(Self { sens, mask, mask_image, params, wavelet })
    }

    /// Normalized coil sensitivities.
    pub fn sens(&self) -> &CoilSet {
        &self.sens
    }

    /// Sampling mask.
    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    /// Reconstruction weights and loop configuration.
    pub fn params(&self) -> &ReconParams {
        &self.params
    }

    /// Wavelet configuration used by the gamma branch.
    pub fn wavelet(&self) -> &WaveletSpec {
        &self.wavelet
    }

    /// Image rows.
    pub fn rows(&self) -> usize {
        self.sens.rows()
    }

    /// Image columns.
    pub fn cols(&self) -> usize {
        self.sens.cols()
    }

    /// Coil count.
    pub fn ncoils(&self) -> usize {
        self.sens.ncoils()
    }

    fn check_image(&self, x: &ComplexImage, what: &str) -> Result<()> {
        if x.rows() != self.rows() || x.cols() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{what} is {}x{}, expected {}x{}",
                x.rows(),
                x.cols(),
                self.rows(),
                self.cols()
            )));
        }
        Ok(())
    }

    fn check_coil(&self, i: usize) -> Result<()> {
        if i >= self.ncoils() {
            return Err(Error::CoilIndexOutOfRange { index: i, ncoils: self.ncoils() });
        }
        Ok(())
    }
}

/// Measures coil `i` (0-based): `mask .* fft2(s_i .* x)`.
pub fn forward_coil(x: &ComplexImage, ctx: &EncodingContext, i: usize) -> Result<ComplexImage> {
    ctx.check_image(x, "image")?;
    ctx.check_coil(i)?;
    let weighted = ctx.sens.coil(i).hadamard(x);
    Ok(fft2(&weighted).hadamard(&ctx.mask_image))
}

/// Exact adjoint of [`forward_coil`]: `conj(s_i) .* ifft2(mask .* y)`.
pub fn adjoint_coil(y: &ComplexImage, ctx: &EncodingContext, i: usize) -> Result<ComplexImage> {
    ctx.check_image(y, "k-space")?;
    ctx.check_coil(i)?;
    let masked = y.hadamard(&ctx.mask_image);
    Ok(ctx.sens.coil(i).conj().hadamard(&ifft2(&masked)))
}

/// Applies the full system operator `A` (see module docs); matrix-free.
pub fn apply_a(x: &ComplexImage, ctx: &EncodingContext) -> Result<ComplexImage> {
    ctx.check_image(x, "image")?;
    let p = &ctx.params;
    let mut out = x.scaled(Complex64::new(p.gamma, 0.0));
    if p.lambda > 0.0 {
        let mut tv = dx_adj(&dx(x));
        tv.axpy(Complex64::new(1.0, 0.0), &dy_adj(&dy(x)));
        out.axpy(Complex64::new(p.lambda, 0.0), &tv);
    }
    if p.mu > 0.0 {
        let mut coils = ComplexImage::zeros(ctx.rows(), ctx.cols());
        for i in 0..ctx.ncoils() {
            let yi = forward_coil(x, ctx, i)?;
            coils.axpy(Complex64::new(1.0, 0.0), &adjoint_coil(&yi, ctx, i)?);
        }
        out.axpy(Complex64::new(p.mu, 0.0), &coils);
    }
    Ok(out)
}

/// Split variables and Bregman multipliers feeding the right-hand side.
#[derive(Clone, Copy, Debug)]
pub struct RhsAux<'a> {
    pub d_x: &'a ComplexImage,
    pub b_x: &'a ComplexImage,
    pub d_y: &'a ComplexImage,
    pub b_y: &'a ComplexImage,
    pub d_w: &'a ComplexImage,
    pub b_w: &'a ComplexImage,
}

/// Right-hand side of the inner linear system:
///
/// ```text
///   b = mu * sum_i (R F S_i)^H y_i
///     + lambda * (D_x^H (d_x - b_x) + D_y^H (d_y - b_y))
///     + gamma * W^H (d_w - b_w)
/// ```
pub fn build_rhs(y: &CoilSet, aux: &RhsAux<'_>, ctx: &EncodingContext) -> Result<ComplexImage> {
    if y.ncoils() != ctx.ncoils() || y.rows() != ctx.rows() || y.cols() != ctx.cols() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} coils of {}x{}, context expects {} coils of {}x{}",
            y.ncoils(),
            y.rows(),
            y.cols(),
            ctx.ncoils(),
            ctx.rows(),
            ctx.cols()
        )));
    }
    let p = &ctx.params;
    let mut out = ComplexImage::zeros(ctx.rows(), ctx.cols());
    if p.mu > 0.0 {
        let mut coils = ComplexImage::zeros(ctx.rows(), ctx.cols());
        for i in 0..ctx.ncoils() {
            coils.axpy(Complex64::new(1.0, 0.0), &adjoint_coil(y.coil(i), ctx, i)?);
        }
        out.axpy(Complex64::new(p.mu, 0.0), &coils);
    }
    if p.lambda > 0.0 {
        ctx.check_image(aux.d_x, "d_x")?;
        ctx.check_image(aux.b_x, "b_x")?;
        ctx.check_image(aux.d_y, "d_y")?;
        ctx.check_image(aux.b_y, "b_y")?;
        let mut tv = dx_adj(&(aux.d_x - aux.b_x));
        tv.axpy(Complex64::new(1.0, 0.0), &dy_adj(&(aux.d_y - aux.b_y)));
        out.axpy(Complex64::new(p.lambda, 0.0), &tv);
    }
    if p.gamma > 0.0 {
        ctx.check_image(aux.d_w, "d_w")?;
        ctx.check_image(aux.b_w, "b_w")?;
        let back = idwt2(&(aux.d_w - aux.b_w), &ctx.wavelet)?;
        out.axpy(Complex64::new(p.gamma, 0.0), &back);
    }
    Ok(out)
}

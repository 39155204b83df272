//! Core data containers: complex images, coil sets, sampling masks,
//! reconstruction parameters and convergence logs.
//!
//! Images are stored row-major: pixel `(i, j)` = row `i` (the x /
//! foot-head direction), column `j`, flat index `i * n + j`. The same
//! layout is used for k-space arrays, with the DC sample at `(0, 0)`
//! (non-centered convention).

pub mod io;

use num_complex::Complex64;

use crate::error::{Error, Result};

// ===========================================================================
// ComplexImage
// ===========================================================================

/// Dense complex-valued m x n array (image or k-space), row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage {
    m: usize,
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    /// Wraps row-major data; rejects empty dimensions and length mismatches.
    pub fn new(m: usize, n: usize, data: Vec<Complex64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image dimensions must be positive, got {m}x{n}"
            )));
        }
        if data.len() != m * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {m}x{n} image, got {}",
                m * n,
                data.len()
            )));
        }
        Ok(Self { m, n, data })
    }

    /// All-zero image. Panics if a dimension is zero.
    pub fn zeros(m: usize, n: usize) -> Self {
        assert!(m > 0 && n > 0, "image dimensions must be positive");
        Self { m, n, data: vec![Complex64::new(0.0, 0.0); m * n] }
    }

    /// Builds an image from a per-pixel function of `(row, col)`.
    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut img = Self::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                img.data[i * n + j] = f(i, j);
            }
        }
        img
    }

    /// Number of rows (x / foot-head extent).
    pub fn rows(&self) -> usize {
        self.m
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.n
    }

    /// Total number of pixels `m * n`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True when the image has no pixels (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// True when `other` has identical dimensions.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.m == other.m && self.n == other.n
    }

    /// Row-major backing slice.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Mutable row-major backing slice.
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Consumes the image, returning the backing vector.
    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Pixel accessor; panics out of range.
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Pixel setter; panics out of range.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    /// New image with `f` applied to every pixel.
    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        Self { m: self.m, n: self.n, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Elementwise complex conjugate.
    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Elementwise product; panics on shape mismatch.
    pub fn hadamard(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "hadamard: shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).collect();
        Self { m: self.m, n: self.n, data }
    }

    /// Image scaled by a complex factor.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        self.map(|v| v * alpha)
    }

    /// In-place `self += alpha * other`; panics on shape mismatch.
    pub fn axpy(&mut self, alpha: Complex64, other: &Self) {
        assert!(self.same_shape(other), "axpy: shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// Euclidean norm over all pixels.
    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Complex inner product `<self, other> = sum conj(self) * other`;
    /// panics on shape mismatch. Accumulation is sequential in flat index
    /// order so repeated runs reduce identically.
    pub fn dot(&self, other: &Self) -> Complex64 {
        assert!(self.same_shape(other), "dot: shape mismatch");
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += a.conj() * b;
        }
        acc
    }

    /// Largest pixel magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Per-pixel magnitudes, row-major.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.norm()).collect()
    }

    /// Checks that every component is finite, naming the first offender.
    pub fn validate(&self) -> Result<()> {
        for (index, v) in self.data.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(())
    }
}

impl std::ops::Add for &ComplexImage {
    type Output = ComplexImage;
    fn add(self, rhs: &ComplexImage) -> ComplexImage {
        assert!(self.same_shape(rhs), "add: shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect();
        ComplexImage { m: self.m, n: self.n, data }
    }
}

impl std::ops::Sub for &ComplexImage {
    type Output = ComplexImage;
    fn sub(self, rhs: &ComplexImage) -> ComplexImage {
        assert!(self.same_shape(rhs), "sub: shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect();
        ComplexImage { m: self.m, n: self.n, data }
    }
}

// ===========================================================================
// CoilSet
// ===========================================================================

/// Ordered collection of per-coil images with identical dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct CoilSet {
    images: Vec<ComplexImage>,
}

impl CoilSet {
    /// Wraps per-coil images; rejects empty sets and mixed dimensions.
    pub fn new(images: Vec<ComplexImage>) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::DimensionMismatch("coil set must contain at least one coil".into()))?;
        let (m, n) = (first.rows(), first.cols());
        for (i, img) in images.iter().enumerate() {
            if img.rows() != m || img.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "coil {i} is {}x{}, expected {m}x{n}",
                    img.rows(),
                    img.cols()
                )));
            }
        }
        Ok(Self { images })
    }

    /// Number of coils.
    pub fn ncoils(&self) -> usize {
        self.images.len()
    }

    /// Row count shared by every coil.
    pub fn rows(&self) -> usize {
        self.images[0].rows()
    }

    /// Column count shared by every coil.
    pub fn cols(&self) -> usize {
        self.images[0].cols()
    }

    /// Borrow coil `i`; panics out of range.
    pub fn coil(&self, i: usize) -> &ComplexImage {
        &self.images[i]
    }

    /// Mutably borrow coil `i` for in-place updates; the caller must keep
    /// the image dimensions unchanged. Panics out of range.
    pub fn coil_mut(&mut self, i: usize) -> &mut ComplexImage {
        &mut self.images[i]
    }

    /// All coil images in order.
    pub fn images(&self) -> &[ComplexImage] {
        &self.images
    }

    /// Iterator over coil images in order.
    pub fn iter(&self) -> std::slice::Iter<'_, ComplexImage> {
        self.images.iter()
    }

    /// Frobenius norm over all coils.
    pub fn norm2(&self) -> f64 {
        self.images.iter().map(|im| im.norm2().powi(2)).sum::<f64>().sqrt()
    }
}

// ===========================================================================
// SamplingMask
// ===========================================================================

/// Which variable-density scheme generated a mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskKind {
    /// Fully sampled readout lines, variable density across rows.
    CartesianLines,
    /// Pointwise variable-density sampling over the 2-D grid.
    Random,
}

impl std::str::FromStr for MaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(MaskKind::CartesianLines),
            "random" => Ok(MaskKind::Random),
            other => Err(Error::InvalidParams(format!(
                "unknown mask kind '{other}' (expected cartesian|random)"
            ))),
        }
    }
}

/// Binary k-space sampling mask, DC at index (0, 0).
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingMask {
    m: usize,
    n: usize,
    cells: Vec<u8>,
    target_r: f64,
    kind: MaskKind,
    seed: u64,
}

impl SamplingMask {
    /// Wraps raw 0/1 cells; rejects other values and all-zero masks.
    pub fn from_cells(
        m: usize,
        n: usize,
        cells: Vec<u8>,
        target_r: f64,
        kind: MaskKind,
        seed: u64,
    ) -> Result<Self> {
        if m == 0 || n == 0 || cells.len() != m * n {
            return Err(Error::DimensionMismatch(format!(
                "mask cells length {} does not match {m}x{n}",
                cells.len()
            )));
        }
        if cells.iter().any(|&c| c > 1) {
            return Err(Error::InvalidParams("mask cells must be 0 or 1".into()));
        }
        if cells.iter().all(|&c| c == 0) {
            return Err(Error::InvalidParams("mask must sample at least one cell".into()));
        }
        Ok(Self { m, n, cells, target_r, kind, seed })
    }

    /// Row count.
    pub fn rows(&self) -> usize {
        self.m
    }

    /// Column count.
    pub fn cols(&self) -> usize {
        self.n
    }

    /// Raw 0/1 cells, row-major.
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// True when k-space cell `(i, j)` is measured.
    pub fn is_sampled(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j] == 1
    }

    /// Number of sampled cells (at least 1).
    pub fn sampled_count(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// Acceleration the generator aimed for.
    pub fn target_r(&self) -> f64 {
        self.target_r
    }

    /// Achieved acceleration `N / sampled`.
    pub fn achieved_r(&self) -> f64 {
        (self.m * self.n) as f64 / self.sampled_count() as f64
    }

    /// Generating scheme.
    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    /// Generator seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mask as a 0/1-valued complex image (for elementwise products and IO).
    pub fn to_image(&self) -> ComplexImage {
        let data = self.cells.iter().map(|&c| Complex64::new(c as f64, 0.0)).collect();
        ComplexImage { m: self.m, n: self.n, data }
    }
}

// ===========================================================================
// ReconParams
// ===========================================================================

/// Weights and loop configuration for the Split Bregman reconstruction.
///
/// `mu` weights data fidelity, `lambda` the two first-difference penalties,
/// `gamma` the wavelet penalty. A weight of exactly zero disables its branch.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconParams {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub epsilon: f64,
    pub max_pcg_iters: usize,
    pub wavelet_levels: usize,
}

impl Default for ReconParams {
    fn default() -> Self {
        Self::set1()
    }
}

impl ReconParams {
    /// Parameter set 1: mu = 1e-3, lambda = 4e-3, gamma = 1e-3.
    pub fn set1() -> Self {
        Self {
            mu: 1e-3,
            lambda: 4e-3,
            gamma: 1e-3,
            n_outer: 20,
            n_inner: 1,
            epsilon: 1e-3,
            max_pcg_iters: 1000,
            wavelet_levels: 4,
        }
    }

    /// Parameter set 2: set 1 with mu raised to 1e-2.
    pub fn set2() -> Self {
        Self { mu: 1e-2, ..Self::set1() }
    }

    /// Parameter set 3: set 1 with gamma raised to 4e-3.
    pub fn set3() -> Self {
        Self { gamma: 4e-3, ..Self::set1() }
    }

    /// Numbered set lookup used by the command line (`--set 1|2|3`).
    pub fn from_set_index(set: u8) -> Result<Self> {
        match set {
            1 => Ok(Self::set1()),
            2 => Ok(Self::set2()),
            3 => Ok(Self::set3()),
            other => Err(Error::InvalidParams(format!("unknown parameter set {other}"))),
        }
    }

    /// Validates ranges: weights finite and nonnegative with a positive sum,
    /// loop counts positive, `epsilon` in (0, 1).
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("lambda", self.lambda), ("gamma", self.gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.mu + self.lambda + self.gamma <= 0.0 {
            return Err(Error::InvalidParams("mu + lambda + gamma must be positive".into()));
        }
        if self.n_outer == 0 || self.n_inner == 0 {
            return Err(Error::InvalidParams("nOuter and nInner must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParams(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.max_pcg_iters == 0 {
            return Err(Error::InvalidParams("maxPcgIters must be at least 1".into()));
        }
        if self.gamma > 0.0 && self.wavelet_levels == 0 {
            return Err(Error::InvalidParams("waveletLevels must be at least 1 when gamma > 0".into()));
        }
        Ok(())
    }
}

// ===========================================================================
// Convergence log
// ===========================================================================

/// One inner PCG solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PcgRecord {
    /// Iterations performed (0 when the warm start already satisfied the test).
    pub iterations: usize,
    /// True relative residuals, one entry for the initial guess plus one per
    /// iteration; never empty.
    pub relative_residuals: Vec<f64>,
    /// False when `max_pcg_iters` was exhausted.
    pub converged: bool,
}

impl PcgRecord {
    /// Last recorded relative residual.
    pub fn final_relative_residual(&self) -> f64 {
        self.relative_residuals.last().copied().unwrap_or(f64::NAN)
    }
}

/// One outer Bregman iteration: its inner solves plus stage timings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OuterRecord {
    /// One record per inner iteration, in order.
    pub solves: Vec<PcgRecord>,
    pub rhs_seconds: f64,
    pub pcg_seconds: f64,
    pub shrink_seconds: f64,
    pub feedback_seconds: f64,
}

impl OuterRecord {
    /// PCG iterations summed over this outer iteration's inner solves.
    pub fn pcg_iterations(&self) -> usize {
        self.solves.iter().map(|s| s.iterations).sum()
    }

    /// Final relative residual of the last inner solve.
    pub fn final_relative_residual(&self) -> f64 {
        self.solves.last().map(|s| s.final_relative_residual()).unwrap_or(f64::NAN)
    }
}

/// Full reconstruction log: per-outer records plus one-off setup costs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceLog {
    pub outer: Vec<OuterRecord>,
    /// Wall-clock seconds spent building the preconditioner (0 for `none`).
    pub precond_build_seconds: f64,
}

impl ConvergenceLog {
    /// PCG iterations summed over the whole reconstruction.
    pub fn total_pcg_iterations(&self) -> usize {
        self.outer.iter().map(|o| o.pcg_iterations()).sum()
    }

    /// Per-outer iteration counts in order.
    pub fn pcg_iterations_per_outer(&self) -> Vec<usize> {
        self.outer.iter().map(|o| o.pcg_iterations()).collect()
    }

    /// Seconds spent inside PCG, summed over outer iterations.
    pub fn pcg_seconds(&self) -> f64 {
        self.outer.iter().map(|o| o.pcg_seconds).sum()
    }

    /// Total logged seconds: build cost plus every stage of every outer iteration.
    pub fn total_seconds(&self) -> f64 {
        self.precond_build_seconds
            + self
                .outer
                .iter()
                .map(|o| o.rhs_seconds + o.pcg_seconds + o.shrink_seconds + o.feedback_seconds)
                .sum::<f64>()
    }

    /// Writes the log as CSV with columns
    /// `outer,pcg_iters,final_relres,rhs_s,pcg_s,shrink_s,feedback_s`
    /// (one row per outer iteration, `outer` starting at 1).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "outer,pcg_iters,final_relres,rhs_s,pcg_s,shrink_s,feedback_s")?;
        for (idx, o) in self.outer.iter().enumerate() {
            writeln!(
                w,
                "{},{},{:.6e},{:.6},{:.6},{:.6},{:.6}",
                idx + 1,
                o.pcg_iterations(),
                o.final_relative_residual(),
                o.rhs_seconds,
                o.pcg_seconds,
                o.shrink_seconds,
                o.feedback_seconds
            )?;
        }
        Ok(())
    }
}

// ===========================================================================
// Tests
// ===========================================================================

//! Test objects, coil sensitivity simulation and coil-space utilities.
//!
//! The simulated scene lives on the square `[-1, 1]^2` with `x` growing to
//! the right along columns and `y` growing upward along decreasing rows.
//! Phantom intensities lie in `[0, 1]`. Coil magnitudes are Gaussian lobes
//! centered outside the field of view with a smooth linear phase, mimicking
//! surface receive elements.
//!
//! Normalization maps raw sensitivities `s_i` to `s_i / rss` inside the
//! object support and to zero outside, so the per-pixel sensitivity energy
//! is exactly one on the support. Coil combination with such maps is a
//! projection, which makes [`normalize_coil_images`] idempotent.
//!
//! Coil compression diagonalizes the coil-by-coil Gram matrix and keeps the
//! leading eigenvectors. Because the mixing acts purely across the coil
//! index it commutes with sampling and the DFT: compressing measured data
//! with the matrix fitted to the sensitivities yields exactly the forward
//! model of the compressed sensitivities.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{CoilSet, ComplexImage, SamplingMask};
use crate::transforms::fft2;

/// Ellipse table of the standard low-contrast head phantom: intensity,
/// semi-axes, center and rotation in degrees, on `[-1, 1]^2`.
const HEAD_ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Which synthetic object to render.
#[derive(Clone, Debug, PartialEq)]
pub enum PhantomSpec {
    /// Piecewise-constant ellipse phantom with intensities in `[0, 1]`.
    SheppLogan,
    /// Sum of `count` seeded Gaussian bumps, normalized to peak at 1.
    Blobs { count: usize, seed: u64 },
}

/// Pixel center in scene coordinates.
fn scene_xy(i: usize, j: usize, m: usize, n: usize) -> (f64, f64) {
    let x = 2.0 * (j as f64 + 0.5) / n as f64 - 1.0;
    let y = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
    (x, y)
}

/// Renders a real-valued phantom with intensities in `[0, 1]`.
pub fn make_phantom(m: usize, n: usize, spec: &PhantomSpec) -> Result<ComplexImage> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParams(format!("phantom dimensions must be positive, got {m}x{n}")));
    }
    match spec {
        PhantomSpec::SheppLogan => {
            let img = ComplexImage::from_fn(m, n, |i, j| {
                let (x, y) = scene_xy(i, j, m, n);
                let mut v = 0.0;
                for &(a, sa, sb, x0, y0, deg) in &HEAD_ELLIPSES {
                    let phi = deg.to_radians();
                    let (s, c) = phi.sin_cos();
                    let u = (x - x0) * c + (y - y0) * s;
                    let w = -(x - x0) * s + (y - y0) * c;
                    if (u / sa).powi(2) + (w / sb).powi(2) <= 1.0 {
                        v += a;
                    }
                }
                // Exactly canceling overlaps can round a hair below zero.
                Complex64::new(v.max(0.0), 0.0)
            });
            Ok(img)
        }
        PhantomSpec::Blobs { count, seed } => {
            if *count == 0 {
                return Err(Error::InvalidParams("blob phantom needs at least one blob".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let blobs: Vec<(f64, f64, f64, f64)> = (0..*count)
                .map(|_| {
                    let cx = rng.gen_range(-0.6..0.6);
                    let cy = rng.gen_range(-0.6..0.6);
                    let sigma = rng.gen_range(0.08..0.25);
                    let amp = rng.gen_range(0.3..1.0);
                    (cx, cy, sigma, amp)
                })
                .collect();
            let mut values = vec![0.0f64; m * n];
            for i in 0..m {
                for j in 0..n {
                    let (x, y) = scene_xy(i, j, m, n);
                    values[i * n + j] = blobs
                        .iter()
                        .map(|&(cx, cy, sigma, amp)| {
                            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                            amp * (-d2 / (2.0 * sigma * sigma)).exp()
                        })
                        .sum();
                }
            }
            let peak = values.iter().cloned().fold(0.0f64, f64::max);
            ComplexImage::new(m, n, values.iter().map(|&v| Complex64::new(v / peak, 0.0)).collect())
        }
    }
}

/// Geometric arrangement of the simulated receive elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoilLayout {
    /// Elements evenly spaced on a circle around the field of view.
    Ring,
    /// Elements along a line below the field of view.
    Linear,
}

impl std::str::FromStr for CoilLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Self::Ring),
            "linear" => Ok(Self::Linear),
            other => Err(Error::InvalidParams(format!(
                "unknown coil layout {other:?}, expected ring or linear"
            ))),
        }
    }
}

/// Configuration of the coil sensitivity simulator.
#[derive(Clone, Debug, PartialEq)]
pub struct CoilSimSpec {
    pub layout: CoilLayout,
    /// Lobe width as a fraction of the field of view.
    pub gaussian_width: f64,
    /// Phase cycles accumulated across the field of view.
    pub phase_gradient: f64,
    /// Relative randomization of positions, widths and phase offsets.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for CoilSimSpec {
    fn default() -> Self {
        Self { layout: CoilLayout::Ring, gaussian_width: 0.35, phase_gradient: 2.0, jitter: 0.05, seed: 0 }
    }
}

/// Simulates raw (unnormalized) coil sensitivities: Gaussian magnitude
/// lobes with a linear phase ramp along each element's viewing direction.
pub fn simulate_coils(m: usize, n: usize, ncoils: usize, spec: &CoilSimSpec) -> Result<CoilSet> {
    if m == 0 || n == 0 || ncoils == 0 {
        return Err(Error::InvalidParams(format!(
            "coil simulation needs positive dimensions, got {m}x{n} with {ncoils} coils"
        )));
    }
    if !(spec.gaussian_width > 0.0 && spec.gaussian_width.is_finite()) {
        return Err(Error::InvalidParams(format!("gaussian width must be positive, got {}", spec.gaussian_width)));
    }
    if !(spec.jitter >= 0.0 && spec.jitter.is_finite() && spec.phase_gradient.is_finite()) {
        return Err(Error::InvalidParams("jitter must be >= 0 and the phase gradient finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma_base = 2.0 * spec.gaussian_width;
    let tau = std::f64::consts::TAU;
    let mut images = Vec::with_capacity(ncoils);
    for k in 0..ncoils {
        // Three jitter draws per coil in a fixed order keep the stream
        // layout independent.
        let j_pos: f64 = rng.gen_range(-0.5..0.5);
        let j_sigma: f64 = rng.gen_range(-0.5..0.5);
        let j_phase: f64 = rng.gen_range(-0.5..0.5);
        let (cx, cy, direction) = match spec.layout {
            CoilLayout::Ring => {
                let theta = tau * k as f64 / ncoils as f64 + spec.jitter * j_pos * tau / ncoils as f64;
                (1.1 * theta.cos(), 1.1 * theta.sin(), theta)
            }
            CoilLayout::Linear => {
                let frac = if ncoils == 1 { 0.5 } else { k as f64 / (ncoils - 1) as f64 };
                let cx = -0.8 + 1.6 * frac + spec.jitter * 0.2 * j_pos;
                let cy = -1.2f64;
                (cx, cy, (0.0 - cy).atan2(0.0 - cx))
            }
        };
        let sigma = sigma_base * (1.0 + spec.jitter * j_sigma);
        let phase0 = tau * k as f64 / ncoils as f64 + spec.jitter * j_phase * tau;
        let (dir_s, dir_c) = direction.sin_cos();
        images.push(ComplexImage::from_fn(m, n, |i, j| {
            let (x, y) = scene_xy(i, j, m, n);
            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
            let mag = (-d2 / (2.0 * sigma * sigma)).exp();
            let phase = phase0 + tau * spec.phase_gradient * (x * dir_c + y * dir_s) / 2.0;
            Complex64::from_polar(mag, phase)
        }));
    }
    CoilSet::new(images)
}

/// Object support derived from a reference image by magnitude thresholding.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportMask {
    m: usize,
    n: usize,
    inside: Vec<bool>,
}

impl SupportMask {
    /// Marks pixels whose magnitude reaches `threshold_fraction` of the
    /// reference peak. Fails if nothing qualifies.
    pub fn from_reference(reference: &ComplexImage, threshold_fraction: f64) -> Result<Self> {
        if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "support threshold must lie in (0, 1), got {threshold_fraction}"
            )));
        }
        let peak = reference.max_abs();
        if peak <= 0.0 {
            return Err(Error::DegenerateSupport);
        }
        let cut = threshold_fraction * peak;
        let inside: Vec<bool> = reference.data().iter().map(|v| v.norm() >= cut).collect();
        if !inside.iter().any(|&b| b) {
            return Err(Error::DegenerateSupport);
        }
        Ok(Self { m: reference.rows(), n: reference.cols(), inside })
    }

    /// Rows of the underlying grid.
    pub fn rows(&self) -> usize {
        self.m
    }

    /// Columns of the underlying grid.
    pub fn cols(&self) -> usize {
        self.n
    }

    /// Number of pixels inside the support.
    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Whether pixel `(i, j)` belongs to the support.
    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.inside[i * self.n + j]
    }

    /// Flat row-major support flags.
    pub fn flags(&self) -> &[bool] {
        &self.inside
    }
}

/// Relative l2 error between `x` and `reference`, restricted to the support.
///
/// Sensitivities normalized on a support vanish outside it, so pixels outside
/// carry no data constraint and the solver is free to fill them with whatever
/// the regularizers prefer. Quality metrics therefore compare images only
/// where the reference object actually lives.
pub fn support_relative_error(
    x: &ComplexImage,
    reference: &ComplexImage,
    support: &SupportMask,
) -> Result<f64> {
    if x.rows() != reference.rows()
        || x.cols() != reference.cols()
        || x.rows() != support.rows()
        || x.cols() != support.cols()
    {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{}, reference {}x{}, support {}x{}",
            x.rows(),
            x.cols(),
            reference.rows(),
            reference.cols(),
            support.rows(),
            support.cols()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (a, b)) in x.data().iter().zip(reference.data()).enumerate() {
        if support.flags()[j] {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
    }
    if den <= 0.0 {
        return Err(Error::DegenerateSupport);
    }
    Ok((num / den).sqrt())
}

/// Scales raw sensitivities to unit root-sum-of-squares inside the support
/// and zero outside, so coil combination becomes an orthogonal projection.
pub fn normalize_sensitivities(raw: &CoilSet, support: &SupportMask) -> Result<CoilSet> {
    if raw.rows() != support.rows() || raw.cols() != support.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sensitivities are {}x{} but support is {}x{}",
            raw.rows(),
            raw.cols(),
            support.rows(),
            support.cols()
        )));
    }
    let len = raw.rows() * raw.cols();
    let mut rss = vec![0.0f64; len];
    for img in raw.iter() {
        for (acc, v) in rss.iter_mut().zip(img.data()) {
            *acc += v.norm_sqr();
        }
    }
    for (j, acc) in rss.iter_mut().enumerate() {
        *acc = acc.sqrt();
        if support.flags()[j] && *acc <= 1e-12 {
            return Err(Error::DegenerateSupport);
        }
    }
    let images = raw
        .iter()
        .map(|img| {
            ComplexImage::new(
                raw.rows(),
                raw.cols(),
                img.data()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| if support.flags()[j] { v / rss[j] } else { Complex64::new(0.0, 0.0) })
                    .collect(),
            )
            .expect("shape preserved")
        })
        .collect();
    CoilSet::new(images)
}

/// Projects per-coil images onto the span of the normalized sensitivities:
/// `out_i = s_i * sum_j conj(s_j) .* in_j`. Applying it twice equals
/// applying it once.
pub fn normalize_coil_images(images: &CoilSet, sens_hat: &CoilSet) -> Result<CoilSet> {
    if images.ncoils() != sens_hat.ncoils()
        || images.rows() != sens_hat.rows()
        || images.cols() != sens_hat.cols()
    {
        return Err(Error::DimensionMismatch(format!(
            "{} coil images of {}x{} against {} sensitivities of {}x{}",
            images.ncoils(),
            images.rows(),
            images.cols(),
            sens_hat.ncoils(),
            sens_hat.rows(),
            sens_hat.cols()
        )));
    }
    let mut combined = ComplexImage::zeros(images.rows(), images.cols());
    for i in 0..images.ncoils() {
        let weighted = sens_hat.coil(i).conj().hadamard(images.coil(i));
        combined.axpy(Complex64::new(1.0, 0.0), &weighted);
    }
    let out = (0..images.ncoils()).map(|i| sens_hat.coil(i).hadamard(&combined)).collect();
    CoilSet::new(out)
}

/// Coil mixing fitted to the dominant eigenvectors of the coil Gram matrix.
#[derive(Clone, Debug)]
pub struct CoilCompression {
    weights: Vec<Vec<Complex64>>,
    eigenvalues: Vec<f64>,
}

impl CoilCompression {
    /// Diagonalizes the Gram matrix of `images` and keeps the `keep`
    /// strongest directions.
    pub fn fit(images: &CoilSet, keep: usize) -> Result<Self> {
        let nc = images.ncoils();
        if keep == 0 || keep > nc {
            return Err(Error::KeepOutOfRange { keep, ncoils: nc });
        }
        let gram = nalgebra::DMatrix::from_fn(nc, nc, |p, q| images.coil(p).dot(images.coil(q)));
        let total: f64 = (0..nc).map(|p| gram[(p, p)].re).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParams("coil images carry no energy to compress".into()));
        }
        let eigen = nalgebra::SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..nc).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[b].partial_cmp(&eigen.eigenvalues[a]).expect("finite eigenvalues")
        });
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eigen.eigenvalues[k].max(0.0)).collect();
        let weights = order
            .iter()
            .take(keep)
            .map(|&k| (0..nc).map(|p| eigen.eigenvectors[(p, k)].conj()).collect())
            .collect();
        Ok(Self { weights, eigenvalues })
    }

    /// Mixes a coil set down to the kept virtual coils:
    /// `out_k = sum_p weights[k][p] in_p`.
    pub fn apply(&self, images: &CoilSet) -> Result<CoilSet> {
        if images.ncoils() != self.ncoils() {
            return Err(Error::DimensionMismatch(format!(
                "compression fitted for {} coils, applied to {}",
                self.ncoils(),
                images.ncoils()
            )));
        }
        let out = self
            .weights
            .iter()
            .map(|row| {
                let mut acc = ComplexImage::zeros(images.rows(), images.cols());
                for (p, &w) in row.iter().enumerate() {
                    acc.axpy(w, images.coil(p));
                }
                acc
            })
            .collect();
        CoilSet::new(out)
    }

    /// Number of virtual coils produced.
    pub fn keep(&self) -> usize {
        self.weights.len()
    }

    /// Number of physical coils expected.
    pub fn ncoils(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Gram eigenvalues in descending order (all physical coils).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Fraction of total coil energy captured by the kept directions.
    pub fn captured_energy_fraction(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        let kept: f64 = self.eigenvalues.iter().take(self.keep()).sum();
        kept / total
    }
}

/// One standard complex Gaussian sample (unit variance per component).
fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    Complex64::new(radius * angle.cos(), radius * angle.sin())
}

/// Measures `y_i = mask .* (fft2(s_i .* x) + noise)`. Complex Gaussian noise
/// with standard deviation `noise_std` per component is drawn only at
/// sampled cells, coil by coil in row-major order, so a given seed and mask
/// reproduce the data exactly.
pub fn simulate_kspace(
    x: &ComplexImage,
    sens: &CoilSet,
    mask: &SamplingMask,
    noise_std: f64,
    seed: u64,
) -> Result<CoilSet> {
    if x.rows() != sens.rows() || x.cols() != sens.cols() {
        return Err(Error::DimensionMismatch(format!(
            "object is {}x{} but sensitivities are {}x{}",
            x.rows(),
            x.cols(),
            sens.rows(),
            sens.cols()
        )));
    }
    if x.rows() != mask.rows() || x.cols() != mask.cols() {
        return Err(Error::DimensionMismatch(format!(
            "object is {}x{} but mask is {}x{}",
            x.rows(),
            x.cols(),
            mask.rows(),
            mask.cols()
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidParams(format!("noise level must be finite and >= 0, got {noise_std}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(sens.ncoils());
    for i in 0..sens.ncoils() {
        let mut full = fft2(&sens.coil(i).hadamard(x));
        for (j, v) in full.data_mut().iter_mut().enumerate() {
            if mask.cells()[j] == 1 {
                if noise_std > 0.0 {
                    *v += complex_gaussian(&mut rng) * noise_std;
                }
            } else {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        out.push(full);
    }
    CoilSet::new(out)
}

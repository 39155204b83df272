//! Shared plumbing between the subcommands: seed layout, the simulation
//! chain, and reconstruction with optional coil compression.
//!
//! Seeds are derived from the configured base seed so each stage draws from
//! an independent stream: phantom blobs use `seed`, coil jitter `seed + 1`,
//! the sampling mask `seed + 2`, and measurement noise `seed + 3`.

use sbcs::Complex64;
use sbcs::bregman;
use sbcs::calib::{
    make_phantom, normalize_sensitivities, simulate_coils, simulate_kspace, CoilCompression,
    CoilSimSpec, PhantomSpec, SupportMask,
};
use sbcs::encoding::EncodingContext;
use sbcs::model::{CoilSet, ComplexImage, ConvergenceLog, ReconParams, SamplingMask};
use sbcs::precond::PrecondKind;
use sbcs::sampling::{cartesian_vd_mask, random_vd_mask};
use sbcs::transforms::WaveletSpec;
use sbcs::{Error, Result};

use crate::config::Config;

/// Everything the simulation chain produces for one grid size.
pub struct Simulated {
    /// Ground-truth object, already scaled to the configured peak.
    pub truth: ComplexImage,
    /// Normalized sensitivities.
    pub sens: CoilSet,
    /// Sampling pattern.
    pub mask: SamplingMask,
    /// Undersampled, possibly noisy measurements.
    pub kspace: CoilSet,
    /// Object support used for normalization and error metrics.
    pub support: SupportMask,
}

/// Runs the full simulation chain at the given size.
pub fn simulate(cfg: &Config, size: usize) -> Result<Simulated> {
    let phantom_spec = match cfg.phantom.as_str() {
        "shepp-logan" => PhantomSpec::SheppLogan,
        "blobs" => PhantomSpec::Blobs { count: cfg.blob_count, seed: cfg.seed },
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown phantom {other:?}, expected shepp-logan or blobs"
            )))
        }
    };
    let phantom = make_phantom(size, size, &phantom_spec)?;
    let truth = phantom.scaled(Complex64::new(cfg.signal_scale, 0.0));

    let coil_spec = CoilSimSpec {
        layout: cfg.coil_layout.parse()?,
        gaussian_width: cfg.gaussian_width,
        phase_gradient: cfg.phase_gradient,
        jitter: cfg.coil_jitter,
        seed: cfg.seed + 1,
    };
    let raw = simulate_coils(size, size, cfg.coils, &coil_spec)?;
    let support = SupportMask::from_reference(&phantom, cfg.support_threshold)?;
    let sens = normalize_sensitivities(&raw, &support)?;

    let mask = build_mask(cfg, size)?;
    let kspace = simulate_kspace(&truth, &sens, &mask, cfg.noise_std, cfg.seed + 3)?;
    Ok(Simulated { truth, sens, mask, kspace, support })
}

/// Generates the sampling mask named by the config.
pub fn build_mask(cfg: &Config, size: usize) -> Result<SamplingMask> {
    match cfg.mask.as_str() {
        "cartesian" => cartesian_vd_mask(size, size, cfg.accel, cfg.center_fraction, cfg.seed + 2),
        "random" => random_vd_mask(size, size, cfg.accel, cfg.center_fraction, cfg.seed + 2),
        other => Err(Error::InvalidParams(format!(
            "unknown mask kind {other:?}, expected cartesian or random"
        ))),
    }
}

/// Regularization set selected by the config, with loop and tolerance fields
/// overridden from it.
pub fn recon_params(cfg: &Config) -> Result<ReconParams> {
    let mut params = ReconParams::from_set_index(cfg.set)?;
    params.n_outer = cfg.outer;
    params.n_inner = cfg.inner;
    params.epsilon = cfg.eps;
    params.max_pcg_iters = cfg.max_pcg_iters;
    params.wavelet_levels = cfg.wavelet_levels;
    params.validate()?;
    Ok(params)
}

/// Reconstructs `kspace` with the chosen preconditioner, compressing to
/// `keep` virtual coils first when requested.
pub fn reconstruct(
    cfg: &Config,
    sens: &CoilSet,
    mask: &SamplingMask,
    kspace: &CoilSet,
    kind: PrecondKind,
    keep: Option<usize>,
) -> Result<(ComplexImage, ConvergenceLog)> {
    let params = recon_params(cfg)?;
    let wavelet = WaveletSpec::daubechies4(params.wavelet_levels);
    let (ctx, data) = match keep {
        Some(k) => {
            let compression = CoilCompression::fit(sens, k)?;
            let virtual_sens = compression.apply(sens)?;
            let virtual_data = compression.apply(kspace)?;
            (EncodingContext::new(virtual_sens, mask.clone(), params, wavelet)?, virtual_data)
        }
        None => (EncodingContext::new(sens.clone(), mask.clone(), params, wavelet)?, kspace.clone()),
    };
    bregman::run(&data, &ctx, kind)
}

/// Rebuilds a sampling mask from a stored 0/1 image.
pub fn mask_from_image(img: &ComplexImage, cfg: &Config) -> Result<SamplingMask> {
    let cells: Vec<u8> = img.data().iter().map(|v| u8::from(v.re > 0.5)).collect();
    SamplingMask::from_cells(img.rows(), img.cols(), cells, cfg.accel, cfg.mask.parse()?, cfg.seed + 2)
}

//! Run configuration: a JSON file mirrored by command-line overrides.
//!
//! Every field has a default, so an empty config (or none at all) describes
//! the reference pipeline: 256x256 phantom, 12 ring coils, Cartesian R = 4,
//! circulant preconditioner, parameter set 1.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Full pipeline configuration with defaults for every field.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Grid side length; images are size x size.
    pub size: usize,
    /// Number of simulated physical coils.
    pub coils: usize,
    /// Target undersampling factor R.
    pub accel: f64,
    /// Mask kind: "cartesian" or "random".
    pub mask: String,
    /// Preconditioner: "none", "jacobi" or "circulant".
    pub precond: String,
    /// Regularization parameter set index (1, 2 or 3).
    pub set: u8,
    /// Outer iterations of the reconstruction.
    pub outer: usize,
    /// Inner rounds per outer iteration.
    pub inner: usize,
    /// PCG relative residual tolerance.
    pub eps: f64,
    /// Base seed; stages derive their own seeds from it.
    pub seed: u64,
    /// Compress to this many virtual coils before reconstructing.
    pub keep_coils: Option<usize>,
    /// Output directory.
    pub out: PathBuf,
    /// Fraction of the grid fully sampled around the k-space center.
    pub center_fraction: f64,
    /// Peak magnitude the simulated object is scaled to.
    pub signal_scale: f64,
    /// Standard deviation of complex noise added to sampled k-space cells.
    pub noise_std: f64,
    /// Phantom kind: "shepp-logan" or "blobs".
    pub phantom: String,
    /// Number of blobs when `phantom` is "blobs".
    pub blob_count: usize,
    /// Coil arrangement: "ring" or "linear".
    pub coil_layout: String,
    /// Coil lobe width as a fraction of the field of view.
    pub gaussian_width: f64,
    /// Phase cycles a coil accumulates across the field of view.
    pub phase_gradient: f64,
    /// Relative jitter of coil positions, widths and phases.
    pub coil_jitter: f64,
    /// Support threshold as a fraction of the reference peak.
    pub support_threshold: f64,
    /// Wavelet decomposition depth.
    pub wavelet_levels: usize,
    /// Iteration cap for each PCG solve.
    pub max_pcg_iters: usize,
    /// Grid side lengths the bench command sweeps.
    pub bench_sizes: Vec<usize>,
    /// Smallest problem-size exponent in the FLOP table (N = 2^exp).
    pub flops_min_exp: u32,
    /// Largest problem-size exponent in the FLOP table.
    pub flops_max_exp: u32,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            size: 256,
            coils: 12,
            accel: 4.0,
            mask: "cartesian".into(),
            precond: "circulant".into(),
            set: 1,
            outer: 20,
            inner: 1,
            eps: 1e-3,
            seed: 1,
            keep_coils: None,
            out: PathBuf::from("out"),
            center_fraction: 0.08,
            signal_scale: 1000.0,
            noise_std: 0.0,
            phantom: "shepp-logan".into(),
            blob_count: 8,
            coil_layout: "ring".into(),
            gaussian_width: 0.35,
            phase_gradient: 2.0,
            coil_jitter: 0.05,
            support_threshold: 0.05,
            wavelet_levels: 4,
            max_pcg_iters: 1000,
            bench_sizes: vec![128, 256],
            flops_min_exp: 8,
            flops_max_exp: 24,
        }
    }
}

/// Command-line overrides; any flag given replaces the config field.
#[derive(Clone, Debug, clap::Args)]
pub struct Overrides {
    /// Grid side length.
    #[arg(long)]
    pub size: Option<usize>,
    /// Number of simulated coils.
    #[arg(long)]
    pub coils: Option<usize>,
    /// Target undersampling factor R.
    #[arg(long)]
    pub accel: Option<f64>,
    /// Mask kind: cartesian or random.
    #[arg(long)]
    pub mask: Option<String>,
    /// Preconditioner: none, jacobi or circulant.
    #[arg(long)]
    pub precond: Option<String>,
    /// Regularization parameter set (1, 2 or 3).
    #[arg(long)]
    pub set: Option<u8>,
    /// Outer iterations.
    #[arg(long)]
    pub outer: Option<usize>,
    /// Inner rounds per outer iteration.
    #[arg(long)]
    pub inner: Option<usize>,
    /// PCG relative residual tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compress to this many virtual coils.
    #[arg(long)]
    pub keep_coils: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fully sampled center fraction.
    #[arg(long)]
    pub center_fraction: Option<f64>,
    /// Peak magnitude of the simulated object.
    #[arg(long)]
    pub signal_scale: Option<f64>,
    /// K-space noise standard deviation.
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Phantom kind: shepp-logan or blobs.
    #[arg(long)]
    pub phantom: Option<String>,
    /// Coil arrangement: ring or linear.
    #[arg(long)]
    pub coil_layout: Option<String>,
    /// Coil lobe width as a fraction of the field of view.
    #[arg(long)]
    pub gaussian_width: Option<f64>,
    /// Phase cycles a coil accumulates across the field of view.
    #[arg(long)]
    pub phase_gradient: Option<f64>,
    /// Relative jitter of coil positions, widths and phases.
    #[arg(long)]
    pub coil_jitter: Option<f64>,
    /// Support threshold fraction.
    #[arg(long)]
    pub support_threshold: Option<f64>,
    /// Wavelet decomposition depth.
    #[arg(long)]
    pub wavelet_levels: Option<usize>,
    /// PCG iteration cap.
    #[arg(long)]
    pub max_pcg_iters: Option<usize>,
}

impl Overrides {
    /// Applies every present flag onto `cfg`.
    pub fn apply(&self, cfg: &mut Config) {
        macro_rules! put {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        put!(
            size, coils, accel, mask, precond, set, outer, inner, eps, seed, out,
            center_fraction, signal_scale, noise_std, phantom, coil_layout,
            gaussian_width, phase_gradient, coil_jitter, support_threshold,
            wavelet_levels, max_pcg_iters
        );
        if let Some(k) = self.keep_coils {
            cfg.keep_coils = Some(k);
        }
    }
}

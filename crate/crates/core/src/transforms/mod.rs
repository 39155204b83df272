//! Linear transforms used by the encoding operator: the unitary 2-D DFT,
//! periodic first differences with their exact adjoints, and an orthonormal
//! separable wavelet transform.
//!
//! All operators here are exactly unitary or exact adjoint pairs at the
//! discrete level, which the encoding module relies on: `F^H F = I` makes
//! `gamma W^H W` collapse to `gamma I` and lets the BCCB terms of the system
//! matrix diagonalize in the DFT basis.

mod diff;
mod fft;
mod wavelet;

pub use diff::{dx, dx_adj, dy, dy_adj, k_d_diag, laplacian_first_row};
pub use fft::{fft2, ifft2};
pub use wavelet::{dwt2, idwt2, WaveletSpec};

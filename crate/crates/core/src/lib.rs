//! Compressed-sensing + parallel-imaging MRI reconstruction with a
//! circulant-preconditioned inner solver.
//!
//! The reconstruction problem is the regularized least-squares fit
//!
//! ```text
//!   min_x  mu/2 * sum_i ||R F S_i x - y_i||^2
//!        + lambda/2 * (||D_x x||_1 + ||D_y x||_1)
//!        + gamma/2  * ||W x||_1
//! ```
//!
//! where `R` is a binary k-space sampling mask, `F` the unitary 2-D DFT,
//! `S_i` the i-th coil sensitivity profile, `D_x`/`D_y` periodic first
//! differences and `W` an orthonormal wavelet transform. The Split Bregman
//! method decouples the L1 terms; each inner step solves the Hermitian
//! positive-definite system
//!
//! ```text
//!   A = mu * sum_i (R F S_i)^H (R F S_i)
//!     + lambda * (D_x^H D_x + D_y^H D_y) + gamma * I
//! ```
//!
//! with preconditioned conjugate gradients. All terms of `A` except the
//! coil term are block-circulant with circulant blocks (BCCB), so the
//! circulant matrix `M = F^H diag(k) F` whose diagonal collects the BCCB
//! parts exactly and the coil term's circulant diagonal approximately is an
//! effective preconditioner that costs two FFTs per application.
//!
//! Module map:
//!
//! * [`model`]: image/coil-set containers, masks, parameters, logs, file IO
//! * [`transforms`]: unitary FFTs, periodic differences, wavelets
//! * [`encoding`]: the coil-wise forward model and the system operator `A`
//! * [`precond`]: circulant and Jacobi preconditioners
//! * [`solver`]: preconditioned conjugate gradients
//! * [`bregman`]: the outer/inner Split Bregman iteration
//! * [`calib`]: phantoms, simulated coils, normalization, coil compression
//! * [`sampling`]: variable-density Cartesian and random masks
//! * [`complexity`]: FLOP-count model of the solver stages
//! * [`oracle`]: dense reference implementations used by the test suite

pub mod bregman;
pub mod calib;
pub mod complexity;
pub mod encoding;
mod error;
pub mod model;
pub mod oracle;
pub mod precond;
pub mod sampling;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result};
pub use model::{ComplexImage, CoilSet, MaskKind, ReconParams, SamplingMask};
pub use num_complex::Complex64;

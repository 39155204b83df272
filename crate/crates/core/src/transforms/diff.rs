//! Periodic first differences along both image axes, their exact adjoints,
//! and the DFT diagonal of the combined normal operator.
//!
//! With periodic boundaries both difference operators are BCCB, so
//! `T = D_x^H D_x + D_y^H D_y` (a periodic discrete Laplacian, up to sign)
//! diagonalizes in the DFT basis with real eigenvalues
//! `4 - 2cos(2*pi*p/m) - 2cos(2*pi*q/n)`.

use num_complex::Complex64;

use crate::model::ComplexImage;

/// Forward difference along rows (x / foot-head): `u[i,j] - u[i-1,j]`, periodic.
pub fn dx(u: &ComplexImage) -> ComplexImage {
    let (m, n) = (u.rows(), u.cols());
    ComplexImage::from_fn(m, n, |i, j| u.at(i, j) - u.at((i + m - 1) % m, j))
}

/// Exact adjoint of [`dx`]: `u[i,j] - u[i+1,j]`, periodic.
pub fn dx_adj(u: &ComplexImage) -> ComplexImage {
    let (m, n) = (u.rows(), u.cols());
    ComplexImage::from_fn(m, n, |i, j| u.at(i, j) - u.at((i + 1) % m, j))
}

/// Forward difference along columns: `u[i,j] - u[i,j-1]`, periodic.
pub fn dy(u: &ComplexImage) -> ComplexImage {
    let (m, n) = (u.rows(), u.cols());
    ComplexImage::from_fn(m, n, |i, j| u.at(i, j) - u.at(i, (j + n - 1) % n))
}

/// Exact adjoint of [`dy`]: `u[i,j] - u[i,j+1]`, periodic.
pub fn dy_adj(u: &ComplexImage) -> ComplexImage {
    let (m, n) = (u.rows(), u.cols());
    ComplexImage::from_fn(m, n, |i, j| u.at(i, j) - u.at(i, (j + 1) % n))
}

/// First row of `D_x^H D_x + D_y^H D_y`, reshaped to m x n.
///
/// Built by accumulation so coincident wrap positions add up (for m = 2 the
/// +1 and -1 row offsets are the same cell and yield -2). Requires m, n >= 2.
pub fn laplacian_first_row(m: usize, n: usize) -> ComplexImage {
    assert!(m >= 2 && n >= 2, "laplacian_first_row requires m, n >= 2");
    let mut img = ComplexImage::zeros(m, n);
    let mut bump = |i: usize, j: usize, v: f64| {
        let cur = img.at(i, j);
        img.set(i, j, cur + Complex64::new(v, 0.0));
    };
    bump(0, 0, 4.0);
    bump(1 % m, 0, -1.0);
    bump(m - 1, 0, -1.0);
    bump(0, 1 % n, -1.0);
    bump(0, n - 1, -1.0);
    img
}

/// DFT diagonal of the combined difference normal operator:
/// entry `(p, q) = 4 - 2cos(2*pi*p/m) - 2cos(2*pi*q/n)`, real in `[0, 8]`.
///
/// Equal to the unnormalized DFT of [`laplacian_first_row`], i.e.
/// `sqrt(mn) * fft2(t1)` in this crate's unitary convention.
pub fn k_d_diag(m: usize, n: usize) -> ComplexImage {
    use std::f64::consts::PI;
    ComplexImage::from_fn(m, n, |p, q| {
        let v = 4.0
            - 2.0 * (2.0 * PI * p as f64 / m as f64).cos()
            - 2.0 * (2.0 * PI * q as f64 / n as f64).cos();
        Complex64::new(v, 0.0)
    })
}

//! Dense reference implementations used to validate the matrix-free paths.
//!
//! Everything here is deliberately naive: operators are materialized column
//! by column, the DFT matrix is written out from its defining exponentials,
//! and solves go through a dense Cholesky factorization. None of it shares
//! code with the fast implementations, which is the point; agreement between
//! the two is evidence, not tautology. A hard size cap keeps accidental
//! `O(N^3)` blowups out of the test suite.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ComplexImage;

/// Largest pixel count the dense helpers accept.
pub const DENSE_SIZE_CAP: usize = 4096;

fn check_cap(len: usize) -> Result<()> {
    if len > DENSE_SIZE_CAP {
        return Err(Error::SizeCapExceeded { n: len, cap: DENSE_SIZE_CAP });
    }
    Ok(())
}

/// Flattens a row-major image into a dense vector.
pub fn image_to_vector(img: &ComplexImage) -> DVector<Complex64> {
    DVector::from_iterator(img.len(), img.data().iter().copied())
}

/// Reshapes a dense vector into an `m x n` row-major image.
pub fn vector_to_image(v: &DVector<Complex64>, m: usize, n: usize) -> Result<ComplexImage> {
    if v.len() != m * n {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot fill a {m}x{n} image",
            v.len()
        )));
    }
    ComplexImage::new(m, n, v.iter().copied().collect())
}

/// Materializes a linear operator on `m x n` images by applying it to every
/// standard basis vector; column `j` is `op(e_j)`.
pub fn dense_operator(
    op: &dyn Fn(&ComplexImage) -> ComplexImage,
    m: usize,
    n: usize,
) -> Result<DMatrix<Complex64>> {
    let len = m * n;
    check_cap(len)?;
    let mut out = DMatrix::zeros(len, len);
    for j in 0..len {
        let mut e = ComplexImage::zeros(m, n);
        e.data_mut()[j] = Complex64::new(1.0, 0.0);
        let col = op(&e);
        for (i, v) in col.data().iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}

/// Unitary 2D DFT matrix on row-major `m x n` images, written out from the
/// defining exponentials: row `(p, q)`, column `(i, j)` holds
/// `exp(-2 pi sqrt(-1) (p i / m + q j / n)) / sqrt(m n)`.
pub fn dense_dft(m: usize, n: usize) -> Result<DMatrix<Complex64>> {
    let len = m * n;
    check_cap(len)?;
    let scale = 1.0 / (len as f64).sqrt();
    let tau = std::f64::consts::TAU;
    Ok(DMatrix::from_fn(len, len, |row, col| {
        let (p, q) = (row / n, row % n);
        let (i, j) = (col / n, col % n);
        let angle = -tau * (p as f64 * i as f64 / m as f64 + q as f64 * j as f64 / n as f64);
        Complex64::from_polar(scale, angle)
    }))
}

/// Diagonal of `F A F^H` for a dense operator `A`, computed with one matrix
/// product and per-row dot products (avoiding the second cubic product).
pub fn dense_k_diag(a: &DMatrix<Complex64>, m: usize, n: usize) -> Result<Vec<f64>> {
    let len = m * n;
    check_cap(len)?;
    if a.nrows() != len || a.ncols() != len {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, expected {len}x{len}",
            a.nrows(),
            a.ncols()
        )));
    }
    let f = dense_dft(m, n)?;
    let fa = &f * a;
    // diag(F A F^H)[t] = sum_s (F A)[t, s] conj(F[t, s]).
    let mut diag = Vec::with_capacity(len);
    for t in 0..len {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..len {
            acc += fa[(t, s)] * f[(t, s)].conj();
        }
        diag.push(acc.re);
    }
    Ok(diag)
}

/// Frobenius norm of the off-diagonal part.
pub fn offdiag_frobenius(a: &DMatrix<Complex64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Largest absolute entry of `A - A^H`.
pub fn hermitian_defect(a: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Solves `A x = b` by dense Cholesky; `A` must be Hermitian positive
/// definite.
pub fn dense_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    check_cap(a.nrows())?;
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "system is {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let chol = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    // The factorization takes complex square roots without complaint, so
    // positive definiteness shows up as a strictly positive real diagonal
    // of the factor; anything else means the input was not Hermitian
    // positive definite.
    let l = chol.l();
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-10 * d.re.max(1.0)) {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(chol.solve(b))
}

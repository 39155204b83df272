//! Preconditioned conjugate gradients for Hermitian positive definite
//! systems over complex images.
//!
//! The operator and the optional preconditioner solve are supplied as
//! closures, so the routine never sees matrices. Convergence is declared
//! when the recurrence residual satisfies `|r| / |b| <= epsilon`; the full
//! residual history is recorded, starting with the residual of the initial
//! guess, which makes warm starts visible (an already converged guess costs
//! zero iterations). Reductions run sequentially in index order, so a given
//! input always produces bitwise identical output.
//!
//! Failure modes are explicit: a non-finite value anywhere in the recurrence
//! reports [`Error::NonfiniteBreakdown`], a curvature `Re<p, Ap> <= 0`
//! reports [`Error::IndefinitenessDetected`] (the operator is not positive
//! definite), and running out of iterations is not an error; the outcome is
//! returned with `converged = false`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ComplexImage;

/// Result of a conjugate gradient solve.
#[derive(Clone, Debug)]
pub struct PcgOutcome {
    /// Final iterate.
    pub solution: ComplexImage,
    /// Number of completed iterations (zero when the guess already fits).
    pub iterations: usize,
    /// `|r| / |b|` for the initial guess and after every iteration.
    pub relative_residuals: Vec<f64>,
    /// Whether the tolerance was met within the iteration budget.
    pub converged: bool,
}

/// Operator application callback.
pub type ApplyFn<'a> = dyn Fn(&ComplexImage) -> ComplexImage + 'a;

/// Solves `A x = b` with conjugate gradients, optionally preconditioned.
///
/// `apply_a` must implement a Hermitian positive definite operator and
/// `precond`, when given, the solve `z = M^{-1} r` with Hermitian positive
/// definite `M`. The solve starts from `x0` (warm start) and stops once the
/// relative residual drops to `epsilon` or below, or after `max_iters`
/// iterations.
pub fn pcg(
    apply_a: &ApplyFn<'_>,
    b: &ComplexImage,
    x0: &ComplexImage,
    precond: Option<&ApplyFn<'_>>,
    epsilon: f64,
    max_iters: usize,
) -> Result<PcgOutcome> {
    if b.rows() != x0.rows() || b.cols() != x0.cols() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side is {}x{} but initial guess is {}x{}",
            b.rows(),
            b.cols(),
            x0.rows(),
            x0.cols()
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParams(format!("epsilon must be positive and finite, got {epsilon}")));
    }

    let b_norm = b.norm2();
    if b_norm == 0.0 {
        return Ok(PcgOutcome {
            solution: ComplexImage::zeros(b.rows(), b.cols()),
            iterations: 0,
            relative_residuals: vec![0.0],
            converged: true,
        });
    }

    let solve = |r: &ComplexImage| -> ComplexImage {
        match precond {
            Some(m) => m(r),
            None => r.clone(),
        }
    };

    let mut x = x0.clone();
    let mut r = b - &apply_a(&x);
    let mut relres = r.norm2() / b_norm;
    if !relres.is_finite() {
        return Err(Error::NonfiniteBreakdown { iteration: 0 });
    }
    let mut residuals = vec![relres];
    if relres <= epsilon {
        return Ok(PcgOutcome { solution: x, iterations: 0, relative_residuals: residuals, converged: true });
    }

    let mut z = solve(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z).re;
    let mut converged = false;
    let mut iterations = 0;

    for iteration in 1..=max_iters {
        let ap = apply_a(&p);
        let curvature = p.dot(&ap).re;
        if !curvature.is_finite() || !rz.is_finite() {
            return Err(Error::NonfiniteBreakdown { iteration });
        }
        if curvature <= 0.0 {
            return Err(Error::IndefinitenessDetected { iteration, value: curvature });
        }
        let alpha = Complex64::new(rz / curvature, 0.0);
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        relres = r.norm2() / b_norm;
        if !relres.is_finite() {
            return Err(Error::NonfiniteBreakdown { iteration });
        }
        residuals.push(relres);
        iterations = iteration;
        if relres <= epsilon {
            converged = true;
            break;
        }
        z = solve(&r);
        let rz_next = r.dot(&z).re;
        let beta = Complex64::new(rz_next / rz, 0.0);
        // p = z + beta p, reusing p's storage.
        p = {
            let mut next = z.clone();
            next.axpy(beta, &p);
            next
        };
        rz = rz_next;
    }

    Ok(PcgOutcome { solution: x, iterations, relative_residuals: residuals, converged })
}

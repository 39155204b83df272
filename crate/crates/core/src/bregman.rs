//! Split Bregman outer iteration for the joint sparsity reconstruction
//!
//! ```text
//!   min_x  |D_x x|_1 + |D_y x|_1 + |W x|_1
//!   s.t.   R F S_i x = y_i  for every coil i,
//! ```
//!
//! solved through the unconstrained sequence
//!
//! ```text
//!   x <- argmin  mu/2 sum_i |R F S_i x - y_i|^2
//!              + lambda/2 (|d_x - D_x x - b_x|^2 + |d_y - D_y x - b_y|^2)
//!              + gamma/2 |d_w - W x - b_w|^2
//!   d <- shrink(t + b, 1/weight)  with t the fresh transform of x
//!   b <- (t + b) - d
//!   y_i <- y_i + y_i^{measured} - R F S_i x     (data feedback)
//! ```
//!
//! The quadratic step is the linear system `A x = rhs` from
//! [`crate::encoding`], solved with warm-started conjugate gradients and an
//! optional preconditioner built once up front. Split variables `d` and
//! multipliers `b` persist across outer iterations, and the data feedback
//! runs on every outer pass, the last one included. Branches whose weight is
//! exactly zero are skipped, so `lambda = gamma = 0` reduces the whole
//! scheme to a single penalized least squares solve.
//!
//! The iterate starts from the root sum of squares of the zero-filled
//! per-coil inverse transforms, the standard magnitude-only first guess.

use std::time::Instant;

use num_complex::Complex64;

use crate::encoding::{apply_a, build_rhs, forward_coil, EncodingContext, RhsAux};
use crate::error::Result;
use crate::model::{CoilSet, ComplexImage, ConvergenceLog, OuterRecord, PcgRecord};
use crate::precond::{CirculantPreconditioner, JacobiPreconditioner, PrecondKind};
use crate::solver::pcg;
use crate::transforms::{dwt2, dx, dy, ifft2};

/// Complex soft threshold: magnitudes at or below `t` collapse to zero,
/// larger values keep their phase and lose `t` in magnitude.
pub fn shrink(z: &ComplexImage, t: f64) -> ComplexImage {
    z.map(|v| {
        let mag = v.norm();
        if mag <= t {
            Complex64::new(0.0, 0.0)
        } else {
            v * ((mag - t) / mag)
        }
    })
}

enum BuiltPrecond {
    None,
    Jacobi(JacobiPreconditioner),
    Circulant(CirculantPreconditioner),
}

impl BuiltPrecond {
    fn build_seconds(&self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Jacobi(p) => p.build_seconds(),
            Self::Circulant(p) => p.build_seconds(),
        }
    }
}

/// Stepwise driver for the outer iteration; [`run`] wraps the common case.
pub struct BregmanIteration<'a> {
    ctx: &'a EncodingContext,
    measured: &'a CoilSet,
    fed: CoilSet,
    x: ComplexImage,
    d_x: ComplexImage,
    b_x: ComplexImage,
    d_y: ComplexImage,
    b_y: ComplexImage,
    d_w: ComplexImage,
    b_w: ComplexImage,
    precond: BuiltPrecond,
    log: ConvergenceLog,
}

impl<'a> BregmanIteration<'a> {
    /// Validates shapes, builds the requested preconditioner and forms the
    /// root-sum-of-squares starting iterate.
    pub fn new(y: &'a CoilSet, ctx: &'a EncodingContext, kind: PrecondKind) -> Result<Self> {
        if y.ncoils() != ctx.ncoils() || y.rows() != ctx.rows() || y.cols() != ctx.cols() {
            return Err(crate::error::Error::DimensionMismatch(format!(
                "data has {} coils of {}x{}, context expects {} coils of {}x{}",
                y.ncoils(),
                y.rows(),
                y.cols(),
                ctx.ncoils(),
                ctx.rows(),
                ctx.cols()
            )));
        }
        let precond = match kind {
            PrecondKind::None => BuiltPrecond::None,
            PrecondKind::Jacobi => {
                BuiltPrecond::Jacobi(JacobiPreconditioner::build(ctx.sens(), ctx.mask(), ctx.params())?)
            }
            PrecondKind::Circulant => {
                BuiltPrecond::Circulant(CirculantPreconditioner::build(ctx.sens(), ctx.mask(), ctx.params())?)
            }
        };

        let (m, n) = (ctx.rows(), ctx.cols());
        let mut sum_sq = vec![0.0f64; m * n];
        for i in 0..y.ncoils() {
            let img = ifft2(y.coil(i));
            for (acc, v) in sum_sq.iter_mut().zip(img.data()) {
                *acc += v.norm_sqr();
            }
        }
        let x = ComplexImage::new(m, n, sum_sq.iter().map(|&s| Complex64::new(s.sqrt(), 0.0)).collect())?;

        let mut log = ConvergenceLog::default();
        log.precond_build_seconds = precond.build_seconds();

        Ok(Self {
            ctx,
            measured: y,
            fed: y.clone(),
            x,
            d_x: ComplexImage::zeros(m, n),
            b_x: ComplexImage::zeros(m, n),
            d_y: ComplexImage::zeros(m, n),
            b_y: ComplexImage::zeros(m, n),
            d_w: ComplexImage::zeros(m, n),
            b_w: ComplexImage::zeros(m, n),
            precond,
            log,
        })
    }

    /// Runs one outer iteration: `n_inner` rounds of quadratic solve plus
    /// shrinkage, then the data feedback.
    pub fn outer_step(&mut self) -> Result<()> {
        let p = self.ctx.params().clone();
        let one = Complex64::new(1.0, 0.0);
        let mut record = OuterRecord::default();

        for _ in 0..p.n_inner {
            let started = Instant::now();
            let aux = RhsAux {
                d_x: &self.d_x,
                b_x: &self.b_x,
                d_y: &self.d_y,
                b_y: &self.b_y,
                d_w: &self.d_w,
                b_w: &self.b_w,
            };
            let rhs = build_rhs(&self.fed, &aux, self.ctx)?;
            record.rhs_seconds += started.elapsed().as_secs_f64();

            let started = Instant::now();
            let outcome = {
                let ctx = self.ctx;
                let apply = |v: &ComplexImage| apply_a(v, ctx).expect("dimensions fixed at construction");
                let solve: Option<Box<dyn Fn(&ComplexImage) -> ComplexImage>> = match &self.precond {
                    BuiltPrecond::None => None,
                    BuiltPrecond::Jacobi(pre) => Some(Box::new(move |r: &ComplexImage| pre.apply(r))),
                    BuiltPrecond::Circulant(pre) => Some(Box::new(move |r: &ComplexImage| pre.apply(r))),
                };
                pcg(&apply, &rhs, &self.x, solve.as_deref(), p.epsilon, p.max_pcg_iters)?
            };
            record.pcg_seconds += started.elapsed().as_secs_f64();
            self.x = outcome.solution;
            record.solves.push(PcgRecord {
                iterations: outcome.iterations,
                relative_residuals: outcome.relative_residuals,
                converged: outcome.converged,
            });

            let started = Instant::now();
            if p.lambda > 0.0 {
                let threshold = 1.0 / p.lambda;
                let tx = &dx(&self.x) + &self.b_x;
                self.d_x = shrink(&tx, threshold);
                self.b_x = &tx - &self.d_x;
                let ty = &dy(&self.x) + &self.b_y;
                self.d_y = shrink(&ty, threshold);
                self.b_y = &ty - &self.d_y;
            }
            if p.gamma > 0.0 {
                let threshold = 1.0 / p.gamma;
                let tw = &dwt2(&self.x, self.ctx.wavelet())? + &self.b_w;
                self.d_w = shrink(&tw, threshold);
                self.b_w = &tw - &self.d_w;
            }
            record.shrink_seconds += started.elapsed().as_secs_f64();
        }

        let started = Instant::now();
        for i in 0..self.ctx.ncoils() {
            let fwd = forward_coil(&self.x, self.ctx, i)?;
            let target = self.fed.coil_mut(i);
            target.axpy(one, self.measured.coil(i));
            target.axpy(-one, &fwd);
        }
        record.feedback_seconds = started.elapsed().as_secs_f64();

        self.log.outer.push(record);
        Ok(())
    }

    /// Current iterate.
    pub fn x(&self) -> &ComplexImage {
        &self.x
    }

    /// Split variable and multiplier of the row-difference branch.
    pub fn tv_x_state(&self) -> (&ComplexImage, &ComplexImage) {
        (&self.d_x, &self.b_x)
    }

    /// Split variable and multiplier of the column-difference branch.
    pub fn tv_y_state(&self) -> (&ComplexImage, &ComplexImage) {
        (&self.d_y, &self.b_y)
    }

    /// Split variable and multiplier of the wavelet branch.
    pub fn wavelet_state(&self) -> (&ComplexImage, &ComplexImage) {
        (&self.d_w, &self.b_w)
    }

    /// Data fed to the next quadratic solve (after feedback).
    pub fn fed_data(&self) -> &CoilSet {
        &self.fed
    }

    /// Timings and per-solve records accumulated so far.
    pub fn log(&self) -> &ConvergenceLog {
        &self.log
    }

    /// Finishes the run, handing back the iterate and the log.
    pub fn into_result(self) -> (ComplexImage, ConvergenceLog) {
        (self.x, self.log)
    }
}

/// Runs the configured number of outer iterations and returns the
/// reconstruction together with its convergence log.
pub fn run(y: &CoilSet, ctx: &EncodingContext, kind: PrecondKind) -> Result<(ComplexImage, ConvergenceLog)> {
    let mut iteration = BregmanIteration::new(y, ctx, kind)?;
    for _ in 0..ctx.params().n_outer {
        iteration.outer_step()?;
    }
    Ok(iteration.into_result())
}

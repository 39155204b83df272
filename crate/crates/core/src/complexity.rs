//! Closed-form floating point operation counts for the solver building
//! blocks on power-of-two grids.
//!
//! Counts are expressed per image of `N` pixels with `Nc` coils, taking one
//! radix-2 FFT as `N log2 N` operations:
//!
//! * preconditioner construction: one FFT per coil for the kernel power,
//!   three more for the correlation with the mask plus one for the
//!   difference symbol, and pointwise accumulation, giving
//!   `(3 + 2 Nc) N + (4 + Nc) N log2 N`;
//! * one application of the system operator: two FFTs per coil and the
//!   pointwise weighting/difference updates, giving
//!   `(6 + 4 Nc) N + 2 Nc N log2 N`;
//! * one application of the circulant preconditioner inverse: a forward and
//!   inverse FFT around one pointwise product, giving `N + 2 N log2 N`.
//!
//! The interesting consequence is the ratio of preconditioning cost to
//! operator cost per iteration, `(1 + 2 L) / ((6 + 4 Nc) + 2 Nc L)` at
//! `N = 2^L`, which tends to `1 / Nc` as the grid grows: the more coils,
//! the cheaper preconditioning is in relative terms.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

fn check_grid(n: u64) -> Result<u32> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::NonPowerOfTwo { n });
    }
    Ok(n.trailing_zeros())
}

fn check_coils(ncoils: u64) -> Result<()> {
    if ncoils == 0 {
        return Err(Error::InvalidParams("flop model needs at least one coil".into()));
    }
    Ok(())
}

fn checked(value: Option<u64>) -> Result<u64> {
    value.ok_or_else(|| Error::InvalidParams("flop count overflows a 64-bit integer".into()))
}

/// Operations to build the circulant preconditioner diagonal.
pub fn build_flops(n: u64, ncoils: u64) -> Result<u64> {
    let l = check_grid(n)? as u64;
    check_coils(ncoils)?;
    let pointwise = checked((3 + 2 * ncoils).checked_mul(n))?;
    let transforms = checked((4 + ncoils).checked_mul(n).and_then(|v| v.checked_mul(l)))?;
    checked(pointwise.checked_add(transforms))
}

/// Operations for one application of the system operator.
pub fn apply_system_flops(n: u64, ncoils: u64) -> Result<u64> {
    let l = check_grid(n)? as u64;
    check_coils(ncoils)?;
    let pointwise = checked((6 + 4 * ncoils).checked_mul(n))?;
    let transforms = checked((2 * ncoils).checked_mul(n).and_then(|v| v.checked_mul(l)))?;
    checked(pointwise.checked_add(transforms))
}

/// Operations for one application of the circulant preconditioner inverse.
pub fn apply_precond_flops(n: u64) -> Result<u64> {
    let l = check_grid(n)? as u64;
    checked(n.checked_mul(2 * l).and_then(|v| v.checked_add(n)))
}

/// Ratio of preconditioner application cost to operator application cost,
/// `(1 + 2 L) / ((6 + 4 Nc) + 2 Nc L)`; evaluated in floating point so the
/// shared factor `N` never overflows.
pub fn cost_ratio(n: u64, ncoils: u64) -> Result<f64> {
    let l = check_grid(n)? as f64;
    check_coils(ncoils)?;
    let nc = ncoils as f64;
    Ok((1.0 + 2.0 * l) / ((6.0 + 4.0 * nc) + 2.0 * nc * l))
}

/// One row of the cost table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlopRow {
    pub n: u64,
    pub flops_m: u64,
    pub flops_a: u64,
    pub flops_combined: u64,
}

/// Evaluates the model at `n = 2^e` for each exponent.
pub fn flop_table(ncoils: u64, exponents: &[u32]) -> Result<Vec<FlopRow>> {
    exponents
        .iter()
        .map(|&e| {
            if e >= 63 {
                return Err(Error::InvalidParams(format!("grid exponent {e} overflows the model")));
            }
            let n = 1u64 << e;
            let flops_m = apply_precond_flops(n)?;
            let flops_a = apply_system_flops(n, ncoils)?;
            Ok(FlopRow { n, flops_m, flops_a, flops_combined: flops_m + flops_a })
        })
        .collect()
}

/// Writes the cost table as CSV with columns `N,flops_M,flops_A,flops_combined`.
pub fn write_flops_csv(path: &Path, ncoils: u64, exponents: &[u32]) -> Result<()> {
    let rows = flop_table(ncoils, exponents)?;
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "N,flops_M,flops_A,flops_combined")?;
    for row in rows {
        writeln!(out, "{},{},{},{}", row.n, row.flops_m, row.flops_a, row.flops_combined)?;
    }
    Ok(())
}

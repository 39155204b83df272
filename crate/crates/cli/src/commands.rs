//! The four subcommands: simulate, recon, bench and flops.
//!
//! Each command reads a [`Config`], touches the filesystem only under the
//! configured output directory (plus an explicit input directory for recon),
//! and prints a short human summary to stdout. CSV schemas are stable; rerun
//! with the same config and seeds to get byte-identical data files (timing
//! columns excluded).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sbcs::Complex64;
use sbcs::calib::{support_relative_error, SupportMask};
use sbcs::complexity::write_flops_csv;
use sbcs::model::io::{read_cimg, write_coils_cimg, write_image_cimg, write_magnitude_pgm};
use sbcs::model::{ComplexImage, ConvergenceLog};
use sbcs::precond::PrecondKind;

use crate::config::Config;
use crate::pipeline;
use crate::CliError;

/// Simulates phantom, sensitivities, mask and k-space into CIMG files.
pub fn simulate(cfg: &Config) -> Result<(), CliError> {
    let sim = pipeline::simulate(cfg, cfg.size)?;
    fs::create_dir_all(&cfg.out).map_err(CliError::io)?;
    write_image_cimg(cfg.out.join("phantom.cimg"), &sim.truth)?;
    write_magnitude_pgm(cfg.out.join("phantom.pgm"), &sim.truth)?;
    write_coils_cimg(cfg.out.join("sens.cimg"), &sim.sens)?;
    write_coils_cimg(cfg.out.join("kspace.cimg"), &sim.kspace)?;
    let mask_image = sim.mask.to_image();
    write_image_cimg(cfg.out.join("mask.cimg"), &mask_image)?;
    write_magnitude_pgm(cfg.out.join("mask.pgm"), &mask_image)?;
    println!(
        "simulated {}x{} phantom, {} coils, {} mask: {} of {} cells sampled (R = {:.2})",
        cfg.size,
        cfg.size,
        sim.sens.ncoils(),
        cfg.mask,
        sim.mask.sampled_count(),
        cfg.size * cfg.size,
        sim.mask.achieved_r()
    );
    println!("wrote phantom/sens/kspace/mask files to {}", cfg.out.display());
    Ok(())
}

/// Reconstructs from previously simulated files.
pub fn recon(
    cfg: &Config,
    data: Option<PathBuf>,
    reference: Option<PathBuf>,
) -> Result<(), CliError> {
    // Reject bad parameters before touching the filesystem.
    let kind: PrecondKind = cfg.precond.parse()?;
    pipeline::recon_params(cfg)?;

    let data_dir = data.unwrap_or_else(|| cfg.out.clone());
    let sens = read_cimg(data_dir.join("sens.cimg"))?;
    let kspace = read_cimg(data_dir.join("kspace.cimg"))?;
    let mask_image = read_cimg(data_dir.join("mask.cimg"))?.coil(0).clone();
    let mask = pipeline::mask_from_image(&mask_image, cfg)?;

    let (x, log) = pipeline::reconstruct(cfg, &sens, &mask, &kspace, kind, cfg.keep_coils)?;

    fs::create_dir_all(&cfg.out).map_err(CliError::io)?;
    write_image_cimg(cfg.out.join("recon.cimg"), &x)?;
    write_magnitude_pgm(cfg.out.join("recon.pgm"), &x)?;
    let log_file = File::create(cfg.out.join("log.csv")).map_err(CliError::io)?;
    log.write_csv(BufWriter::new(log_file)).map_err(CliError::io)?;

    println!(
        "reconstructed {}x{} with {kind} preconditioner: {} PCG iterations over {} outer steps",
        x.rows(),
        x.cols(),
        log.total_pcg_iterations(),
        log.outer.len()
    );
    if log.precond_build_seconds > 0.0 {
        println!(
            "preconditioner build {:.4} s of {:.4} s total ({:.2}%)",
            log.precond_build_seconds,
            log.total_seconds(),
            100.0 * log.precond_build_seconds / log.total_seconds()
        );
    }

    if let Some(ref_path) = reference {
        let truth = read_cimg(&ref_path)?.coil(0).clone();
        let support = SupportMask::from_reference(&truth, cfg.support_threshold)?;
        let err = support_relative_error(&x, &truth, &support)?;
        let diff = difference_magnitude(&x, &truth)?;
        write_image_cimg(cfg.out.join("diff.cimg"), &diff)?;
        write_magnitude_pgm(cfg.out.join("diff.pgm"), &diff)?;
        println!("support relative error vs {}: {:.4}", ref_path.display(), err);
    }
    println!("wrote recon/log files to {}", cfg.out.display());
    Ok(())
}

/// Absolute difference of two equally sized images.
fn difference_magnitude(a: &ComplexImage, b: &ComplexImage) -> Result<ComplexImage, CliError> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(CliError::from(sbcs::Error::DimensionMismatch(format!(
            "difference needs equal shapes, got {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        ))));
    }
    Ok(ComplexImage::from_fn(a.rows(), a.cols(), |i, j| {
        Complex64::new((a.at(i, j) - b.at(i, j)).norm(), 0.0)
    }))
}

/// One bench measurement: a reconstruction plus its quality number.
struct BenchRun {
    size: usize,
    kind: PrecondKind,
    log: ConvergenceLog,
    support_err: f64,
}

/// Sweeps the size grid with each preconditioner and writes the CSVs.
pub fn bench(cfg: &Config, sizes: &[usize], kinds: &[PrecondKind]) -> Result<(), CliError> {
    if sizes.is_empty() || kinds.is_empty() {
        return Err(CliError::config("bench needs at least one size and one preconditioner"));
    }
    fs::create_dir_all(&cfg.out).map_err(CliError::io)?;
    let mut runs: Vec<BenchRun> = Vec::new();

    for &size in sizes {
        eprintln!("bench: simulating {size}x{size}");
        let sim = pipeline::simulate(cfg, size)?;
        write_image_cimg(cfg.out.join(format!("truth_{size}.cimg")), &sim.truth)?;
        for &kind in kinds {
            eprintln!("bench: reconstructing {size}x{size} with {kind}");
            let (x, log) =
                pipeline::reconstruct(cfg, &sim.sens, &sim.mask, &sim.kspace, kind, cfg.keep_coils)?;
            let support_err = support_relative_error(&x, &sim.truth, &sim.support)?;
            write_image_cimg(cfg.out.join(format!("recon_{size}_{kind}.cimg")), &x)?;
            write_magnitude_pgm(cfg.out.join(format!("recon_{size}_{kind}.pgm")), &x)?;
            println!(
                "size {size} {kind}: {} PCG iterations, support error {:.4}, {:.3} s total (build {:.2}%)",
                log.total_pcg_iterations(),
                support_err,
                log.total_seconds(),
                100.0 * log.precond_build_seconds / log.total_seconds()
            );
            runs.push(BenchRun { size, kind, log, support_err });
        }
    }

    write_iterations_csv(&cfg.out.join("iterations.csv"), &runs)?;
    write_timing_csv(&cfg.out.join("timing.csv"), &runs)?;
    write_buildcost_csv(&cfg.out.join("buildcost.csv"), &runs)?;
    write_quality_csv(&cfg.out.join("quality.csv"), &runs)?;
    println!("wrote iterations/timing/buildcost/quality CSVs to {}", cfg.out.display());
    Ok(())
}

/// One row per (size, preconditioner, outer iteration).
fn write_iterations_csv(path: &Path, runs: &[BenchRun]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(CliError::io)?);
    writeln!(w, "size,precond,outer,pcg_iters,final_relres").map_err(CliError::io)?;
    for run in runs {
        for (idx, outer) in run.log.outer.iter().enumerate() {
            let relres =
                outer.solves.last().map(|s| s.final_relative_residual()).unwrap_or(f64::NAN);
            writeln!(
                w,
                "{},{},{},{},{:.6e}",
                run.size,
                run.kind,
                idx + 1,
                outer.pcg_iterations(),
                relres
            )
            .map_err(CliError::io)?;
        }
    }
    w.flush().map_err(CliError::io)
}

/// Stage wall-clock totals per (size, preconditioner).
fn write_timing_csv(path: &Path, runs: &[BenchRun]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(CliError::io)?);
    writeln!(w, "size,precond,build_s,rhs_s,pcg_s,shrink_s,feedback_s,total_s")
        .map_err(CliError::io)?;
    for run in runs {
        let rhs: f64 = run.log.outer.iter().map(|o| o.rhs_seconds).sum();
        let shrink: f64 = run.log.outer.iter().map(|o| o.shrink_seconds).sum();
        let feedback: f64 = run.log.outer.iter().map(|o| o.feedback_seconds).sum();
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            run.size,
            run.kind,
            run.log.precond_build_seconds,
            rhs,
            run.log.pcg_seconds(),
            shrink,
            feedback,
            run.log.total_seconds()
        )
        .map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}

/// Build-time share of the total, for preconditioners that build anything.
fn write_buildcost_csv(path: &Path, runs: &[BenchRun]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(CliError::io)?);
    writeln!(w, "size,precond,build_s,total_s,share_pct").map_err(CliError::io)?;
    for run in runs.iter().filter(|r| r.kind != PrecondKind::None) {
        let total = run.log.total_seconds();
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.4}",
            run.size,
            run.kind,
            run.log.precond_build_seconds,
            total,
            100.0 * run.log.precond_build_seconds / total
        )
        .map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}

/// Support-restricted relative error per (size, preconditioner).
fn write_quality_csv(path: &Path, runs: &[BenchRun]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(CliError::io)?);
    writeln!(w, "size,precond,support_rel_err").map_err(CliError::io)?;
    for run in runs {
        writeln!(w, "{},{},{:.6}", run.size, run.kind, run.support_err).map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}

/// Writes the FLOP table CSV for the configured coil count.
pub fn flops(cfg: &Config) -> Result<(), CliError> {
    if cfg.flops_min_exp > cfg.flops_max_exp {
        return Err(CliError::config(format!(
            "flops exponent range is empty: {} > {}",
            cfg.flops_min_exp, cfg.flops_max_exp
        )));
    }
    let exponents: Vec<u32> = (cfg.flops_min_exp..=cfg.flops_max_exp).collect();
    fs::create_dir_all(&cfg.out).map_err(CliError::io)?;
    let path = cfg.out.join("flops.csv");
    write_flops_csv(&path, cfg.coils as u64, &exponents)?;
    println!(
        "wrote {} with {} rows (N = 2^{}..2^{}, {} coils)",
        path.display(),
        exponents.len(),
        cfg.flops_min_exp,
        cfg.flops_max_exp,
        cfg.coils
    );
    Ok(())
}

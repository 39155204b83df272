//! File formats: the CIMG complex-image container, PGM previews, CSV logs.
//!
//! CIMG layout (all integers little-endian):
//!
//! ```text
//!   bytes 0..4   magic "CIMG"
//!   bytes 4..8   version, u32, currently 1
//!   bytes 8..12  m (rows), u32
//!   bytes 12..16 n (cols), u32
//!   bytes 16..20 ncoils, u32
//!   payload      ncoils * m * n pairs of little-endian f64 (re, im),
//!                coil-major, row-major within a coil
//! ```
//!
//! Writing then reading reproduces every payload bit exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CoilSet, ComplexImage};

const MAGIC: [u8; 4] = *b"CIMG";
const VERSION: u32 = 1;

/// Upper bound on accepted payload element counts (guards absurd headers).
const MAX_ELEMENTS: u64 = 1 << 28;

// ===========================================================================
// CIMG
// ===========================================================================

/// Writes a single image as a one-coil CIMG file.
pub fn write_image_cimg<P: AsRef<Path>>(path: P, img: &ComplexImage) -> Result<()> {
    write_cimg_payload(path, img.rows(), img.cols(), std::slice::from_ref(img))
}

/// Writes every coil of a set into one CIMG file.
pub fn write_coils_cimg<P: AsRef<Path>>(path: P, coils: &CoilSet) -> Result<()> {
    write_cimg_payload(path, coils.rows(), coils.cols(), coils.images())
}

fn write_cimg_payload<P: AsRef<Path>>(path: P, m: usize, n: usize, images: &[ComplexImage]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(images.len() as u32).to_le_bytes())?;
    for img in images {
        for v in img.data() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a CIMG file; single images come back as a one-coil set.
pub fn read_cimg<P: AsRef<Path>>(path: P) -> Result<CoilSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 20];
    let got = read_up_to(&mut r, &mut header)?;
    if got < 4 || header[0..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if got < 20 {
        return Err(Error::TruncatedPayload { expected: 20, actual: got as u64 });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedVersion { version });
    }
    let m = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let ncoils = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
    if m == 0 || n == 0 || ncoils == 0 {
        return Err(Error::DimensionMismatch(format!(
            "CIMG header declares {ncoils} coils of {m}x{n}"
        )));
    }
    let elements = ncoils as u64 * m as u64 * n as u64;
    if elements > MAX_ELEMENTS {
        return Err(Error::DimensionMismatch(format!(
            "CIMG payload of {elements} elements exceeds the {MAX_ELEMENTS} cap"
        )));
    }
    let expected = elements * 16;
    let mut payload = vec![0u8; expected as usize];
    let actual = read_up_to(&mut r, &mut payload)? as u64;
    if actual < expected {
        return Err(Error::TruncatedPayload { expected: expected + 20, actual: actual + 20 });
    }
    let mut images = Vec::with_capacity(ncoils);
    let mut off = 0;
    for _ in 0..ncoils {
        let mut data = Vec::with_capacity(m * n);
        for _ in 0..m * n {
            let re = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(payload[off + 8..off + 16].try_into().unwrap());
            data.push(Complex64::new(re, im));
            off += 16;
        }
        images.push(ComplexImage::new(m, n, data)?);
    }
    CoilSet::new(images)
}

/// Reads as many bytes as available into `buf`, returning the count.
fn read_up_to<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

// ===========================================================================
// PGM
// ===========================================================================

/// Writes values as a binary 8-bit PGM (P5), min-max windowed to 0..255.
///
/// `values` is row-major with `m` rows of `n` entries; a constant input
/// produces an all-black image.
pub fn write_pgm<P: AsRef<Path>>(path: P, m: usize, n: usize, values: &[f64]) -> Result<()> {
    if values.len() != m * n || m == 0 || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "pgm expects {m}x{n} = {} values, got {}",
            m * n,
            values.len()
        )));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{n} {m}\n255\n")?;
    let bytes: Vec<u8> = values
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span * 255.0).round() as u8 } else { 0 })
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Convenience: magnitude image of a complex array as PGM.
pub fn write_magnitude_pgm<P: AsRef<Path>>(path: P, img: &ComplexImage) -> Result<()> {
    write_pgm(path, img.rows(), img.cols(), &img.magnitudes())
}

// ===========================================================================
// Tests
// ===========================================================================

//! Binary serialization of coefficient grids.
//!
//! Layout (little endian): magic `DCWT`, u16 version, then
//! `L: u64, K: u32, a_d: u32, xi_s, B, y_m, alpha, beta, gamma_re, gamma_im: f64`,
//! then K rows of N complex values as interleaved (re, im) f64 pairs, then
//! the N lowpass values.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use num_complex::Complex64;

use crate::dcwt::{CoefficientGrid, FilterBankSpec, GridLayout};
use crate::error::{Error, Result};
use crate::kernels::CauchyParams;

pub const MAGIC: &[u8; 4] = b"DCWT";
pub const VERSION: u16 = 1;
const HEADER_BYTES: usize = 4 + 2 + 8 + 4 + 4 + 7 * 8;

pub fn write_grid<W: Write>(mut w: W, grid: &CoefficientGrid) -> Result<()> {
    grid.check_dims()?;
    let spec = &grid.layout.spec;
    let params = &grid.layout.params;
    w.write_all(MAGIC)?;
    w.write_u16::<LE>(VERSION)?;
    w.write_u64::<LE>(spec.length as u64)?;
    w.write_u32::<LE>(spec.channels as u32)?;
    w.write_u32::<LE>(spec.decimation as u32)?;
    for v in [
        spec.sample_rate,
        spec.bins_per_octave,
        spec.min_scale,
        params.alpha(),
        params.beta(),
        params.gamma().re,
        params.gamma().im,
    ] {
        w.write_f64::<LE>(v)?;
    }
    for c in grid.wavelet.iter() {
        w.write_f64::<LE>(c.re)?;
        w.write_f64::<LE>(c.im)?;
    }
    for v in &grid.lowpass {
        w.write_f64::<LE>(*v)?;
    }
    w.flush()?;
    Ok(())
}

fn truncated(_: std::io::Error) -> Error {
    Error::Corrupt("file is truncated".into())
}

/// Parses a complete grid file held in memory.
pub fn read_grid_bytes(bytes: &[u8]) -> Result<CoefficientGrid> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Corrupt("bad magic bytes".into()));
    }
    let version = r.read_u16::<LE>().map_err(truncated)?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let length = r.read_u64::<LE>().map_err(truncated)?;
    let channels = r.read_u32::<LE>().map_err(truncated)? as usize;
    let decimation = r.read_u32::<LE>().map_err(truncated)? as usize;
    let mut f = [0.0; 7];
    for v in f.iter_mut() {
        *v = r.read_f64::<LE>().map_err(truncated)?;
    }
    let [sample_rate, bins, min_scale, alpha, beta, gamma_re, gamma_im] = f;
    let length = usize::try_from(length).map_err(|_| Error::Corrupt("length overflows".into()))?;
    let spec = FilterBankSpec::new(length, sample_rate, channels, bins, min_scale, decimation)
        .map_err(|e| Error::Corrupt(format!("inconsistent header: {e}")))?;
    let params = CauchyParams::new(alpha, beta, gamma_re, gamma_im, true)
        .map_err(|e| Error::Corrupt(format!("inconsistent header: {e}")))?;
    let layout = GridLayout::new(spec, params).map_err(|e| Error::Corrupt(format!("inconsistent header: {e}")))?;

    let hops = spec.hops();
    let expected = channels
        .checked_mul(hops)
        .and_then(|c| c.checked_mul(16))
        .and_then(|c| c.checked_add(hops * 8))
        .ok_or_else(|| Error::Corrupt("dimensions overflow".into()))?;
    let payload = bytes.len() - HEADER_BYTES;
    if payload < expected {
        return Err(Error::Corrupt(format!("file is truncated: {payload} of {expected} payload bytes")));
    }
    if payload > expected {
        return Err(Error::Corrupt(format!("{} trailing bytes", payload - expected)));
    }
    let mut wavelet = Array2::zeros((channels, hops));
    for c in wavelet.iter_mut() {
        let re = r.read_f64::<LE>().map_err(truncated)?;
        let im = r.read_f64::<LE>().map_err(truncated)?;
        *c = Complex64::new(re, im);
    }
    let mut lowpass = vec![0.0; hops];
    for v in lowpass.iter_mut() {
        *v = r.read_f64::<LE>().map_err(truncated)?;
    }
    Ok(CoefficientGrid {
        layout,
        wavelet,
        lowpass,
    })
}

pub fn read_grid<R: Read>(mut r: R) -> Result<CoefficientGrid> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    read_grid_bytes(&bytes)
}

pub fn save_grid(path: impl AsRef<Path>, grid: &CoefficientGrid) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_BYTES + grid.wavelet.len() * 16 + grid.lowpass.len() * 8);
    write_grid(&mut buf, grid)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<CoefficientGrid> {
    read_grid_bytes(&fs::read(path)?)
}

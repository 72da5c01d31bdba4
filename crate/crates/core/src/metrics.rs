//! Spectral convergence and reconstruction reports.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::phase::MagnitudeGrid;

/// Value reported for an exact match instead of -∞.
pub const SC_FLOOR_DB: f64 = -600.0;

pub const REPORT_HEADER: [&str; 10] = [
    "signal_id",
    "method",
    "alpha",
    "beta",
    "a_d",
    "K",
    "B",
    "sc_db",
    "runtime_ms",
    "seed",
];

/// SC = 20 log10(‖M_p - M_t‖ / ‖M_t‖) over all wavelet rows and the lowpass
/// row.
pub fn spectral_convergence(proposed: &MagnitudeGrid, target: &MagnitudeGrid) -> Result<f64> {
    spectral_convergence_with(proposed, target, true)
}

/// Spectral convergence with the lowpass row optionally left out.
pub fn spectral_convergence_with(proposed: &MagnitudeGrid, target: &MagnitudeGrid, include_lowpass: bool) -> Result<f64> {
    if proposed.values.dim() != target.values.dim() || proposed.lowpass.len() != target.lowpass.len() {
        return Err(Error::DimensionMismatch(format!(
            "magnitude grids {:?} and {:?} differ",
            proposed.values.dim(),
            target.values.dim()
        )));
    }
    let mut num: f64 = proposed
        .values
        .iter()
        .zip(target.values.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    let mut den: f64 = target.values.iter().map(|t| t * t).sum();
    if include_lowpass {
        num += proposed.lowpass.iter().zip(&target.lowpass).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
        den += target.lowpass.iter().map(|t| t * t).sum::<f64>();
    }
    sc_from_energies(num, den)
}

pub(crate) fn sc_from_energies(num: f64, den: f64) -> Result<f64> {
    if !(den > 0.0) {
        return invalid("spectral convergence is undefined for a zero target");
    }
    if num == 0.0 {
        return Ok(SC_FLOOR_DB);
    }
    Ok((10.0 * (num / den).log10()).max(SC_FLOOR_DB))
}

/// Phase reconstruction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Wpghi,
    RFglim,
    WFglim,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Wpghi, Method::RFglim, Method::WFglim];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Wpghi => "WPGHI",
            Method::RFglim => "RFGLIM",
            Method::WFglim => "WFGLIM",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "wpghi" => Ok(Method::Wpghi),
            "rfglim" => Ok(Method::RFglim),
            "wfglim" => Ok(Method::WFglim),
            _ => invalid(format!("unknown method '{s}' (expected wpghi, rfglim or wfglim)")),
        }
    }
}

/// One row of a reconstruction report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub signal_id: String,
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub decimation: usize,
    pub channels: usize,
    pub bins_per_octave: f64,
    pub sc_db: f64,
    pub runtime_ms: f64,
    pub seed: u64,
}

impl ReconstructionReport {
    pub fn record(&self) -> [String; 10] {
        [
            self.signal_id.clone(),
            self.method.to_string(),
            self.alpha.to_string(),
            self.beta.to_string(),
            self.decimation.to_string(),
            self.channels.to_string(),
            format!("{:.6}", self.bins_per_octave),
            format!("{:.4}", self.sc_db),
            format!("{:.1}", self.runtime_ms),
            self.seed.to_string(),
        ]
    }
}

/// Writes a header row followed by one row per report.
pub fn write_reports<W: Write>(out: W, reports: &[ReconstructionReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER).map_err(csv_error)?;
    for r in reports {
        w.write_record(r.record()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Mean and sample standard deviation; (NaN, NaN) for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

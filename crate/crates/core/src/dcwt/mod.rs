//! Discrete continuous wavelet transform (DCWT).
//!
//! Filters are obtained by sampling the continuous frequency response of the
//! mother wavelet at the scales `y_k = 2^(k/B) · y_m`. Every channel is
//! decimated by the same step `a_d`, and an extra real lowpass channel fills
//! in the frequencies below the lowest wavelet band.

mod frame;
mod solve;

pub use frame::WaveletFrame;
pub use solve::{CgOutcome, DEFAULT_CG_MAXIT, DEFAULT_CG_TOL};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::kernels::CauchyParams;

/// Discretization parameters of a wavelet filter bank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBankSpec {
    /// Signal length L in samples.
    pub length: usize,
    /// Sample rate ξ_s in Hz.
    pub sample_rate: f64,
    /// Number of wavelet channels K.
    pub channels: usize,
    /// Scale steps per octave B.
    pub bins_per_octave: f64,
    /// Minimum scale y_m in seconds.
    pub min_scale: f64,
    /// Decimation step a_d in samples.
    pub decimation: usize,
}

impl FilterBankSpec {
    pub fn new(
        length: usize,
        sample_rate: f64,
        channels: usize,
        bins_per_octave: f64,
        min_scale: f64,
        decimation: usize,
    ) -> Result<Self> {
        let spec = Self {
            length,
            sample_rate,
            channels,
            bins_per_octave,
            min_scale,
            decimation,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Places `channels` centers geometrically between `f_min` and `f_max`
    /// (both treated as channel centers) and solves for B and y_m.
    pub fn from_range(
        length: usize,
        sample_rate: f64,
        channels: usize,
        f_min: f64,
        f_max: f64,
        decimation: usize,
        params: &CauchyParams,
    ) -> Result<Self> {
        if !(f_min > 0.0 && f_max >= f_min && f_max.is_finite()) {
            return invalid(format!("need 0 < fmin <= fmax, got [{f_min}, {f_max}]"));
        }
        let bins_per_octave = if channels > 1 {
            if f_max == f_min {
                return invalid("fmin == fmax needs exactly one channel");
            }
            (channels - 1) as f64 / (f_max / f_min).log2()
        } else {
            1.0
        };
        let min_scale = params.center_frequency()? / f_max;
        Self::new(length, sample_rate, channels, bins_per_octave, min_scale, decimation)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.channels == 0 || self.decimation == 0 {
            return invalid("length, channels and decimation must be positive");
        }
        if !self.length.is_multiple_of(self.decimation) {
            return invalid(format!(
                "decimation {} does not divide the signal length {}",
                self.decimation, self.length
            ));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return invalid(format!("sample rate must be positive, got {}", self.sample_rate));
        }
        if !(self.bins_per_octave > 0.0 && self.bins_per_octave.is_finite()) {
            return invalid(format!("bins per octave must be positive, got {}", self.bins_per_octave));
        }
        if !(self.min_scale > 0.0 && self.min_scale.is_finite()) {
            return invalid(format!("minimum scale must be positive, got {}", self.min_scale));
        }
        Ok(())
    }

    /// Number of time positions N = L / a_d.
    pub fn hops(&self) -> usize {
        self.length / self.decimation
    }

    /// K / a_d.
    pub fn redundancy(&self) -> f64 {
        self.channels as f64 / self.decimation as f64
    }

    /// Hop size in seconds.
    pub fn hop_seconds(&self) -> f64 {
        self.decimation as f64 / self.sample_rate
    }

    pub fn scale(&self, k: usize) -> f64 {
        2f64.powf(k as f64 / self.bins_per_octave) * self.min_scale
    }

    /// Center frequencies ξ_k = 2^(-k/B) ξ_b / y_m in Hz, decreasing in k.
    pub fn centers(&self, params: &CauchyParams) -> Result<Vec<f64>> {
        let peak = params.center_frequency()?;
        Ok((0..self.channels).map(|k| peak / self.scale(k)).collect())
    }
}

/// Filter-bank geometry shared by coefficient and magnitude grids. The
/// wavelet parameters are stored peak-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub spec: FilterBankSpec,
    pub params: CauchyParams,
    pub centers: Vec<f64>,
}

impl GridLayout {
    pub fn new(spec: FilterBankSpec, params: CauchyParams) -> Result<Self> {
        spec.validate()?;
        let params = params.peak_normalized()?;
        let centers = spec.centers(&params)?;
        Ok(Self { spec, params, centers })
    }

    pub fn channels(&self) -> usize {
        self.spec.channels
    }

    pub fn hops(&self) -> usize {
        self.spec.hops()
    }

    pub fn hop_seconds(&self) -> f64 {
        self.spec.hop_seconds()
    }
}

/// DCWT coefficients: a K × N complex matrix (row k is channel k) plus the
/// real lowpass row of length N.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid {
    pub layout: GridLayout,
    pub wavelet: Array2<Complex64>,
    pub lowpass: Vec<f64>,
}

impl CoefficientGrid {
    pub fn zeros(layout: GridLayout) -> Self {
        let (k, n) = (layout.channels(), layout.hops());
        Self {
            layout,
            wavelet: Array2::zeros((k, n)),
            lowpass: vec![0.0; n],
        }
    }

    pub fn check_dims(&self) -> Result<()> {
        let (k, n) = (self.layout.channels(), self.layout.hops());
        if self.wavelet.dim() != (k, n) || self.lowpass.len() != n {
            return Err(crate::Error::DimensionMismatch(format!(
                "grid is {:?} + {} but the layout needs {k}x{n} + {n}",
                self.wavelet.dim(),
                self.lowpass.len()
            )));
        }
        Ok(())
    }

    /// Moduli of all coefficients, lowpass included.
    pub fn magnitude(&self) -> crate::phase::MagnitudeGrid {
        crate::phase::MagnitudeGrid::new(
            self.layout.clone(),
            self.wavelet.mapv(|c| c.norm()),
            self.lowpass.iter().map(|v| v.abs()).collect(),
        )
    }

    /// Squared Frobenius norm over wavelet and lowpass rows.
    pub fn energy(&self) -> f64 {
        self.wavelet.iter().map(|c| c.norm_sqr()).sum::<f64>()
            + self.lowpass.iter().map(|v| v * v).sum::<f64>()
    }
}

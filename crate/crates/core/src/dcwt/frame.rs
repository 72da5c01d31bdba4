use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{CoefficientGrid, FilterBankSpec, GridLayout};
use crate::error::{invalid, Error, Result};
use crate::kernels::CauchyParams;

// Filter taps below this fraction of the (unit) peak are dropped.
const SUPPORT_FLOOR: f64 = 1e-15;
// Relative coverage below which the frame is declared singular.
const COVERAGE_FLOOR: f64 = 1e-13;

/// One analysis filter, stored over its DFT-bin support `start..start+len`.
#[derive(Debug, Clone)]
pub(crate) struct BandFilter {
    pub start: usize,
    pub values: Vec<Complex64>,
}

/// A fully discretized DCWT: sampled filters, lowpass, and FFT plans.
#[derive(Clone)]
pub struct WaveletFrame {
    pub(crate) layout: GridLayout,
    pub(crate) filters: Vec<BandFilter>,
    // Real, even lowpass response on its support bins.
    pub(crate) lowpass_bins: Vec<usize>,
    pub(crate) lowpass_values: Vec<f64>,
    // Diagonal of the frame operator in the DFT domain, times a_d.
    pub(crate) coverage: Vec<f64>,
    pub(crate) fft_len: Arc<dyn Fft<f64>>,
    pub(crate) ifft_len: Arc<dyn Fft<f64>>,
    pub(crate) fft_hops: Arc<dyn Fft<f64>>,
    pub(crate) ifft_hops: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for WaveletFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveletFrame")
            .field("spec", &self.layout.spec)
            .field("params", &self.layout.params)
            .finish_non_exhaustive()
    }
}

/// Signed frequency in Hz of DFT bin `j`. Bins up to and including L/2 are
/// treated as non-negative.
pub(crate) fn bin_frequency(j: usize, len: usize, sample_rate: f64) -> f64 {
    if 2 * j <= len {
        j as f64 * sample_rate / len as f64
    } else {
        (j as f64 - len as f64) * sample_rate / len as f64
    }
}

fn raised_cosine(f: f64, flat: f64, stop: f64) -> f64 {
    if f <= flat {
        1.0
    } else if f >= stop {
        0.0
    } else {
        0.5 * (1.0 + (PI * (f - flat) / (stop - flat)).cos())
    }
}

impl WaveletFrame {
    /// Samples the filter bank, builds the lowpass and checks that the
    /// resulting frame is invertible.
    pub fn new(spec: FilterBankSpec, params: CauchyParams) -> Result<Self> {
        let layout = GridLayout::new(spec, params)?;
        let params = layout.params;
        let len = spec.length;
        let nyquist = spec.sample_rate / 2.0;
        if layout.centers[0] >= nyquist {
            return invalid(format!(
                "highest center frequency {} Hz is not below Nyquist ({nyquist} Hz)",
                layout.centers[0]
            ));
        }

        let half = len / 2;
        let mut filters = Vec::with_capacity(spec.channels);
        let mut psi = vec![0.0; len];
        for k in 0..spec.channels {
            let y = spec.scale(k);
            let taps: Vec<Complex64> = (0..=half)
                .map(|j| params.freq_response(y * bin_frequency(j, len, spec.sample_rate)))
                .collect();
            let first = taps.iter().position(|v| v.norm() >= SUPPORT_FLOOR);
            let last = taps.iter().rposition(|v| v.norm() >= SUPPORT_FLOOR);
            let filter = match (first, last) {
                (Some(a), Some(b)) => BandFilter {
                    start: a,
                    values: taps[a..=b].to_vec(),
                },
                _ => BandFilter {
                    start: 0,
                    values: Vec::new(),
                },
            };
            for (i, v) in filter.values.iter().enumerate() {
                psi[filter.start + i] += v.norm_sqr();
            }
            filters.push(filter);
        }

        let psi_max = psi.iter().cloned().fold(0.0, f64::max);
        let flat = layout.centers[spec.channels - 1];
        let stop = if spec.channels >= 2 {
            layout.centers[spec.channels - 2]
        } else {
            2.0 * layout.centers[0]
        };
        let decim = spec.decimation as f64;
        let mut lowpass_bins = Vec::new();
        let mut lowpass_values = Vec::new();
        let mut lowpass_dense = vec![0.0; len];
        for (j, slot) in lowpass_dense.iter_mut().enumerate() {
            let f = bin_frequency(j, len, spec.sample_rate).abs();
            let taper = raised_cosine(f, flat, stop);
            if taper == 0.0 {
                continue;
            }
            let mirrored = if 2 * j <= len { psi[j] } else { psi[len - j] };
            let value = taper * (psi_max - mirrored).max(0.0).sqrt() / decim;
            if value > 0.0 {
                *slot = value;
                lowpass_bins.push(j);
                lowpass_values.push(value);
            }
        }

        let coverage: Vec<f64> = (0..len)
            .map(|j| {
                let h = decim * lowpass_dense[j];
                psi[j] + psi[(len - j) % len] + h * h
            })
            .collect();
        let cov_max = coverage.iter().cloned().fold(0.0, f64::max);
        let (j_min, cov_min) = coverage
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, c)| if c < acc.1 { (j, c) } else { acc });
        if !(cov_max > 0.0) || cov_min <= COVERAGE_FLOOR * cov_max {
            return Err(Error::NotInvertible(format!(
                "frequency coverage vanishes at bin {j_min} ({} Hz)",
                bin_frequency(j_min, len, spec.sample_rate)
            )));
        }

        let mut planner = FftPlanner::new();
        let hops = spec.hops();
        Ok(Self {
            fft_len: planner.plan_fft_forward(len),
            ifft_len: planner.plan_fft_inverse(len),
            fft_hops: planner.plan_fft_forward(hops),
            ifft_hops: planner.plan_fft_inverse(hops),
            layout,
            filters,
            lowpass_bins,
            lowpass_values,
            coverage,
        })
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn spec(&self) -> &FilterBankSpec {
        &self.layout.spec
    }

    /// Dense frequency response of channel `k` over all L bins.
    pub fn filter_response(&self, k: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.spec().length];
        let f = &self.filters[k];
        out[f.start..f.start + f.values.len()].copy_from_slice(&f.values);
        out
    }

    /// Dense (real) lowpass frequency response over all L bins.
    pub fn lowpass_response(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.spec().length];
        for (&j, &v) in self.lowpass_bins.iter().zip(&self.lowpass_values) {
            out[j] = v;
        }
        out
    }

    /// Per-bin coverage Ψ(ξ) + Ψ(-ξ) + |a_d ĥ(ξ)|².
    pub fn coverage(&self) -> &[f64] {
        &self.coverage
    }

    pub(crate) fn spectrum(&self, signal: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft_len.process(&mut buf);
        buf
    }

    /// Real part of the normalized inverse DFT of length L.
    pub(crate) fn real_signal(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.ifft_len.process(&mut spectrum);
        let scale = 1.0 / spectrum.len() as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    /// Analysis: W[k][n] = Σ_j ŝ_j conj(ĝ_k[j]) e^{2πi j n a_d / L} / L.
    pub fn analyze(&self, signal: &[f64]) -> Result<CoefficientGrid> {
        let spec = self.spec();
        if signal.len() != spec.length {
            return Err(Error::DimensionMismatch(format!(
                "signal has {} samples, frame expects {}",
                signal.len(),
                spec.length
            )));
        }
        let spectrum = self.spectrum(signal);
        let hops = spec.hops();
        let norm = 1.0 / spec.length as f64;
        let mut grid = CoefficientGrid::zeros(self.layout.clone());
        let mut buf = vec![Complex64::new(0.0, 0.0); hops];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.ifft_hops.get_inplace_scratch_len()];
        for (k, filter) in self.filters.iter().enumerate() {
            buf.fill(Complex64::new(0.0, 0.0));
            for (i, g) in filter.values.iter().enumerate() {
                let j = filter.start + i;
                buf[j % hops] += spectrum[j] * g.conj();
            }
            self.ifft_hops.process_with_scratch(&mut buf, &mut scratch);
            for (dst, src) in grid.wavelet.row_mut(k).iter_mut().zip(&buf) {
                *dst = src * norm;
            }
        }
        buf.fill(Complex64::new(0.0, 0.0));
        for (&j, &h) in self.lowpass_bins.iter().zip(&self.lowpass_values) {
            buf[j % hops] += spectrum[j] * h;
        }
        self.ifft_hops.process_with_scratch(&mut buf, &mut scratch);
        for (dst, src) in grid.lowpass.iter_mut().zip(&buf) {
            *dst = src.re * norm;
        }
        Ok(grid)
    }

    pub(crate) fn check_grid(&self, grid: &CoefficientGrid) -> Result<()> {
        grid.check_dims()?;
        if grid.layout.spec != self.layout.spec {
            return Err(Error::DimensionMismatch(
                "coefficient grid was produced by a different filter bank".into(),
            ));
        }
        Ok(())
    }
}

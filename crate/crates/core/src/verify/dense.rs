use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelKind, Wavelet};

/// Dilation convention of a dense transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Unitary dilation: FT(D_y ψ)(ξ) = √y ψ̂(yξ), indexed by scale y.
    ScaleUnitary,
    /// Non-unitary dilation indexed by frequency: ψ̂(ξ_b ξ' / ξ).
    FreqConvention,
}

/// Anything that can be sampled as a time-scale field W(x, y).
pub trait TransformField: Sync {
    /// Values at every (x, y) pair; the result is indexed `[iy, ix]`.
    fn eval(&self, xs: &[f64], ys: &[f64]) -> Array2<Complex64>;

    fn convention(&self) -> Convention {
        Convention::ScaleUnitary
    }
}

/// A field given in closed form.
pub struct SyntheticField<F: Fn(f64, f64) -> Complex64 + Sync>(pub F);

impl<F: Fn(f64, f64) -> Complex64 + Sync> TransformField for SyntheticField<F> {
    fn eval(&self, xs: &[f64], ys: &[f64]) -> Array2<Complex64> {
        Array2::from_shape_fn((ys.len(), xs.len()), |(iy, ix)| (self.0)(xs[ix], ys[iy]))
    }
}

/// Continuous-parameter wavelet transform of a periodic, band-limited signal:
///
/// ```text
/// W(x, y) = (1/L) Σ_{j>0} ŝ_j conj(√y K(y ξ_j)) e^{2πi ξ_j x}
/// ```
///
/// for any kernel K derived from the mother wavelet. Positions are in
/// seconds, frequencies in Hz.
#[derive(Clone)]
pub struct DenseAnalyzer {
    wavelet: Arc<dyn Wavelet>,
    freqs: Vec<f64>,
    spectrum: Vec<Complex64>,
    length: usize,
    kind: KernelKind,
    convention: Convention,
}

impl DenseAnalyzer {
    pub fn new(signal: &[f64], sample_rate: f64, wavelet: Arc<dyn Wavelet>) -> Result<Self> {
        if signal.len() < 4 {
            return invalid("dense analysis needs at least 4 samples");
        }
        if !(sample_rate > 0.0) {
            return invalid("sample rate must be positive");
        }
        let len = signal.len();
        let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let (freqs, spectrum) = (1..=len / 2)
            .filter(|&j| buf[j] != Complex64::new(0.0, 0.0))
            .map(|j| (j as f64 * sample_rate / len as f64, buf[j]))
            .unzip();
        Ok(Self {
            wavelet,
            freqs,
            spectrum,
            length: len,
            kind: KernelKind::Psi,
            convention: Convention::ScaleUnitary,
        })
    }

    /// The same analyzer with a different kernel.
    pub fn with_kind(&self, kind: KernelKind) -> Self {
        Self { kind, ..self.clone() }
    }

    pub fn with_convention(&self, convention: Convention) -> Self {
        Self {
            convention,
            ..self.clone()
        }
    }

    pub fn wavelet(&self) -> &dyn Wavelet {
        self.wavelet.as_ref()
    }
}

impl TransformField for DenseAnalyzer {
    fn eval(&self, xs: &[f64], ys: &[f64]) -> Array2<Complex64> {
        let nj = self.freqs.len();
        let phasors = Array2::from_shape_fn((nj, xs.len()), |(j, ix)| {
            let (s, c) = (2.0 * PI * (self.freqs[j] * xs[ix]).rem_euclid(1.0)).sin_cos();
            Complex64::new(c, s)
        });
        let peak = self.wavelet.peak_frequency();
        let weights = Array2::from_shape_fn((ys.len(), nj), |(iy, j)| {
            let (scale, gain) = match self.convention {
                Convention::ScaleUnitary => (ys[iy], ys[iy].sqrt()),
                Convention::FreqConvention => (peak / ys[iy], 1.0),
            };
            self.spectrum[j] * (gain * self.wavelet.kernel(self.kind, scale * self.freqs[j])).conj()
                / self.length as f64
        });
        weights.dot(&phasors)
    }

    fn convention(&self) -> Convention {
        self.convention
    }
}

/// Samples of a transform on a rectangular lattice, indexed `[iy, ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseWtGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Array2<Complex64>,
    pub convention: Convention,
}

/// `n` equispaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Evaluation points and finite-difference steps of a refinement sweep.
/// Level ℓ uses the step `step / 2^ℓ` around the same points.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementPlan {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub step: f64,
    pub levels: usize,
}

impl RefinementPlan {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, step: f64, levels: usize) -> Result<Self> {
        if xs.len() < 3 || ys.len() < 3 {
            return Err(Error::GridTooCoarse(format!(
                "need at least 3 points per axis, got {} x {}",
                xs.len(),
                ys.len()
            )));
        }
        if !(step > 0.0) || levels == 0 {
            return invalid("refinement needs a positive step and at least one level");
        }
        if ys.iter().any(|y| *y - step <= 0.0) {
            return invalid("every scale minus the step must stay positive");
        }
        Ok(Self { xs, ys, step, levels })
    }

    pub fn spacing(&self, level: usize) -> f64 {
        self.step / 2f64.powi(level as i32)
    }
}

/// Field values on the 3×3 stencil around every evaluation point.
pub(crate) struct Stencil {
    values: Array2<Complex64>,
    pub h: f64,
}

impl Stencil {
    pub fn sample(field: &dyn TransformField, xs: &[f64], ys: &[f64], h: f64) -> Self {
        let ext = |v: &[f64]| -> Vec<f64> { v.iter().flat_map(|&p| [p - h, p, p + h]).collect() };
        Self {
            values: field.eval(&ext(xs), &ext(ys)),
            h,
        }
    }

    /// Value at evaluation point (iy, ix) offset by (dy, dx) ∈ {-1, 0, 1}².
    pub fn at(&self, iy: usize, ix: usize, dy: isize, dx: isize) -> Complex64 {
        self.values[[(3 * iy as isize + 1 + dy) as usize, (3 * ix as isize + 1 + dx) as usize]]
    }

    pub fn log_mag(&self, iy: usize, ix: usize, dy: isize, dx: isize) -> f64 {
        self.at(iy, ix, dy, dx).norm().ln()
    }

    pub fn dx_log_mag(&self, iy: usize, ix: usize) -> f64 {
        (self.log_mag(iy, ix, 0, 1) - self.log_mag(iy, ix, 0, -1)) / (2.0 * self.h)
    }

    pub fn dy_log_mag(&self, iy: usize, ix: usize) -> f64 {
        (self.log_mag(iy, ix, 1, 0) - self.log_mag(iy, ix, -1, 0)) / (2.0 * self.h)
    }

    pub fn dx_phase(&self, iy: usize, ix: usize) -> f64 {
        (self.at(iy, ix, 0, 1) * self.at(iy, ix, 0, -1).conj()).arg() / (2.0 * self.h)
    }

    pub fn dy_phase(&self, iy: usize, ix: usize) -> f64 {
        (self.at(iy, ix, 1, 0) * self.at(iy, ix, -1, 0).conj()).arg() / (2.0 * self.h)
    }

    pub fn dxx_log_mag(&self, iy: usize, ix: usize) -> f64 {
        (self.log_mag(iy, ix, 0, 1) - 2.0 * self.log_mag(iy, ix, 0, 0) + self.log_mag(iy, ix, 0, -1)) / (self.h * self.h)
    }

    pub fn dyy_log_mag(&self, iy: usize, ix: usize) -> f64 {
        (self.log_mag(iy, ix, 1, 0) - 2.0 * self.log_mag(iy, ix, 0, 0) + self.log_mag(iy, ix, -1, 0)) / (self.h * self.h)
    }

    pub fn dxx_phase(&self, iy: usize, ix: usize) -> f64 {
        let c = self.at(iy, ix, 0, 0).conj();
        (self.at(iy, ix, 0, 1) * self.at(iy, ix, 0, -1) * c * c).arg() / (self.h * self.h)
    }

    pub fn dyy_phase(&self, iy: usize, ix: usize) -> f64 {
        let c = self.at(iy, ix, 0, 0).conj();
        (self.at(iy, ix, 1, 0) * self.at(iy, ix, -1, 0) * c * c).arg() / (self.h * self.h)
    }
}

/// Cells with |W| ≥ rel · max|W|; all false for an all-zero field.
pub fn magnitude_mask(values: &Array2<Complex64>, rel: f64) -> Array2<bool> {
    let peak = values.iter().map(|c| c.norm()).fold(0.0, f64::max);
    values.mapv(|c| peak > 0.0 && c.norm() >= rel * peak)
}

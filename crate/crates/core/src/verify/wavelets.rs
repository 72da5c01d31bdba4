//! Non-Cauchy wavelets used as negative controls.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::kernels::{CauchyParams, Wavelet};

/// Gabor wavelet ψ_G(t) = exp(-t²/2 + iω_b t), with
/// ψ̂_G(η) = √(2π) exp(-(2πη - ω_b)²/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gabor {
    pub omega_b: f64,
}

impl Gabor {
    pub fn new(omega_b: f64) -> Result<Self> {
        if !(omega_b > 0.0 && omega_b.is_finite()) {
            return invalid(format!("Gabor center must be positive, got {omega_b}"));
        }
        Ok(Self { omega_b })
    }

    /// Gabor wavelet whose magnitude peak coincides with that of `params`.
    pub fn matching(params: &CauchyParams) -> Result<Self> {
        Self::new(2.0 * PI * params.center_frequency()?)
    }
}

impl Wavelet for Gabor {
    fn response(&self, xi: f64) -> Complex64 {
        let d = 2.0 * PI * xi - self.omega_b;
        Complex64::new((2.0 * PI).sqrt() * (-0.5 * d * d).exp(), 0.0)
    }

    fn response_slope(&self, xi: f64) -> Complex64 {
        -2.0 * PI * (2.0 * PI * xi - self.omega_b) * self.response(xi)
    }

    fn peak_frequency(&self) -> f64 {
        self.omega_b / (2.0 * PI)
    }
}

/// Weighted sum of two peak-normalized Cauchy responses of different order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPeak {
    first: CauchyParams,
    second: CauchyParams,
    weight: f64,
    peak: f64,
}

impl TwoPeak {
    pub fn new(alpha_a: f64, alpha_b: f64, weight_b: f64) -> Result<Self> {
        if alpha_a == alpha_b {
            return invalid("the two orders must differ");
        }
        let first = CauchyParams::cauchy(alpha_a)?.peak_normalized()?;
        let second = CauchyParams::cauchy(alpha_b)?.peak_normalized()?;
        let mut w = Self {
            first,
            second,
            weight: weight_b,
            peak: 0.0,
        };
        w.peak = w.locate_peak();
        Ok(w)
    }

    fn locate_peak(&self) -> f64 {
        let lo = self.first.peak_frequency().min(self.second.peak_frequency()) / 4.0;
        let hi = self.first.peak_frequency().max(self.second.peak_frequency()) * 4.0;
        let steps = 4000;
        let at = |i: usize| lo * (hi / lo).powf(i as f64 / steps as f64);
        let best = (0..=steps)
            .max_by(|&a, &b| self.response(at(a)).norm().total_cmp(&self.response(at(b)).norm()))
            .unwrap();
        // Golden-section refinement inside the bracketing grid cells.
        let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(steps)));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.response(c).norm() > self.response(d).norm() {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }
}

impl Wavelet for TwoPeak {
    fn response(&self, xi: f64) -> Complex64 {
        self.first.freq_response(xi) + self.weight * self.second.freq_response(xi)
    }

    fn response_slope(&self, xi: f64) -> Complex64 {
        self.first.response_slope(xi) + self.weight * self.second.response_slope(xi)
    }

    fn peak_frequency(&self) -> f64 {
        self.peak
    }
}

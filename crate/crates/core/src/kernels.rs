//! Closed-form frequency responses of generalized Cauchy (Klauder) wavelets.
//!
//! The mother wavelet is defined on positive frequencies by
//!
//! ```text
//! ψ̂(ξ) = c · ξ^((α-1)/2) · exp(-2πγξ) · exp(iβ ln ξ),   ξ > 0
//! ```
//!
//! and vanishes for ξ ≤ 0. Frequencies are in cycles per unit time, the
//! Fourier convention is `ψ̂(ξ) = ∫ ψ(t) e^{-2πiξt} dt`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Which kernel derived from the mother wavelet to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// The mother wavelet ψ itself.
    Psi,
    /// The time derivative ψ′.
    PsiPrime,
    /// The derivative of the time-weighted wavelet, (Tψ)′ with (Tψ)(t) = tψ(t).
    TPsiPrime,
    /// The time-weighted wavelet Tψ.
    TPsi,
}

/// A mother wavelet described by its frequency response.
///
/// Dense time-scale analysis only needs the response and its derivative in
/// frequency; the derived kernels follow from standard Fourier identities.
pub trait Wavelet: Send + Sync {
    fn response(&self, xi: f64) -> Complex64;

    /// Derivative of [`Wavelet::response`] with respect to ξ.
    fn response_slope(&self, xi: f64) -> Complex64;

    /// Location of the peak of |ψ̂| in cycles per unit time.
    fn peak_frequency(&self) -> f64;

    fn kernel(&self, kind: KernelKind, xi: f64) -> Complex64 {
        match kind {
            KernelKind::Psi => self.response(xi),
            // FT(ψ′)(ξ) = 2πiξ ψ̂(ξ)
            KernelKind::PsiPrime => Complex64::new(0.0, 2.0 * PI * xi) * self.response(xi),
            // FT((Tψ)′)(ξ) = -ξ (ψ̂)′(ξ)
            KernelKind::TPsiPrime => -xi * self.response_slope(xi),
            // FT(Tψ)(ξ) = (i/2π) (ψ̂)′(ξ)
            KernelKind::TPsi => Complex64::new(0.0, 0.5 / PI) * self.response_slope(xi),
        }
    }
}

/// Parameters (α, β, γ, c) of a generalized Cauchy wavelet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyParams {
    alpha: f64,
    beta: f64,
    gamma: Complex64,
    c: Complex64,
    // Additive offset on the log-magnitude. Peak normalization for large α
    // needs a gain far outside the f64 range, so it lives in log space.
    log_gain: f64,
}

impl CauchyParams {
    /// Builds a parameter set. With `require_admissible` the order must satisfy
    /// α > 1; otherwise only α > -1 is enforced.
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma_re: f64,
        gamma_im: f64,
        require_admissible: bool,
    ) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && gamma_re.is_finite() && gamma_im.is_finite()) {
            return invalid("wavelet parameters must be finite");
        }
        if alpha <= -1.0 {
            return invalid(format!("alpha must exceed -1, got {alpha}"));
        }
        if require_admissible && alpha <= 1.0 {
            return invalid(format!("admissible wavelets need alpha > 1, got {alpha}"));
        }
        if gamma_re <= 0.0 {
            return invalid(format!("Re(gamma) must be positive, got {gamma_re}"));
        }
        Ok(Self {
            alpha,
            beta,
            gamma: Complex64::new(gamma_re, gamma_im),
            c: Complex64::new(1.0, 0.0),
            log_gain: 0.0,
        })
    }

    /// Classical Cauchy wavelet of order α (β = 0, γ = 1, c = 1).
    pub fn cauchy(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 1.0, 0.0, true)
    }

    pub fn with_c(mut self, c: Complex64) -> Self {
        self.c = c;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    /// True when γ = 1 exactly.
    pub fn is_unit_gamma(&self) -> bool {
        self.gamma == Complex64::new(1.0, 0.0)
    }

    /// Peak of |ψ̂| at (α-1)/(4π Re γ).
    pub fn center_frequency(&self) -> Result<f64> {
        if self.alpha <= 1.0 {
            return invalid(format!(
                "the magnitude peak is interior only for alpha > 1, got {}",
                self.alpha
            ));
        }
        Ok((self.alpha - 1.0) / (4.0 * PI * self.gamma.re))
    }

    /// Rescales the gain so that max |ψ̂| = 1 (the phase of c is kept).
    ///
    /// Log-derivatives of the response do not depend on this choice.
    pub fn peak_normalized(self) -> Result<Self> {
        let peak = self.center_frequency()?;
        let log_peak = self.log_magnitude_unscaled(peak);
        let c_abs = self.c.norm();
        if c_abs == 0.0 {
            return invalid("cannot peak-normalize a wavelet with c = 0");
        }
        Ok(Self {
            c: self.c / c_abs,
            log_gain: -log_peak,
            ..self
        })
    }

    fn log_magnitude_unscaled(&self, xi: f64) -> f64 {
        0.5 * (self.alpha - 1.0) * xi.ln() - 2.0 * PI * self.gamma.re * xi
    }

    /// Frequency response ψ̂(ξ); exactly zero for ξ ≤ 0.
    pub fn freq_response(&self, xi: f64) -> Complex64 {
        if xi <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ln_xi = xi.ln();
        let log_mag = self.log_gain + 0.5 * (self.alpha - 1.0) * ln_xi - 2.0 * PI * self.gamma.re * xi;
        let phase = self.beta * ln_xi - 2.0 * PI * self.gamma.im * xi;
        self.c * Complex64::from_polar(log_mag.exp(), phase)
    }

    /// Logarithmic derivative (ψ̂)′/ψ̂ = (α-1)/(2ξ) - 2πγ + iβ/ξ for ξ > 0.
    pub fn log_derivative(&self, xi: f64) -> Complex64 {
        Complex64::new(0.5 * (self.alpha - 1.0) / xi, self.beta / xi) - 2.0 * PI * self.gamma
    }

    /// Frequency response of ψ, ψ′ or (Tψ)′; all vanish for ξ ≤ 0.
    pub fn derived_freq_response(&self, kind: KernelKind, xi: f64) -> Complex64 {
        if xi <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.kernel(kind, xi)
    }
}

impl Wavelet for CauchyParams {
    fn response(&self, xi: f64) -> Complex64 {
        self.freq_response(xi)
    }

    fn response_slope(&self, xi: f64) -> Complex64 {
        if xi <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.freq_response(xi) * self.log_derivative(xi)
    }

    fn peak_frequency(&self) -> f64 {
        (self.alpha - 1.0) / (4.0 * PI * self.gamma.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        while (b - a).abs() > 1e-13 * (1.0 + a.abs()) {
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - r * (b - a);
            d = a + r * (b - a);
        }
        0.5 * (a + b)
    }

    #[test]
    fn response_at_reference_point() {
        let p = CauchyParams::cauchy(3.0).unwrap();
        let v = p.freq_response(1.0 / (2.0 * PI));
        let expected = (1.0 / (2.0 * PI)) * (-1.0f64).exp();
        assert_relative_eq!(v.re, expected, max_relative = 1e-14);
        assert_eq!(v.im, 0.0);
        assert_relative_eq!(expected, 0.0585498, max_relative = 1e-5);
    }

    #[test]
    fn negative_and_zero_frequencies_vanish() {
        let p = CauchyParams::new(0.5, 2.0, 1.3, -0.4, false).unwrap();
        for xi in [-0.5, -1.0, 0.0] {
            assert_eq!(p.freq_response(xi), Complex64::new(0.0, 0.0));
            for kind in [KernelKind::Psi, KernelKind::PsiPrime, KernelKind::TPsiPrime] {
                assert_eq!(p.derived_freq_response(kind, xi), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn argmax_matches_center_frequency() {
        for (alpha, gamma) in [(3.0, 1.0), (30.0, 1.0), (30.0, 2.0), (300.0, 1.0)] {
            let p = CauchyParams::new(alpha, 0.0, gamma, 0.0, true).unwrap();
            let center = p.center_frequency().unwrap();
            // A search on a flat maximum resolves the location to about √ε.
            let found = golden_max(|x| p.freq_response(x).norm().ln(), 1e-6, 10.0 * center + 1.0);
            assert_relative_eq!(found, center, max_relative = 1e-7);
            assert!(p.log_derivative(center).re.abs() * center <= 1e-12);
        }
        let p = CauchyParams::cauchy(30.0).unwrap();
        assert_relative_eq!(p.center_frequency().unwrap(), 2.3077467, max_relative = 1e-7);
        let p = CauchyParams::new(30.0, 0.0, 2.0, 0.0, true).unwrap();
        assert_relative_eq!(p.center_frequency().unwrap(), 29.0 / (8.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn center_frequency_rejects_low_order() {
        let p = CauchyParams::new(1.0, 0.0, 1.0, 0.0, false).unwrap();
        assert!(p.center_frequency().is_err());
        assert!(CauchyParams::new(0.5, 0.0, 1.0, 0.0, true).is_err());
        assert!(CauchyParams::new(-1.0, 0.0, 1.0, 0.0, false).is_err());
        assert!(CauchyParams::new(3.0, 0.0, 0.0, 0.0, false).is_err());
    }

    #[test]
    fn psi_prime_at_reference_point() {
        let p = CauchyParams::cauchy(3.0).unwrap();
        let v = p.derived_freq_response(KernelKind::PsiPrime, 1.0 / (2.0 * PI));
        assert!(v.re.abs() < 1e-16);
        assert_relative_eq!(v.im, 0.0585498, max_relative = 1e-5);
    }

    #[test]
    fn t_psi_prime_matches_central_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = CauchyParams::new(7.5, 1.3, 1.2, 0.3, true).unwrap();
        for _ in 0..100 {
            let xi: f64 = rng.gen_range(0.01..10.0);
            let h = 1e-5 * xi;
            let slope = (p.freq_response(xi + h) - p.freq_response(xi - h)) / (2.0 * h);
            let oracle = -xi * slope;
            let got = p.derived_freq_response(KernelKind::TPsiPrime, xi);
            let scale = oracle.norm().max(1e-300);
            assert!((got - oracle).norm() / scale <= 1e-6, "xi={xi}: {got} vs {oracle}");
        }
    }

    #[test]
    fn large_order_does_not_overflow() {
        let p = CauchyParams::cauchy(3000.0).unwrap().peak_normalized().unwrap();
        let center = p.center_frequency().unwrap();
        assert_relative_eq!(p.freq_response(center).norm(), 1.0, max_relative = 1e-12);
        assert!(p.freq_response(center * 1.01).norm().is_finite());
        assert!(p.freq_response(center * 1.01).norm() < 1.0);
    }

    #[test]
    fn magnitude_is_unimodal_on_log_grid() {
        for alpha in [1.5, 3.0, 30.0, 300.0] {
            let p = CauchyParams::new(alpha, 0.7, 1.5, 0.2, true).unwrap();
            let center = p.center_frequency().unwrap();
            let grid: Vec<f64> = (0..400).map(|i| 10f64.powf(-4.0 + 6.0 * i as f64 / 399.0)).collect();
            let mags: Vec<f64> = grid.iter().map(|&x| p.freq_response(x).norm()).collect();
            for w in grid.windows(2).zip(mags.windows(2)) {
                let ((x0, x1), (m0, m1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
                if x1 <= center {
                    assert!(m1 >= m0, "not increasing below the peak at {x0}");
                } else if x0 >= center {
                    assert!(m1 <= m0, "not decreasing above the peak at {x0}");
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn beta_changes_phase_only(alpha in 1.1f64..500.0, beta in -20.0f64..20.0, xi in 1e-3f64..50.0) {
            let with = CauchyParams::new(alpha, beta, 1.0, 0.0, true).unwrap();
            let without = CauchyParams::new(alpha, 0.0, 1.0, 0.0, true).unwrap();
            let (a, b) = (with.freq_response(xi).norm(), without.freq_response(xi).norm());
            proptest::prop_assert!((a - b).abs() <= 1e-15 * b.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn psi_prime_is_modulated_response(alpha in 1.1f64..100.0, beta in -5.0f64..5.0, xi in 1e-3f64..20.0) {
            let p = CauchyParams::new(alpha, beta, 1.0, 0.0, true).unwrap();
            let lhs = p.derived_freq_response(KernelKind::PsiPrime, xi);
            let rhs = Complex64::new(0.0, 2.0 * PI * xi) * p.freq_response(xi);
            proptest::prop_assert!((lhs - rhs).norm() <= 1e-15 * rhs.norm().max(f64::MIN_POSITIVE));
        }
    }
}

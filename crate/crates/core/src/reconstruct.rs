//! End-to-end phaseless reconstruction: magnitudes in, signal out.

use std::time::Instant;

use crate::dcwt::{CoefficientGrid, WaveletFrame};
use crate::error::{Error, Result};
use crate::fglim::{fast_griffin_lim, FglimConfig, FglimInit};
use crate::metrics::{spectral_convergence, Method};
use crate::phase::{reconstruct_phase, MagnitudeGrid, DEFAULT_TOL};

/// Settings shared by all reconstruction methods.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Relative magnitude tolerance of the heap integration.
    pub tol: f64,
    pub seed: u64,
    /// Griffin-Lim settings; `init` is overridden per method.
    pub fglim: FglimConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            seed: 0,
            fglim: FglimConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub signal: Vec<f64>,
    /// Coefficients whose synthesis gave `signal`.
    pub grid: CoefficientGrid,
    /// SC of the analyzed output against the target magnitudes.
    pub sc_db: f64,
    pub runtime_ms: f64,
}

/// Recovers a signal from the magnitudes `target` with the given method.
pub fn reconstruct(frame: &WaveletFrame, target: &MagnitudeGrid, method: Method, cfg: &PipelineConfig) -> Result<Reconstruction> {
    target.check_dims()?;
    if target.layout.spec != frame.layout().spec {
        return Err(Error::DimensionMismatch("magnitudes were produced by a different filter bank".into()));
    }
    let start = Instant::now();
    let mut fglim = FglimConfig {
        seed: cfg.seed,
        ..cfg.fglim.clone()
    };
    let (signal, grid) = match method {
        Method::Wpghi => {
            let (grid, _) = reconstruct_phase(target, cfg.tol, cfg.seed)?;
            (frame.synthesize_with(&grid, fglim.cg_tol, fglim.cg_maxit)?, grid)
        }
        Method::RFglim | Method::WFglim => {
            fglim.init = if method == Method::RFglim {
                FglimInit::Random
            } else {
                FglimInit::WarmStart(reconstruct_phase(target, cfg.tol, cfg.seed)?.1)
            };
            let out = fast_griffin_lim(target, frame, &fglim)?;
            (out.signal, out.grid)
        }
    };
    let sc_db = spectral_convergence(&frame.analyze(&signal)?.magnitude(), target)?;
    Ok(Reconstruction {
        signal,
        grid,
        sc_db,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcwt::FilterBankSpec;
    use crate::kernels::CauchyParams;
    use std::f64::consts::PI;

    fn setup() -> (WaveletFrame, Vec<f64>) {
        let params = CauchyParams::cauchy(30.0).unwrap();
        let spec = FilterBankSpec::from_range(2000, 1.0, 100, 2f64.powf(-6.0) / 20.0, 2f64.powf(3.3) / 20.0, 5, &params).unwrap();
        let frame = WaveletFrame::new(spec, params).unwrap();
        let s = (0..2000).map(|t| (2.0 * PI * 100.0 * t as f64 / 2000.0).cos()).collect();
        (frame, s)
    }

    #[test]
    fn every_method_reconstructs_a_tone() {
        let (frame, s) = setup();
        let m = frame.analyze(&s).unwrap().magnitude();
        let cfg = PipelineConfig {
            fglim: FglimConfig {
                max_iter: 20,
                ..FglimConfig::default()
            },
            ..PipelineConfig::default()
        };
        let wpghi = reconstruct(&frame, &m, Method::Wpghi, &cfg).unwrap();
        assert!(wpghi.sc_db <= -25.0, "{}", wpghi.sc_db);
        let w = reconstruct(&frame, &m, Method::WFglim, &cfg).unwrap();
        assert!(w.sc_db <= wpghi.sc_db + 1e-9);
        let r = reconstruct(&frame, &m, Method::RFglim, &cfg).unwrap();
        assert!(r.sc_db.is_finite() && r.runtime_ms >= 0.0);
        let again = reconstruct(&frame, &m, Method::RFglim, &cfg).unwrap();
        assert_eq!(r.signal, again.signal);
    }

    #[test]
    fn foreign_magnitudes_are_rejected() {
        let (frame, s) = setup();
        let other = WaveletFrame::new(
            FilterBankSpec::new(2000, 1.0, 50, 12.0, 10.0, 5).unwrap(),
            CauchyParams::cauchy(30.0).unwrap(),
        )
        .unwrap();
        let m = other.analyze(&s).unwrap().magnitude();
        assert!(reconstruct(&frame, &m, Method::Wpghi, &PipelineConfig::default()).is_err());
    }
}

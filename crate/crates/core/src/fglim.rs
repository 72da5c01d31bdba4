//! Fast Griffin-Lim phase retrieval on the DCWT frame.
//!
//! Alternates the projection onto consistent coefficients (synthesis then
//! analysis) with the projection onto the prescribed magnitudes, with an
//! inertial step between iterates.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dcwt::{CoefficientGrid, WaveletFrame};
use crate::error::{invalid, Error, Result};
use crate::metrics::sc_from_energies;
use crate::phase::{combine, MagnitudeGrid, PhaseGrid};

/// Starting phase of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum FglimInit {
    /// Independent uniform phases drawn from the configured seed.
    Random,
    /// A given phase estimate, typically from WPGHI.
    WarmStart(PhaseGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FglimConfig {
    pub max_iter: usize,
    pub momentum: f64,
    pub seed: u64,
    pub init: FglimInit,
    /// Stop once the best SC improved by less than `stall_db` over the last
    /// `stall_window` iterations.
    pub stall_db: f64,
    pub stall_window: usize,
    pub cg_tol: f64,
    pub cg_maxit: usize,
}

impl Default for FglimConfig {
    fn default() -> Self {
        Self {
            max_iter: 150,
            momentum: 0.99,
            seed: 0,
            init: FglimInit::Random,
            stall_db: 0.01,
            stall_window: 10,
            cg_tol: 1e-10,
            cg_maxit: 1000,
        }
    }
}

impl FglimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return invalid("max_iter must be at least 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return invalid(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.cg_tol > 0.0) || self.cg_maxit == 0 {
            return invalid("CG tolerance and iteration cap must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FglimOutcome {
    /// Signal with the lowest spectral convergence seen.
    pub signal: Vec<f64>,
    /// Target magnitudes combined with the phase of the best signal.
    pub grid: CoefficientGrid,
    /// SC in dB of every synthesized signal, starting with the initial one.
    pub trace: Vec<f64>,
    /// Weighted distance between each analyzed iterate and the magnitude set.
    pub consistency: Vec<f64>,
    pub iterations: usize,
}

// Weighted squared distances: wavelet rows count twice, the lowpass row
// a_d² times, matching the geometry in which synthesis is least squares.
fn distance_to_magnitudes(a: &CoefficientGrid, m: &MagnitudeGrid) -> (f64, f64) {
    let decim = m.layout.spec.decimation as f64;
    let wave: f64 = a
        .wavelet
        .iter()
        .zip(m.values.iter())
        .map(|(c, t)| (c.norm() - t).powi(2))
        .sum();
    let low: f64 = a.lowpass.iter().zip(&m.lowpass).map(|(c, t)| (c - t).powi(2)).sum();
    let sc_num = wave + a.lowpass.iter().zip(&m.lowpass).map(|(c, t)| (c.abs() - t).powi(2)).sum::<f64>();
    (2.0 * wave + decim * decim * low, sc_num)
}

fn project_magnitude(a: &CoefficientGrid, m: &MagnitudeGrid) -> CoefficientGrid {
    let mut out = a.clone();
    ndarray::Zip::from(&mut out.wavelet)
        .and(&a.wavelet)
        .and(&m.values)
        .for_each(|o, c, &t| {
            let r = c.norm();
            *o = if r > 0.0 { c * (t / r) } else { Complex64::new(t, 0.0) };
        });
    out.lowpass = m.lowpass.clone();
    out
}

fn random_phases(rows: usize, cols: usize, seed: u64) -> PhaseGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PhaseGrid {
        values: Array2::from_shape_fn((rows, cols), |_| 2.0 * std::f64::consts::PI * rng.gen::<f64>()),
        reliable_mask: Array2::from_elem((rows, cols), false),
    }
}

/// Fast Griffin-Lim: c ← P_mag(P_cons(c + μ(c - c_prev))).
pub fn fast_griffin_lim(m: &MagnitudeGrid, frame: &WaveletFrame, cfg: &FglimConfig) -> Result<FglimOutcome> {
    cfg.validate()?;
    m.check_dims()?;
    if m.layout.spec != frame.layout().spec {
        return Err(Error::DimensionMismatch("magnitudes were produced by a different filter bank".into()));
    }
    let target_energy: f64 = m.values.iter().map(|v| v * v).sum::<f64>() + m.lowpass.iter().map(|v| v * v).sum::<f64>();
    if target_energy == 0.0 {
        let grid = CoefficientGrid::zeros(m.layout.clone());
        return Ok(FglimOutcome {
            signal: vec![0.0; frame.spec().length],
            grid,
            trace: Vec::new(),
            consistency: vec![0.0],
            iterations: 1,
        });
    }

    let phases = match &cfg.init {
        FglimInit::Random => random_phases(m.values.nrows(), m.values.ncols(), cfg.seed),
        FglimInit::WarmStart(p) => p.clone(),
    };
    let mut current = combine(m, &phases)?;
    let mut previous = current.clone();
    let mut signal: Option<Vec<f64>> = None;

    let mut trace = Vec::new();
    let mut consistency = Vec::new();
    let mut best_trace = Vec::new();
    let mut best: Option<(f64, Vec<f64>, CoefficientGrid)> = None;
    let mut iterations = 0;

    for it in 0..=cfg.max_iter {
        let mut step = current.clone();
        if it > 0 && cfg.momentum > 0.0 {
            step.wavelet.zip_mut_with(&previous.wavelet, |s, p| *s += cfg.momentum * (*s - p));
        }
        let solve = frame.solve_synthesis(&step, cfg.cg_tol, cfg.cg_maxit, signal.as_deref())?;
        if !solve.converged {
            return Err(Error::NoConvergence {
                iterations: solve.iterations,
                residual: solve.residual,
            });
        }
        let analyzed = frame.analyze(&solve.signal)?;
        let (distance, sc_num) = distance_to_magnitudes(&analyzed, m);
        let sc = sc_from_energies(sc_num, target_energy)?;
        trace.push(sc);
        consistency.push(distance.sqrt());
        let projected = project_magnitude(&analyzed, m);
        if best.as_ref().is_none_or(|(b, _, _)| sc < *b) {
            best = Some((sc, solve.signal.clone(), projected.clone()));
        }
        best_trace.push(best.as_ref().unwrap().0);
        signal = Some(solve.signal);
        iterations = it;
        previous = current;
        current = projected;

        if it >= cfg.stall_window {
            let gain = best_trace[it - cfg.stall_window] - best_trace[it];
            if gain < cfg.stall_db {
                break;
            }
        }
    }

    let (_, signal, grid) = best.expect("at least one iterate");
    Ok(FglimOutcome {
        signal,
        grid,
        trace,
        consistency,
        iterations,
    })
}

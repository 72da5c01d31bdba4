//! Synthesis by preconditioned conjugate gradients on the frame operator.
//!
//! All vectors are kept as length-L DFT spectra of real signals. In that
//! basis the frame operator only couples bins that agree modulo N = L/a_d
//! (through decimation) and mirrored bins (through the real part), so one
//! application costs O(total filter support) and needs no FFTs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CoefficientGrid, WaveletFrame};
use crate::error::{Error, Result};

pub const DEFAULT_CG_TOL: f64 = 1e-12;
pub const DEFAULT_CG_MAXIT: usize = 500;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Result of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub signal: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual ‖b - Sx‖ / ‖b‖.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    dot(a, a).sqrt()
}

/// out[j] = (z[j] + conj z[-j]) / 2, the spectrum of Re(IDFT z).
fn hermitian_part(z: &[Complex64], out: &mut [Complex64]) {
    let len = z.len();
    for j in 0..len {
        out[j] = 0.5 * (z[j] + z[(len - j) % len].conj());
    }
}

impl WaveletFrame {
    /// Spectrum of the synthesis operator applied to `grid`:
    /// Re IDFT(Σ_k 2 ĝ_k ĉ_k + a_d² ĥ ĉ_lp), with ĉ the length-N DFT of a row
    /// upsampled by a_d.
    fn synthesis_spectrum(&self, grid: &CoefficientGrid) -> Vec<Complex64> {
        let spec = self.spec();
        let hops = spec.hops();
        let decim = spec.decimation as f64;
        let mut z = vec![ZERO; spec.length];
        let mut buf = vec![ZERO; hops];
        let mut scratch = vec![ZERO; self.fft_hops.get_inplace_scratch_len()];
        for (filter, row) in self.filters.iter().zip(grid.wavelet.rows()) {
            buf.iter_mut().zip(row).for_each(|(b, c)| *b = *c);
            self.fft_hops.process_with_scratch(&mut buf, &mut scratch);
            for (i, g) in filter.values.iter().enumerate() {
                let j = filter.start + i;
                z[j] += 2.0 * g * buf[j % hops];
            }
        }
        buf.iter_mut()
            .zip(&grid.lowpass)
            .for_each(|(b, c)| *b = Complex64::new(*c, 0.0));
        self.fft_hops.process_with_scratch(&mut buf, &mut scratch);
        for (&j, &h) in self.lowpass_bins.iter().zip(&self.lowpass_values) {
            z[j] += decim * decim * h * buf[j % hops];
        }
        let mut out = vec![ZERO; spec.length];
        hermitian_part(&z, &mut out);
        out
    }

    /// Frame operator S = D∘A on a real-signal spectrum.
    fn frame_operator_spectrum(&self, x: &[Complex64], fold: &mut [Complex64], z: &mut [Complex64], out: &mut [Complex64]) {
        let spec = self.spec();
        let hops = spec.hops();
        let decim = spec.decimation as f64;
        z.fill(ZERO);
        for filter in &self.filters {
            for (i, g) in filter.values.iter().enumerate() {
                let j = filter.start + i;
                fold[j % hops] += x[j] * g.conj();
            }
            for (i, g) in filter.values.iter().enumerate() {
                let j = filter.start + i;
                z[j] += (2.0 / decim) * g * fold[j % hops];
            }
            for i in 0..filter.values.len() {
                fold[(filter.start + i) % hops] = ZERO;
            }
        }
        for (&j, &h) in self.lowpass_bins.iter().zip(&self.lowpass_values) {
            fold[j % hops] += x[j] * h;
        }
        for (&j, &h) in self.lowpass_bins.iter().zip(&self.lowpass_values) {
            z[j] += decim * h * fold[j % hops];
        }
        for &j in &self.lowpass_bins {
            fold[j % hops] = ZERO;
        }
        hermitian_part(z, out);
    }

    /// Applies the frame operator S = D∘A to a real signal.
    pub fn apply_frame_operator(&self, signal: &[f64]) -> Result<Vec<f64>> {
        self.check_len(signal)?;
        let x = self.spectrum(signal);
        let mut out = vec![ZERO; x.len()];
        let mut fold = vec![ZERO; self.spec().hops()];
        let mut z = vec![ZERO; x.len()];
        self.frame_operator_spectrum(&x, &mut fold, &mut z, &mut out);
        Ok(self.real_signal(out))
    }

    /// Weighted synthesis operator D (the adjoint of analysis under the
    /// coefficient inner product of [`CoefficientGrid::weighted_dot`]).
    pub fn synthesis_operator(&self, grid: &CoefficientGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        Ok(self.real_signal(self.synthesis_spectrum(grid)))
    }

    fn check_len(&self, signal: &[f64]) -> Result<()> {
        if signal.len() != self.spec().length {
            return Err(Error::DimensionMismatch(format!(
                "signal has {} samples, frame expects {}",
                signal.len(),
                self.spec().length
            )));
        }
        Ok(())
    }

    fn pcg(&self, rhs: &[Complex64], initial: Option<Vec<Complex64>>, tol: f64, maxit: usize) -> (Vec<Complex64>, usize, f64, bool) {
        let len = rhs.len();
        let hops = self.spec().hops();
        let decim = self.spec().decimation as f64;
        let rhs_norm = norm(rhs);
        if rhs_norm == 0.0 {
            return (vec![ZERO; len], 0, 0.0, true);
        }
        let precond: Vec<f64> = self.coverage.iter().map(|c| decim / c).collect();
        // The operator is only definite on spectra of real signals; FFT
        // round-off must not leave an anti-Hermitian component behind.
        let mut rhs_sym = vec![ZERO; len];
        hermitian_part(rhs, &mut rhs_sym);
        let rhs = &rhs_sym[..];
        let mut fold = vec![ZERO; hops];
        let mut z = vec![ZERO; len];
        let mut sp = vec![ZERO; len];

        let mut x = match initial {
            Some(start) => {
                let mut sym = vec![ZERO; len];
                hermitian_part(&start, &mut sym);
                sym
            }
            None => vec![ZERO; len],
        };
        let mut r = rhs.to_vec();
        if x.iter().any(|v| *v != ZERO) {
            self.frame_operator_spectrum(&x, &mut fold, &mut z, &mut sp);
            r.iter_mut().zip(&sp).for_each(|(r, s)| *r -= s);
        }
        let mut residual = norm(&r) / rhs_norm;
        if residual <= tol {
            return (x, 0, residual, true);
        }
        let mut pz: Vec<Complex64> = r.iter().zip(&precond).map(|(r, m)| r * m).collect();
        let mut p = pz.clone();
        let mut rz = dot(&r, &pz);
        for it in 1..=maxit {
            self.frame_operator_spectrum(&p, &mut fold, &mut z, &mut sp);
            let curvature = dot(&p, &sp);
            if !(curvature > 0.0) {
                return (x, it, residual, false);
            }
            let step = rz / curvature;
            x.iter_mut().zip(&p).for_each(|(x, p)| *x += step * p);
            r.iter_mut().zip(&sp).for_each(|(r, s)| *r -= step * s);
            residual = norm(&r) / rhs_norm;
            if residual <= tol {
                return (x, it, residual, true);
            }
            pz.iter_mut()
                .zip(r.iter().zip(&precond))
                .for_each(|(z, (r, m))| *z = r * m);
            let rz_next = dot(&r, &pz);
            let beta = rz_next / rz;
            rz = rz_next;
            p.iter_mut().zip(&pz).for_each(|(p, z)| *p = z + beta * *p);
        }
        (x, maxit, residual, false)
    }

    /// Least-squares synthesis with explicit CG controls and an optional
    /// starting signal. Never fails on non-convergence; inspect the outcome.
    pub fn solve_synthesis(
        &self,
        grid: &CoefficientGrid,
        tol: f64,
        maxit: usize,
        initial: Option<&[f64]>,
    ) -> Result<CgOutcome> {
        self.check_grid(grid)?;
        if let Some(init) = initial {
            self.check_len(init)?;
        }
        let rhs = self.synthesis_spectrum(grid);
        let start = initial.map(|s| self.spectrum(s));
        let (x, iterations, residual, converged) = self.pcg(&rhs, start, tol, maxit);
        Ok(CgOutcome {
            signal: self.real_signal(x),
            iterations,
            residual,
            converged,
        })
    }

    /// Least-squares synthesis; errors if CG does not reach `tol`.
    pub fn synthesize_with(&self, grid: &CoefficientGrid, tol: f64, maxit: usize) -> Result<Vec<f64>> {
        let out = self.solve_synthesis(grid, tol, maxit, None)?;
        if !out.converged {
            return Err(Error::NoConvergence {
                iterations: out.iterations,
                residual: out.residual,
            });
        }
        Ok(out.signal)
    }

    /// Least-squares synthesis with default CG settings.
    pub fn synthesize(&self, grid: &CoefficientGrid) -> Result<Vec<f64>> {
        self.synthesize_with(grid, DEFAULT_CG_TOL, DEFAULT_CG_MAXIT)
    }

    /// Estimates the frame bounds (A, B): B by power iteration, A by inverse
    /// power iteration with CG solves.
    pub fn frame_bounds(&self, iters: usize) -> Result<(f64, f64)> {
        let len = self.spec().length;
        let hops = self.spec().hops();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let start: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let raw = self.spectrum(&start);
        let mut start = vec![ZERO; len];
        hermitian_part(&raw, &mut start);
        let mut fold = vec![ZERO; hops];
        let mut z = vec![ZERO; len];
        let mut sv = vec![ZERO; len];
        let iters = iters.max(1);

        let rayleigh = |v: &[Complex64], fold: &mut [Complex64], z: &mut [Complex64], sv: &mut [Complex64]| {
            self.frame_operator_spectrum(v, fold, z, sv);
            dot(v, sv) / dot(v, v)
        };

        let mut v = start.clone();
        let mut upper = 0.0;
        for _ in 0..iters {
            upper = rayleigh(&v, &mut fold, &mut z, &mut sv);
            let n = norm(&sv);
            if n == 0.0 {
                break;
            }
            v.iter_mut().zip(&sv).for_each(|(v, s)| *v = s / n);
        }

        let mut v = start;
        let mut lower = f64::INFINITY;
        for _ in 0..iters {
            let n = norm(&v);
            v.iter_mut().for_each(|x| *x /= n);
            let (w, _, residual, converged) = self.pcg(&v, None, 1e-8, 4 * DEFAULT_CG_MAXIT);
            if !converged {
                return Err(Error::NotInvertible(format!(
                    "inverse iteration stalled with CG residual {residual:e}"
                )));
            }
            lower = rayleigh(&w, &mut fold, &mut z, &mut sv);
            v = w;
        }
        if !(lower > 0.0) {
            return Err(Error::NotInvertible("lower frame bound is not positive".into()));
        }
        Ok((lower, upper.max(lower)))
    }

    /// Ratio B/A of the frame bounds, at least 1.
    pub fn frame_bound_ratio(&self, iters: usize) -> Result<f64> {
        let (a, b) = self.frame_bounds(iters)?;
        Ok((b / a).max(1.0))
    }
}

impl CoefficientGrid {
    /// Inner product under which synthesis is the adjoint of analysis:
    /// wavelet rows count twice (for the mirrored negative frequencies), the
    /// lowpass row is weighted by a_d².
    pub fn weighted_dot(&self, other: &CoefficientGrid) -> f64 {
        let decim = self.layout.spec.decimation as f64;
        let wave: f64 = self
            .wavelet
            .iter()
            .zip(other.wavelet.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        let low: f64 = self.lowpass.iter().zip(&other.lowpass).map(|(a, b)| a * b).sum();
        2.0 * wave + decim * decim * low
    }
}

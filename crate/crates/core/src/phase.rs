//! Phase reconstruction from DCWT magnitudes.
//!
//! For Cauchy wavelets the partial derivatives of the phase follow from the
//! partial derivatives of the log-magnitude. The estimated gradient is then
//! integrated over the coefficient grid in order of decreasing magnitude
//! (phase gradient heap integration, WPGHI).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dcwt::{CoefficientGrid, GridLayout};
use crate::error::{invalid, Error, Result};
use crate::kernels::CauchyParams;

pub const DEFAULT_LOG_FLOOR_DB: f64 = -300.0;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Nonnegative coefficient magnitudes on the DCWT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeGrid {
    pub layout: GridLayout,
    /// K × N, row k is channel k.
    pub values: Array2<f64>,
    pub lowpass: Vec<f64>,
    pub log_floor_db: f64,
}

impl MagnitudeGrid {
    pub fn new(layout: GridLayout, values: Array2<f64>, lowpass: Vec<f64>) -> Self {
        Self {
            layout,
            values,
            lowpass,
            log_floor_db: DEFAULT_LOG_FLOOR_DB,
        }
    }

    pub fn centers(&self) -> &[f64] {
        &self.layout.centers
    }

    pub fn hop_seconds(&self) -> f64 {
        self.layout.hop_seconds()
    }

    pub fn check_dims(&self) -> Result<()> {
        let (k, n) = (self.layout.channels(), self.layout.hops());
        if self.values.dim() != (k, n) || self.lowpass.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "magnitude grid is {:?} + {} but the layout needs {k}x{n} + {n}",
                self.values.dim(),
                self.lowpass.len()
            )));
        }
        if self.values.iter().chain(&self.lowpass).any(|v| !(*v >= 0.0)) {
            return invalid("magnitudes must be finite and nonnegative");
        }
        Ok(())
    }

    /// Multiplies all magnitudes, lowpass included, by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.mapv(|v| v * factor),
            lowpass: self.lowpass.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Estimated phase derivatives in rad/s (time) and rad/Hz (frequency).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDerivativeGrids {
    pub dphi_dx: Array2<f64>,
    pub dphi_dxi: Array2<f64>,
}

/// Phase estimate together with the set of cells above tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub values: Array2<f64>,
    pub reliable_mask: Array2<bool>,
}

/// ln(max(M, floor)) with floor = max(M) · 10^(log_floor_db / 20).
pub fn log_magnitude(m: &MagnitudeGrid) -> Array2<f64> {
    let peak = m.values.iter().cloned().fold(0.0, f64::max);
    let mut floor = peak * 10f64.powf(m.log_floor_db / 20.0);
    if !(floor > 0.0) {
        floor = f64::MIN_POSITIVE;
    }
    m.values.mapv(|v| v.max(floor).ln())
}

/// Centered time difference (g[n+1] - g[n-1]) / (2 hop). With `wrap` the
/// index is circular, otherwise the end points use one-sided differences.
pub fn time_diff(g: &Array2<f64>, hop_seconds: f64, wrap: bool) -> Result<Array2<f64>> {
    let (rows, n) = g.dim();
    if n < 3 {
        return Err(Error::GridTooCoarse(format!("time differences need N >= 3, got {n}")));
    }
    let mut out = Array2::zeros((rows, n));
    for k in 0..rows {
        for i in 0..n {
            out[[k, i]] = if wrap || (i > 0 && i + 1 < n) {
                (g[[k, (i + 1) % n]] - g[[k, (i + n - 1) % n]]) / (2.0 * hop_seconds)
            } else if i == 0 {
                (g[[k, 1]] - g[[k, 0]]) / hop_seconds
            } else {
                (g[[k, n - 1]] - g[[k, n - 2]]) / hop_seconds
            };
        }
    }
    Ok(out)
}

/// Derivative along the channel axis with respect to the center frequency:
/// the mean of the two one-sided slopes, one-sided at the first and last
/// channel.
pub fn scale_diff(g: &Array2<f64>, centers: &[f64]) -> Result<Array2<f64>> {
    let (rows, n) = g.dim();
    if rows < 3 {
        return Err(Error::GridTooCoarse(format!("scale differences need K >= 3, got {rows}")));
    }
    if centers.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "{} centers for {rows} channels",
            centers.len()
        )));
    }
    let slope = |a: usize, b: usize, i: usize| (g[[b, i]] - g[[a, i]]) / (centers[b] - centers[a]);
    let mut out = Array2::zeros((rows, n));
    for i in 0..n {
        out[[0, i]] = slope(0, 1, i);
        out[[rows - 1, i]] = slope(rows - 2, rows - 1, i);
        for k in 1..rows - 1 {
            out[[k, i]] = 0.5 * (slope(k, k + 1, i) + slope(k - 1, k, i));
        }
    }
    Ok(out)
}

/// Phase derivatives of a Cauchy-wavelet transform (γ = 1) from its
/// log-magnitude:
///
/// ```text
/// ∂φ/∂x = 4πξ_k²/(α-1) · Δ_k log M + 2πξ_k
/// ∂φ/∂ξ = -(α-1)/(4πξ_k²) · Δ_n log M + β/ξ_k
/// ```
pub fn phase_derivatives(
    logm: &Array2<f64>,
    params: &CauchyParams,
    centers: &[f64],
    hop_seconds: f64,
) -> Result<PhaseDerivativeGrids> {
    if !params.is_unit_gamma() {
        return invalid("magnitude-based phase derivatives require gamma = 1");
    }
    let alpha = params.alpha();
    if alpha <= 1.0 {
        return invalid(format!("phase derivatives need alpha > 1, got {alpha}"));
    }
    let dk = scale_diff(logm, centers)?;
    let dn = time_diff(logm, hop_seconds, true)?;
    let mut dphi_dx = dk;
    let mut dphi_dxi = dn;
    for (k, &xi) in centers.iter().enumerate() {
        let gain_x = 4.0 * PI * xi * xi / (alpha - 1.0);
        let gain_xi = -(alpha - 1.0) / (4.0 * PI * xi * xi);
        dphi_dx.row_mut(k).mapv_inplace(|v| gain_x * v + 2.0 * PI * xi);
        dphi_dxi
            .row_mut(k)
            .mapv_inplace(|v| gain_xi * v + params.beta() / xi);
    }
    Ok(PhaseDerivativeGrids { dphi_dx, dphi_dxi })
}

/// Convenience pipeline: log-magnitude, then [`phase_derivatives`].
pub fn estimate_derivatives(m: &MagnitudeGrid) -> Result<PhaseDerivativeGrids> {
    m.check_dims()?;
    phase_derivatives(&log_magnitude(m), &m.layout.params, m.centers(), m.hop_seconds())
}

#[derive(Debug, Clone, Copy)]
struct HeapCell {
    mag: f64,
    k: usize,
    n: usize,
}

impl PartialEq for HeapCell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapCell {}

impl PartialOrd for HeapCell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapCell {
    // Larger magnitude first; ties go to the lower (k, n).
    fn cmp(&self, other: &Self) -> Ordering {
        self.mag
            .total_cmp(&other.mag)
            .then_with(|| (other.k, other.n).cmp(&(self.k, self.n)))
    }
}

/// Uniform phase in [0, 2π) for cell (k, n), independent of visit order.
fn random_phase(rng: &mut ChaCha8Rng, index: usize) -> f64 {
    rng.set_word_pos(2 * index as u128);
    2.0 * PI * rng.gen::<f64>()
}

/// Phase gradient heap integration. Cells with M ≤ tol·max(M) receive a
/// random phase; every other cell is reached from a neighbor by the
/// trapezoidal rule, highest magnitude first.
pub fn wpghi(m: &MagnitudeGrid, d: &PhaseDerivativeGrids, tol: f64, seed: u64) -> Result<PhaseGrid> {
    wpghi_traced(m, d, tol, seed).map(|(grid, _)| grid)
}

/// Like [`wpghi`], additionally returning the cells (k, n) in the order they
/// were popped from the heap.
pub fn wpghi_traced(
    m: &MagnitudeGrid,
    d: &PhaseDerivativeGrids,
    tol: f64,
    seed: u64,
) -> Result<(PhaseGrid, Vec<(usize, usize)>)> {
    let (rows, n) = m.values.dim();
    if d.dphi_dx.dim() != (rows, n) || d.dphi_dxi.dim() != (rows, n) {
        return Err(Error::DimensionMismatch(
            "phase derivative grids do not match the magnitude grid".into(),
        ));
    }
    if m.centers().len() != rows {
        return Err(Error::DimensionMismatch("one center per channel is required".into()));
    }
    if !(tol > 0.0 && tol <= 1.0) {
        return invalid(format!("tolerance must lie in (0, 1], got {tol}"));
    }
    let centers = m.centers();
    let hop = m.hop_seconds();
    let peak = m.values.iter().cloned().fold(0.0, f64::max);
    let abstol = tol * peak;

    let mask = m.values.mapv(|v| v > abstol);
    let mut done = mask.mapv(|b| !b);
    let mut phase = Array2::zeros((rows, n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..rows {
        for i in 0..n {
            if !mask[[k, i]] {
                phase[[k, i]] = random_phase(&mut rng, k * n + i);
            }
        }
    }

    let mut order: Vec<(usize, usize)> = (0..rows)
        .flat_map(|k| (0..n).map(move |i| (k, i)))
        .filter(|&(k, i)| mask[[k, i]])
        .collect();
    order.sort_by(|&(ka, ia), &(kb, ib)| {
        m.values[[kb, ib]]
            .total_cmp(&m.values[[ka, ia]])
            .then_with(|| (ka, ia).cmp(&(kb, ib)))
    });

    let mut trace = Vec::with_capacity(order.len());
    let mut heap = BinaryHeap::new();
    for &(k0, i0) in &order {
        if done[[k0, i0]] {
            continue;
        }
        phase[[k0, i0]] = 0.0;
        done[[k0, i0]] = true;
        heap.push(HeapCell {
            mag: m.values[[k0, i0]],
            k: k0,
            n: i0,
        });
        while let Some(cell) = heap.pop() {
            let (k, i) = (cell.k, cell.n);
            trace.push((k, i));
            let here = phase[[k, i]];
            let mut visit = |kn: usize, inn: usize, value: f64| {
                if !done[[kn, inn]] {
                    phase[[kn, inn]] = value;
                    done[[kn, inn]] = true;
                    heap.push(HeapCell {
                        mag: m.values[[kn, inn]],
                        k: kn,
                        n: inn,
                    });
                }
            };
            for step in [1isize, -1] {
                let inn = ((i + n) as isize + step) as usize % n;
                let value = here + 0.5 * hop * step as f64 * (d.dphi_dx[[k, i]] + d.dphi_dx[[k, inn]]);
                visit(k, inn, value);
            }
            for kn in [k.wrapping_sub(1), k + 1] {
                if kn < rows {
                    let value = here
                        + 0.5 * (centers[kn] - centers[k]) * (d.dphi_dxi[[k, i]] + d.dphi_dxi[[kn, i]]);
                    visit(kn, i, value);
                }
            }
        }
    }

    Ok((
        PhaseGrid {
            values: phase,
            reliable_mask: mask,
        },
        trace,
    ))
}

/// Labels the 4-connected components of `mask` (time axis circular, scale
/// axis not). Cells outside the mask get `usize::MAX`.
pub fn mask_components(mask: &Array2<bool>) -> (Array2<usize>, usize) {
    let (rows, n) = mask.dim();
    let mut label = Array2::from_elem((rows, n), usize::MAX);
    let mut count = 0;
    let mut stack = Vec::new();
    for k0 in 0..rows {
        for i0 in 0..n {
            if !mask[[k0, i0]] || label[[k0, i0]] != usize::MAX {
                continue;
            }
            label[[k0, i0]] = count;
            stack.push((k0, i0));
            while let Some((k, i)) = stack.pop() {
                let mut neighbors = vec![(k, (i + 1) % n), (k, (i + n - 1) % n), (k + 1, i)];
                if k > 0 {
                    neighbors.push((k - 1, i));
                }
                for (kn, inn) in neighbors {
                    if kn < rows && mask[[kn, inn]] && label[[kn, inn]] == usize::MAX {
                        label[[kn, inn]] = count;
                        stack.push((kn, inn));
                    }
                }
            }
            count += 1;
        }
    }
    (label, count)
}

/// W = M·e^{iφ}; the lowpass row is passed through with positive sign.
pub fn combine(m: &MagnitudeGrid, p: &PhaseGrid) -> Result<CoefficientGrid> {
    m.check_dims()?;
    if p.values.dim() != m.values.dim() {
        return Err(Error::DimensionMismatch("phase grid does not match magnitudes".into()));
    }
    let mut grid = CoefficientGrid::zeros(m.layout.clone());
    ndarray::Zip::from(&mut grid.wavelet)
        .and(&m.values)
        .and(&p.values)
        .for_each(|w, &mag, &ph| *w = Complex64::from_polar(mag, ph));
    grid.lowpass = m.lowpass.clone();
    Ok(grid)
}

/// Magnitude-only reconstruction: derivatives, heap integration, combine.
pub fn reconstruct_phase(m: &MagnitudeGrid, tol: f64, seed: u64) -> Result<(CoefficientGrid, PhaseGrid)> {
    let d = estimate_derivatives(m)?;
    let p = wpghi(m, &d, tol, seed)?;
    Ok((combine(m, &p)?, p))
}

/// Circular RMS difference between `estimate` and `truth` over the cells of
/// `mask`, after removing one constant offset per connected component.
pub fn component_phase_rmse(estimate: &Array2<f64>, truth: &Array2<f64>, mask: &Array2<bool>) -> f64 {
    let (label, count) = mask_components(mask);
    let mut offsets = vec![Complex64::new(0.0, 0.0); count];
    ndarray::Zip::from(&label)
        .and(estimate)
        .and(truth)
        .for_each(|&c, &e, &t| {
            if c != usize::MAX {
                offsets[c] += Complex64::from_polar(1.0, e - t);
            }
        });
    let mut sum = 0.0;
    let mut cells = 0usize;
    ndarray::Zip::from(&label)
        .and(estimate)
        .and(truth)
        .for_each(|&c, &e, &t| {
            if c != usize::MAX {
                let d = (Complex64::from_polar(1.0, e - t) * offsets[c].conj()).arg();
                sum += d * d;
                cells += 1;
            }
        });
    if cells == 0 {
        0.0
    } else {
        (sum / cells as f64).sqrt()
    }
}

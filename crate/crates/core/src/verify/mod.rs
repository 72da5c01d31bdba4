//! Numerical checks of the continuous-domain identities of the wavelet
//! transform: derivative formulas, phase-magnitude relations, Laplacian
//! identities, reassignment maps and ridge coincidence.
//!
//! All checks evaluate a [`TransformField`] on the 3×3 stencil around a set
//! of evaluation points and compare finite differences against closed
//! forms. Cells with |W| below [`MASK_FLOOR`] times the maximum are ignored.

mod dense;
mod wavelets;

pub use dense::{
    linspace, magnitude_mask, Convention, DenseAnalyzer, DenseWtGrid, RefinementPlan, SyntheticField,
    TransformField,
};
pub use wavelets::{Gabor, TwoPeak};

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;

use crate::error::{invalid, Result};
use crate::kernels::{CauchyParams, KernelKind};
use dense::Stencil;

/// Relative magnitude below which cells are excluded from every check.
pub const MASK_FLOOR: f64 = 1e-3;

pub const VERIFY_HEADER: &str = "check,spacing,rms_residual,max_residual,refinement_ratio";

/// One refinement level of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub check: String,
    pub spacing: f64,
    pub rms_residual: f64,
    pub max_residual: f64,
    /// RMS residual of the previous (coarser) level divided by this one;
    /// NaN on the first level.
    pub refinement_ratio: f64,
}

impl VerifyRow {
    pub fn record(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{}",
            self.check,
            self.spacing,
            self.rms_residual,
            self.max_residual,
            if self.refinement_ratio.is_nan() {
                String::new()
            } else {
                format!("{:.6}", self.refinement_ratio)
            }
        )
    }
}

pub fn write_rows<W: Write>(mut out: W, rows: &[VerifyRow]) -> Result<()> {
    writeln!(out, "{VERIFY_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.record())?;
    }
    Ok(())
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn rows_for(check: &str, levels: &[(f64, f64, f64)]) -> Vec<VerifyRow> {
    let mut out: Vec<VerifyRow> = Vec::with_capacity(levels.len());
    for &(spacing, rms_residual, max_residual) in levels {
        let refinement_ratio = match out.last() {
            Some(prev) => prev.rms_residual / rms_residual,
            None => f64::NAN,
        };
        out.push(VerifyRow {
            check: check.to_string(),
            spacing,
            rms_residual,
            max_residual,
            refinement_ratio,
        });
    }
    out
}

fn require_scale(field: &dyn TransformField) -> Result<()> {
    if field.convention() != Convention::ScaleUnitary {
        return invalid("this check needs a field in the unitary scale convention");
    }
    Ok(())
}

fn stencil_mask(st: &Stencil, ny: usize, nx: usize) -> Array2<bool> {
    let centers = Array2::from_shape_fn((ny, nx), |(iy, ix)| st.at(iy, ix, 0, 0));
    magnitude_mask(&centers, MASK_FLOOR)
}

fn check_plan(plan: &RefinementPlan) -> Result<()> {
    RefinementPlan::new(plan.xs.clone(), plan.ys.clone(), plan.step, plan.levels).map(|_| ())
}

/// Relative error of central differences of W against the closed-form
/// partial derivatives ∂ₓW = -W_{ψ′}/y and ∂_yW = W/(2y) - W_{(Tψ)′}/y.
///
/// Errors are normalized by the RMS (resp. maximum) of the exact
/// derivative over masked cells. Rows are named `wt_dx` and `wt_dy`.
pub fn wt_derivative_check(analyzer: &DenseAnalyzer, plan: &RefinementPlan) -> Result<Vec<VerifyRow>> {
    require_scale(analyzer)?;
    check_plan(plan)?;
    let (xs, ys) = (&plan.xs, &plan.ys);
    let w = analyzer.with_kind(KernelKind::Psi).eval(xs, ys);
    let w_d = analyzer.with_kind(KernelKind::PsiPrime).eval(xs, ys);
    let w_t = analyzer.with_kind(KernelKind::TPsiPrime).eval(xs, ys);
    let exact_dx = Array2::from_shape_fn(w.dim(), |(iy, ix)| -w_d[[iy, ix]] / ys[iy]);
    let exact_dy =
        Array2::from_shape_fn(w.dim(), |(iy, ix)| (w[[iy, ix]] * 0.5 - w_t[[iy, ix]]) / ys[iy]);
    let mask = magnitude_mask(&w, MASK_FLOOR);

    let mut dx_levels = Vec::new();
    let mut dy_levels = Vec::new();
    for level in 0..plan.levels {
        let h = plan.spacing(level);
        let st = Stencil::sample(analyzer, xs, ys, h);
        let (mut ex, mut ey, mut rx, mut ry) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for ((iy, ix), &keep) in mask.indexed_iter() {
            if !keep {
                continue;
            }
            let fd_x = (st.at(iy, ix, 0, 1) - st.at(iy, ix, 0, -1)) / (2.0 * h);
            let fd_y = (st.at(iy, ix, 1, 0) - st.at(iy, ix, -1, 0)) / (2.0 * h);
            ex.push((fd_x - exact_dx[[iy, ix]]).norm());
            ey.push((fd_y - exact_dy[[iy, ix]]).norm());
            rx.push(exact_dx[[iy, ix]].norm());
            ry.push(exact_dy[[iy, ix]].norm());
        }
        let rel = |e: &[f64], r: &[f64]| -> (f64, f64) {
            let (rr, rm) = (rms(r), max_abs(r));
            (
                if rr > 0.0 { rms(e) / rr } else { 0.0 },
                if rm > 0.0 { max_abs(e) / rm } else { 0.0 },
            )
        };
        let (a, b) = rel(&ex, &rx);
        dx_levels.push((h, a, b));
        let (a, b) = rel(&ey, &ry);
        dy_levels.push((h, a, b));
    }
    let mut rows = rows_for("wt_dx", &dx_levels);
    rows.extend(rows_for("wt_dy", &dy_levels));
    Ok(rows)
}

/// Right-hand sides of the phase-magnitude relations for a Cauchy wavelet
/// with parameters (α, β, γ), given ∂ₓ log M and ∂_y log M at scale y.
/// Returns (∂ₓφ, ∂_yφ).
pub fn phase_gradient_from_magnitude(params: &CauchyParams, y: f64, dx_log: f64, dy_log: f64) -> (f64, f64) {
    let (alpha, beta) = (params.alpha(), params.beta());
    let g = params.gamma();
    let dphi_dx = alpha / (2.0 * y * g.re) - dy_log / g.re + g.im * dx_log / g.re;
    let dphi_dy =
        alpha * g.im / (2.0 * y * g.re) - beta / y + g.norm_sqr() * dx_log / g.re - g.im * dy_log / g.re;
    (dphi_dx, dphi_dy)
}

/// Pooled residuals of both phase-magnitude relations at one spacing, on
/// masked cells. Phase differences use principal values of quotients of
/// neighbouring coefficients.
pub fn cr_residuals(
    field: &dyn TransformField,
    params: &CauchyParams,
    xs: &[f64],
    ys: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    require_scale(field)?;
    let st = Stencil::sample(field, xs, ys, h);
    let mask = stencil_mask(&st, ys.len(), xs.len());
    let mut out = Vec::new();
    for ((iy, ix), &keep) in mask.indexed_iter() {
        if !keep {
            continue;
        }
        let (px, py) = phase_gradient_from_magnitude(params, ys[iy], st.dx_log_mag(iy, ix), st.dy_log_mag(iy, ix));
        out.push(st.dx_phase(iy, ix) - px);
        out.push(st.dy_phase(iy, ix) - py);
    }
    Ok(out)
}

/// Refinement sweep of [`cr_residuals`]; rows are named `cr`.
pub fn cr_residual(field: &dyn TransformField, params: &CauchyParams, plan: &RefinementPlan) -> Result<Vec<VerifyRow>> {
    check_plan(plan)?;
    let mut levels = Vec::new();
    for level in 0..plan.levels {
        let h = plan.spacing(level);
        let r = cr_residuals(field, params, &plan.xs, &plan.ys, h)?;
        levels.push((h, rms(&r), max_abs(&r)));
    }
    Ok(rows_for("cr", &levels))
}

/// Targets (Δ log M, Δφ) = (-α/(2y²), β/y²) of the second-order identities.
pub fn laplacian_targets(params: &CauchyParams, y: f64) -> (f64, f64) {
    (-params.alpha() / (2.0 * y * y), params.beta() / (y * y))
}

/// Residuals of the log-magnitude and phase Laplacian identities at one
/// spacing, on masked cells.
pub fn laplacian_residuals(
    field: &dyn TransformField,
    params: &CauchyParams,
    xs: &[f64],
    ys: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    require_scale(field)?;
    if !params.is_unit_gamma() {
        return invalid("the Laplacian identities hold for gamma = 1 only");
    }
    let st = Stencil::sample(field, xs, ys, h);
    let mask = stencil_mask(&st, ys.len(), xs.len());
    let (mut mag, mut phase) = (Vec::new(), Vec::new());
    for ((iy, ix), &keep) in mask.indexed_iter() {
        if !keep {
            continue;
        }
        let (tm, tp) = laplacian_targets(params, ys[iy]);
        mag.push(st.dxx_log_mag(iy, ix) + st.dyy_log_mag(iy, ix) - tm);
        phase.push(st.dxx_phase(iy, ix) + st.dyy_phase(iy, ix) - tp);
    }
    Ok((mag, phase))
}

/// Refinement sweep of [`laplacian_residuals`]; rows are named
/// `laplacian_magnitude` and `laplacian_phase`.
pub fn laplacian_check(
    field: &dyn TransformField,
    params: &CauchyParams,
    plan: &RefinementPlan,
) -> Result<Vec<VerifyRow>> {
    check_plan(plan)?;
    let (mut mag, mut phase) = (Vec::new(), Vec::new());
    for level in 0..plan.levels {
        let h = plan.spacing(level);
        let (m, p) = laplacian_residuals(field, params, &plan.xs, &plan.ys, h)?;
        mag.push((h, rms(&m), max_abs(&m)));
        phase.push((h, rms(&p), max_abs(&p)));
    }
    let mut rows = rows_for("laplacian_magnitude", &mag);
    rows.extend(rows_for("laplacian_phase", &phase));
    Ok(rows)
}

/// Reassigned time (seconds) and frequency (Hz) per cell. Values outside
/// the mask are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ReassignmentField {
    pub xs: Vec<f64>,
    /// Scales of the lattice rows.
    pub ys: Vec<f64>,
    pub time: Array2<f64>,
    pub frequency: Array2<f64>,
    pub mask: Array2<bool>,
}

impl ReassignmentField {
    fn empty(xs: &[f64], ys: &[f64], mask: Array2<bool>) -> Self {
        let dim = (ys.len(), xs.len());
        Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            time: Array2::from_elem(dim, f64::NAN),
            frequency: Array2::from_elem(dim, f64::NAN),
            mask,
        }
    }

    /// Reassigned scale ξ_b / ξ̂ for a wavelet peaking at `xi_b` Hz.
    pub fn scale(&self, xi_b: f64) -> Array2<f64> {
        self.frequency.mapv(|f| xi_b / f)
    }
}

/// Both reassignment maps of one lattice: from coefficient quotients and
/// from the magnitude alone through the phase-magnitude relations.
#[derive(Debug, Clone, PartialEq)]
pub struct Reassignment {
    pub quotient: ReassignmentField,
    pub magnitude: ReassignmentField,
}

impl Reassignment {
    fn differences(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut dt, mut df) = (Vec::new(), Vec::new());
        for (idx, &keep) in self.quotient.mask.indexed_iter() {
            if keep {
                dt.push(self.quotient.time[idx] - self.magnitude.time[idx]);
                df.push((self.quotient.frequency[idx] - self.magnitude.frequency[idx]) / self.quotient.frequency[idx]);
            }
        }
        (dt, df)
    }

    /// RMS over masked cells of the time difference (seconds) and the
    /// relative frequency difference between the two maps.
    pub fn agreement(&self) -> (f64, f64) {
        let (dt, df) = self.differences();
        (rms(&dt), rms(&df))
    }
}

fn lattice_scales(analyzer: &DenseAnalyzer, coords: &[f64]) -> Result<Vec<f64>> {
    match analyzer.convention() {
        Convention::ScaleUnitary => Ok(coords.to_vec()),
        Convention::FreqConvention => {
            if coords.iter().any(|&f| !(f > 0.0)) {
                return invalid("lattice frequencies must be positive");
            }
            let peak = analyzer.wavelet().peak_frequency();
            Ok(coords.iter().map(|&f| peak / f).collect())
        }
    }
}

/// Reassignment maps on the lattice `xs × coords`, where `coords` are
/// scales or frequencies according to the analyzer's convention.
///
/// With ω_b = 2πξ_b the maps are x̂ = x + y² ∂_yφ / ω_b and ξ̂ = ∂ₓφ / 2π.
/// The quotient form uses ∂ₓφ = -Im(W_{ψ′}/W)/y and
/// ∂_yφ = -Im(W_{(Tψ)′}/W)/y; the magnitude form takes both from central
/// differences of log M with step `h` through
/// [`phase_gradient_from_magnitude`].
pub fn reassignment_map(
    analyzer: &DenseAnalyzer,
    params: &CauchyParams,
    xs: &[f64],
    coords: &[f64],
    h: f64,
) -> Result<Reassignment> {
    if !(h > 0.0) {
        return invalid("difference step must be positive");
    }
    let ys = lattice_scales(analyzer, coords)?;
    if ys.iter().any(|&y| y - h <= 0.0) {
        return invalid("every scale minus the step must stay positive");
    }
    let scale = analyzer.with_convention(Convention::ScaleUnitary);
    let omega_b = 2.0 * PI * analyzer.wavelet().peak_frequency();
    let w = scale.eval(xs, &ys);
    let w_d = scale.with_kind(KernelKind::PsiPrime).eval(xs, &ys);
    let w_t = scale.with_kind(KernelKind::TPsiPrime).eval(xs, &ys);
    let mask = magnitude_mask(&w, MASK_FLOOR);
    let st = Stencil::sample(&scale, xs, &ys, h);

    let mut quotient = ReassignmentField::empty(xs, &ys, mask.clone());
    let mut magnitude = ReassignmentField::empty(xs, &ys, mask.clone());
    for ((iy, ix), &keep) in mask.indexed_iter() {
        if !keep {
            continue;
        }
        let (x, y) = (xs[ix], ys[iy]);
        let v = w[[iy, ix]];
        let dphi_dx = -(w_d[[iy, ix]] / v).im / y;
        let dphi_dy = -(w_t[[iy, ix]] / v).im / y;
        quotient.time[[iy, ix]] = x + y * y * dphi_dy / omega_b;
        quotient.frequency[[iy, ix]] = dphi_dx / (2.0 * PI);
        let (px, py) = phase_gradient_from_magnitude(params, y, st.dx_log_mag(iy, ix), st.dy_log_mag(iy, ix));
        magnitude.time[[iy, ix]] = x + y * y * py / omega_b;
        magnitude.frequency[[iy, ix]] = px / (2.0 * PI);
    }
    Ok(Reassignment { quotient, magnitude })
}

/// Refinement sweep of the agreement between both reassignment maps; rows
/// are named `reassign_time` (seconds) and `reassign_frequency` (relative).
pub fn reassignment_check(
    analyzer: &DenseAnalyzer,
    params: &CauchyParams,
    plan: &RefinementPlan,
) -> Result<Vec<VerifyRow>> {
    check_plan(plan)?;
    let (mut t, mut f) = (Vec::new(), Vec::new());
    for level in 0..plan.levels {
        let h = plan.spacing(level);
        let r = reassignment_map(analyzer, params, &plan.xs, &plan.ys, h)?;
        let (dt, df) = r.differences();
        t.push((h, rms(&dt), max_abs(&dt)));
        f.push((h, rms(&df), max_abs(&df)));
    }
    let mut rows = rows_for("reassign_time", &t);
    rows.extend(rows_for("reassign_frequency", &f));
    Ok(rows)
}

/// Magnitude and phase ridge points as (row, column) lattice indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RidgeSets {
    pub magnitude: Vec<(usize, usize)>,
    pub phase: Vec<(usize, usize)>,
}

impl RidgeSets {
    /// Fraction of all ridge points that have a counterpart of the other
    /// kind within one cell. Two empty sets coincide trivially.
    pub fn coincidence(&self) -> f64 {
        let total = self.magnitude.len() + self.phase.len();
        if total == 0 {
            return 1.0;
        }
        let near = |a: &(usize, usize), set: &[(usize, usize)]| {
            set.iter().any(|b| a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1)
        };
        let matched = self.magnitude.iter().filter(|p| near(p, &self.phase)).count()
            + self.phase.iter().filter(|p| near(p, &self.magnitude)).count();
        matched as f64 / total as f64
    }
}

/// Ridge points along the scale axis for a wavelet peaking at `xi_b` Hz.
///
/// Magnitude ridges: D = ∂_y log(y^(-1/2) M) changes sign from + to -
/// between rows iy and iy+1. Phase ridges: P = ∂ₓφ - 2πξ_b / y changes sign
/// from - to +. Both adjacent cells must be masked; the point is reported
/// at the row closer to the zero crossing. `ys` must be increasing.
pub fn ridge_points(field: &dyn TransformField, xi_b: f64, xs: &[f64], ys: &[f64], h: f64) -> Result<RidgeSets> {
    require_scale(field)?;
    if !(xi_b > 0.0) || !(h > 0.0) {
        return invalid("ridge detection needs a positive center frequency and step");
    }
    if ys.windows(2).any(|p| p[1] <= p[0]) {
        return invalid("ridge detection needs increasing scales");
    }
    if ys.first().is_some_and(|&y| y - h <= 0.0) {
        return invalid("every scale minus the step must stay positive");
    }
    let st = Stencil::sample(field, xs, ys, h);
    let mask = stencil_mask(&st, ys.len(), xs.len());
    let d = Array2::from_shape_fn(mask.dim(), |(iy, ix)| st.dy_log_mag(iy, ix) - 0.5 / ys[iy]);
    let p = Array2::from_shape_fn(mask.dim(), |(iy, ix)| st.dx_phase(iy, ix) - 2.0 * PI * xi_b / ys[iy]);
    let mut sets = RidgeSets::default();
    for ix in 0..xs.len() {
        for iy in 0..ys.len().saturating_sub(1) {
            if !(mask[[iy, ix]] && mask[[iy + 1, ix]]) {
                continue;
            }
            let pick = |a: f64, b: f64| if a.abs() <= b.abs() { iy } else { iy + 1 };
            let (d0, d1) = (d[[iy, ix]], d[[iy + 1, ix]]);
            if d0 > 0.0 && d1 <= 0.0 {
                sets.magnitude.push((pick(d0, d1), ix));
            }
            let (p0, p1) = (p[[iy, ix]], p[[iy + 1, ix]]);
            if p0 < 0.0 && p1 >= 0.0 {
                sets.phase.push((pick(p0, p1), ix));
            }
        }
    }
    Ok(sets)
}

/// Time reassignment for the Gabor wavelet computed two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborReassignment {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// x + y Re(W_{Tψ} / W).
    pub time_quotient: Array2<f64>,
    /// x + y² ∂ₓ log M by central differences.
    pub time_magnitude: Array2<f64>,
    /// Instantaneous scale ω_b / ∂ₓφ.
    pub scale: Array2<f64>,
    pub mask: Array2<bool>,
}

impl GaborReassignment {
    /// Largest time difference (seconds) between the two forms on masked cells.
    pub fn agreement(&self) -> f64 {
        self.mask
            .indexed_iter()
            .filter(|(_, &keep)| keep)
            .map(|(idx, _)| (self.time_quotient[idx] - self.time_magnitude[idx]).abs())
            .fold(0.0, f64::max)
    }
}

/// Reassignment with the Gabor wavelet e^(-t²/2 + iω_b t), for which the
/// center-of-gravity time map equals x + y² ∂ₓ log M.
pub fn gabor_reassignment_special_case(
    signal: &[f64],
    sample_rate: f64,
    omega_b: f64,
    xs: &[f64],
    ys: &[f64],
    h: f64,
) -> Result<GaborReassignment> {
    if !(h > 0.0) || ys.iter().any(|&y| y - h <= 0.0) {
        return invalid("scales must exceed the positive difference step");
    }
    let analyzer = DenseAnalyzer::new(signal, sample_rate, std::sync::Arc::new(Gabor::new(omega_b)?))?;
    let w = analyzer.eval(xs, ys);
    let w_t = analyzer.with_kind(KernelKind::TPsi).eval(xs, ys);
    let w_d = analyzer.with_kind(KernelKind::PsiPrime).eval(xs, ys);
    let mask = magnitude_mask(&w, MASK_FLOOR);
    let st = Stencil::sample(&analyzer, xs, ys, h);
    let dim = w.dim();
    let mut out = GaborReassignment {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        time_quotient: Array2::from_elem(dim, f64::NAN),
        time_magnitude: Array2::from_elem(dim, f64::NAN),
        scale: Array2::from_elem(dim, f64::NAN),
        mask,
    };
    for iy in 0..dim.0 {
        for ix in 0..dim.1 {
            if !out.mask[[iy, ix]] {
                continue;
            }
            let (x, y, v) = (xs[ix], ys[iy], w[[iy, ix]]);
            out.time_quotient[[iy, ix]] = x + y * (w_t[[iy, ix]] / v).re;
            out.time_magnitude[[iy, ix]] = x + y * y * st.dx_log_mag(iy, ix);
            let dphi_dx = -(w_d[[iy, ix]] / v).im / y;
            out.scale[[iy, ix]] = omega_b / dphi_dx;
        }
    }
    Ok(out)
}

/// Complex values of a field on a lattice, for export.
pub fn sample_grid(field: &dyn TransformField, xs: &[f64], ys: &[f64]) -> DenseWtGrid {
    DenseWtGrid {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        values: field.eval(xs, ys),
        convention: field.convention(),
    }
}

//! Detuning sweeps, peak analysis and coupling-detuning scans.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::doppler::{doppler_average, doppler_average_adaptive, make_velocity_grid, VelocityGrid, VelocityScheme};
use crate::error::{Error, Result};
use crate::lineshape::{stationary_susceptibility, SusceptibilityHarmonics, Truncation};
use crate::model::{derive_frequencies, PhysicalConstants, SystemParams};
use crate::optics::{phase_mismatch, probe_phase_shift, reflection_point, refractive_index, PropagationResult};
use crate::scenario::{check_grid, ScenarioConfig};

/// A sweep fails as a whole when more than this fraction of points fail.
pub const MAX_FAILED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub enum DopplerMode {
    /// Atoms at rest.
    Off,
    Grid(VelocityGrid),
    Adaptive { tol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub doppler: DopplerMode,
    pub truncation: Truncation,
    pub window_loss_enabled: bool,
}

impl SweepOptions {
    pub fn from_config(config: &ScenarioConfig, params: &SystemParams, constants: &PhysicalConstants) -> Result<Self> {
        let n = &config.numerics;
        let doppler = if !n.doppler {
            DopplerMode::Off
        } else {
            match n.velocity_scheme {
                VelocityScheme::Adaptive => DopplerMode::Adaptive { tol: n.doppler_tol },
                scheme => DopplerMode::Grid(make_velocity_grid(
                    params.temperature,
                    constants.atom_mass,
                    n.velocity_nodes,
                    scheme,
                )?),
            }
        };
        Ok(Self { doppler, truncation: n.truncation()?, window_loss_enabled: n.window_loss_enabled })
    }
}

/// Grating harmonics of the medium at one detuning point.
#[derive(Debug, Clone, PartialEq)]
pub struct GratingResponse {
    pub chi: SusceptibilityHarmonics,
    /// Harmonic scattering the backward field into the probe: `χ_{+1}` of
    /// the mirror-image medium (coupling beams exchanged).
    pub chi_return: Complex64,
}

impl GratingResponse {
    pub fn chi0(&self) -> Complex64 {
        self.chi.chi0()
    }

    /// Harmonic scattering the probe into the backward field.
    pub fn chi_emission(&self) -> Complex64 {
        self.chi.get(1)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { chi: self.chi.scaled(factor), chi_return: self.chi_return * factor }
    }
}

fn averaged_susceptibility(
    params: &SystemParams,
    constants: &PhysicalConstants,
    opts: &SweepOptions,
) -> Result<SusceptibilityHarmonics> {
    match &opts.doppler {
        DopplerMode::Off => {
            let freqs = derive_frequencies(params, constants);
            stationary_susceptibility(params, constants, &freqs, opts.truncation)
        }
        DopplerMode::Grid(grid) => doppler_average(params, constants, grid, opts.truncation),
        DopplerMode::Adaptive { tol } => Ok(doppler_average_adaptive(params, constants, *tol, opts.truncation)?.chi),
    }
}

/// Velocity-averaged grating harmonics at the detunings held in `params`.
pub fn medium_response(params: &SystemParams, constants: &PhysicalConstants, opts: &SweepOptions) -> Result<GratingResponse> {
    let chi = averaged_susceptibility(params, constants, opts)?;
    let chi_return = if params.rabi_c1 == params.rabi_c2 {
        chi.get(1)
    } else {
        averaged_susceptibility(&params.mirrored(), constants, opts)?.get(1)
    };
    Ok(GratingResponse { chi, chi_return })
}

/// Everything reported at one `(Δ_p, Δ_c)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    /// rad/s
    pub delta_p: f64,
    /// rad/s
    pub delta_c: f64,
    pub chi0: Complex64,
    pub chi_plus1: Complex64,
    pub chi_minus1: Complex64,
    pub chi_return: Complex64,
    pub refractive_index: f64,
    /// Phase mismatch with the medium, rad/m.
    pub delta_k: f64,
    /// Phase mismatch of the empty cell, rad/m.
    pub delta_k_baseline: f64,
    /// rad
    pub phase_shift: f64,
    pub propagation: PropagationResult,
}

impl SweepRecord {
    pub fn eta(&self) -> f64 {
        self.propagation.eta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub delta_p: f64,
    pub delta_c: f64,
    pub error: Error,
}

pub type PointOutcome = std::result::Result<SweepRecord, PointFailure>;

/// Sweep results, one row per `Δ_c`, one column per `Δ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// m⁻³
    pub density: f64,
    pub delta_p: Vec<f64>,
    pub delta_c: Vec<f64>,
    pub points: Vec<PointOutcome>,
}

impl SweepTable {
    pub fn point(&self, ic: usize, ip: usize) -> &PointOutcome {
        &self.points[ic * self.delta_p.len() + ip]
    }

    pub fn row(&self, ic: usize) -> &[PointOutcome] {
        let n = self.delta_p.len();
        &self.points[ic * n..(ic + 1) * n]
    }

    pub fn failures(&self) -> impl Iterator<Item = &PointFailure> {
        self.points.iter().filter_map(|p| p.as_ref().err())
    }

    /// `(Δ_p, η)` over the successful points of row `ic`.
    pub fn eta_series(&self, ic: usize) -> (Vec<f64>, Vec<f64>) {
        self.row(ic).iter().filter_map(|p| p.as_ref().ok()).map(|r| (r.delta_p, r.eta())).unzip()
    }
}

/// Medium response over a detuning grid, reusable at any density.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseGrid {
    /// Density the responses were computed at, m⁻³.
    pub density: f64,
    pub delta_p: Vec<f64>,
    pub delta_c: Vec<f64>,
    pub responses: Vec<std::result::Result<GratingResponse, PointFailure>>,
}

/// Computes the medium response at every `(Δ_c, Δ_p)` pair, in parallel.
pub fn response_grid(
    params: &SystemParams,
    constants: &PhysicalConstants,
    delta_p_grid: &[f64],
    delta_c_list: &[f64],
    opts: &SweepOptions,
) -> Result<ResponseGrid> {
    check_grid("probe detuning grid", delta_p_grid)?;
    if delta_c_list.is_empty() {
        return Err(Error::invalid("coupling detuning list is empty"));
    }
    let np = delta_p_grid.len();
    let responses = (0..np * delta_c_list.len())
        .into_par_iter()
        .map(|idx| {
            let (dc, dp) = (delta_c_list[idx / np], delta_p_grid[idx % np]);
            medium_response(&params.with_detunings(dp, dc), constants, opts).map_err(|error| PointFailure {
                delta_p: dp,
                delta_c: dc,
                error,
            })
        })
        .collect();
    Ok(ResponseGrid { density: params.density, delta_p: delta_p_grid.to_vec(), delta_c: delta_c_list.to_vec(), responses })
}

fn record(
    params: &SystemParams,
    constants: &PhysicalConstants,
    response: &GratingResponse,
    window_loss_enabled: bool,
) -> Result<SweepRecord> {
    let freqs = derive_frequencies(params, constants);
    let chi0 = response.chi0();
    let propagation =
        reflection_point(params, &freqs, chi0, response.chi_emission(), response.chi_return, window_loss_enabled)?;
    Ok(SweepRecord {
        delta_p: params.delta_p,
        delta_c: params.delta_c,
        chi0,
        chi_plus1: response.chi.get(1),
        chi_minus1: response.chi.get(-1),
        chi_return: response.chi_return,
        refractive_index: refractive_index(chi0),
        delta_k: propagation.delta_k,
        delta_k_baseline: phase_mismatch(&freqs, params.theta, Complex64::new(0.0, 0.0)),
        phase_shift: probe_phase_shift(chi0, freqs.k_p, params.length),
        propagation,
    })
}

impl ResponseGrid {
    /// Propagation results with all susceptibilities rescaled to `params.density`.
    pub fn tabulate(&self, params: &SystemParams, constants: &PhysicalConstants, window_loss_enabled: bool) -> Result<SweepTable> {
        if params.density != self.density && !(self.density > 0.0) {
            return Err(Error::invalid("responses computed at zero density cannot be rescaled"));
        }
        let factor = if params.density == self.density { 1.0 } else { params.density / self.density };
        let np = self.delta_p.len();
        let points: Vec<PointOutcome> = self
            .responses
            .par_iter()
            .enumerate()
            .map(|(idx, resp)| {
                let (dc, dp) = (self.delta_c[idx / np], self.delta_p[idx % np]);
                let resp = resp.as_ref().map_err(Clone::clone)?;
                let p = params.with_detunings(dp, dc);
                let scaled = if factor == 1.0 { resp.clone() } else { resp.scaled(factor) };
                record(&p, constants, &scaled, window_loss_enabled).map_err(|error| PointFailure {
                    delta_p: dp,
                    delta_c: dc,
                    error,
                })
            })
            .collect();
        let table = SweepTable { density: params.density, delta_p: self.delta_p.clone(), delta_c: self.delta_c.clone(), points };
        check_failures(&table)?;
        Ok(table)
    }
}

fn check_failures(table: &SweepTable) -> Result<()> {
    let failed = table.failures().count();
    let total = table.points.len();
    if failed as f64 > MAX_FAILED_FRACTION * total as f64 {
        let first = table.failures().next().map(|f| f.error.to_string()).unwrap_or_default();
        return Err(Error::numerical(format!("{failed} of {total} sweep points failed; first: {first}")));
    }
    Ok(())
}

/// Full spectrum over `Δ_p` for each `Δ_c` (all in rad/s).
pub fn spectrum_sweep(
    params: &SystemParams,
    constants: &PhysicalConstants,
    delta_p_grid: &[f64],
    delta_c_list: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    response_grid(params, constants, delta_p_grid, delta_c_list, opts)?.tabulate(params, constants, opts.window_loss_enabled)
}

/// Summary of one reflection spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakMetrics {
    pub eta_max: f64,
    /// Peak position, rad/s (same unit as the input abscissa).
    pub delta_p_at_peak: f64,
    /// Half-maximum crossings; `None` where the spectrum does not fall to
    /// half height inside the grid.
    pub half_max_left: Option<f64>,
    pub half_max_right: Option<f64>,
    pub fwhm: Option<f64>,
}

/// Peak height, position and full width at half maximum of `eta(x)`.
/// Returns `None` for an identically zero spectrum.
pub fn peak_metrics(x: &[f64], eta: &[f64]) -> Result<Option<PeakMetrics>> {
    if x.len() != eta.len() {
        return Err(Error::invalid("abscissa and spectrum lengths differ"));
    }
    if x.len() < 3 {
        return Err(Error::invalid(format!("peak analysis needs at least 3 points, got {}", x.len())));
    }
    if eta.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::invalid("spectrum contains non-finite values"));
    }
    // first maximum: ties go to the smallest abscissa
    let mut ip = 0;
    for (i, &e) in eta.iter().enumerate() {
        if e > eta[ip] {
            ip = i;
        }
    }
    if eta[ip] <= 0.0 {
        return Ok(None);
    }
    let (mut x_peak, mut eta_max) = (x[ip], eta[ip]);
    if ip > 0 && ip + 1 < x.len() {
        if let Some((xv, yv)) = parabola_vertex([x[ip - 1], x[ip], x[ip + 1]], [eta[ip - 1], eta[ip], eta[ip + 1]]) {
            if xv > x[ip - 1] && xv < x[ip + 1] && yv >= eta[ip] {
                x_peak = xv;
                eta_max = yv;
            }
        }
    }
    let half = 0.5 * eta_max;
    let cross = |i: usize, j: usize| x[i] + (half - eta[i]) * (x[j] - x[i]) / (eta[j] - eta[i]);
    let left = (0..ip).rev().find(|&i| eta[i] < half).map(|i| cross(i, i + 1));
    let right = (ip + 1..x.len()).find(|&i| eta[i] < half).map(|i| cross(i - 1, i));
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    };
    Ok(Some(PeakMetrics { eta_max, delta_p_at_peak: x_peak, half_max_left: left, half_max_right: right, fwhm }))
}

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let (d1, d2) = (x[1] - x[0], x[2] - x[1]);
    let s1 = (y[1] - y[0]) / d1;
    let s2 = (y[2] - y[1]) / d2;
    let curv = (s2 - s1) / (x[2] - x[0]); // leading coefficient
    if !(curv < 0.0) {
        return None;
    }
    // y = y1 + b(x − x1) + curv(x − x1)², with b the central slope
    let b = s1 + curv * d1;
    let dx = -b / (2.0 * curv);
    Some((x[1] + dx, y[1] + b * dx + curv * dx * dx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    /// rad/s
    pub delta_c: f64,
    pub peak: Option<PeakMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityScan {
    /// m⁻³
    pub density: f64,
    pub points: Vec<ScanPoint>,
    /// Coupling detuning of the largest peak (ties: smallest Δ_c).
    pub best_delta_c: Option<f64>,
    pub best_eta: f64,
}

/// Peak reflection versus coupling detuning at each density. The medium
/// response is linear in density, so it is computed once and rescaled.
pub fn coupling_detuning_scan(
    params: &SystemParams,
    constants: &PhysicalConstants,
    delta_c_grid: &[f64],
    delta_p_grid: &[f64],
    densities: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<DensityScan>> {
    check_grid("coupling detuning grid", delta_c_grid)?;
    if densities.is_empty() {
        return Err(Error::invalid("no densities to scan"));
    }
    if let Some(bad) = densities.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
        return Err(Error::invalid(format!("density must be non-negative, got {bad}")));
    }
    let unit = params.with_density(1.0);
    let grid = response_grid(&unit, constants, delta_p_grid, delta_c_grid, opts)?;
    densities
        .iter()
        .map(|&density| {
            let table = grid.tabulate(&params.with_density(density), constants, opts.window_loss_enabled)?;
            let points = (0..delta_c_grid.len())
                .map(|ic| {
                    let (x, eta) = table.eta_series(ic);
                    let peak = if x.len() >= 3 { peak_metrics(&x, &eta)? } else { None };
                    Ok(ScanPoint { delta_c: delta_c_grid[ic], peak })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut best: Option<(f64, f64)> = None;
            for p in &points {
                if let Some(m) = p.peak {
                    if best.is_none_or(|(_, e)| m.eta_max > e) {
                        best = Some((p.delta_c, m.eta_max));
                    }
                }
            }
            Ok(DensityScan {
                density,
                points,
                best_delta_c: best.map(|b| b.0),
                best_eta: best.map_or(0.0, |b| b.1),
            })
        })
        .collect()
}

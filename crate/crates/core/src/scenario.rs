//! Scenario documents: the TOML schema read by the command-line tool.
//!
//! Units at this boundary follow the laboratory convention: frequencies in
//! MHz (linear), lengths in cm, angles in degrees, density in m⁻³ and
//! temperature in °C. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::doppler::VelocityScheme;
use crate::error::{Error, Result};
use crate::lineshape::{Truncation, DEFAULT_TRUNCATION_CAP, DEFAULT_TRUNCATION_TOL};
use crate::model::mhz_to_rad_s;

/// The scenario shipped with the repository (`scenarios/canonical.toml`).
pub const CANONICAL_TOML: &str = include_str!("../../../scenarios/canonical.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub atom: AtomSection,
    pub fields: FieldsSection,
    pub medium: MediumSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    pub gamma_a_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_ab_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_cb_mhz: Option<f64>,
    pub hyperfine_split_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_amu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole_moment_cm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSection {
    pub rabi_p_mhz: f64,
    pub rabi_c1_mhz: f64,
    pub rabi_c2_mhz: f64,
    #[serde(default)]
    pub delta_p_mhz: f64,
    #[serde(default)]
    pub delta_c_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    pub density_m3: f64,
    pub length_cm: f64,
    pub theta_deg: f64,
    pub temperature_c: f64,
    #[serde(default = "default_window_loss")]
    pub window_loss: f64,
}

fn default_window_loss() -> f64 {
    0.04
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    /// Fixed harmonic truncation; absent means automatic truncation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default = "default_truncation_tol")]
    pub truncation_tol: f64,
    #[serde(default = "default_truncation_cap")]
    pub truncation_cap: usize,
    #[serde(default = "default_true")]
    pub doppler: bool,
    #[serde(default)]
    pub velocity_scheme: VelocityScheme,
    /// Node count for the fixed-grid velocity schemes.
    #[serde(default = "default_velocity_nodes")]
    pub velocity_nodes: usize,
    /// Relative tolerance of the adaptive velocity quadrature.
    #[serde(default = "default_doppler_tol")]
    pub doppler_tol: f64,
    #[serde(default = "default_true")]
    pub window_loss_enabled: bool,
}

fn default_truncation_tol() -> f64 {
    DEFAULT_TRUNCATION_TOL
}
fn default_truncation_cap() -> usize {
    DEFAULT_TRUNCATION_CAP
}
fn default_true() -> bool {
    true
}
fn default_velocity_nodes() -> usize {
    64
}
fn default_doppler_tol() -> f64 {
    1.0e-4
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            n_max: None,
            truncation_tol: default_truncation_tol(),
            truncation_cap: default_truncation_cap(),
            doppler: true,
            velocity_scheme: VelocityScheme::default(),
            velocity_nodes: default_velocity_nodes(),
            doppler_tol: default_doppler_tol(),
            window_loss_enabled: true,
        }
    }
}

impl NumericsSection {
    pub fn truncation(&self) -> Result<Truncation> {
        match self.n_max {
            Some(0) => Err(Error::config("numerics.n_max must be at least 1")),
            Some(n) => Ok(Truncation::Fixed(n)),
            None => {
                if !(self.truncation_tol > 0.0) {
                    return Err(Error::config("numerics.truncation_tol must be positive"));
                }
                Ok(Truncation::Auto { tol: self.truncation_tol, cap: self.truncation_cap })
            }
        }
    }
}

/// Detuning grids. A probe grid is either an explicit list or a
/// start/stop/step range; an explicit list wins when both are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_p_mhz: Option<Vec<f64>>,
    #[serde(default = "default_dp_start")]
    pub delta_p_start_mhz: f64,
    #[serde(default = "default_dp_stop")]
    pub delta_p_stop_mhz: f64,
    #[serde(default = "default_dp_step")]
    pub delta_p_step_mhz: f64,
    #[serde(default = "default_dc_list")]
    pub delta_c_mhz: Vec<f64>,
    #[serde(default = "default_scan_start")]
    pub scan_delta_c_start_mhz: f64,
    #[serde(default = "default_scan_stop")]
    pub scan_delta_c_stop_mhz: f64,
    #[serde(default = "default_scan_step")]
    pub scan_delta_c_step_mhz: f64,
    #[serde(default = "default_scan_densities")]
    pub scan_densities_m3: Vec<f64>,
}

fn default_dp_start() -> f64 {
    -40.0
}
fn default_dp_stop() -> f64 {
    40.0
}
fn default_dp_step() -> f64 {
    0.1
}
fn default_dc_list() -> Vec<f64> {
    vec![-21.0, -16.0, -11.0, -6.0, 0.0, 6.0, 11.0]
}
fn default_scan_start() -> f64 {
    -30.0
}
fn default_scan_stop() -> f64 {
    15.0
}
fn default_scan_step() -> f64 {
    1.0
}
fn default_scan_densities() -> Vec<f64> {
    vec![3.162_277_660_168_379_5e14, 1.0e15, 3.162_277_660_168_379_5e15]
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            delta_p_mhz: None,
            delta_p_start_mhz: default_dp_start(),
            delta_p_stop_mhz: default_dp_stop(),
            delta_p_step_mhz: default_dp_step(),
            delta_c_mhz: default_dc_list(),
            scan_delta_c_start_mhz: default_scan_start(),
            scan_delta_c_stop_mhz: default_scan_stop(),
            scan_delta_c_step_mhz: default_scan_step(),
            scan_densities_m3: default_scan_densities(),
        }
    }
}

/// Inclusive range `start, start + step, …, stop` built by index, not by
/// accumulation, so the endpoints are exact.
pub fn inclusive_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(Error::config("grid bounds must be finite"));
    }
    if stop < start {
        return Ok(Vec::new());
    }
    if !(step > 0.0) {
        return Err(Error::config(format!("grid step must be positive, got {step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

impl SweepSection {
    /// Probe detuning grid in MHz.
    pub fn delta_p_grid_mhz(&self) -> Result<Vec<f64>> {
        let grid = match &self.delta_p_mhz {
            Some(list) => list.clone(),
            None => inclusive_range(self.delta_p_start_mhz, self.delta_p_stop_mhz, self.delta_p_step_mhz)?,
        };
        check_grid("sweep.delta_p", &grid)?;
        Ok(grid)
    }

    /// Probe detuning grid in rad/s.
    pub fn delta_p_grid(&self) -> Result<Vec<f64>> {
        Ok(self.delta_p_grid_mhz()?.into_iter().map(mhz_to_rad_s).collect())
    }

    pub fn delta_c_list(&self) -> Result<Vec<f64>> {
        if self.delta_c_mhz.is_empty() {
            return Err(Error::config("sweep.delta_c_mhz must not be empty"));
        }
        Ok(self.delta_c_mhz.iter().copied().map(mhz_to_rad_s).collect())
    }

    pub fn scan_delta_c_grid(&self) -> Result<Vec<f64>> {
        let grid = inclusive_range(
            self.scan_delta_c_start_mhz,
            self.scan_delta_c_stop_mhz,
            self.scan_delta_c_step_mhz,
        )?;
        if grid.is_empty() {
            return Err(Error::config("sweep.scan_delta_c range is empty"));
        }
        Ok(grid.into_iter().map(mhz_to_rad_s).collect())
    }
}

/// A sweep grid must have at least two points and increase strictly.
pub fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::config(format!("{name} grid needs at least 2 points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.message().to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn canonical() -> Self {
        Self::from_toml_str(CANONICAL_TOML).expect("canonical scenario parses")
    }
}

//! Physical constants, simulation parameters and the frequencies derived
//! from them.
//!
//! Every frequency handled inside the crate is an angular frequency in rad/s.
//! Configuration files quote linear frequencies in MHz; the conversion
//! `rad/s = 2π · 10⁶ · MHz` happens once, at the boundary, in
//! [`build_params`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// Ratio Ω_p / max(Ω_c1, Ω_c2) above which the weak-probe linearization is
/// flagged.
pub const LINEARIZATION_WARN_RATIO: f64 = 0.3;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of ¹³³Cs in atomic mass units.
pub const CESIUM_MASS_AMU: f64 = 132.905_451_933;

/// Converts a linear frequency in MHz to angular frequency in rad/s.
#[inline]
pub fn mhz_to_rad_s(mhz: f64) -> f64 {
    2.0 * PI * 1.0e6 * mhz
}

/// Converts an angular frequency in rad/s to linear frequency in MHz.
#[inline]
pub fn rad_s_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1.0e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// m/s
    pub speed_of_light: f64,
    /// J·s
    pub reduced_planck: f64,
    /// F/m
    pub vacuum_permittivity: f64,
    /// J/K
    pub boltzmann: f64,
    /// kg
    pub atom_mass: f64,
    /// Effective probe-transition dipole moment, C·m.
    pub dipole_moment: f64,
    /// Probe transition wavelength, m. Fixes ω_ab = 2πc/λ.
    pub wavelength: f64,
}

impl Default for PhysicalConstants {
    /// CODATA values with cesium D1 defaults for the atom.
    fn default() -> Self {
        Self {
            speed_of_light: 299_792_458.0,
            reduced_planck: 1.054_571_817e-34,
            vacuum_permittivity: 8.854_187_812_8e-12,
            boltzmann: 1.380_649e-23,
            atom_mass: CESIUM_MASS_AMU * ATOMIC_MASS_UNIT,
            dipole_moment: 2.7e-29,
            wavelength: 894.6e-9,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("speed_of_light", self.speed_of_light),
            ("reduced_planck", self.reduced_planck),
            ("vacuum_permittivity", self.vacuum_permittivity),
            ("boltzmann", self.boltzmann),
            ("atom_mass", self.atom_mass),
            ("dipole_moment", self.dipole_moment),
            ("wavelength", self.wavelength),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// Bare probe transition frequency ω_ab = 2πc/λ in rad/s.
    pub fn omega_ab(&self) -> f64 {
        2.0 * PI * self.speed_of_light / self.wavelength
    }

    /// Most probable thermal speed √(2 k_B T / m) in m/s.
    pub fn most_probable_speed(&self, temperature: f64) -> f64 {
        (2.0 * self.boltzmann * temperature / self.atom_mass).sqrt()
    }
}

/// All physical inputs of one simulation point, in internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Upper-state decay Γ_a, rad/s.
    pub gamma_a: f64,
    /// Optical coherence decay γ_ab, rad/s.
    pub gamma_ab: f64,
    /// Ground coherence decay γ_cb, rad/s.
    pub gamma_cb: f64,
    /// Probe Rabi frequency Ω_p, rad/s.
    pub rabi_p: f64,
    /// Forward coupling Rabi frequency Ω_c1, rad/s.
    pub rabi_c1: f64,
    /// Backward coupling Rabi frequency Ω_c2, rad/s.
    pub rabi_c2: f64,
    /// Probe detuning Δ_p = ω_p − ω_ab, rad/s.
    pub delta_p: f64,
    /// Coupling detuning Δ_c = ω_c − ω_ac, rad/s.
    pub delta_c: f64,
    /// Ground-state splitting Δω = ω_ac − ω_ab, rad/s.
    pub hyperfine_split: f64,
    /// Atomic number density, m⁻³.
    pub density: f64,
    /// Cell length, m.
    pub length: f64,
    /// Probe–coupling angle, rad.
    pub theta: f64,
    /// Vapor temperature, K.
    pub temperature: f64,
    /// Single-pass window loss fraction.
    pub window_loss: f64,
}

impl SystemParams {
    /// Checks every construction invariant.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("gamma_a", self.gamma_a),
            ("gamma_ab", self.gamma_ab),
            ("gamma_cb", self.gamma_cb),
            ("length", self.length),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {value}")));
            }
        }
        for (name, value) in [
            ("rabi_p", self.rabi_p),
            ("rabi_c1", self.rabi_c1),
            ("rabi_c2", self.rabi_c2),
            ("density", self.density),
            ("temperature", self.temperature),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(format!("{name} must be non-negative, got {value}")));
            }
        }
        for (name, value) in [
            ("delta_p", self.delta_p),
            ("delta_c", self.delta_c),
            ("hyperfine_split", self.hyperfine_split),
        ] {
            if !value.is_finite() {
                return Err(Error::config(format!("{name} must be finite, got {value}")));
            }
        }
        if !(0.0..PI / 2.0).contains(&self.theta) {
            return Err(Error::config(format!(
                "theta must lie in [0, π/2), got {} rad",
                self.theta
            )));
        }
        if !(0.0..1.0).contains(&self.window_loss) {
            return Err(Error::config(format!(
                "window_loss must lie in [0, 1), got {}",
                self.window_loss
            )));
        }
        Ok(())
    }

    /// Human-readable notes about assumptions the inputs strain. Not errors.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let strongest = self.rabi_c1.max(self.rabi_c2);
        if strongest > 0.0 && self.rabi_p / strongest > LINEARIZATION_WARN_RATIO {
            out.push(format!(
                "probe Rabi frequency is {:.2} of the strongest coupling field; \
                 the weak-probe linearization assumes a much smaller ratio",
                self.rabi_p / strongest
            ));
        }
        out
    }

    /// Copy with new probe and coupling detunings (rad/s).
    pub fn with_detunings(&self, delta_p: f64, delta_c: f64) -> Self {
        Self { delta_p, delta_c, ..*self }
    }

    pub fn with_density(&self, density: f64) -> Self {
        Self { density, ..*self }
    }

    /// Copy with the two coupling beams exchanged (mirror image along z).
    pub fn mirrored(&self) -> Self {
        Self { rabi_c1: self.rabi_c2, rabi_c2: self.rabi_c1, ..*self }
    }
}

/// Absolute frequencies and wavevectors at one detuning point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedFrequencies {
    /// rad/s
    pub omega_p: f64,
    /// rad/s
    pub omega_c: f64,
    /// rad/m
    pub k_p: f64,
    /// rad/m
    pub k_c: f64,
    /// δ = Δ_p − Δ_c, rad/s
    pub two_photon_detuning: f64,
    /// ω_c − ω_p kept exact (not formed by cancelling two optical frequencies).
    pub coupling_minus_probe: f64,
    /// m/s
    pub speed_of_light: f64,
}

/// Absolute probe/coupling frequencies and vacuum wavevectors.
pub fn derive_frequencies(params: &SystemParams, constants: &PhysicalConstants) -> DerivedFrequencies {
    let c = constants.speed_of_light;
    let omega_ab = constants.omega_ab();
    let omega_p = omega_ab + params.delta_p;
    let omega_c = omega_ab + params.hyperfine_split + params.delta_c;
    DerivedFrequencies {
        omega_p,
        omega_c,
        k_p: omega_p / c,
        k_c: omega_c / c,
        two_photon_detuning: params.delta_p - params.delta_c,
        coupling_minus_probe: params.hyperfine_split + params.delta_c - params.delta_p,
        speed_of_light: c,
    }
}

/// Builds validated [`SystemParams`] from a scenario document.
pub fn build_params(config: &ScenarioConfig) -> Result<SystemParams> {
    let atom = &config.atom;
    if !(atom.gamma_a_mhz.is_finite() && atom.gamma_a_mhz > 0.0) {
        return Err(Error::config(format!(
            "atom.gamma_a_mhz must be positive, got {}",
            atom.gamma_a_mhz
        )));
    }
    let gamma_ab_mhz = atom.gamma_ab_mhz.unwrap_or(0.5 * atom.gamma_a_mhz);
    let gamma_cb_mhz = atom.gamma_cb_mhz.unwrap_or(0.03 * atom.gamma_a_mhz);
    let fields = &config.fields;
    let medium = &config.medium;
    if medium.density_m3 < 0.0 {
        return Err(Error::config(format!(
            "medium.density_m3 must be non-negative, got {}",
            medium.density_m3
        )));
    }
    let params = SystemParams {
        gamma_a: mhz_to_rad_s(atom.gamma_a_mhz),
        gamma_ab: mhz_to_rad_s(gamma_ab_mhz),
        gamma_cb: mhz_to_rad_s(gamma_cb_mhz),
        rabi_p: mhz_to_rad_s(fields.rabi_p_mhz),
        rabi_c1: mhz_to_rad_s(fields.rabi_c1_mhz),
        rabi_c2: mhz_to_rad_s(fields.rabi_c2_mhz),
        delta_p: mhz_to_rad_s(fields.delta_p_mhz),
        delta_c: mhz_to_rad_s(fields.delta_c_mhz),
        hyperfine_split: mhz_to_rad_s(atom.hyperfine_split_mhz),
        density: medium.density_m3,
        length: medium.length_cm * 1.0e-2,
        theta: medium.theta_deg.to_radians(),
        temperature: medium.temperature_c + 273.15,
        window_loss: medium.window_loss,
    };
    params.validate()?;
    Ok(params)
}

/// Builds the constants block of a scenario document.
pub fn build_constants(config: &ScenarioConfig) -> Result<PhysicalConstants> {
    let defaults = PhysicalConstants::default();
    let atom = &config.atom;
    let constants = PhysicalConstants {
        atom_mass: atom.mass_amu.map_or(defaults.atom_mass, |m| m * ATOMIC_MASS_UNIT),
        dipole_moment: atom.dipole_moment_cm.unwrap_or(defaults.dipole_moment),
        wavelength: atom.wavelength_nm.map_or(defaults.wavelength, |nm| nm * 1.0e-9),
        ..defaults
    };
    constants.validate()?;
    Ok(constants)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> ScenarioConfig {
        ScenarioConfig::canonical()
    }

    #[test]
    fn gamma_a_is_converted_to_angular_units() {
        let p = build_params(&canonical()).unwrap();
        assert!((p.gamma_a - 2.0 * PI * 4.6e6).abs() < 1e-14 * p.gamma_a);
    }

    #[test]
    fn omitted_decay_rates_default_to_fractions_of_gamma_a() {
        let mut cfg = canonical();
        cfg.atom.gamma_ab_mhz = None;
        cfg.atom.gamma_cb_mhz = None;
        let p = build_params(&cfg).unwrap();
        assert!((p.gamma_ab - 0.5 * p.gamma_a).abs() < 1e-6);
        assert!((p.gamma_cb - 0.03 * p.gamma_a).abs() < 1e-6);
    }

    #[test]
    fn negative_density_is_rejected() {
        let mut cfg = canonical();
        cfg.medium.density_m3 = -1.0;
        assert!(matches!(build_params(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn loss_of_one_is_rejected() {
        let mut cfg = canonical();
        cfg.medium.window_loss = 1.0;
        assert!(matches!(build_params(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn non_positive_rate_is_rejected() {
        let mut cfg = canonical();
        cfg.atom.gamma_cb_mhz = Some(0.0);
        assert!(build_params(&cfg).is_err());
        let mut cfg = canonical();
        cfg.atom.gamma_a_mhz = -4.6;
        assert!(build_params(&cfg).is_err());
    }

    #[test]
    fn strong_probe_is_flagged() {
        let mut p = build_params(&canonical()).unwrap();
        assert!(p.warnings().is_empty());
        p.rabi_p = 0.5 * p.rabi_c1;
        assert_eq!(p.warnings().len(), 1);
    }

    #[test]
    fn splitting_separates_coupling_from_probe() {
        let mut p = build_params(&canonical()).unwrap();
        p.delta_p = 0.0;
        p.delta_c = 0.0;
        let f = derive_frequencies(&p, &PhysicalConstants::default());
        assert_eq!(f.coupling_minus_probe, 2.0 * PI * 9.2e9);
        let rel = ((f.omega_c - f.omega_p) - 2.0 * PI * 9.2e9).abs() / (2.0 * PI * 9.2e9);
        assert!(rel < 1e-5, "{rel}");
    }

    #[test]
    fn equal_detunings_give_two_photon_resonance() {
        let p = build_params(&canonical())
            .unwrap()
            .with_detunings(mhz_to_rad_s(-11.0), mhz_to_rad_s(-11.0));
        let f = derive_frequencies(&p, &PhysicalConstants::default());
        assert_eq!(f.two_photon_detuning, 0.0);
    }

    #[test]
    fn probe_wavevector_at_line_center() {
        let p = build_params(&canonical()).unwrap().with_detunings(0.0, 0.0);
        let f = derive_frequencies(&p, &PhysicalConstants::default());
        // 2π / 894.6 nm
        assert!((f.k_p - 7.023_5e6).abs() < 1.0e2, "{}", f.k_p);
    }

    #[test]
    fn coupling_exceeds_probe_in_operating_regime() {
        let p = build_params(&canonical())
            .unwrap()
            .with_detunings(mhz_to_rad_s(-40.0), mhz_to_rad_s(11.0));
        let f = derive_frequencies(&p, &PhysicalConstants::default());
        assert!(f.omega_c > f.omega_p);
    }

    #[test]
    fn default_constants_are_positive() {
        PhysicalConstants::default().validate().unwrap();
        let mut c = PhysicalConstants::default();
        c.dipole_moment = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn cesium_thermal_speed_at_43c() {
        let u = PhysicalConstants::default().most_probable_speed(316.15);
        assert!((u - 198.7).abs() < 0.5, "{u}");
    }
}

//! Propagation of the probe and the generated backward field.
//!
//! With slowly varying envelopes `E_F = u(z)e^{iΔk z/2}` and
//! `E_G = w(z)e^{−iΔk z/2}` the two counter-propagating fields obey
//!
//! ```text
//! d/dz [u, w]ᵀ = K·[u, w]ᵀ,   K = [[a, iκ_r], [−iκ_e, −a]],
//! a = i(β − Δk/2),  β = i·k_p·Im χ_0 / 2,  κ = k_p·χ_{±1} / 2
//! ```
//!
//! The real index is already part of `Δk`, so β carries only the absorption.
//! The boundary conditions are `u(0) = 1` and `w(L) = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DerivedFrequencies, SystemParams};

/// `|M22|` below this makes the boundary-value problem ill-posed.
pub const M22_FLOOR: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `n = 1 + Re χ_0 / 2`.
pub fn refractive_index(chi0: Complex64) -> f64 {
    1.0 + 0.5 * chi0.re
}

/// Probe phase shift `(k_p L/2)·Re χ_0`, radians.
pub fn probe_phase_shift(chi0: Complex64, k_p: f64, length: f64) -> f64 {
    0.5 * k_p * length * chi0.re
}

/// `Δk = [2(ω_p cos θ − ω_c) + Re χ_0·ω_p cos θ]/c` in rad/m.
pub fn phase_mismatch(freqs: &DerivedFrequencies, theta: f64, chi0: Complex64) -> f64 {
    let c = freqs.speed_of_light;
    // ω_p cos θ − ω_c = −(ω_c − ω_p) − ω_p·2sin²(θ/2), without cancellation
    let s = (0.5 * theta).sin();
    let vacuum = -2.0 * (freqs.coupling_minus_probe + freqs.omega_p * 2.0 * s * s) / c;
    vacuum + chi0.re * freqs.omega_p * theta.cos() / c
}

/// Inputs of the two-mode boundary-value problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledModeInput {
    pub chi0: Complex64,
    /// Grating harmonic scattering the probe into the backward mode.
    pub chi_emission: Complex64,
    /// Grating harmonic scattering the backward mode into the probe.
    pub chi_return: Complex64,
    /// rad/m
    pub delta_k: f64,
    /// rad/m
    pub k_p: f64,
    /// m
    pub length: f64,
    /// Power loss per window pass, applied to both passes of the output.
    pub window_loss: f64,
}

/// Sampled field envelopes along the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfiles {
    pub z: Vec<f64>,
    pub forward: Vec<Complex64>,
    pub backward: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    /// rad/m
    pub delta_k: f64,
    /// Backward amplitude at the entrance, `w(0)`.
    pub reflection_amplitude: Complex64,
    /// `|w(0)|²·(1 − ℓ)²`.
    pub eta: f64,
    /// `|u(L)|²·(1 − ℓ)²`.
    pub transmission: f64,
    /// Transfer matrix `M = exp(K·L)`; entries may be non-finite for very
    /// thick media, where the reflection is taken from the tanh form.
    pub transfer_matrix: [[Complex64; 2]; 2],
    pub field_profiles: Option<FieldProfiles>,
}

struct Generator {
    a: Complex64,
    kappa_r: Complex64,
    kappa_e: Complex64,
    q: Complex64,
}

impl Generator {
    fn new(input: &CoupledModeInput) -> Self {
        let k = input.k_p;
        let beta = I * (0.5 * k * input.chi0.im);
        let a = I * (beta - 0.5 * input.delta_k);
        let kappa_e = 0.5 * k * input.chi_emission;
        let kappa_r = 0.5 * k * input.chi_return;
        let q = (a * a + kappa_r * kappa_e).sqrt();
        Self { a, kappa_r, kappa_e, q }
    }

    /// `cosh(qz)` and `sinh(qz)/q`.
    fn cosh_sinc(&self, z: f64) -> (Complex64, Complex64) {
        let x = self.q * z;
        let c = x.cosh();
        let s = if x.norm() < 1e-4 {
            let x2 = x * x;
            z * (ONE + x2 / 6.0 + x2 * x2 / 120.0)
        } else {
            x.sinh() / self.q
        };
        (c, s)
    }

    fn matrix(&self, z: f64) -> [[Complex64; 2]; 2] {
        let (c, s) = self.cosh_sinc(z);
        [[c + s * self.a, s * I * self.kappa_r], [-s * I * self.kappa_e, c - s * self.a]]
    }

    /// `sinh(qz)/(q·cosh(qz))`, stable for large `|qz|`.
    fn tanh_over_q(&self, z: f64) -> Complex64 {
        let x = self.q * z;
        if x.norm() < 1e-4 {
            let x2 = x * x;
            return z * (ONE - x2 / 3.0 + 2.0 * x2 * x2 / 15.0);
        }
        stable_tanh(x) / self.q
    }
}

/// tanh evaluated through `e^{−2|Re z|}` so that it never overflows.
fn stable_tanh(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return -stable_tanh(-z);
    }
    let e = (-2.0 * z).exp();
    (ONE - e) / (ONE + e)
}

/// Solves the coupled-mode boundary-value problem.
pub fn coupled_mode_transfer(input: &CoupledModeInput) -> Result<PropagationResult> {
    coupled_mode_transfer_with_profiles(input, 0)
}

/// As [`coupled_mode_transfer`], also sampling the envelopes at `samples`
/// evenly spaced points (none when zero).
pub fn coupled_mode_transfer_with_profiles(input: &CoupledModeInput, samples: usize) -> Result<PropagationResult> {
    if !(input.length > 0.0) {
        return Err(Error::invalid(format!("cell length must be positive, got {}", input.length)));
    }
    let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
    if ![input.chi0, input.chi_emission, input.chi_return].into_iter().all(finite)
        || !input.delta_k.is_finite()
        || !input.k_p.is_finite()
    {
        return Err(Error::invalid("non-finite coupled-mode input"));
    }
    if !(0.0..1.0).contains(&input.window_loss) {
        return Err(Error::invalid(format!("window loss must be in [0, 1), got {}", input.window_loss)));
    }

    let g = Generator::new(input);
    let l = input.length;
    let m = g.matrix(l);
    let t = g.tanh_over_q(l);
    // M22/cosh(qL) = 1 − a·tanh(qL)/q
    let reduced = ONE - g.a * t;
    let m22 = m[1][1];
    let m22_norm = if finite(m22) { m22.norm() } else { f64::INFINITY };
    if m22_norm < M22_FLOOR || reduced == ZERO {
        return Err(Error::numerical(format!("|M22| = {m22_norm:.3e}: no bounded reflection")));
    }
    let w0 = I * g.kappa_e * t / reduced;
    let passes = (1.0 - input.window_loss).powi(2);
    let transmission = if finite(m22) && m22 != ZERO { passes / m22.norm_sqr() } else { 0.0 };
    let eta = w0.norm_sqr() * passes;
    if !eta.is_finite() || !finite(w0) {
        return Err(Error::numerical("reflection amplitude is not finite"));
    }

    let field_profiles = (samples > 0).then(|| {
        let z: Vec<f64> =
            (0..samples).map(|j| if samples == 1 { 0.0 } else { l * j as f64 / (samples - 1) as f64 }).collect();
        let mut forward = Vec::with_capacity(samples);
        let mut backward = Vec::with_capacity(samples);
        for &zj in &z {
            let mz = g.matrix(zj);
            let u = mz[0][0] + mz[0][1] * w0;
            let w = mz[1][0] + mz[1][1] * w0;
            forward.push(u * Complex64::from_polar(1.0, 0.5 * input.delta_k * zj));
            backward.push(w * Complex64::from_polar(1.0, -0.5 * input.delta_k * zj));
        }
        FieldProfiles { z, forward, backward }
    });

    Ok(PropagationResult {
        delta_k: input.delta_k,
        reflection_amplitude: w0,
        eta,
        transmission,
        transfer_matrix: m,
        field_profiles,
    })
}

/// Reflection at one detuning point from the medium's grating harmonics.
/// `chi_return` is the harmonic that scatters the backward field into the
/// probe; for equal coupling beams it equals `χ_{+1}`.
pub fn reflection_point(
    params: &SystemParams,
    freqs: &DerivedFrequencies,
    chi0: Complex64,
    chi_emission: Complex64,
    chi_return: Complex64,
    window_loss_enabled: bool,
) -> Result<PropagationResult> {
    let delta_k = phase_mismatch(freqs, params.theta, chi0);
    coupled_mode_transfer(&CoupledModeInput {
        chi0,
        chi_emission,
        chi_return,
        delta_k,
        k_p: freqs.k_p,
        length: params.length,
        window_loss: if window_loss_enabled { params.window_loss } else { 0.0 },
    })
}

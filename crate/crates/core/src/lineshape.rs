//! Steady-state harmonic response of a single velocity class.
//!
//! A standing-wave coupling field modulates the atomic response with period
//! π/k_c. The optical coherence is expanded as
//! `ρ_ab = Σ_n A_n exp(i(k_p − 2n·k_c)z)` and the ground coherence as
//! `ρ_cb = Σ_n B_n exp(i(k_p − (2n+1)·k_c)z)`; to first order in the probe
//! the amplitudes obey
//!
//! ```text
//! (γ_ab − iΔab_n)·A_n = (i/2)Ω_p·[n=0] + (i/2)Ω_c1·B_n + (i/2)Ω_c2·B_{n−1}
//! (γ_cb − iδcb_n)·B_n = (i/2)Ω_c1·A_n + (i/2)Ω_c2·A_{n+1}
//! ```
//!
//! with Doppler-shifted detunings `Δab_n = Δ_p − (k_p − 2n·k_c)v` and
//! `δcb_n = δ − (k_p − (2n+1)·k_c)v`. Harmonics beyond `|n| ≤ n_max` are
//! dropped and the rest is solved as one tridiagonal system; the `B_n` are
//! eliminated first (their diagonal never vanishes for γ_cb > 0), leaving a
//! tridiagonal system in the `A_n` alone.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::banded::Tridiagonal;
use crate::error::{Error, Result};
use crate::model::{DerivedFrequencies, PhysicalConstants, SystemParams};

pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;
/// Slow velocity classes near two-photon resonance need several hundred
/// harmonics.
pub const DEFAULT_TRUNCATION_CAP: usize = 4096;
/// First truncation order tried by [`auto_truncate`].
pub const AUTO_TRUNCATION_START: usize = 4;
/// Largest relative residual accepted from the banded solve.
pub const RESIDUAL_LIMIT: f64 = 1e-12;
/// Both roots of the closed-form recurrence this close to the unit circle
/// are treated as indistinguishable.
const BRANCH_GUARD: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// How many spatial harmonics to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Fixed(usize),
    /// Doubling search, see [`auto_truncate`].
    Auto { tol: f64, cap: usize },
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Auto { tol: DEFAULT_TRUNCATION_TOL, cap: DEFAULT_TRUNCATION_CAP }
    }
}

/// Coherence harmonics `A_n`, `B_n` for `n = −n_max..=n_max` at one velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSolution {
    pub n_max: usize,
    /// Optical coherence harmonics, index `n + n_max`.
    pub a_coeffs: Vec<Complex64>,
    /// Ground coherence harmonics, index `n + n_max`; `B_{n_max}` lies outside
    /// the truncated system and is zero for numerical solutions.
    pub b_coeffs: Vec<Complex64>,
    /// m/s
    pub velocity: f64,
    pub residual_norm: f64,
}

impl HarmonicSolution {
    /// `A_n`, zero outside the truncation window.
    pub fn a(&self, n: i64) -> Complex64 {
        harmonic(&self.a_coeffs, self.n_max, n)
    }

    /// `B_n`, zero outside the truncation window.
    pub fn b(&self, n: i64) -> Complex64 {
        harmonic(&self.b_coeffs, self.n_max, n)
    }

    /// Largest `|A_n|` at the truncation edges relative to the largest `|A_n|`.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.a_coeffs.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        let edge = self.a(-(self.n_max as i64)).norm_sqr().max(self.a(self.n_max as i64).norm_sqr());
        if peak > 0.0 {
            (edge / peak).sqrt()
        } else {
            0.0
        }
    }
}

fn harmonic(coeffs: &[Complex64], n_max: usize, n: i64) -> Complex64 {
    let idx = n + n_max as i64;
    if idx < 0 || idx as usize >= coeffs.len() {
        ZERO
    } else {
        coeffs[idx as usize]
    }
}

/// Dimensionless susceptibility harmonics `χ_n`, `n = −n_max..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityHarmonics {
    pub n_max: usize,
    pub chi: Vec<Complex64>,
}

impl SusceptibilityHarmonics {
    pub fn zeros(n_max: usize) -> Self {
        Self { n_max, chi: vec![ZERO; 2 * n_max + 1] }
    }

    /// `χ_n`, zero outside the stored range.
    pub fn get(&self, n: i64) -> Complex64 {
        harmonic(&self.chi, self.n_max, n)
    }

    pub fn chi0(&self) -> Complex64 {
        self.get(0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { n_max: self.n_max, chi: self.chi.iter().map(|c| c * factor).collect() }
    }

    /// `self += weight · other`, widening the stored range when needed.
    pub fn accumulate(&mut self, other: &SusceptibilityHarmonics, weight: f64) {
        if other.n_max > self.n_max {
            let mut wider = vec![ZERO; 2 * other.n_max + 1];
            let shift = other.n_max - self.n_max;
            wider[shift..shift + self.chi.len()].copy_from_slice(&self.chi);
            self.chi = wider;
            self.n_max = other.n_max;
        }
        let shift = self.n_max - other.n_max;
        for (dst, src) in self.chi[shift..].iter_mut().zip(&other.chi) {
            *dst += src * weight;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.chi.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Per-harmonic Doppler shifts: `(k_p − 2n·k_c)` and `(k_p − (2n+1)·k_c)` in
/// rad/m, formed from the exact coupling–probe offset to avoid cancelling two
/// optical wavevectors.
fn harmonic_wavevectors(freqs: &DerivedFrequencies, n: i64) -> (f64, f64) {
    let dk = freqs.coupling_minus_probe / freqs.speed_of_light; // k_c − k_p
    let n = n as f64;
    let optical = freqs.k_p * (1.0 - 2.0 * n) - 2.0 * n * dk;
    let ground = -2.0 * n * freqs.k_p - (2.0 * n + 1.0) * dk;
    (optical, ground)
}

/// Assembles the truncated recurrence with unknowns interleaved as
/// `A_{−N}, B_{−N}, …, B_{N−1}, A_N`. `B_N` is dropped along with
/// `B_{−N−1}` so that the window is mirror-symmetric.
fn assemble(params: &SystemParams, freqs: &DerivedFrequencies, v: f64, n_max: usize) -> (Tridiagonal, Vec<Complex64>) {
    let size = 4 * n_max + 1;
    let mut m = Tridiagonal::zeros(size);
    let mut rhs = vec![ZERO; size];
    let half_c1 = -0.5 * I * params.rabi_c1;
    let half_c2 = -0.5 * I * params.rabi_c2;
    for i in 0..=2 * n_max {
        let n = i as i64 - n_max as i64;
        let (k_opt, k_gnd) = harmonic_wavevectors(freqs, n);
        let ra = 2 * i;
        m.diag[ra] = Complex64::new(params.gamma_ab, -(params.delta_p - k_opt * v));
        if n == 0 {
            rhs[ra] = 0.5 * I * params.rabi_p;
        }
        if ra + 1 == size {
            break;
        }
        let rb = ra + 1;
        m.diag[rb] = Complex64::new(params.gamma_cb, -(freqs.two_photon_detuning - k_gnd * v));
        // A_n ↔ B_n through the forward beam, B_n ↔ A_{n+1} through the backward one
        m.sup[ra] = half_c1;
        m.sub[ra] = half_c1;
        m.sup[rb] = half_c2;
        m.sub[rb] = half_c2;
    }
    (m, rhs)
}

/// Solves the truncated harmonic recurrence at velocity `v` (m/s).
pub fn solve_harmonics(
    params: &SystemParams,
    freqs: &DerivedFrequencies,
    v: f64,
    n_max: usize,
) -> Result<HarmonicSolution> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    if !v.is_finite() {
        return Err(Error::invalid(format!("velocity must be finite, got {v}")));
    }
    if let Some(sol) = solve_eliminated(params, freqs, v, n_max)? {
        return Ok(sol);
    }
    // fallback: pivoted solve of the full interleaved system with refinement
    let (m, rhs) = assemble(params, freqs, v, n_max);
    let (x, residual) = m.solve_refined(&rhs)?;
    if !(residual <= RESIDUAL_LIMIT) {
        return Err(Error::numerical(format!(
            "harmonic solve residual {residual:.3e} exceeds {RESIDUAL_LIMIT:.0e} at v = {v} m/s"
        )));
    }
    let a_coeffs: Vec<Complex64> = x.iter().step_by(2).copied().collect();
    let mut b_coeffs: Vec<Complex64> = x.iter().skip(1).step_by(2).copied().collect();
    b_coeffs.push(ZERO);
    Ok(HarmonicSolution { n_max, a_coeffs, b_coeffs, velocity: v, residual_norm: residual })
}

/// Eliminates the `B_n` and solves the remaining tridiagonal system in the
/// `A_n` with partial pivoting. `None` when the residual of the full
/// recurrence exceeds [`RESIDUAL_LIMIT`].
fn solve_eliminated(
    params: &SystemParams,
    freqs: &DerivedFrequencies,
    v: f64,
    n_max: usize,
) -> Result<Option<HarmonicSolution>> {
    let count = 2 * n_max + 1;
    let h1 = 0.5 * I * params.rabi_c1;
    let h2 = 0.5 * I * params.rabi_c2;
    let (h11, h12, h22) = (h1 * h1, h1 * h2, h2 * h2);
    let mut alpha = Vec::with_capacity(count);
    let mut ground = Vec::with_capacity(count - 1);
    let mut inv_ground = Vec::with_capacity(count - 1);
    for i in 0..count {
        let n = i as i64 - n_max as i64;
        let (k_opt, k_gnd) = harmonic_wavevectors(freqs, n);
        alpha.push(Complex64::new(params.gamma_ab, -(params.delta_p - k_opt * v)));
        if i + 1 < count {
            let g = Complex64::new(params.gamma_cb, -(freqs.two_photon_detuning - k_gnd * v));
            ground.push(g);
            inv_ground.push(g.inv());
        }
    }
    // A-row i: α_i A_i − h1 B_i − h2 B_{i−1} = s_i,  B_i = h1 A_i + h2 A_{i+1} over g_i;
    // the eliminated matrix is complex symmetric
    let off: Vec<Complex64> = inv_ground.iter().map(|g| -h12 * g).collect();
    let mut diag = alpha.clone();
    for (i, g) in inv_ground.iter().enumerate() {
        diag[i] -= h11 * g;
        diag[i + 1] -= h22 * g;
    }
    let m = Tridiagonal { sub: off.clone(), diag, sup: off };
    let drive = 0.5 * I * params.rabi_p;
    let mut rhs = vec![ZERO; count];
    rhs[n_max] = drive;
    let a = m.solve_into(rhs)?;

    // residual of the full recurrence
    let mut b = Vec::with_capacity(count);
    let mut num = 0.0;
    let mut b_prev = ZERO;
    for i in 0..count {
        let mut r = alpha[i] * a[i] - h2 * b_prev;
        if i == n_max {
            r -= drive;
        }
        if i + 1 < count {
            let rhs_b = h1 * a[i] + h2 * a[i + 1];
            let bi = rhs_b * inv_ground[i];
            r -= h1 * bi;
            num += (ground[i] * bi - rhs_b).norm_sqr();
            b.push(bi);
            b_prev = bi;
        }
        num += r.norm_sqr();
    }
    let residual = if drive.norm() > 0.0 { num.sqrt() / drive.norm() } else { num.sqrt() };
    if !(residual <= RESIDUAL_LIMIT) {
        return Ok(None);
    }
    b.push(ZERO);
    Ok(Some(HarmonicSolution { n_max, a_coeffs: a, b_coeffs: b, velocity: v, residual_norm: residual }))
}

/// Closed-form grating denominators at zero velocity:
/// `σ_ab(z) = (i/2)Ω_p / (D0 + D1·cos 2k_c z)`.
pub fn grating_denominators(params: &SystemParams, freqs: &DerivedFrequencies) -> (Complex64, Complex64) {
    let ground = Complex64::new(params.gamma_cb, -freqs.two_photon_detuning);
    let d0 = Complex64::new(params.gamma_ab, -params.delta_p)
        + (params.rabi_c1 * params.rabi_c1 + params.rabi_c2 * params.rabi_c2) / (4.0 * ground);
    let d1 = params.rabi_c1 * params.rabi_c2 / (2.0 * ground);
    (d0, d1)
}

/// Fourier coefficients of `drive / (d0 + d1·cos u)`: returns `(c0, q)` with
/// coefficient `c0·q^|n|` for `e^{±inu}` and `|q| < 1`.
pub fn cosine_denominator_series(drive: Complex64, d0: Complex64, d1: Complex64) -> Result<(Complex64, Complex64)> {
    if d1 == ZERO {
        if d0 == ZERO {
            return Err(Error::numerical("vanishing grating denominator"));
        }
        return Ok((drive / d0, ZERO));
    }
    let disc = d0 * d0 - d1 * d1;
    if disc == ZERO {
        return Err(Error::numerical("degenerate grating branch: D0² = D1²"));
    }
    let root = disc.sqrt();
    // the two roots of d1·q² + 2·d0·q + d1 = 0 have product one; the form
    // q = −d1/(s + d0) with |s + d0| maximal selects the inner one without
    // cancellation
    let (s, denom) = if (d0 + root).norm() >= (d0 - root).norm() { (root, d0 + root) } else { (-root, d0 - root) };
    let q = -d1 / denom;
    let q_outer = 1.0 / q;
    if (q.norm() - 1.0).abs() < BRANCH_GUARD && (q_outer.norm() - 1.0).abs() < BRANCH_GUARD {
        return Err(Error::numerical(format!("ambiguous grating branch: |q| = {}", q.norm())));
    }
    Ok((drive / s, q))
}

/// Exact zero-velocity harmonics of the degenerate standing wave, listed for
/// `|n| ≤ n_max`.
pub fn analytic_harmonics_v0(
    params: &SystemParams,
    freqs: &DerivedFrequencies,
    n_max: usize,
) -> Result<HarmonicSolution> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let drive = 0.5 * I * params.rabi_p;
    let (d0, d1) = grating_denominators(params, freqs);
    let (c0, q) = cosine_denominator_series(drive, d0, d1)?;

    // A_n for |n| ≤ n_max + 1 so every listed B_n uses exact neighbours
    let count = 2 * n_max + 3;
    let mut powers = vec![ZERO; n_max + 2];
    let mut p = Complex64::new(1.0, 0.0);
    for slot in powers.iter_mut() {
        *slot = c0 * p;
        p *= q;
    }
    let a_ext: Vec<Complex64> =
        (0..count).map(|i| powers[(i as i64 - n_max as i64 - 1).unsigned_abs() as usize]).collect();
    let a_at = |n: i64| a_ext[(n + n_max as i64 + 1) as usize];

    let ground = Complex64::new(params.gamma_cb, -freqs.two_photon_detuning);
    let b_at = |n: i64| 0.5 * I * (params.rabi_c1 * a_at(n) + params.rabi_c2 * a_at(n + 1)) / ground;

    let span = -(n_max as i64)..=(n_max as i64);
    let a_coeffs: Vec<Complex64> = span.clone().map(a_at).collect();
    let b_coeffs: Vec<Complex64> = span.clone().map(b_at).collect();

    // residual of the untruncated recurrence on the listed rows
    let mut num = 0.0;
    for n in span {
        let lhs = Complex64::new(params.gamma_ab, -params.delta_p) * a_at(n);
        let src = if n == 0 { drive } else { ZERO };
        let rhs = src + 0.5 * I * params.rabi_c1 * b_at(n) + 0.5 * I * params.rabi_c2 * b_at(n - 1);
        num += (lhs - rhs).norm_sqr();
        let lhs_b = ground * b_at(n);
        let rhs_b = 0.5 * I * (params.rabi_c1 * a_at(n) + params.rabi_c2 * a_at(n + 1));
        num += (lhs_b - rhs_b).norm_sqr();
    }
    let residual = if drive.norm() > 0.0 { num.sqrt() / drive.norm() } else { num.sqrt() };
    if a_coeffs.iter().chain(&b_coeffs).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::numerical("closed-form harmonics are not finite"));
    }
    Ok(HarmonicSolution { n_max, a_coeffs, b_coeffs, velocity: 0.0, residual_norm: residual })
}

/// Prefactor `2Nμ²/(ε₀ħΩ_p)` turning coherence amplitudes into susceptibility.
pub fn susceptibility_prefactor(params: &SystemParams, constants: &PhysicalConstants) -> Result<f64> {
    if !(params.rabi_p > 0.0) {
        return Err(Error::invalid("a non-zero probe Rabi frequency is required to form χ"));
    }
    let mu = constants.dipole_moment;
    Ok(2.0 * params.density * mu * mu
        / (constants.vacuum_permittivity * constants.reduced_planck * params.rabi_p))
}

/// `χ_n = (2Nμ²/(ε₀ħΩ_p))·A_n`; independent of Ω_p by linearity.
pub fn susceptibility_from_harmonics(
    sol: &HarmonicSolution,
    params: &SystemParams,
    constants: &PhysicalConstants,
) -> Result<SusceptibilityHarmonics> {
    let scale = susceptibility_prefactor(params, constants)?;
    Ok(SusceptibilityHarmonics { n_max: sol.n_max, chi: sol.a_coeffs.iter().map(|a| a * scale).collect() })
}

/// Synthesizes `σ(z) = Σ_n A_n e^{−2in·k_c·z}` on `z_grid` (carrier removed).
pub fn spatial_coherence(sol: &HarmonicSolution, k_c: f64, z_grid: &[f64]) -> Vec<Complex64> {
    z_grid
        .iter()
        .map(|&z| {
            let base = Complex64::from_polar(1.0, -2.0 * k_c * z);
            let inv = base.conj();
            // accumulate n ≥ 0 and n < 0 by repeated multiplication
            let mut acc = sol.a(0);
            let (mut up, mut down) = (base, inv);
            for n in 1..=sol.n_max as i64 {
                acc += sol.a(n) * up + sol.a(-n) * down;
                up *= base;
                down *= inv;
            }
            acc
        })
        .collect()
}

/// Grating period π/k_c in metres.
pub fn grating_period(k_c: f64) -> f64 {
    PI / k_c
}

/// Doubles `n_max` up to `cap`, starting at [`AUTO_TRUNCATION_START`], until
/// the edge harmonics are below `tol` of the largest one and no `A_n` moved
/// by more than `tol·|A_0|` since the previous (half-size) truncation.
pub fn auto_truncate(
    params: &SystemParams,
    freqs: &DerivedFrequencies,
    v: f64,
    tol: f64,
    cap: usize,
) -> Result<HarmonicSolution> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("truncation tolerance must be positive, got {tol}")));
    }
    let mut n = AUTO_TRUNCATION_START;
    let mut previous = solve_harmonics(params, freqs, v, n / 2)?;
    while n <= cap {
        let current = solve_harmonics(params, freqs, v, n)?;
        if current.edge_ratio() <= tol {
            let half = previous.n_max as i64;
            let change = (-half..=half).map(|k| (current.a(k) - previous.a(k)).norm_sqr()).fold(0.0, f64::max);
            if change <= tol * tol * current.a(0).norm_sqr() {
                return Ok(current);
            }
        }
        previous = current;
        n *= 2;
    }
    Err(Error::Convergence(format!(
        "harmonic expansion not converged below n_max = {cap} at v = {v} m/s (tol {tol:e})"
    )))
}

/// Solves one velocity class under the given truncation policy.
pub fn solve_velocity_class(
    params: &SystemParams,
    freqs: &DerivedFrequencies,
    v: f64,
    truncation: Truncation,
) -> Result<HarmonicSolution> {
    match truncation {
        Truncation::Fixed(n) => solve_harmonics(params, freqs, v, n),
        Truncation::Auto { tol, cap } => auto_truncate(params, freqs, v, tol, cap),
    }
}

/// Susceptibility harmonics of the zero-velocity class.
pub fn stationary_susceptibility(
    params: &SystemParams,
    constants: &PhysicalConstants,
    freqs: &DerivedFrequencies,
    truncation: Truncation,
) -> Result<SusceptibilityHarmonics> {
    let sol = solve_velocity_class(params, freqs, 0.0, truncation)?;
    susceptibility_from_harmonics(&sol, params, constants)
}

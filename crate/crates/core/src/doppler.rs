//! Maxwell–Boltzmann averaging over the axial velocity.
//!
//! Each velocity class is solved independently and weighted by
//! `exp(−v²/u²)/(√π·u)` with `u = √(2k_B T/m)`. Three schemes are offered:
//! fixed Gauss–Hermite and uniform-trapezoid grids, and an adaptive
//! Gauss–Kronrod integration. The two-photon features of the slow classes are
//! a few cm/s wide against a thermal width of ~200 m/s, which fixed grids of
//! modest order under-resolve; the adaptive scheme is the default.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::{solve_velocity_class, susceptibility_from_harmonics, SusceptibilityHarmonics, Truncation};
use crate::model::{derive_frequencies, PhysicalConstants, SystemParams};
use crate::quadrature::{gauss_hermite, kronrod_abscissae, kronrod_weights};

/// Half-width of the velocity window in units of `u`; the Maxwellian tail
/// beyond it is below 3e-16.
pub const VELOCITY_WINDOW: f64 = 6.0;
/// Intervals in the initial adaptive partition.
pub const ADAPTIVE_INITIAL_INTERVALS: usize = 32;
/// Hard cap on integrand evaluations per adaptive average.
pub const ADAPTIVE_MAX_EVALUATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityScheme {
    #[default]
    Adaptive,
    GaussHermite,
    UniformTrapezoid,
}

/// Fixed velocity nodes with weights that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    /// m/s
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scheme: VelocityScheme,
    /// m/s
    pub most_probable_speed: f64,
}

/// Builds a fixed velocity grid for the Maxwellian at `temperature` (K) for
/// atoms of `mass` (kg).
pub fn make_velocity_grid(temperature: f64, mass: f64, order: usize, scheme: VelocityScheme) -> Result<VelocityGrid> {
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::invalid(format!("temperature must be non-negative, got {temperature} K")));
    }
    if !(mass > 0.0) {
        return Err(Error::invalid(format!("mass must be positive, got {mass} kg")));
    }
    let u = (2.0 * PhysicalConstants::default().boltzmann * temperature / mass).sqrt();
    let (nodes, weights) = match scheme {
        VelocityScheme::GaussHermite => {
            let (x, w) = gauss_hermite(order)?;
            let norm = std::f64::consts::PI.sqrt();
            (x.iter().map(|x| x * u).collect(), w.iter().map(|w| w / norm).collect())
        }
        VelocityScheme::UniformTrapezoid => trapezoid(order, u)?,
        VelocityScheme::Adaptive => {
            return Err(Error::invalid("the adaptive scheme has no fixed grid"));
        }
    };
    Ok(VelocityGrid { nodes, weights, scheme, most_probable_speed: u })
}

fn trapezoid(order: usize, u: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    match order {
        0 => Err(Error::invalid("trapezoid grid needs at least one node")),
        1 => Ok((vec![0.0], vec![1.0])),
        _ => {
            let x: Vec<f64> = (0..order)
                .map(|i| -VELOCITY_WINDOW + 2.0 * VELOCITY_WINDOW * i as f64 / (order - 1) as f64)
                .collect();
            let mut w: Vec<f64> = x.iter().map(|x| (-x * x).exp()).collect();
            w[0] *= 0.5;
            w[order - 1] *= 0.5;
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|w| *w /= total);
            Ok((x.iter().map(|x| x * u).collect(), w))
        }
    }
}

fn at_velocity(err: Error, v: f64) -> Error {
    let tag = |m: String| format!("{m} (velocity class v = {v:.6e} m/s)");
    match err {
        Error::Numerical(m) => Error::Numerical(tag(m)),
        Error::Convergence(m) => Error::Convergence(tag(m)),
        Error::InvalidArgument(m) => Error::InvalidArgument(tag(m)),
        Error::Config(m) => Error::Config(tag(m)),
    }
}

/// Susceptibility harmonics of the single class moving at `v`.
pub fn velocity_class_susceptibility(
    params: &SystemParams,
    constants: &PhysicalConstants,
    v: f64,
    truncation: Truncation,
) -> Result<SusceptibilityHarmonics> {
    let freqs = derive_frequencies(params, constants);
    solve_velocity_class(params, &freqs, v, truncation)
        .and_then(|sol| susceptibility_from_harmonics(&sol, params, constants))
        .map_err(|e| at_velocity(e, v))
}

/// Weighted sum over a fixed grid. Classes are solved in parallel and summed
/// in node order, so the result does not depend on the thread count.
pub fn doppler_average(
    params: &SystemParams,
    constants: &PhysicalConstants,
    grid: &VelocityGrid,
    truncation: Truncation,
) -> Result<SusceptibilityHarmonics> {
    let per_class: Vec<SusceptibilityHarmonics> = grid
        .nodes
        .par_iter()
        .map(|&v| velocity_class_susceptibility(params, constants, v, truncation))
        .collect::<Result<_>>()?;
    let mut total = SusceptibilityHarmonics::zeros(0);
    for (chi, &w) in per_class.iter().zip(&grid.weights) {
        total.accumulate(chi, w);
    }
    Ok(total)
}

/// Result of an adaptive velocity average.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveAverage {
    pub chi: SusceptibilityHarmonics,
    /// Summed Kronrod–Gauss differences on `χ_0`, `χ_{±1}`.
    pub error_estimate: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    integral: SusceptibilityHarmonics,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Velocities where a low-order harmonic goes through its optical or
/// two-photon resonance; used as initial breakpoints.
fn resonance_velocities(params: &SystemParams, constants: &PhysicalConstants) -> Vec<f64> {
    let f = derive_frequencies(params, constants);
    let dk = f.coupling_minus_probe / f.speed_of_light;
    let mut out = vec![0.0];
    for n in -2i32..=2 {
        let nf = n as f64;
        let k_opt = f.k_p * (1.0 - 2.0 * nf) - 2.0 * nf * dk;
        let k_gnd = -2.0 * nf * f.k_p - (2.0 * nf + 1.0) * dk;
        if k_opt != 0.0 {
            out.push(params.delta_p / k_opt);
        }
        if k_gnd != 0.0 {
            out.push(f.two_photon_detuning / k_gnd);
        }
    }
    out
}

/// Adaptive Gauss–Kronrod (7/15) average over `|v| ≤ 6u`, refined until the
/// summed error on `χ_0` and `χ_{±1}` is below `rel_tol·|χ_0|`.
pub fn doppler_average_adaptive(
    params: &SystemParams,
    constants: &PhysicalConstants,
    rel_tol: f64,
    truncation: Truncation,
) -> Result<AdaptiveAverage> {
    if !(rel_tol > 0.0) {
        return Err(Error::invalid(format!("Doppler tolerance must be positive, got {rel_tol}")));
    }
    let u = constants.most_probable_speed(params.temperature);
    if u == 0.0 {
        let chi = velocity_class_susceptibility(params, constants, 0.0, truncation)?;
        return Ok(AdaptiveAverage { chi, error_estimate: 0.0, evaluations: 1, intervals: 0 });
    }
    let span = VELOCITY_WINDOW * u;
    let norm = 1.0 / (std::f64::consts::PI.sqrt() * u);

    let mut edges: Vec<f64> = (0..=ADAPTIVE_INITIAL_INTERVALS)
        .map(|i| -span + 2.0 * span * i as f64 / ADAPTIVE_INITIAL_INTERVALS as f64)
        .collect();
    let min_gap = 1e-9 * span;
    for v in resonance_velocities(params, constants) {
        if v.abs() < span && edges.iter().all(|e| (e - v).abs() > min_gap) {
            edges.push(v);
        }
    }
    edges.sort_by(f64::total_cmp);

    let mut evaluations = 0usize;
    let panel = |a: f64, b: f64, evaluations: &mut usize| -> Result<Panel> {
        let xs = kronrod_abscissae(a, b);
        let (wk, wg) = kronrod_weights(a, b);
        let mut kron = SusceptibilityHarmonics::zeros(0);
        let mut gauss = SusceptibilityHarmonics::zeros(0);
        let mut low = [[Complex64::new(0.0, 0.0); 3]; 15];
        for j in 0..15 {
            let v = xs[j];
            let chi = velocity_class_susceptibility(params, constants, v, truncation)?;
            let w = norm * (-(v / u) * (v / u)).exp();
            kron.accumulate(&chi, wk[j] * w);
            if wg[j] != 0.0 {
                gauss.accumulate(&chi, wg[j] * w);
            }
            for (k, n) in (-1..=1).enumerate() {
                low[j][k] = chi.get(n) * w;
            }
        }
        *evaluations += 15;
        // QUADPACK error scaling against the panel's absolute variation
        let mut error: f64 = 0.0;
        for (k, n) in (-1..=1).enumerate() {
            let raw = (kron.get(n) - gauss.get(n)).norm();
            let mean = kron.get(n) / (b - a);
            let resasc: f64 = (0..15).map(|j| wk[j] * (low[j][k] - mean).norm()).sum();
            let scaled = if resasc > 0.0 && raw > 0.0 { resasc * (200.0 * raw / resasc).powf(1.5).min(1.0) } else { raw };
            error = error.max(scaled);
        }
        Ok(Panel { a, b, integral: kron, error })
    };

    let mut heap = BinaryHeap::new();
    for pair in edges.windows(2) {
        heap.push(panel(pair[0], pair[1], &mut evaluations)?);
    }
    loop {
        let total_error: f64 = heap.iter().map(|p| p.error).sum();
        let chi0: Complex64 = heap.iter().map(|p| p.integral.chi0()).sum();
        if total_error <= rel_tol * chi0.norm() {
            break;
        }
        if evaluations >= ADAPTIVE_MAX_EVALUATIONS {
            return Err(Error::Convergence(format!(
                "Doppler average not converged after {evaluations} evaluations \
                 (error {total_error:.3e}, |chi0| {:.3e})",
                chi0.norm()
            )));
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Convergence(format!("Doppler panel at v = {mid:.6e} m/s cannot be bisected")));
        }
        heap.push(panel(worst.a, mid, &mut evaluations)?);
        heap.push(panel(mid, worst.b, &mut evaluations)?);
    }

    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut chi = SusceptibilityHarmonics::zeros(0);
    let mut error_estimate = 0.0;
    for p in &panels {
        chi.accumulate(&p.integral, 1.0);
        error_estimate += p.error;
    }
    Ok(AdaptiveAverage { chi, error_estimate, evaluations, intervals: panels.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_normalized() {
        for scheme in [VelocityScheme::GaussHermite, VelocityScheme::UniformTrapezoid] {
            let g = make_velocity_grid(316.15, 2.2e-25, 64, scheme).unwrap();
            let total: f64 = g.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-13, "{scheme:?}");
            assert_eq!(g.nodes.len(), 64);
        }
    }

    #[test]
    fn zero_temperature_collapses_to_rest() {
        let g = make_velocity_grid(0.0, 2.2e-25, 16, VelocityScheme::GaussHermite).unwrap();
        assert!(g.nodes.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn second_moment_is_half_u_squared() {
        let g = make_velocity_grid(316.15, 2.2e-25, 40, VelocityScheme::GaussHermite).unwrap();
        let u = g.most_probable_speed;
        let m2: f64 = g.nodes.iter().zip(&g.weights).map(|(v, w)| w * v * v).sum();
        assert!((m2 - 0.5 * u * u).abs() < 1e-12 * u * u);
    }

    #[test]
    fn invalid_grid_requests() {
        assert!(make_velocity_grid(300.0, 2.2e-25, 0, VelocityScheme::GaussHermite).is_err());
        assert!(make_velocity_grid(300.0, 2.2e-25, 0, VelocityScheme::UniformTrapezoid).is_err());
        assert!(make_velocity_grid(300.0, 2.2e-25, 8, VelocityScheme::Adaptive).is_err());
        assert!(make_velocity_grid(-1.0, 2.2e-25, 8, VelocityScheme::GaussHermite).is_err());
        assert!(make_velocity_grid(300.0, 0.0, 8, VelocityScheme::GaussHermite).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct W {
            s: VelocityScheme,
        }
        for (s, name) in [
            (VelocityScheme::Adaptive, "adaptive"),
            (VelocityScheme::GaussHermite, "gauss_hermite"),
            (VelocityScheme::UniformTrapezoid, "uniform_trapezoid"),
        ] {
            let text = toml::to_string(&W { s }).unwrap();
            assert!(text.contains(name));
            assert_eq!(toml::from_str::<W>(&text).unwrap().s, s);
        }
    }
}

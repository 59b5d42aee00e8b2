//! Acceptance suite. Runs every criterion in sequence (timed criteria must
//! not share the machine with other tests) and prints one PASS/FAIL line
//! per criterion. Exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use eig_core::doppler::VELOCITY_WINDOW;
use eig_core::lineshape::{
    analytic_harmonics_v0, auto_truncate, cosine_denominator_series, grating_denominators, grating_period,
    solve_harmonics, spatial_coherence,
};
use eig_core::model::{build_constants, build_params, derive_frequencies, mhz_to_rad_s};
use eig_core::optics::{coupled_mode_transfer, coupled_mode_transfer_with_profiles};
use eig_core::sweep::{coupling_detuning_scan, medium_response, peak_metrics, spectrum_sweep, DopplerMode};
use eig_core::{CoupledModeInput, PhysicalConstants, ScenarioConfig, SweepOptions, SystemParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<(bool, String), String>;

fn canonical() -> (ScenarioConfig, SystemParams, PhysicalConstants) {
    let cfg = ScenarioConfig::canonical();
    let params = build_params(&cfg).unwrap();
    let constants = build_constants(&cfg).unwrap();
    (cfg, params, constants)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn eig(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_eig")).args(args).output().map_err(err)?;
    if !out.status.success() {
        return Err(format!("eig {args:?} exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Data rows of a CSV written by the CLI.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let text = std::fs::read_to_string(path).map_err(err)?;
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse::<f64>().map_err(err)).collect())
        .collect()
}

fn write_config(dir: &Path, name: &str, cfg: &ScenarioConfig) -> String {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_toml_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// 1
fn oracle_equivalence() -> Verdict {
    let (_, base, constants) = canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start = Instant::now();
    let (mut sets, mut worst, mut largest_n) = (0, 0.0f64, 0);
    while sets < 120 {
        let mut p = base;
        p.gamma_ab = mhz_to_rad_s(rng.gen_range(0.5..5.0));
        p.gamma_cb = mhz_to_rad_s(rng.gen_range(0.01..1.0));
        p.rabi_p = mhz_to_rad_s(rng.gen_range(0.1..5.0));
        p.rabi_c1 = mhz_to_rad_s(rng.gen_range(1.0..60.0));
        p.rabi_c2 = mhz_to_rad_s(rng.gen_range(1.0..60.0));
        p.delta_p = mhz_to_rad_s(rng.gen_range(-30.0..30.0));
        p.delta_c = mhz_to_rad_s(rng.gen_range(-30.0..30.0));
        let freqs = derive_frequencies(&p, &constants);
        let (d0, d1) = grating_denominators(&p, &freqs);
        let (_, q) = cosine_denominator_series(Complex64::new(0.0, 0.5 * p.rabi_p), d0, d1).map_err(err)?;
        // truncation error ~|q|^N must sit well below the tolerance
        let n = (1e-14f64.ln() / q.norm().ln()).ceil() as usize + 8;
        if n > 3000 {
            continue;
        }
        let exact = analytic_harmonics_v0(&p, &freqs, n).map_err(err)?;
        let banded = solve_harmonics(&p, &freqs, 0.0, n).map_err(err)?;
        let scale = exact.a_coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let diff = exact.a_coeffs.iter().zip(&banded.a_coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(diff / scale);
        largest_n = largest_n.max(n);
        sets += 1;
    }
    let elapsed = secs(start.elapsed());
    Ok((
        worst <= 1e-10 && elapsed < 10.0,
        format!("{sets} random sets, max relative error {worst:.2e} (limit 1e-10), largest N {largest_n}, {elapsed:.2} s (limit 10 s)"),
    ))
}

// 2
fn fft_cross_check() -> Verdict {
    let (_, base, constants) = canonical();
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (dp, v) in [(0.0, 3.0), (-4.7, 0.5), (-11.0, -20.0)] {
        let p = base.with_detunings(mhz_to_rad_s(dp), 0.0);
        let freqs = derive_frequencies(&p, &constants);
        let sol = auto_truncate(&p, &freqs, v, 1e-12, 4096).map_err(err)?;
        let m = (4 * sol.n_max + 4).next_power_of_two();
        let period = grating_period(freqs.k_c);
        let z: Vec<f64> = (0..m).map(|j| period * j as f64 / m as f64).collect();
        let mut samples = spatial_coherence(&sol, freqs.k_c, &z);
        rustfft::FftPlanner::new().plan_fft_forward(m).process(&mut samples);
        let n = sol.n_max as i64;
        let scale = sol.a_coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let diff = (-n..=n)
            .map(|k| (samples[(-k).rem_euclid(m as i64) as usize] / m as f64 - sol.a(k)).norm())
            .fold(0.0, f64::max);
        worst = worst.max(diff / scale);
        details.push(format!("N={} M={m}", sol.n_max));
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.2e} (limit 1e-10) [{}]", details.join(", "))))
}

// 3
fn eit_to_eia() -> Verdict {
    let (cfg, base, constants) = canonical();
    let standing = base.with_detunings(0.0, 0.0);
    let total = standing.rabi_c1.hypot(standing.rabi_c2);
    let traveling = SystemParams { rabi_c1: total, rabi_c2: 0.0, ..standing };
    let mut lines = Vec::new();
    let mut pass = false;
    for doppler in [false, true] {
        let mut c = cfg.clone();
        c.numerics.doppler = doppler;
        let opts = SweepOptions::from_config(&c, &base, &constants).map_err(err)?;
        let chi = |p: &SystemParams, dp: f64| -> Result<Complex64, String> {
            Ok(medium_response(&p.with_detunings(dp, 0.0), &constants, &opts).map_err(err)?.chi0())
        };
        let h = mhz_to_rad_s(0.05);
        let slope = |p: &SystemParams| -> Result<f64, String> { Ok((chi(p, h)?.re - chi(p, -h)?.re) / (2.0 * h)) };
        let (im_s, im_t) = (chi(&standing, 0.0)?.im, chi(&traveling, 0.0)?.im);
        let (sl_s, sl_t) = (slope(&standing)?, slope(&traveling)?);
        // the warm-vapor response decides; the rest frame is reported alongside
        if doppler {
            pass = im_s > im_t && sl_t > 0.0 && sl_s < 0.0;
        }
        lines.push(format!(
            "{}: Im chi0 standing {im_s:.3e} vs traveling {im_t:.3e}, dRe/dDp standing {sl_s:.3e} vs traveling {sl_t:.3e} s",
            if doppler { "thermal" } else { "at rest" }
        ));
    }
    Ok((pass, lines.join("; ")))
}

// 4
fn phase_compensation(dir: &Path) -> Verdict {
    let (cfg, ..) = canonical();
    let scenario = write_config(dir, "canonical.toml", &cfg);
    let out = dir.join("mismatch.csv");
    let start = Instant::now();
    eig(&["mismatch", "--scenario", &scenario, "--no-doppler", "--out", out.to_str().unwrap()])?;
    let elapsed = secs(start.elapsed());
    let rows = read_rows(&out)?;
    let min_abs = |dc: f64, col: usize| {
        rows.iter().filter(|r| r[1] == dc).map(|r| r[col].abs()).fold(f64::INFINITY, f64::min)
    };
    let (at_m11, baseline, at_p11) = (min_abs(-11.0, 2), min_abs(-11.0, 3), min_abs(11.0, 2));
    Ok((
        at_m11 < baseline && at_m11 < at_p11 && elapsed < 60.0,
        format!(
            "min|dk| at dc=-11: {at_m11:.2} rad/m, baseline {baseline:.2}, at dc=+11: {at_p11:.2}; {elapsed:.1} s (limit 60 s)"
        ),
    ))
}

/// η_max per coupling detuning from a `reflect` table.
fn peaks(rows: &[Vec<f64>]) -> Result<Vec<(f64, f64, f64)>, String> {
    let mut dcs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    dcs.dedup();
    dcs.iter()
        .map(|&dc| {
            let (x, eta): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r[1] == dc && r[3].is_finite()).map(|r| (r[0], r[3])).unzip();
            let m = peak_metrics(&x, &eta).map_err(err)?.ok_or(format!("no peak at dc={dc}"))?;
            Ok((dc, m.eta_max, m.delta_p_at_peak))
        })
        .collect()
}

// full run + 5
fn full_run(dir: &Path) -> Result<(Verdict, Verdict), String> {
    let (cfg, ..) = canonical();
    let scenario = write_config(dir, "canonical.toml", &cfg);
    let out = dir.join("reflect.csv");
    let start = Instant::now();
    eig(&["reflect", "--scenario", &scenario, "--out", out.to_str().unwrap()])?;
    let elapsed = secs(start.elapsed());
    let rows = read_rows(&out)?;
    let timing = Ok((
        elapsed < 600.0,
        format!("{} points, Doppler on, {elapsed:.1} s (limit 600 s)", rows.len()),
    ));
    let p = peaks(&rows)?;
    let get = |dc: f64| p.iter().find(|x| x.0 == dc).copied().ok_or(format!("dc={dc} missing"));
    let (m11, zero, p11) = (get(-11.0)?, get(0.0)?, get(11.0)?);
    let ordering = Ok((
        m11.1 > zero.1 && zero.1 > p11.1 && zero.2 < 0.0,
        format!(
            "eta_max % at dc=-11: {:.4e}, 0: {:.4e}, +11: {:.4e}; dc=0 peak at dp={:.3} MHz; all: {}",
            m11.1,
            zero.1,
            p11.1,
            zero.2,
            p.iter().map(|(dc, e, at)| format!("{dc}:{e:.3e}@{at:.2}")).collect::<Vec<_>>().join(" ")
        ),
    ));
    Ok((timing, ordering))
}

fn transfer_det(m: &[[Complex64; 2]; 2]) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Classical RK4 on (u, w)' = K (u, w) from z = 0 to L.
fn rk4_transfer(input: &CoupledModeInput, steps: usize) -> [[Complex64; 2]; 2] {
    let i = Complex64::i();
    let k = input.k_p;
    let a = i * (i * (0.5 * k * input.chi0.im) - 0.5 * input.delta_k);
    let (kr, ke) = (0.5 * k * input.chi_return, 0.5 * k * input.chi_emission);
    let f = |y: [Complex64; 2]| [a * y[0] + i * kr * y[1], -i * ke * y[0] - a * y[1]];
    let h = input.length / steps as f64;
    let mut cols = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    for y in cols.iter_mut() {
        for _ in 0..steps {
            let k1 = f(*y);
            let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
            for c in 0..2 {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
    }
    [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]
}

// 6
fn transfer_matrix_integrity() -> Verdict {
    let (cfg, params, constants) = canonical();
    let mut c = cfg.clone();
    c.numerics.doppler = false;
    let opts = SweepOptions::from_config(&c, &params, &constants).map_err(err)?;
    let table = spectrum_sweep(&params, &constants, &cfg.sweep.delta_p_grid().map_err(err)?, &cfg.sweep.delta_c_list().map_err(err)?, &opts)
        .map_err(err)?;
    let mut det_err = 0.0f64;
    let mut count = 0;
    for r in table.points.iter().filter_map(|p| p.as_ref().ok()) {
        det_err = det_err.max((transfer_det(&r.propagation.transfer_matrix) - 1.0).norm());
        count += 1;
    }

    let k_p = derive_frequencies(&params, &constants).k_p;
    let chi1 = Complex64::new(2.0e-6, 1.5e-6);
    let lossless = CoupledModeInput {
        chi0: Complex64::new(3.0e-6, 0.0),
        chi_emission: chi1,
        chi_return: chi1.conj(),
        delta_k: -150.0,
        k_p,
        length: params.length,
        window_loss: 0.0,
    };
    let prof = coupled_mode_transfer_with_profiles(&lossless, 401).map_err(err)?.field_profiles.unwrap();
    let flux: Vec<f64> = prof.forward.iter().zip(&prof.backward).map(|(u, w)| u.norm_sqr() - w.norm_sqr()).collect();
    let flux_err = flux.iter().map(|f| (f - flux[0]).abs()).fold(0.0, f64::max);

    let mut rk_err = 0.0f64;
    for input in [
        lossless,
        CoupledModeInput { chi0: Complex64::new(1e-6, 4e-6), chi_emission: Complex64::new(-3e-6, -1e-6), chi_return: Complex64::new(-2e-6, -2e-6), delta_k: -420.0, ..lossless },
    ] {
        let exact = coupled_mode_transfer(&input).map_err(err)?.transfer_matrix;
        let fine = rk4_transfer(&input, 20_000);
        for r in 0..2 {
            for s in 0..2 {
                rk_err = rk_err.max((exact[r][s] - fine[r][s]).norm() / exact[r][s].norm().max(1.0));
            }
        }
    }

    let kappa = 0.5 * k_p * 2.5e-6;
    let matched = CoupledModeInput {
        chi0: Complex64::new(0.0, 0.0),
        chi_emission: Complex64::new(2.5e-6, 0.0),
        chi_return: Complex64::new(2.5e-6, 0.0),
        delta_k: 0.0,
        ..lossless
    };
    let eta = coupled_mode_transfer(&matched).map_err(err)?.eta;
    let tanh2 = (kappa * params.length).tanh().powi(2);
    let tanh_err = (eta - tanh2).abs();

    Ok((
        det_err <= 1e-9 && flux_err <= 1e-9 && rk_err <= 1e-8 && tanh_err <= 1e-8,
        format!(
            "|det M - 1| max {det_err:.1e} over {count} points; flux drift {flux_err:.1e}; \
             RK4 vs closed form {rk_err:.1e}; tanh^2 ({tanh2:.6}) error {tanh_err:.1e}"
        ),
    ))
}

// 7
fn doppler_limits() -> Verdict {
    let (cfg, base, constants) = canonical();
    let opts = SweepOptions::from_config(&cfg, &base, &constants).map_err(err)?;
    let rest_opts = SweepOptions { doppler: DopplerMode::Off, ..opts.clone() };
    // the residual deviation is quadratic in the thermal speed, i.e. linear in T
    let mut cold_errs = Vec::new();
    for temperature in [1e-6, 1e-9, 1e-12] {
        let p = SystemParams { temperature, ..base.with_detunings(mhz_to_rad_s(-4.7), 0.0) };
        let cold = medium_response(&p, &constants, &opts).map_err(err)?;
        let rest = medium_response(&p, &constants, &rest_opts).map_err(err)?;
        let e = (-1..=1)
            .map(|n| (cold.chi.get(n) - rest.chi.get(n)).norm() / rest.chi0().norm())
            .fold(0.0, f64::max);
        cold_errs.push((temperature, e));
    }
    let cold_err = cold_errs.last().unwrap().1;
    // bare line: no coupling field, χ is a Lorentzian in the atom frame
    let bare = SystemParams { rabi_c1: 0.0, rabi_c2: 0.0, ..base.with_detunings(0.0, 0.0) };
    let thermal = medium_response(&bare, &constants, &opts).map_err(err)?.chi0();
    let freqs = derive_frequencies(&bare, &constants);
    let u = constants.most_probable_speed(bare.temperature);
    let mu = constants.dipole_moment;
    let pref = 2.0 * bare.density * mu * mu / (constants.vacuum_permittivity * constants.reduced_planck * bare.rabi_p);
    let lorentz = |v: f64| {
        pref * Complex64::new(0.0, 0.5 * bare.rabi_p) / Complex64::new(bare.gamma_ab, -(bare.delta_p - freqs.k_p * v))
    };
    // plain trapezoid over ±8u with a step far below the homogeneous width
    let steps = 400_000;
    let h = 16.0 * u / steps as f64;
    let mut voigt = Complex64::new(0.0, 0.0);
    for j in 0..=steps {
        let v = -8.0 * u + h * j as f64;
        let w = if j == 0 || j == steps { 0.5 } else { 1.0 };
        voigt += w * h * (-(v / u).powi(2)).exp() / (PI.sqrt() * u) * lorentz(v);
    }
    let voigt_err = (thermal - voigt).norm() / voigt.norm();
    Ok((
        cold_err <= 1e-6 && voigt_err <= 1e-4,
        format!(
            "thermal vs rest {} (limit 1e-6 as T -> 0); bare-line average vs Voigt oracle {voigt_err:.1e} (limit 1e-4), \
             window ±{VELOCITY_WINDOW}u",
            cold_errs.iter().map(|(t, e)| format!("T={t:.0e} K: {e:.1e}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

// 8
fn density_monotonicity() -> Verdict {
    let (cfg, params, constants) = canonical();
    let opts = SweepOptions::from_config(&cfg, &params, &constants).map_err(err)?;
    let dc: Vec<f64> = (0..16).map(|i| mhz_to_rad_s(-30.0 + 3.0 * i as f64)).collect();
    let dp: Vec<f64> = (0..=160).map(|i| mhz_to_rad_s(-40.0 + 0.5 * i as f64)).collect();
    let densities = &cfg.sweep.scan_densities_m3;
    let start = Instant::now();
    let scans = coupling_detuning_scan(&params, &constants, &dc, &dp, densities, &opts).map_err(err)?;
    let elapsed = secs(start.elapsed());
    let best: Vec<(f64, f64, f64)> = scans
        .iter()
        .map(|s| (s.density, s.best_eta, s.best_delta_c.map_or(f64::NAN, eig_core::model::rad_s_to_mhz)))
        .collect();
    let rising = best.windows(2).all(|w| w[1].1 > w[0].1);
    let shifting = best.windows(2).all(|w| w[1].2 <= w[0].2) && best.last().unwrap().2 < best[0].2;
    Ok((
        rising && shifting,
        format!(
            "{} ({elapsed:.0} s, dc step 3 MHz, dp step 0.5 MHz)",
            best.iter().map(|(n, e, d)| format!("N={n:.3e}: eta_max {e:.3e} at dc={d}")).collect::<Vec<_>>().join("; ")
        ),
    ))
}

// 9
fn determinism(dir: &Path) -> Verdict {
    let (mut cfg, ..) = canonical();
    cfg.sweep.delta_p_step_mhz = 2.0;
    let scenario = write_config(dir, "determinism.toml", &cfg);
    let mut outputs = Vec::new();
    for name in ["run1.csv", "run2.csv"] {
        let out = dir.join(name);
        eig(&["reflect", "--scenario", &scenario, "--out", out.to_str().unwrap()])?;
        outputs.push(std::fs::read(&out).map_err(err)?);
    }
    let stdout_a = eig(&["chi", "--scenario", &scenario, "--no-doppler"])?;
    let stdout_b = eig(&["chi", "--scenario", &scenario, "--no-doppler"])?;
    Ok((
        outputs[0] == outputs[1] && stdout_a == stdout_b,
        format!("two reflect runs ({} bytes, Doppler on, dp step 2 MHz) and two chi runs compared", outputs[0].len()),
    ))
}

fn report(id: &str, name: &str, verdict: Verdict) -> bool {
    let (pass, detail) = match verdict {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    println!("{} criterion {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

/// `ACCEPTANCE_ONLY=1,4` restricts the run to the listed criteria.
fn selected(id: &str) -> bool {
    std::env::var("ACCEPTANCE_ONLY").map_or(true, |only| only.split(',').any(|s| s.trim() == id))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let dir = dir.path();
    let mut results = Vec::new();
    let mut run = |id: &str, name: &str, f: &mut dyn FnMut() -> Verdict| {
        if selected(id) {
            results.push(report(id, name, f()));
        }
    };
    run("1", "oracle equivalence", &mut oracle_equivalence);
    run("2", "FFT cross-check", &mut fft_cross_check);
    run("3", "EIT to EIA flip", &mut eit_to_eia);
    run("4", "phase compensation", &mut || phase_compensation(dir));
    let (timing, ordering) = if selected("5") || selected("full-run") {
        match full_run(dir) {
            Ok(v) => v,
            Err(e) => (Err(e.clone()), Err(e)),
        }
    } else {
        (Err(String::new()), Err(String::new()))
    };
    let mut ordering = Some(ordering);
    let mut timing = Some(timing);
    run("5", "reflection ordering", &mut || ordering.take().unwrap());
    run("6", "transfer-matrix integrity", &mut transfer_matrix_integrity);
    run("7", "Doppler limits", &mut doppler_limits);
    run("8", "density monotonicity", &mut density_monotonicity);
    run("9", "determinism", &mut || determinism(dir));
    run("full-run", "canonical timing", &mut || timing.take().unwrap());
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

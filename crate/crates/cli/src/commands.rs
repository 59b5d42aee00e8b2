use eig_core::model::{build_constants, build_params, rad_s_to_mhz};
use eig_core::sweep::{coupling_detuning_scan, spectrum_sweep};
use eig_core::{Result, ScenarioConfig, SweepOptions, SweepRecord, SweepTable};

use crate::output::{Table, Value};
use crate::Command;

const NAN: Value = Value::Real(f64::NAN);

pub fn run(command: Command, config: &ScenarioConfig) -> Result<Table> {
    let params = build_params(config)?;
    let constants = build_constants(config)?;
    let opts = SweepOptions::from_config(config, &params, &constants)?;
    let dp_grid = config.sweep.delta_p_grid()?;
    let mut table = match command {
        Command::Chi => {
            let sweep = spectrum_sweep(&params, &constants, &dp_grid, &[params.delta_c], &opts)?;
            rows(&sweep, &["delta_p_mhz", "re_chi0", "im_chi0", "re_chi1", "im_chi1", "n_p"], |r| {
                vec![
                    mhz(r.delta_p),
                    Value::Real(r.chi0.re),
                    Value::Real(r.chi0.im),
                    Value::Real(r.chi_plus1.re),
                    Value::Real(r.chi_plus1.im),
                    Value::Real(r.refractive_index),
                ]
            })
        }
        Command::Reflect => {
            let sweep = spectrum_sweep(&params, &constants, &dp_grid, &config.sweep.delta_c_list()?, &opts)?;
            let columns =
                ["delta_p_mhz", "delta_c_mhz", "delta_k_per_m", "eta_percent", "transmission", "phase_shift_rad"];
            rows(&sweep, &columns, |r| {
                vec![
                    mhz(r.delta_p),
                    mhz(r.delta_c),
                    Value::Real(r.delta_k),
                    Value::Real(100.0 * r.eta()),
                    Value::Real(r.propagation.transmission),
                    Value::Real(r.phase_shift),
                ]
            })
        }
        Command::Mismatch => {
            let sweep = spectrum_sweep(&params, &constants, &dp_grid, &config.sweep.delta_c_list()?, &opts)?;
            let columns = ["delta_p_mhz", "delta_c_mhz", "delta_k_per_m", "delta_k_baseline_per_m", "sign"];
            rows(&sweep, &columns, |r| {
                vec![
                    mhz(r.delta_p),
                    mhz(r.delta_c),
                    Value::Real(r.delta_k),
                    Value::Real(r.delta_k_baseline),
                    Value::Int(sign(r.delta_k)),
                ]
            })
        }
        Command::Phase => {
            let sweep = spectrum_sweep(&params, &constants, &dp_grid, &config.sweep.delta_c_list()?, &opts)?;
            let columns = ["two_photon_detuning_mhz", "delta_p_mhz", "delta_c_mhz", "phase_shift_rad"];
            rows(&sweep, &columns, |r| {
                vec![mhz(r.delta_p - r.delta_c), mhz(r.delta_p), mhz(r.delta_c), Value::Real(r.phase_shift)]
            })
        }
        Command::Scan => scan(config, &params, &constants, &dp_grid, &opts)?,
    };
    for warning in params.warnings() {
        eprintln!("eig: warning: {warning}");
        table.notes.insert(0, format!("warning: {warning}"));
    }
    Ok(table)
}

fn mhz(omega: f64) -> Value {
    Value::Real(rad_s_to_mhz(omega))
}

fn sign(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// One row per sweep point, ordered by Δ_c then Δ_p. Failed points keep
/// their detunings and carry NaN elsewhere.
fn rows(sweep: &SweepTable, columns: &[&'static str], f: impl Fn(&SweepRecord) -> Vec<Value>) -> Table {
    let mut table = Table::new(columns);
    for point in &sweep.points {
        match point {
            Ok(record) => table.push(f(record)),
            Err(failure) => {
                let mut row = vec![NAN; columns.len()];
                row[0] = mhz(failure.delta_p);
                if columns[1] == "delta_c_mhz" {
                    row[1] = mhz(failure.delta_c);
                } else if columns[2] == "delta_c_mhz" {
                    row[0] = mhz(failure.delta_p - failure.delta_c);
                    row[1] = mhz(failure.delta_p);
                    row[2] = mhz(failure.delta_c);
                }
                table.push(row);
                table.notes.push(format!(
                    "failed at delta_p_mhz={} delta_c_mhz={}: {}",
                    rad_s_to_mhz(failure.delta_p),
                    rad_s_to_mhz(failure.delta_c),
                    failure.error
                ));
            }
        }
    }
    table
}

fn scan(
    config: &ScenarioConfig,
    params: &eig_core::SystemParams,
    constants: &eig_core::PhysicalConstants,
    dp_grid: &[f64],
    opts: &SweepOptions,
) -> Result<Table> {
    let dc_grid = config.sweep.scan_delta_c_grid()?;
    let scans =
        coupling_detuning_scan(params, constants, &dc_grid, dp_grid, &config.sweep.scan_densities_m3, opts)?;
    let mut table = Table::new(&[
        "density_m3",
        "delta_c_mhz",
        "eta_max_percent",
        "delta_p_at_peak_mhz",
        "fwhm_mhz",
        "best",
    ]);
    for scan in &scans {
        for point in &scan.points {
            let best = scan.best_delta_c == Some(point.delta_c);
            let (eta, at, width) = match point.peak {
                Some(m) => (
                    Value::Real(100.0 * m.eta_max),
                    mhz(m.delta_p_at_peak),
                    m.fwhm.map_or(NAN, mhz),
                ),
                None => (Value::Real(0.0), NAN, NAN),
            };
            table.push(vec![Value::Real(scan.density), mhz(point.delta_c), eta, at, width, Value::Int(best as i64)]);
        }
    }
    Ok(table)
}

//! The five subcommands, each rendering its payload in the requested format.
//! Core-library errors surface as configuration errors: by the time a
//! command runs, everything that can fail is a precondition of the
//! configured physics, not an internal fault.

use serde::Serialize;
use serde_json::json;

use polariton_cloning::cloning::{readout_schedule, run_cloning, sweep, CloneReport, CloneStats};
use polariton_cloning::polariton::dispersion_curve;
use polariton_cloning::validation::{run_suite, Check, SuiteConfig};

use crate::config::{OutputFormat, RunConfig};
use crate::output::{csv_payload, fmt_float, to_json_payload};
use crate::CliError;

/// A command's finished output: the payload to emit, a row count for
/// chatter, and (oracle only) the names of out-of-tolerance checks.
pub struct Rendered {
    pub payload: String,
    pub rows: usize,
    pub label: &'static str,
    pub failed_checks: Vec<String>,
}

impl Rendered {
    fn new(payload: String, rows: usize, label: &'static str) -> Self {
        Self { payload, rows, label, failed_checks: Vec::new() }
    }
}

const DISPERSION_HEADER: &str = "k_par,E_ph,E_upper,E_lower,delta,mu2";
const CLONE_HEADER: &str =
    "delta,alpha2,phi,N,gain,Vin,clone,meanQ,meanP,varQ,varP,gain_signal,fidelity,flags";
const READOUT_HEADER: &str = "t,mu_t,nu_t,meanQ,meanP,varQ,varP,covQP";
const ORACLE_HEADER: &str =
    "name,engine_value,oracle_value,abs_error,tolerance,pass,truncation_mass,cutoffs";

pub fn dispersion(cfg: &RunConfig, format: OutputFormat) -> Result<Rendered, CliError> {
    let params = cfg.cavity_params()?;
    let curve = dispersion_curve(cfg.dispersion.k_par_max, cfg.dispersion.n_points, &params)
        .map_err(|e| CliError::Config(format!("dispersion: {e}")))?;
    let sig = cfg.output.precision;
    let payload = match format {
        OutputFormat::Json => to_json_payload(&curve, sig)?,
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = curve
                .iter()
                .map(|p| {
                    vec![
                        fmt_float(p.k_par, sig),
                        fmt_float(p.e_ph, sig),
                        fmt_float(p.e_upper, sig),
                        fmt_float(p.e_lower, sig),
                        fmt_float(p.delta, sig),
                        fmt_float(p.mu2, sig),
                    ]
                })
                .collect();
            csv_payload(DISPERSION_HEADER, &rows)
        }
    };
    Ok(Rendered::new(payload, curve.len(), "dispersion"))
}

/// Grid coordinates attached to each emitted clone row.
#[derive(Clone, Copy)]
struct RowCoords {
    delta: f64,
    alpha2: f64,
    phi: f64,
    n: u64,
    gain: f64,
    v_in: f64,
}

impl RowCoords {
    fn from_protocol(cfg: &RunConfig) -> Self {
        let p = &cfg.protocol;
        Self {
            delta: p.delta,
            alpha2: p.alpha2,
            phi: p.phi_rel,
            n: p.n,
            gain: p.gain,
            v_in: p.v_in,
        }
    }
}

fn clone_csv_rows(coords: RowCoords, report: &CloneReport, sig: usize) -> Vec<Vec<String>> {
    let row = |label: &str, stats: &CloneStats| {
        vec![
            fmt_float(coords.delta, sig),
            fmt_float(coords.alpha2, sig),
            fmt_float(coords.phi, sig),
            coords.n.to_string(),
            fmt_float(coords.gain, sig),
            fmt_float(coords.v_in, sig),
            label.to_string(),
            fmt_float(stats.mean_q, sig),
            fmt_float(stats.mean_p, sig),
            fmt_float(stats.var_q, sig),
            fmt_float(stats.var_p, sig),
            fmt_float(stats.signal_gain, sig),
            fmt_float(stats.fidelity, sig),
            stats.flags.join(";"),
        ]
    };
    vec![row("bright", &report.bright), row("dark", &report.dark)]
}

fn clone_json_rows(coords: RowCoords, report: &CloneReport) -> Vec<serde_json::Value> {
    let row = |label: &str, stats: &CloneStats| {
        json!({
            "delta": coords.delta,
            "alpha2": coords.alpha2,
            "phi": coords.phi,
            "n": coords.n,
            "gain": coords.gain,
            "v_in": coords.v_in,
            "clone": label,
            "mean_q": stats.mean_q,
            "mean_p": stats.mean_p,
            "var_q": stats.var_q,
            "var_p": stats.var_p,
            "gain_signal": stats.signal_gain,
            "fidelity": stats.fidelity,
            "flags": stats.flags,
        })
    };
    vec![row("bright", &report.bright), row("dark", &report.dark)]
}

pub fn clone_run(cfg: &RunConfig, format: OutputFormat) -> Result<Rendered, CliError> {
    let report = run_cloning(&cfg.clone_params()?)
        .map_err(|e| CliError::Config(format!("protocol: {e}")))?;
    let sig = cfg.output.precision;
    let payload = match format {
        OutputFormat::Json => to_json_payload(&report, sig)?,
        OutputFormat::Csv => {
            csv_payload(CLONE_HEADER, &clone_csv_rows(RowCoords::from_protocol(cfg), &report, sig))
        }
    };
    Ok(Rendered::new(payload, 2, "clone"))
}

pub fn sweep_run(cfg: &RunConfig, format: OutputFormat) -> Result<Rendered, CliError> {
    let grid = cfg.sweep_grid();
    let results = sweep(&grid).map_err(|e| CliError::Config(format!("sweep: {e}")))?;
    let sig = cfg.output.precision;
    let coords_of = |point: &polariton_cloning::cloning::SweepPoint| RowCoords {
        delta: point.delta,
        alpha2: point.alpha2,
        phi: point.phi,
        n: point.n_atoms,
        gain: point.gain,
        v_in: point.v_in,
    };
    let rows = results.len() * 2;
    let payload = match format {
        OutputFormat::Csv => {
            let mut all_rows = Vec::with_capacity(rows);
            for (point, report) in &results {
                all_rows.extend(clone_csv_rows(coords_of(point), report, sig));
            }
            csv_payload(CLONE_HEADER, &all_rows)
        }
        OutputFormat::Json => {
            let mut all_rows = Vec::with_capacity(rows);
            for (point, report) in &results {
                all_rows.extend(clone_json_rows(coords_of(point), report));
            }
            to_json_payload(&all_rows, sig)?
        }
    };
    Ok(Rendered::new(payload, rows, "sweep"))
}

#[derive(Serialize)]
struct OracleReport<'a> {
    config: &'a SuiteConfig,
    all_pass: bool,
    checks: &'a [Check],
}

pub fn oracle_run(cfg: &RunConfig, format: OutputFormat) -> Result<Rendered, CliError> {
    let suite = cfg.suite_config();
    let checks = run_suite(&suite).map_err(|e| CliError::Config(format!("oracle: {e}")))?;
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    let sig = cfg.output.precision;
    let payload = match format {
        OutputFormat::Json => to_json_payload(
            &OracleReport { config: &suite, all_pass: failed.is_empty(), checks: &checks },
            sig,
        )?,
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        fmt_float(c.engine_value, sig),
                        fmt_float(c.oracle_value, sig),
                        fmt_float(c.abs_error, sig),
                        fmt_float(c.tolerance, sig),
                        c.pass.to_string(),
                        c.truncation_mass.map(|m| fmt_float(m, sig)).unwrap_or_default(),
                        c.cutoffs
                            .as_ref()
                            .map(|cs| {
                                cs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
                            })
                            .unwrap_or_default(),
                    ]
                })
                .collect();
            csv_payload(ORACLE_HEADER, &rows)
        }
    };
    let mut rendered = Rendered::new(payload, checks.len(), "oracle check");
    rendered.failed_checks = failed;
    Ok(rendered)
}

pub fn readout_run(cfg: &RunConfig, format: OutputFormat) -> Result<Rendered, CliError> {
    if cfg.protocol.delta != 0.0 {
        return Err(CliError::Config(format!(
            "protocol.delta: readout requires zero detuning, got {}",
            cfg.protocol.delta
        )));
    }
    let report = run_cloning(&cfg.clone_params()?)
        .map_err(|e| CliError::Config(format!("protocol: {e}")))?;
    let (t_max, n_points) = cfg.readout_grid();
    let g_eff = cfg.units.g / cfg.units.hbar;
    let schedule = readout_schedule(&report, t_max, n_points, 0.0, g_eff)
        .map_err(|e| CliError::Config(format!("readout: {e}")))?;
    let sig = cfg.output.precision;
    let payload = match format {
        OutputFormat::Json => to_json_payload(&schedule, sig)?,
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = schedule
                .iter()
                .map(|p| {
                    vec![
                        fmt_float(p.t, sig),
                        fmt_float(p.mu_t, sig),
                        fmt_float(p.nu_t, sig),
                        fmt_float(p.optical.mean_q, sig),
                        fmt_float(p.optical.mean_p, sig),
                        fmt_float(p.optical.var_q, sig),
                        fmt_float(p.optical.var_p, sig),
                        fmt_float(p.optical.cov_qp, sig),
                    ]
                })
                .collect();
            csv_payload(READOUT_HEADER, &rows)
        }
    };
    Ok(Rendered::new(payload, schedule.len(), "readout"))
}

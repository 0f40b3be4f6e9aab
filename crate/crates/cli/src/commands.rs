//! Subcommand implementations. Each returns the emitted document as a
//! string so the binary, the tests and the acceptance suite share one path.

use std::path::Path;

use dephase_core::dephasing::{
    optimize, sigma2_closed, sigma2_quadrature_inertial, snr, snr_at_optimal_theta, DephasingResult,
};
use dephase_core::grid::{linspace, logspace};
use dephase_core::interferometer::transfer_f0;
use dephase_core::langevin::{simulate, TrajectoryRecord};
use dephase_core::noise_model::{analytic_cross_spectra, Coupling, CONVENTION};
use dephase_core::phase_mc::{mc_sigma2, samples_per_period, McResult};
use dephase_core::spectral::{cross_psd_welch, estimate_noise_spectra, EstimatedSpectrum};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig, Spacing};
use crate::error::{CliError, CliResult};
use crate::output::{json_document, Table};
use crate::sweep::{run_sweep, SweepSpec};

/// Relative slack allowed between the configured `dt` and the time column
/// of a trajectory file.
const DT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Psd { transfer: bool },
    Simulate,
    EstimatePsd { input: std::path::PathBuf },
    Dephasing,
    Mc,
    Snr,
    Sweep(SweepSpec),
    Optimize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Psd { .. } => "psd",
            Command::Simulate => "simulate",
            Command::EstimatePsd { .. } => "estimate-psd",
            Command::Dephasing => "dephasing",
            Command::Mc => "mc",
            Command::Snr => "snr",
            Command::Sweep(_) => "sweep",
            Command::Optimize => "optimize",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Psd { .. }
            | Command::Simulate
            | Command::EstimatePsd { .. }
            | Command::Sweep(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// Runs `cmd` and renders its output in the configured (or natural) format.
pub fn execute(cmd: &Command, cfg: &RunConfig) -> CliResult<String> {
    let name = cmd.name();
    let format = cfg.format.unwrap_or_else(|| cmd.default_format());
    let table = match cmd {
        Command::Psd { transfer: false } => psd_table(cfg),
        Command::Psd { transfer: true } => transfer_table(cfg),
        Command::Simulate => trajectory_table(&simulate(&cfg.noise, &cfg.sim)?),
        Command::EstimatePsd { input } => estimate_from_file(cfg, input)?,
        Command::Sweep(spec) => run_sweep(cfg, spec)?,
        Command::Dephasing => return render_json(name, cfg, format, dephasing_report(cfg)?),
        Command::Mc => return render_json(name, cfg, format, mc_report(cfg)?),
        Command::Snr => return render_json(name, cfg, format, snr_report(cfg)?),
        Command::Optimize => return render_json(name, cfg, format, optimize_report(cfg)?),
    };
    match format {
        Format::Csv => table.to_csv(name, cfg),
        Format::Json => table.to_json(name, cfg),
    }
}

fn render_json(name: &str, cfg: &RunConfig, format: Format, body: Value) -> CliResult<String> {
    if format == Format::Csv {
        return Err(CliError::Config(format!(
            "output.format: '{name}' produces a JSON document; csv is not available"
        )));
    }
    json_document(name, cfg, body)
}

fn psd_omega(cfg: &RunConfig) -> Vec<f64> {
    let g = cfg.psd_grid;
    match g.spacing {
        Spacing::Linear => linspace(g.omega_min, g.omega_max, g.points),
        Spacing::Log => logspace(g.omega_min, g.omega_max, g.points),
    }
}

/// Analytic acceleration spectra on the configured grid.
pub fn psd_table(cfg: &RunConfig) -> Table {
    let s = analytic_cross_spectra(&cfg.noise, &psd_omega(cfg));
    let mut t = Table::new(&["omega", "Sxx", "Syy", "ReSxy", "ImSxy", "n_avg"]);
    t.notes.push(("convention".into(), CONVENTION.into()));
    t.rows = (0..s.omega.len())
        .map(|i| {
            vec![
                s.omega[i],
                s.sxx[i],
                s.syy[i],
                s.sxy[i].re,
                s.sxy[i].im,
                0.0,
            ]
        })
        .collect();
    t
}

pub fn transfer_table(cfg: &RunConfig) -> Table {
    let w0 = cfg.interferometer.omega0();
    let mut t = Table::new(&["omega", "F0"]);
    t.rows = psd_omega(cfg)
        .into_iter()
        .map(|w| vec![w, transfer_f0(w, w0)])
        .collect();
    t
}

pub fn trajectory_table(rec: &TrajectoryRecord) -> Table {
    let mut cols = vec!["t", "X", "Y", "vX", "vY", "aX", "aY"];
    if rec.noise.is_some() {
        cols.extend(["AX", "AY"]);
    }
    let mut t = Table::new(&cols);
    t.rows = (0..rec.len())
        .map(|i| {
            let mut row = vec![
                rec.t[i], rec.x[i], rec.y[i], rec.vx[i], rec.vy[i], rec.ax[i], rec.ay[i],
            ];
            if let Some((nx, ny)) = &rec.noise {
                row.extend([nx[i], ny[i]]);
            }
            row
        })
        .collect();
    t
}

pub fn spectrum_table(est: &EstimatedSpectrum) -> Table {
    let mut t = Table::new(&["omega", "Sxx", "Syy", "ReSxy", "ImSxy", "n_avg"]);
    t.notes.push(("convention".into(), est.convention.into()));
    t.notes
        .push(("segment_length".into(), est.segment_length.to_string()));
    let n_avg = est.n_averages as f64;
    t.rows = (0..est.omega.len())
        .map(|i| {
            vec![
                est.omega[i],
                est.sxx[i],
                est.syy[i],
                est.sxy[i].re,
                est.sxy[i].im,
                n_avg,
            ]
        })
        .collect();
    t
}

/// In-memory simulate → Welch pipeline.
pub fn estimate_in_memory(cfg: &RunConfig) -> CliResult<Table> {
    let rec = simulate(&cfg.noise, &cfg.sim)?;
    Ok(spectrum_table(&estimate_noise_spectra(&rec, &cfg.welch)?))
}

/// Welch estimate from a trajectory CSV. The sampling step comes from the
/// configuration and must match the file's time column.
pub fn estimate_from_file(cfg: &RunConfig, path: &Path) -> CliResult<Table> {
    let traj = Table::read_csv(path)?;
    let col = |name: &str| {
        traj.column(name)
            .ok_or_else(|| CliError::Config(format!("{}: missing column '{name}'", path.display())))
    };
    let (t, ax, ay) = (col("t")?, col("aX")?, col("aY")?);
    if t.len() >= 2 {
        let file_dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        if ((file_dt - cfg.sim.dt) / cfg.sim.dt).abs() > DT_TOLERANCE {
            return Err(CliError::Config(format!(
                "sim.dt: {} does not match the time step {file_dt} of {}",
                cfg.sim.dt,
                path.display()
            )));
        }
    }
    // The file stores the system's response; the noise seen by the atoms is its negative.
    let x: Vec<f64> = ax.iter().map(|v| -v).collect();
    let y: Vec<f64> = ay.iter().map(|v| -v).collect();
    Ok(spectrum_table(&cross_psd_welch(
        &x, &y, cfg.sim.dt, &cfg.welch,
    )?))
}

fn result_json(r: &DephasingResult) -> Value {
    json!({
        "sigma2": r.sigma2,
        "term_resonant": r.term_resonant,
        "term_zero_freq": r.term_zero_freq,
        "dephasing_factor": r.dephasing_factor,
    })
}

pub fn dephasing_report(cfg: &RunConfig) -> CliResult<Value> {
    let p = &cfg.interferometer;
    let closed = sigma2_closed(p, &cfg.noise)?;
    let quad = sigma2_quadrature_inertial(p, &cfg.noise)?;
    let rel_diff = if quad.sigma2 == 0.0 {
        if closed.sigma2 == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (closed.sigma2 - quad.sigma2).abs() / quad.sigma2.abs()
    };
    Ok(json!({
        "sigma2_closed": closed.sigma2,
        "sigma2_quadrature": quad.sigma2,
        "rel_diff": finite_or_null(rel_diff),
        "terms": {
            "resonant": closed.term_resonant,
            "zero_frequency": closed.term_zero_freq,
        },
        "dephasing_factor": closed.dephasing_factor,
        "dephasing_factor_quadrature": quad.dephasing_factor,
        "closed_form": result_json(&closed),
        "quadrature": result_json(&quad),
    }))
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn mc_result(cfg: &RunConfig) -> CliResult<McResult> {
    let p = &cfg.interferometer;
    let sim = cfg.mc_sim_config(p, &cfg.noise);
    Ok(mc_sigma2(p, &cfg.noise, &sim, cfg.realizations)?)
}

pub fn mc_report(cfg: &RunConfig) -> CliResult<Value> {
    let p = &cfg.interferometer;
    let sim = cfg.mc_sim_config(p, &cfg.noise);
    let r = mc_sigma2(p, &cfg.noise, &sim, cfg.realizations)?;
    let closed = sigma2_closed(p, &cfg.noise).ok().map(|c| c.sigma2);
    let quad = sigma2_quadrature_inertial(p, &cfg.noise)
        .ok()
        .map(|q| q.sigma2);
    Ok(json!({
        "n": r.n,
        "mean": r.mean,
        "variance": r.variance,
        "variance_std_error": r.variance_std_error,
        "re_dephasing": r.re_dephasing,
        "im_dephasing": r.im_dephasing,
        "sigma2_closed_reference": closed,
        "sigma2_quadrature_reference": quad,
        "re_dephasing_std_error": r.re_dephasing_std_error,
        "im_dephasing_std_error": r.im_dephasing_std_error,
        "excess_kurtosis": r.excess_kurtosis,
        "dephasing_unresolved": r.dephasing_unresolved,
        "burn_in": sim.burn_in,
        "n_steps": sim.n_steps,
        "samples_per_period": samples_per_period(p, sim.dt),
    }))
}

pub fn snr_report(cfg: &RunConfig) -> CliResult<Value> {
    let p = &cfg.interferometer;
    let r = snr(p, &cfg.noise, cfg.g)?;
    let quad_sigma = sigma2_quadrature_inertial(p, &cfg.noise)?.sigma2.sqrt();
    let optimal = match cfg.noise.coupling() {
        Coupling::DirectCoupling { .. } | Coupling::Uncoupled => {
            Some(snr_at_optimal_theta(p, &cfg.noise, cfg.g)?)
        }
        Coupling::Coriolis { .. } => None,
    };
    Ok(json!({
        "g": cfg.g,
        "signal_phase": r.signal_phase,
        "sigma": r.sigma,
        "snr": r.snr,
        "snr_at_optimal_theta": optimal,
        "sigma_quadrature": quad_sigma,
        "snr_quadrature": if quad_sigma > 0.0 { json!(r.signal_phase / quad_sigma) } else { Value::Null },
    }))
}

pub fn optimize_report(cfg: &RunConfig) -> CliResult<Value> {
    let o = cfg.optimize;
    let r = optimize(&cfg.interferometer, &cfg.noise, o.vary, (o.lower, o.upper))?;
    Ok(json!({
        "vary": o.vary,
        "lower": o.lower,
        "upper": o.upper,
        "argmin": r.argmin,
        "min_sigma2": r.min_sigma2,
        "flat_objective": r.flat_objective,
    }))
}

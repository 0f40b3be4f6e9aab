//! One-parameter sweeps of the phase variance.

use dephase_core::dephasing::{sigma2_closed, sigma2_quadrature_inertial};
use dephase_core::grid::{linspace, logspace};
use dephase_core::interferometer::InterferometerParams;
use dephase_core::noise_model::{Coupling, NoiseParams};
use dephase_core::phase_mc::{derive_seed, mc_sigma2};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_spacing, Held, RunConfig, Spacing};
use crate::error::{CliError, CliResult};
use crate::output::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    #[serde(rename = "omega0")]
    Omega0,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "k")]
    K,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "S0")]
    S0,
    #[serde(rename = "Omega0")]
    BigOmega0,
    #[serde(rename = "Omega_r")]
    OmegaR,
}

impl SweepParam {
    pub fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "omega0" => SweepParam::Omega0,
            "theta" => SweepParam::Theta,
            "k" => SweepParam::K,
            "gamma" => SweepParam::Gamma,
            "S0" => SweepParam::S0,
            "Omega0" => SweepParam::BigOmega0,
            "Omega_r" => SweepParam::OmegaR,
            _ => {
                return Err(CliError::Config(format!(
                    "sweep.param: unknown parameter '{s}' (expected omega0, theta, k, gamma, S0, Omega0 or Omega_r)"
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Omega0 => "omega0",
            SweepParam::Theta => "theta",
            SweepParam::K => "k",
            SweepParam::Gamma => "gamma",
            SweepParam::S0 => "S0",
            SweepParam::BigOmega0 => "Omega0",
            SweepParam::OmegaR => "Omega_r",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    Closed,
    Quadrature,
    Mc,
}

impl SweepMethod {
    fn parse(s: &str) -> CliResult<Self> {
        match s.trim() {
            "closed" | "closed_form" => Ok(SweepMethod::Closed),
            "quadrature" => Ok(SweepMethod::Quadrature),
            "mc" | "monte_carlo" => Ok(SweepMethod::Mc),
            other => Err(CliError::Config(format!(
                "sweep.methods: unknown method '{other}' (expected closed, quadrature or mc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub methods: Vec<SweepMethod>,
}

/// `start:stop:points[:log|:linear]`.
pub fn parse_range(s: &str) -> CliResult<(f64, f64, usize, Spacing)> {
    let bad = |why: &str| CliError::Config(format!("sweep.range: '{s}': {why}"));
    let parts: Vec<&str> = s.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(bad("expected start:stop:points[:log]"));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| bad("start is not a number"))?;
    let stop: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| bad("stop is not a number"))?;
    let points: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| bad("points is not an integer"))?;
    let spacing = match parts.get(3) {
        Some(sp) => parse_spacing("sweep.range", sp.trim())?,
        None => Spacing::Linear,
    };
    if points < 2 {
        return Err(bad("points must be >= 2"));
    }
    if !(start.is_finite() && stop.is_finite()) || start == stop {
        return Err(bad("start and stop must be finite and distinct"));
    }
    if spacing == Spacing::Log && !(start > 0.0 && stop > 0.0) {
        return Err(bad("log spacing needs positive bounds"));
    }
    Ok((start, stop, points, spacing))
}

pub fn parse_methods(list: &[String]) -> CliResult<Vec<SweepMethod>> {
    let mut out = Vec::new();
    for item in list.iter().flat_map(|s| s.split(',')) {
        let m = SweepMethod::parse(item)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(
            "sweep.methods: at least one method required".into(),
        ));
    }
    Ok(out)
}

impl SweepSpec {
    /// Combines the `[sweep]` section with command-line overrides.
    pub fn resolve(
        cfg: &RunConfig,
        param: Option<&str>,
        range: Option<&str>,
        methods: Option<&[String]>,
    ) -> CliResult<Self> {
        let param = param
            .or(cfg.sweep.param.as_deref())
            .ok_or_else(|| CliError::Config("sweep.param: required (--sweep-param)".into()))?;
        let range = range
            .or(cfg.sweep.range.as_deref())
            .ok_or_else(|| CliError::Config("sweep.range: required (--sweep-range)".into()))?;
        let (start, stop, points, spacing) = parse_range(range)?;
        let default_methods = vec!["closed".to_string(), "quadrature".to_string()];
        let methods = match methods {
            Some(m) => parse_methods(m)?,
            None => parse_methods(cfg.sweep.methods.as_ref().unwrap_or(&default_methods))?,
        };
        Ok(Self {
            param: SweepParam::parse(param)?,
            start,
            stop,
            points,
            spacing,
            methods,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => linspace(self.start, self.stop, self.points),
            Spacing::Log => logspace(self.start, self.stop, self.points),
        }
    }
}

/// Parameters at one sweep value; everything else comes from `cfg`.
pub fn apply(
    cfg: &RunConfig,
    param: SweepParam,
    value: f64,
) -> CliResult<(InterferometerParams, NoiseParams)> {
    let p = cfg.interferometer;
    let n = cfg.noise;
    Ok(match param {
        SweepParam::Omega0 => {
            let moved = match cfg.held {
                Held::Coupling => p.with_omega0(value)?,
                Held::Amplitude => InterferometerParams::new(
                    p.m(),
                    value,
                    p.a0() * p.m() * value * value,
                    p.theta(),
                    p.hbar(),
                )?,
            };
            (moved, n)
        }
        SweepParam::Theta => (p.with_theta(value)?, n),
        SweepParam::K => (p, n.with_coupling(Coupling::DirectCoupling { k: value })?),
        SweepParam::OmegaR => (p, n.with_coupling(Coupling::Coriolis { omega_r: value })?),
        SweepParam::Gamma => (p, n.with_gamma(value)?),
        SweepParam::S0 => (p, n.with_s0(value)?),
        SweepParam::BigOmega0 => (p, NoiseParams::new(value, n.gamma(), n.s0(), n.coupling())?),
    })
}

/// One row per sweep value: the value, then the requested variances.
pub fn run_sweep(cfg: &RunConfig, spec: &SweepSpec) -> CliResult<Table> {
    let mut columns = vec![spec.param.name()];
    for m in &spec.methods {
        match m {
            SweepMethod::Closed => columns.push("sigma2_closed"),
            SweepMethod::Quadrature => columns.push("sigma2_quadrature"),
            SweepMethod::Mc => columns.extend(["sigma2_mc", "sigma2_mc_std_error"]),
        }
    }
    let mut table = Table::new(&columns);
    let values = spec.values();
    table.rows = values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| -> CliResult<Vec<f64>> {
            let (p, n) = apply(cfg, spec.param, v)?;
            let mut row = vec![v];
            for m in &spec.methods {
                match m {
                    SweepMethod::Closed => row.push(sigma2_closed(&p, &n)?.sigma2),
                    SweepMethod::Quadrature => row.push(sigma2_quadrature_inertial(&p, &n)?.sigma2),
                    SweepMethod::Mc => {
                        let mut sim = cfg.mc_sim_config(&p, &n);
                        sim.seed = derive_seed(cfg.sim.seed, i as u64);
                        let r = mc_sigma2(&p, &n, &sim, cfg.realizations)?;
                        row.extend([r.variance, r.variance_std_error]);
                    }
                }
            }
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(table)
}

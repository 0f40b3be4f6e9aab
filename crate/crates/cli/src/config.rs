//! TOML run configuration.
//!
//! Every section and key is optional; unknown keys are rejected. The
//! resolved configuration is written back as TOML in output headers and can
//! be fed to the tool again.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use dephase_core::dephasing::Vary;
use dephase_core::interferometer::{InterferometerParams, HBAR_SI};
use dephase_core::langevin::SimConfig;
use dephase_core::noise_model::{Coupling, NoiseParams};
use dephase_core::phase_mc::samples_per_period;
use dephase_core::spectral::{WelchConfig, Window};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn bad(field: &str, constraint: &str) -> CliError {
    CliError::Config(format!("{field}: {constraint}"))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gc: Option<f64>,
    #[serde(rename = "A0", skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(rename = "Omega0", skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(rename = "Omega_r", skip_serializing_if = "Option::is_none")]
    pub omega_r: Option<f64>,
    #[serde(rename = "S0", skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_noise: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelchSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    /// Default ten damping times.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    /// Steps simulated per realization; default burn-in plus four periods.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    /// `start:stop:points[:log]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

/// The file as written, before defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub interferometer: InterferometerSection,
    pub noise: NoiseSection,
    pub sim: SimSection,
    pub welch: WelchSection,
    pub mc: McSection,
    pub psd: PsdSection,
    pub snr: SnrSection,
    pub optimize: OptimizeSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Normalized,
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizeSpec {
    pub vary: Vary,
    pub lower: f64,
    pub upper: f64,
}

/// Whether a sweep over `omega0` keeps the amplitude or the coupling fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Held {
    Amplitude,
    Coupling,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub units: Units,
    pub interferometer: InterferometerParams,
    pub held: Held,
    pub noise: NoiseParams,
    pub sim: SimConfig,
    pub welch: WelchConfig,
    pub realizations: usize,
    pub mc_burn_in: Option<usize>,
    pub mc_n_steps: Option<usize>,
    pub psd_grid: FrequencyGrid,
    pub g: f64,
    pub optimize: OptimizeSpec,
    pub sweep: SweepSection,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
}

pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let raw: RawConfig = toml::from_str(text)?;
    resolve(&raw)
}

fn positive(field: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(field, "must be > 0"))
    }
}

pub fn resolve(raw: &RawConfig) -> CliResult<RunConfig> {
    let i = &raw.interferometer;
    let units = match i.units.as_deref().unwrap_or("normalized") {
        "normalized" => Units::Normalized,
        "si" => Units::Si,
        _ => {
            return Err(bad(
                "interferometer.units",
                "expected \"normalized\" or \"si\"",
            ))
        }
    };
    let (m, hbar) = match units {
        Units::Normalized => {
            if i.m.is_some() || i.hbar.is_some() {
                return Err(bad(
                    "interferometer.m",
                    "m and hbar are fixed to 1 in normalized units; set units = \"si\"",
                ));
            }
            (1.0, 1.0)
        }
        Units::Si => {
            let m =
                i.m.ok_or_else(|| bad("interferometer.m", "required with units = \"si\""))?;
            if i.omega0.is_none() {
                return Err(bad("interferometer.omega0", "required with units = \"si\""));
            }
            if i.gc.is_none() && i.a0.is_none() {
                return Err(bad(
                    "interferometer.gc",
                    "gc or A0 required with units = \"si\"",
                ));
            }
            (m, i.hbar.unwrap_or(HBAR_SI))
        }
    };
    let omega0 = i.omega0.unwrap_or(1.0);
    let (gc, held) = match (i.gc, i.a0) {
        (Some(_), Some(_)) => return Err(bad("interferometer.gc", "give gc or A0, not both")),
        (Some(gc), None) => (gc, Held::Coupling),
        (None, a0) => (a0.unwrap_or(1.0) * m * omega0 * omega0, Held::Amplitude),
    };
    let interferometer = InterferometerParams::new(m, omega0, gc, i.theta.unwrap_or(0.0), hbar)?;

    let nz = &raw.noise;
    let big_omega = nz.omega0.unwrap_or(1.0);
    let coupling = match nz.variant.as_deref().unwrap_or("direct_coupling") {
        "direct_coupling" | "direct" => {
            if nz.omega_r.is_some() {
                return Err(bad(
                    "noise.Omega_r",
                    "only valid with variant = \"coriolis\"",
                ));
            }
            Coupling::DirectCoupling {
                k: nz.k.unwrap_or(0.0),
            }
        }
        "coriolis" => {
            if nz.k.is_some() {
                return Err(bad(
                    "noise.k",
                    "only valid with variant = \"direct_coupling\"",
                ));
            }
            Coupling::Coriolis {
                omega_r: nz.omega_r.unwrap_or(0.0),
            }
        }
        "uncoupled" => {
            if nz.k.is_some() || nz.omega_r.is_some() {
                return Err(bad(
                    "noise.variant",
                    "uncoupled takes neither k nor Omega_r",
                ));
            }
            Coupling::Uncoupled
        }
        _ => {
            return Err(bad(
                "noise.variant",
                "expected \"direct_coupling\", \"coriolis\" or \"uncoupled\"",
            ))
        }
    };
    let noise = NoiseParams::new(
        big_omega,
        nz.gamma.unwrap_or(0.1),
        nz.s0.unwrap_or(1.0),
        coupling,
    )?;

    let s = &raw.sim;
    let mut sim = SimConfig {
        dt: positive("sim.dt", s.dt.unwrap_or(0.05))?,
        n_steps: s.n_steps.unwrap_or(1 << 20),
        burn_in: s.burn_in,
        seed: s.seed.unwrap_or(0),
        record_noise: s.record_noise.unwrap_or(false),
    };
    sim.validate(&noise)?;
    sim.burn_in = Some(sim.burn_in_for(&noise));

    let w = &raw.welch;
    let welch = WelchConfig {
        n_segments: w.segments.unwrap_or(10),
        overlap_fraction: w.overlap.unwrap_or(0.5),
        window: w.window.as_deref().unwrap_or("hann").parse::<Window>()?,
    };
    if welch.n_segments < 1 {
        return Err(bad("welch.segments", "must be >= 1"));
    }
    if !(0.0..=0.9).contains(&welch.overlap_fraction) {
        return Err(bad("welch.overlap", "must lie in [0, 0.9]"));
    }

    let realizations = raw.mc.realizations.unwrap_or(500);
    if realizations < 2 {
        return Err(bad("mc.realizations", "must be >= 2"));
    }

    let p = &raw.psd;
    let psd_grid = FrequencyGrid {
        omega_min: positive("psd.omega_min", p.omega_min.unwrap_or(1e-2 * big_omega))?,
        omega_max: positive("psd.omega_max", p.omega_max.unwrap_or(1e2 * big_omega))?,
        points: p.points.unwrap_or(2001),
        spacing: parse_spacing("psd.spacing", p.spacing.as_deref().unwrap_or("log"))?,
    };
    if psd_grid.points < 2 || psd_grid.omega_max <= psd_grid.omega_min {
        return Err(bad(
            "psd.points",
            "need points >= 2 and omega_max > omega_min",
        ));
    }

    let o = &raw.optimize;
    let vary: Vary = o.vary.as_deref().unwrap_or("theta").parse()?;
    let (lower, upper) = match (vary, o.lower, o.upper) {
        (_, Some(l), Some(u)) => (l, u),
        (Vary::Theta, None, None) => (-FRAC_PI_2, FRAC_PI_2),
        _ => {
            return Err(bad(
                "optimize.lower",
                "lower and upper are required unless vary = \"theta\"",
            ))
        }
    };

    let format = match raw.output.format.as_deref() {
        None => None,
        Some("csv") => Some(Format::Csv),
        Some("json") => Some(Format::Json),
        Some(_) => return Err(bad("output.format", "expected \"csv\" or \"json\"")),
    };

    Ok(RunConfig {
        units,
        interferometer,
        held,
        noise,
        sim,
        welch,
        realizations,
        mc_burn_in: raw.mc.burn_in,
        mc_n_steps: raw.mc.n_steps,
        psd_grid,
        g: raw.snr.g.unwrap_or(1.0),
        optimize: OptimizeSpec { vary, lower, upper },
        sweep: raw.sweep.clone(),
        output_path: raw.output.path.clone(),
        format,
    })
}

pub fn parse_spacing(field: &str, s: &str) -> CliResult<Spacing> {
    match s {
        "linear" | "lin" => Ok(Spacing::Linear),
        "log" => Ok(Spacing::Log),
        _ => Err(bad(field, "expected \"linear\" or \"log\"")),
    }
}

fn vary_name(v: Vary) -> &'static str {
    match v {
        Vary::Theta => "theta",
        Vary::K => "k",
        Vary::Gamma => "gamma",
    }
}

impl RunConfig {
    /// Simulation setup for one Monte-Carlo realization.
    pub fn mc_sim_config(&self, p: &InterferometerParams, n: &NoiseParams) -> SimConfig {
        let burn = self.mc_burn_in.unwrap_or_else(|| {
            if n.gamma() > 0.0 {
                (10.0 / (n.gamma() * self.sim.dt)).ceil() as usize
            } else {
                1000
            }
        });
        let n_steps = self
            .mc_n_steps
            .unwrap_or(burn + 4 * samples_per_period(p, self.sim.dt) + 1);
        SimConfig {
            n_steps,
            burn_in: Some(burn),
            record_noise: false,
            ..self.sim
        }
    }

    /// Every parameter with its resolved value, in input syntax.
    pub fn to_raw(&self) -> RawConfig {
        let p = &self.interferometer;
        let (k, omega_r, variant) = match self.noise.coupling() {
            Coupling::DirectCoupling { k } => (Some(k), None, "direct_coupling"),
            Coupling::Coriolis { omega_r } => (None, Some(omega_r), "coriolis"),
            Coupling::Uncoupled => (None, None, "uncoupled"),
        };
        let si = self.units == Units::Si;
        RawConfig {
            interferometer: InterferometerSection {
                units: Some(if si { "si" } else { "normalized" }.into()),
                m: si.then(|| p.m()),
                hbar: si.then(|| p.hbar()),
                omega0: Some(p.omega0()),
                gc: (self.held == Held::Coupling).then(|| p.gc()),
                a0: (self.held == Held::Amplitude).then(|| p.a0()),
                theta: Some(p.theta()),
            },
            noise: NoiseSection {
                variant: Some(variant.into()),
                omega0: Some(self.noise.omega0()),
                gamma: Some(self.noise.gamma()),
                k,
                omega_r,
                s0: Some(self.noise.s0()),
            },
            sim: SimSection {
                dt: Some(self.sim.dt),
                n_steps: Some(self.sim.n_steps),
                burn_in: self.sim.burn_in,
                seed: Some(self.sim.seed),
                record_noise: Some(self.sim.record_noise),
            },
            welch: WelchSection {
                segments: Some(self.welch.n_segments),
                overlap: Some(self.welch.overlap_fraction),
                window: Some(
                    match self.welch.window {
                        Window::Hann => "hann",
                        Window::Rectangular => "rectangular",
                    }
                    .into(),
                ),
            },
            mc: McSection {
                realizations: Some(self.realizations),
                burn_in: self.mc_burn_in,
                n_steps: self.mc_n_steps,
            },
            psd: PsdSection {
                omega_min: Some(self.psd_grid.omega_min),
                omega_max: Some(self.psd_grid.omega_max),
                points: Some(self.psd_grid.points),
                spacing: Some(
                    match self.psd_grid.spacing {
                        Spacing::Linear => "linear",
                        Spacing::Log => "log",
                    }
                    .into(),
                ),
            },
            snr: SnrSection { g: Some(self.g) },
            optimize: OptimizeSection {
                vary: Some(vary_name(self.optimize.vary).into()),
                lower: Some(self.optimize.lower),
                upper: Some(self.optimize.upper),
            },
            sweep: self.sweep.clone(),
            output: OutputSection {
                path: self.output_path.clone(),
                format: self.format.map(|f| {
                    match f {
                        Format::Csv => "csv",
                        Format::Json => "json",
                    }
                    .into()
                }),
            },
        }
    }
}

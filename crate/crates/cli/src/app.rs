//! Argument parsing and dispatch.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{execute, Command};
use crate::config::{parse_config, Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::sweep::SweepSpec;

#[derive(Debug, Parser)]
#[command(
    name = "dephase",
    version,
    about = "Phase noise of atom interferometers in a coupled-oscillator vibration model"
)]
pub struct Cli {
    /// TOML configuration; all defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_name = "N")]
    pub realizations: Option<usize>,

    /// csv or json.
    #[arg(long, global = true, value_name = "FORMAT")]
    pub format: Option<String>,

    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Analytic acceleration spectra.
    Psd {
        /// Emit the transfer function instead.
        #[arg(long)]
        transfer: bool,
    },
    /// Langevin trajectory.
    Simulate,
    /// Welch spectra of a trajectory file.
    EstimatePsd {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
    /// Phase variance by closed form and quadrature.
    Dephasing,
    /// Monte-Carlo phase statistics.
    Mc,
    /// Gravimeter signal-to-noise ratio.
    Snr,
    /// Phase variance over a parameter range.
    Sweep {
        #[arg(long, value_name = "NAME")]
        sweep_param: Option<String>,
        /// start:stop:points[:log]
        #[arg(long, value_name = "RANGE", allow_hyphen_values = true)]
        sweep_range: Option<String>,
        /// Comma-separated subset of closed, quadrature, mc.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Minimize the phase variance over one parameter.
    Optimize,
}

/// Configuration after applying command-line overrides.
pub fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    if let Some(n) = cli.realizations {
        if n < 2 {
            return Err(CliError::Config("mc.realizations: must be >= 2".into()));
        }
        cfg.realizations = n;
    }
    if let Some(f) = &cli.format {
        cfg.format = Some(match f.as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            _ => {
                return Err(CliError::Config(
                    "output.format: expected \"csv\" or \"json\"".into(),
                ))
            }
        });
    }
    if let Some(out) = &cli.out {
        cfg.output_path = Some(out.clone());
    }
    Ok(cfg)
}

pub fn command(cli: &Cli, cfg: &RunConfig) -> CliResult<Command> {
    Ok(match &cli.command {
        Sub::Psd { transfer } => Command::Psd {
            transfer: *transfer,
        },
        Sub::Simulate => Command::Simulate,
        Sub::EstimatePsd { input } => Command::EstimatePsd {
            input: input.clone(),
        },
        Sub::Dephasing => Command::Dephasing,
        Sub::Mc => Command::Mc,
        Sub::Snr => Command::Snr,
        Sub::Sweep {
            sweep_param,
            sweep_range,
            methods,
        } => Command::Sweep(SweepSpec::resolve(
            cfg,
            sweep_param.as_deref(),
            sweep_range.as_deref(),
            methods.as_deref(),
        )?),
        Sub::Optimize => Command::Optimize,
    })
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load_config(cli)?;
    let cmd = command(cli, &cfg)?;
    let doc = execute(&cmd, &cfg)?;
    match &cfg.output_path {
        Some(path) => fs::write(path, doc).map_err(|e| CliError::io(path.display(), e)),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(doc.as_bytes())
                .map_err(|e| CliError::io("stdout", e))
        }
    }
}

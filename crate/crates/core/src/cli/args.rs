//! Command-line flags and the equivalent `key=value` configuration file.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};

use super::export::Format;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandName {
    Case1,
    Case2,
    R3,
    General,
    OracleCheck,
    Sweep,
    Recurrence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhasesArg {
    Real,
    Random,
}

/// Every setting is optional here so that flags can be layered over a
/// configuration file; defaults are applied when resolving a `RunConfig`.
#[derive(Debug, Clone, Default, PartialEq, Parser)]
#[command(name = "spinbath", version, about = "Exact spin-bath decoherence simulator")]
pub struct Overrides {
    /// What to compute.
    #[arg(value_enum)]
    pub command: Option<CommandName>,

    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of bath particles.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of observed bath particles (case2, r3).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of grid points, both ends included.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub g_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g_max: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub dwell: Option<f64>,
    /// Output file; data goes to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// `key=value` file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub phases: Option<PhasesArg>,

    /// Number of seeds (oracle-check, sweep).
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Largest bath size in oracle-check; sizes cycle through 1..=n-max.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Time points per configuration in oracle-check.
    #[arg(long)]
    pub points: Option<usize>,
    /// Revivals are only reported after this time (recurrence).
    #[arg(long)]
    pub after: Option<f64>,
    /// Bath sizes for the median-|r1| trend printed by sweep, e.g. `10,50,100`.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    /// Probe time for the sweep trend.
    #[arg(long, allow_negative_numbers = true)]
    pub t_probe: Option<f64>,
    /// Late-time window for fluctuation statistics, `start,end`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    /// Block for every observed bath particle, `uu,dd,od_re,od_im`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub block: Option<Vec<f64>>,
    /// System block for `general`, `uu,dd,od_re,od_im`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub system_block: Option<Vec<f64>>,
}

impl Overrides {
    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            command: self.command.or(base.command),
            seed: self.seed.or(base.seed),
            n: self.n.or(base.n),
            p: self.p.or(base.p),
            t_min: self.t_min.or(base.t_min),
            t_max: self.t_max.or(base.t_max),
            steps: self.steps.or(base.steps),
            g_min: self.g_min.or(base.g_min),
            g_max: self.g_max.or(base.g_max),
            threshold: self.threshold.or(base.threshold),
            dwell: self.dwell.or(base.dwell),
            output: self.output.or(base.output),
            format: self.format.or(base.format),
            config: self.config.or(base.config),
            phases: self.phases.or(base.phases),
            seeds: self.seeds.or(base.seeds),
            n_max: self.n_max.or(base.n_max),
            points: self.points.or(base.points),
            after: self.after.or(base.after),
            n_values: self.n_values.or(base.n_values),
            t_probe: self.t_probe.or(base.t_probe),
            window: self.window.or(base.window),
            block: self.block.or(base.block),
            system_block: self.system_block.or(base.system_block),
        }
    }
}

/// Parse a `key=value` file. Blank lines and lines starting with `#` are
/// skipped; keys are the long flag names (`t-max`, or `t_max`).
pub fn parse_config_file(path: &Path) -> Result<Overrides> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: display.clone(),
        line: 0,
        message: format!("cannot read configuration file: {e}"),
    })?;
    let err = |line: usize, message: String| Error::Config {
        path: display.clone(),
        line,
        message,
    };

    let mut merged = Overrides::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected key=value, got {trimmed:?}")))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(err(line, "nested configuration files are not supported".into()));
        }
        let args: Vec<String> = if key == "command" {
            vec!["spinbath".into(), value.into()]
        } else {
            vec!["spinbath".into(), format!("--{key}"), value.into()]
        };
        let parsed = Overrides::try_parse_from(&args).map_err(|e| match e.kind() {
            ErrorKind::UnknownArgument => err(line, format!("unknown key `{key}`")),
            _ => err(line, format!("invalid value for `{key}`: {}", first_line(&e.to_string()))),
        })?;
        merged = parsed.over(merged);
    }
    Ok(merged)
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("").trim_start_matches("error: ")
}

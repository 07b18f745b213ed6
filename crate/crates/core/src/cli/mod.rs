//! The `spinbath` command line: one subcommand per reproduced quantity.
//!
//! Exit codes: 0 success, 1 I/O failure or a failed oracle check, 2 invalid
//! arguments or configuration, 3 oracle resource limit.

mod args;
pub mod export;

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use num_complex::Complex64;

pub use args::{parse_config_file, CommandName, Overrides, PhasesArg};
pub use export::{read_csv, read_json, write_series, write_series_file, Format};

use crate::closed_form::{evaluate_series, expectation, DecoherenceSeries, Quantity};
use crate::ensembles::{
    decay_time, fluctuation_std, n_trend, random_observable, recurrence_scan, run_ensemble,
    sample_config, sample_generic_config, EnsembleSettings, Phases, SamplerSpec, DEFAULT_DECAY_THRESHOLD, DEFAULT_DWELL,
};
use crate::error::{Error, Result};
use crate::model::{HermitianBlock2, ObservableSpec, TimeGrid};
use crate::oracle::{build_observable, oracle_expectation_complex, MAX_ORACLE_N};

/// Agreement required by `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

const DEFAULT_SEED: u64 = 42;
const DEFAULT_N: usize = 200;
const DEFAULT_T_MAX: f64 = 50.0;
const DEFAULT_STEPS: usize = 2000;
const DEFAULT_RECURRENCE_THRESHOLD: f64 = 0.5;
const DEFAULT_RECURRENCE_AFTER: f64 = 5.0;
const DEFAULT_SWEEP_SEEDS: usize = 20;
const DEFAULT_WINDOW_START: f64 = 10.0;

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandName,
    pub sampler: SamplerSpec,
    pub grid: TimeGrid,
    /// Observed particles; present iff the command is `case2` or `r3`.
    pub p: Option<usize>,
    pub system_block: Option<HermitianBlock2>,
    pub block: Option<HermitianBlock2>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threshold: f64,
    pub dwell: f64,
    pub seeds: usize,
    pub n_max: usize,
    pub points: usize,
    pub after: f64,
    pub n_values: Option<Vec<usize>>,
    pub t_probe: f64,
    pub window: (f64, f64),
}

fn block_from(values: Option<Vec<f64>>, flag: &str) -> Result<Option<HermitianBlock2>> {
    match values.as_deref() {
        None => Ok(None),
        Some(&[uu, dd, re, im]) => {
            let block = HermitianBlock2::new(uu, dd, Complex64::new(re, im));
            if !block.is_finite() {
                return Err(Error::invalid(format!("--{flag} entries must be finite")));
            }
            Ok(Some(block))
        }
        Some(other) => Err(Error::invalid(format!(
            "--{flag} takes four numbers uu,dd,od_re,od_im, got {}",
            other.len()
        ))),
    }
}

impl RunConfig {
    /// Apply defaults and check command-specific constraints.
    pub fn resolve(o: Overrides) -> Result<Self> {
        let command = o
            .command
            .ok_or_else(|| Error::invalid("no command given (flag or `command=` key)"))?;

        let needs_p = matches!(command, CommandName::Case2 | CommandName::R3);
        match (needs_p, o.p) {
            (true, None) => return Err(Error::invalid(format!("{command:?} requires --p"))),
            (false, Some(_)) => {
                return Err(Error::invalid(format!("--p only applies to case2 and r3, not {command:?}")))
            }
            _ => {}
        }

        let sampler = SamplerSpec {
            seed: o.seed.unwrap_or(DEFAULT_SEED),
            n: o.n.unwrap_or(DEFAULT_N),
            g_min: o.g_min.unwrap_or(0.0),
            g_max: o.g_max.unwrap_or(1.0),
            phases: match o.phases {
                Some(PhasesArg::Random) => Phases::Random,
                _ => Phases::Real,
            },
            system: None,
        };
        sampler.validate()?;

        let t_min = o.t_min.unwrap_or(0.0);
        let t_max = o.t_max.unwrap_or(DEFAULT_T_MAX);
        let grid = TimeGrid::new(t_min, t_max, o.steps.unwrap_or(DEFAULT_STEPS))?;

        if let Some(p) = o.p {
            if p == 0 || p > sampler.n {
                return Err(Error::invalid(format!("--p {p} must satisfy 1 <= p <= n = {}", sampler.n)));
            }
        }

        let window = match o.window.as_deref() {
            None => (DEFAULT_WINDOW_START.min(t_max), t_max),
            Some(&[a, b]) if a <= b => (a, b),
            Some(w) => return Err(Error::invalid(format!("--window needs start,end with start <= end, got {w:?}"))),
        };

        let recurrence = command == CommandName::Recurrence;
        let threshold = o.threshold.unwrap_or(if recurrence {
            DEFAULT_RECURRENCE_THRESHOLD
        } else {
            DEFAULT_DECAY_THRESHOLD
        });
        if !(threshold > 0.0) {
            return Err(Error::invalid("--threshold must be positive"));
        }
        let dwell = o.dwell.unwrap_or(DEFAULT_DWELL);
        if !(dwell >= 0.0) {
            return Err(Error::invalid("--dwell must be non-negative"));
        }

        let seeds = o.seeds.unwrap_or(DEFAULT_SWEEP_SEEDS);
        let n_max = o.n_max.unwrap_or(10);
        let points = o.points.unwrap_or(100);
        if seeds == 0 || n_max == 0 || points == 0 {
            return Err(Error::invalid("--seeds, --n-max and --points must be positive"));
        }

        Ok(Self {
            command,
            sampler,
            grid,
            p: o.p,
            system_block: block_from(o.system_block, "system-block")?,
            block: block_from(o.block, "block")?,
            output: o.output,
            format: o.format.unwrap_or_default(),
            threshold,
            dwell,
            seeds,
            n_max,
            points,
            after: o.after.unwrap_or(DEFAULT_RECURRENCE_AFTER),
            n_values: o.n_values,
            t_probe: o.t_probe.unwrap_or(1.0),
            window,
        })
    }

    /// Read `--config` if present and layer the flags over it.
    pub fn from_overrides(flags: Overrides) -> Result<Self> {
        let merged = match flags.config.clone() {
            Some(path) => flags.over(parse_config_file(&path)?),
            None => flags,
        };
        Self::resolve(merged)
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub series: Option<DecoherenceSeries>,
    /// Human-readable summary, one line per entry.
    pub summary: Vec<String>,
    /// False when an oracle check exceeded its tolerance.
    pub passed: bool,
}

fn fmt_opt(t: Option<f64>) -> String {
    t.map_or_else(|| "none".to_string(), |t| format!("{t}"))
}

fn observed_blocks(config: &RunConfig, p: usize) -> Vec<HermitianBlock2> {
    match config.block {
        Some(b) => vec![b; p],
        None => random_observable(config.sampler.seed, p).particle_blocks,
    }
}

/// Execute a resolved configuration without touching the filesystem.
pub fn compute(config: &RunConfig) -> Result<RunOutcome> {
    let grid = &config.grid;
    let decay = |s: &DecoherenceSeries| decay_time(s, config.threshold, config.dwell);
    let window_std = |s: &DecoherenceSeries| -> Result<String> {
        Ok(match fluctuation_std(s, config.window) {
            Ok(v) => format!("{v:e}"),
            Err(_) => "n/a".into(),
        })
    };

    match config.command {
        CommandName::Case1 => {
            let bath = sample_config(&config.sampler)?;
            let series = evaluate_series(&Quantity::R1, grid, &bath)?;
            let abs = DecoherenceSeries::from_real("abs", series.times.clone(), series.abs())?;
            let summary = vec![format!(
                "case1 seed={} n={}: decay_time={} fluctuation_std|r1|={}",
                config.sampler.seed,
                bath.n(),
                fmt_opt(decay(&series)?),
                window_std(&abs)?
            )];
            Ok(RunOutcome { series: Some(series), summary, passed: true })
        }
        CommandName::Case2 => {
            let p = config.p.expect("resolved");
            let bath = sample_config(&config.sampler)?;
            let series = evaluate_series(&Quantity::Case2(observed_blocks(config, p)), grid, &bath)?;
            let re = series.re();
            let (lo, hi) = re.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            let summary = vec![format!("case2 seed={} n={} p={p}: min={lo:e} max={hi:e}", config.sampler.seed, bath.n())];
            Ok(RunOutcome { series: Some(series), summary, passed: true })
        }
        CommandName::R3 => {
            let p = config.p.expect("resolved");
            let bath = sample_config(&config.sampler)?;
            let series = evaluate_series(&Quantity::R3 { p }, grid, &bath)?;
            let summary = vec![format!(
                "r3 seed={} n={} p={p}: decay_time={} fluctuation_std={}",
                config.sampler.seed,
                bath.n(),
                fmt_opt(decay(&series)?),
                window_std(&series)?
            )];
            Ok(RunOutcome { series: Some(series), summary, passed: true })
        }
        CommandName::General => {
            let bath = sample_config(&config.sampler)?;
            let random = random_observable(config.sampler.seed, bath.n());
            let obs = ObservableSpec::new(
                config.system_block.unwrap_or(random.system),
                match config.block {
                    Some(b) => vec![b; bath.n()],
                    None => random.particle_blocks,
                },
            );
            let series = evaluate_series(&Quantity::Expectation(obs), grid, &bath)?;
            let summary = vec![format!(
                "general seed={} n={}: <O>(t_min)={:e} <O>(t_max)={:e}",
                config.sampler.seed,
                bath.n(),
                series.values[0].re,
                series.values[series.len() - 1].re
            )];
            Ok(RunOutcome { series: Some(series), summary, passed: true })
        }
        CommandName::OracleCheck => oracle_check(config),
        CommandName::Sweep => {
            let settings = EnsembleSettings {
                seeds: config.seeds,
                window: config.window,
                threshold: config.threshold,
                dwell: config.dwell,
            };
            let stats = run_ensemble(&config.sampler, &settings, |bath| evaluate_series(&Quantity::R1, grid, bath))?;
            let mut summary = vec![format!(
                "sweep seeds={}..{} n={}: median |r1| decay_time={} fluctuation_std={:e}",
                config.sampler.seed,
                config.sampler.seed.wrapping_add(config.seeds as u64 - 1),
                config.sampler.n,
                fmt_opt(stats.decay_time),
                stats.fluctuation_std
            )];
            if let Some(n_values) = &config.n_values {
                for (n, m) in n_trend(config.seeds, n_values, config.t_probe, &config.sampler)? {
                    summary.push(format!("trend n={n} t={} median|r1|={m:e}", config.t_probe));
                }
            }
            Ok(RunOutcome { series: Some(stats.median_abs), summary, passed: true })
        }
        CommandName::Recurrence => {
            let bath = sample_config(&config.sampler)?;
            let series = evaluate_series(&Quantity::R1, grid, &bath)?;
            let hits = recurrence_scan(&series, config.threshold, config.after)?;
            let first: Vec<String> = hits.iter().take(5).map(|t| format!("{t}")).collect();
            let summary = vec![format!(
                "recurrence seed={} n={}: {} grid points with |r1| > {} after t={} (first: [{}])",
                config.sampler.seed,
                bath.n(),
                hits.len(),
                config.threshold,
                config.after,
                first.join(", ")
            )];
            Ok(RunOutcome { series: Some(series), summary, passed: true })
        }
    }
}

/// Closed form against brute force on `seeds` random baths with sizes
/// cycling through `1..=n_max`, random phases, random `|a|²`, and random
/// product observables.
fn oracle_check(config: &RunConfig) -> Result<RunOutcome> {
    if config.n_max > MAX_ORACLE_N {
        return Err(Error::ResourceLimit {
            n: config.n_max,
            cap: MAX_ORACLE_N,
        });
    }
    let grid = TimeGrid::new(config.grid.t_start(), config.grid.t_end(), config.points)?;
    let mut summary = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_imag = 0.0f64;
    for k in 0..config.seeds {
        let seed = config.sampler.seed.wrapping_add(k as u64);
        let n = 1 + k % config.n_max;
        let bath = sample_generic_config(seed, n, &config.sampler)?;
        let obs = random_observable(seed, n);
        let dense = build_observable(&obs)?;
        let mut max_diff = 0.0f64;
        for t in grid.times() {
            let brute = oracle_expectation_complex(&bath, &dense, t)?;
            let closed = expectation(t, &bath, &obs)?;
            max_diff = max_diff.max((closed - brute.re).abs());
            worst_imag = worst_imag.max(brute.im.abs());
        }
        worst = worst.max(max_diff);
        summary.push(format!("seed={seed} n={n}: max |engine - oracle| = {max_diff:e}"));
    }
    let passed = worst < ORACLE_TOLERANCE;
    summary.push(format!(
        "oracle-check {}: max |engine - oracle| = {worst:e} (tolerance {ORACLE_TOLERANCE:e}), max |Im oracle| = {worst_imag:e}",
        if passed { "PASS" } else { "FAIL" }
    ));
    Ok(RunOutcome { series: None, summary, passed })
}

/// Run and write outputs; the summary goes to stdout when data goes to a
/// file, to stderr when data goes to stdout.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let outcome = compute(config)?;
    if let Some(series) = &outcome.series {
        match &config.output {
            Some(path) => write_series_file(series, config.format, path)?,
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                write_series(series, config.format, &mut lock)?;
                lock.flush()?;
            }
        }
    }
    let to_stdout = config.output.is_some() || outcome.series.is_none();
    for line in &outcome.summary {
        if to_stdout {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(outcome)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Config { .. } => 2,
        Error::ResourceLimit { .. } => 3,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = match Overrides::try_parse_from(args) {
        Ok(flags) => flags,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match RunConfig::from_overrides(flags).and_then(|c| run(&c)) {
        Ok(outcome) if outcome.passed => 0,
        Ok(_) => 1,
        Err(e) => {
            eprintln!("spinbath: {e}");
            exit_code(&e)
        }
    }
}

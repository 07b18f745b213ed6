//! Seeded baths and statistics over ensembles of them.
//!
//! Sampling is prefix-stable: particle `i` draws from its own ChaCha stream
//! (`i + 1`; stream 0 belongs to `P`), so the first `p` particles are the same
//! for every `n ≥ p`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closed_form::{r1, DecoherenceSeries};
use crate::error::{Error, Result};
use crate::model::{BathParticle, HermitianBlock2, ObservableSpec, SpinBathConfig};

pub const DEFAULT_DECAY_THRESHOLD: f64 = 0.05;
pub const DEFAULT_DWELL: f64 = 5.0;

/// Streams at or above this offset are reserved for random observables.
const OBSERVABLE_STREAM_BASE: u64 = 1 << 40;
const GENERIC_SYSTEM_STREAM: u64 = (1 << 40) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phases {
    /// All coefficients real and non-negative.
    #[default]
    Real,
    /// Every coefficient gets an independent uniform phase in `[0, 2π)`.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSpec {
    pub seed: u64,
    pub n: usize,
    pub g_min: f64,
    pub g_max: f64,
    pub phases: Phases,
    /// `(a, b)` override; defaults to `a = b = 1/√2` (with random phases if
    /// requested).
    pub system: Option<(Complex64, Complex64)>,
}

impl SamplerSpec {
    /// Couplings uniform in `(0, 1]`, real coefficients, `a = b = 1/√2`.
    pub fn new(seed: u64, n: usize) -> Self {
        Self {
            seed,
            n,
            g_min: 0.0,
            g_max: 1.0,
            phases: Phases::Real,
            system: None,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("sampler needs n >= 1"));
        }
        if !(self.g_min.is_finite() && self.g_max.is_finite()) || !(self.g_min < self.g_max) {
            return Err(Error::invalid(format!(
                "sampler needs finite g_min < g_max, got [{}, {}]",
                self.g_min, self.g_max
            )));
        }
        Ok(())
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, TAU * rng.random::<f64>())
}

/// Draw a bath: `|αᵢ|² ~ U[0,1)`, `|βᵢ|² = 1 − |αᵢ|²`,
/// `gᵢ ~ U(g_min, g_max]`.
pub fn sample_config(spec: &SamplerSpec) -> Result<SpinBathConfig> {
    spec.validate()?;

    let particles = (0..spec.n)
        .map(|i| {
            let mut rng = stream(spec.seed, i as u64 + 1);
            let up: f64 = rng.random();
            let u: f64 = rng.random();
            let g = spec.g_max - (spec.g_max - spec.g_min) * u;
            let mut alpha = Complex64::new(up.sqrt(), 0.0);
            let mut beta = Complex64::new((1.0 - up).sqrt(), 0.0);
            if spec.phases == Phases::Random {
                alpha *= random_phase(&mut rng);
                beta *= random_phase(&mut rng);
            }
            BathParticle::new(alpha, beta, g)
        })
        .collect();

    let (mut a, mut b) = spec
        .system
        .unwrap_or((Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)));
    if spec.phases == Phases::Random {
        let mut rng = stream(spec.seed, 0);
        a *= random_phase(&mut rng);
        b *= random_phase(&mut rng);
    }
    Ok(SpinBathConfig::new(a, b, particles))
}

/// Like [`sample_config`] with random phases and a random `|a|²`, so that
/// every term of the general expectation value is exercised.
pub fn sample_generic_config(seed: u64, n: usize, template: &SamplerSpec) -> Result<SpinBathConfig> {
    let up: f64 = stream(seed, GENERIC_SYSTEM_STREAM).random();
    let spec = SamplerSpec {
        seed,
        n,
        phases: Phases::Random,
        system: Some((Complex64::new(up.sqrt(), 0.0), Complex64::new((1.0 - up).sqrt(), 0.0))),
        ..*template
    };
    sample_config(&spec)
}

/// A random Hermitian block: diagonal entries in `[-1, 1)`, off-diagonal
/// real and imaginary parts in `[-1, 1)`.
pub fn random_block(rng: &mut impl Rng) -> HermitianBlock2 {
    let mut u = || 2.0 * rng.random::<f64>() - 1.0;
    let uu = u();
    let dd = u();
    let re = u();
    let im = u();
    HermitianBlock2::new(uu, dd, Complex64::new(re, im))
}

/// A seeded random product observable on `n` bath particles, also
/// prefix-stable in the particle index.
pub fn random_observable(seed: u64, n: usize) -> ObservableSpec {
    let system = random_block(&mut stream(seed, OBSERVABLE_STREAM_BASE));
    let blocks = (0..n)
        .map(|i| random_block(&mut stream(seed, OBSERVABLE_STREAM_BASE + 1 + i as u64)))
        .collect();
    ObservableSpec::new(system, blocks)
}

/// First grid time `t*` with `|value| < threshold` at every grid point of
/// `[t*, t* + dwell]`, the window lying inside the grid.
pub fn decay_time(series: &DecoherenceSeries, threshold: f64, dwell: f64) -> Result<Option<f64>> {
    if !(threshold > 0.0) {
        return Err(Error::invalid("decay threshold must be positive"));
    }
    if !(dwell >= 0.0) {
        return Err(Error::invalid("dwell must be non-negative"));
    }
    let (first, last) = match (series.times.first(), series.times.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Ok(None),
    };
    if dwell > last - first {
        return Err(Error::invalid(format!(
            "dwell {dwell} is longer than the series span {}",
            last - first
        )));
    }
    let abs = series.abs();
    // Scan backwards: `run_end[k]` is the last time of the below-threshold
    // run containing k.
    let mut run_end = None;
    let mut best = None;
    for k in (0..abs.len()).rev() {
        if abs[k] < threshold {
            let end = *run_end.get_or_insert(series.times[k]);
            if series.times[k] + dwell <= end {
                best = Some(series.times[k]);
            }
        } else {
            run_end = None;
        }
    }
    Ok(best)
}

/// Population standard deviation of the real part over grid points in
/// `[t_a, t_b]`.
pub fn fluctuation_std(series: &DecoherenceSeries, window: (f64, f64)) -> Result<f64> {
    let (ta, tb) = window;
    let values: Vec<f64> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= ta && **t <= tb)
        .map(|(_, v)| v.re)
        .collect();
    if values.len() < 2 {
        return Err(Error::invalid(format!(
            "window [{ta}, {tb}] holds {} grid points, need at least 2",
            values.len()
        )));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    Ok(var.sqrt())
}

/// Grid times after `after` where `|value|` exceeds `threshold`.
pub fn recurrence_scan(series: &DecoherenceSeries, threshold: f64, after: f64) -> Result<Vec<f64>> {
    match (series.times.first(), series.times.last()) {
        (Some(&f), Some(&l)) if after >= f && after <= l => {}
        _ => {
            return Err(Error::invalid(format!(
                "recurrence scan start {after} lies outside the series"
            )))
        }
    }
    Ok(series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, v)| **t > after && v.norm() > threshold)
        .map(|(t, _)| *t)
        .collect())
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Median over seeds `template.seed .. template.seed + seeds` of
/// `|r₁(t_probe)|`, for each bath size in `n_values` (in the given order).
pub fn n_trend(
    seeds: usize,
    n_values: &[usize],
    t_probe: f64,
    template: &SamplerSpec,
) -> Result<Vec<(usize, f64)>> {
    if t_probe == 0.0 {
        return Err(Error::invalid("t_probe must be non-zero: r1(0) = 1 for every bath"));
    }
    if seeds == 0 {
        return Err(Error::invalid("n_trend needs at least one seed"));
    }
    n_values
        .iter()
        .map(|&n| {
            let mut mags = (0..seeds as u64)
                .into_par_iter()
                .map(|k| {
                    let spec = template.with_seed(template.seed.wrapping_add(k)).with_n(n);
                    Ok(r1(t_probe, &sample_config(&spec)?).norm())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((n, median(&mut mags)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub per_seed_series: Vec<DecoherenceSeries>,
    /// Pointwise median of `|value|` over seeds.
    pub median_abs: DecoherenceSeries,
    /// Standard deviation of `median_abs` over the late-time window.
    pub fluctuation_std: f64,
    /// [`decay_time`] of `median_abs`.
    pub decay_time: Option<f64>,
}

/// Settings for [`run_ensemble`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSettings {
    pub seeds: usize,
    pub window: (f64, f64),
    pub threshold: f64,
    pub dwell: f64,
}

/// Evaluate `series_for` on each seeded bath and reduce in seed order.
pub fn run_ensemble<F>(
    template: &SamplerSpec,
    settings: &EnsembleSettings,
    series_for: F,
) -> Result<EnsembleStats>
where
    F: Fn(&SpinBathConfig) -> Result<DecoherenceSeries> + Sync,
{
    if settings.seeds == 0 {
        return Err(Error::invalid("ensemble needs at least one seed"));
    }
    let per_seed_series = (0..settings.seeds as u64)
        .into_par_iter()
        .map(|k| series_for(&sample_config(&template.with_seed(template.seed.wrapping_add(k)))?))
        .collect::<Result<Vec<_>>>()?;

    let times = per_seed_series[0].times.clone();
    if per_seed_series.iter().any(|s| s.times != times) {
        return Err(Error::invalid("ensemble series must share one time grid"));
    }
    let medians = (0..times.len())
        .map(|k| median(&mut per_seed_series.iter().map(|s| s.values[k].norm()).collect::<Vec<_>>()))
        .collect();
    let label = format!("median_abs({})", per_seed_series[0].label);
    let median_abs = DecoherenceSeries::from_real(label, times, medians)?;
    Ok(EnsembleStats {
        fluctuation_std: fluctuation_std(&median_abs, settings.window)?,
        decay_time: decay_time(&median_abs, settings.threshold, settings.dwell)?,
        median_abs,
        per_seed_series,
    })
}

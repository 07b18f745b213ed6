//! Sampling closed-form quantities over a [`TimeGrid`].

use num_complex::Complex64;
use rayon::prelude::*;

use super::product::{LogPolar, ScaledProduct};
use super::{
    case2_expectation, expectation, gamma0, gamma1, r1, polarization, r1_factor_from_phasor, r1_modsq, r2, r3,
    NAIVE_PRODUCT_MAX_N,
};
use crate::error::{Error, Result};
use crate::model::{HermitianBlock2, ObservableSpec, SpinBathConfig, TimeGrid};

/// Reality tolerance for series documented as real-valued.
pub const REAL_TOLERANCE: f64 = 1e-9;

/// A sampled decoherence factor or expectation value.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl DecoherenceSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(format!(
                "series has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("series times must be strictly increasing"));
        }
        Ok(Self {
            times,
            values,
            label: label.into(),
        })
    }

    pub fn from_real(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(label, times, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Largest `|Im|` in the series.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn is_real(&self) -> bool {
        self.max_imag() < REAL_TOLERANCE
    }
}

/// What to sample with [`evaluate_series`].
#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Gamma0(ObservableSpec),
    Gamma1(ObservableSpec),
    Expectation(ObservableSpec),
    R1,
    R1ModSq,
    R2 { particle: usize, block: HermitianBlock2 },
    Case2(Vec<HermitianBlock2>),
    R3 { p: usize },
}

impl Quantity {
    pub fn label(&self) -> String {
        match self {
            Quantity::Gamma0(_) => "Gamma0".into(),
            Quantity::Gamma1(_) => "Gamma1".into(),
            Quantity::Expectation(_) => "expectation".into(),
            Quantity::R1 => "r1".into(),
            Quantity::R1ModSq => "r1_modsq".into(),
            Quantity::R2 { particle, .. } => format!("r2[{particle}]"),
            Quantity::Case2(blocks) => format!("case2[p={}]", blocks.len()),
            Quantity::R3 { p } => format!("r3[p={p}]"),
        }
    }

    /// Reject parameter combinations before fanning out over the grid.
    fn check(&self, config: &SpinBathConfig) -> Result<()> {
        match self {
            Quantity::Gamma0(obs) | Quantity::Gamma1(obs) | Quantity::Expectation(obs) => {
                obs.check_matches(config)
            }
            Quantity::R2 { particle, .. } => {
                if *particle >= config.n() {
                    return Err(Error::invalid(format!(
                        "particle index {particle} out of range for N = {}",
                        config.n()
                    )));
                }
                Ok(())
            }
            Quantity::Case2(blocks) => case2_expectation(0.0, config, blocks).map(|_| ()),
            Quantity::R3 { p } => r3(0.0, config, *p).map(|_| ()),
            Quantity::R1 | Quantity::R1ModSq => Ok(()),
        }
    }

    fn at(&self, t: f64, config: &SpinBathConfig) -> Result<Complex64> {
        let real = |v: f64| Complex64::new(v, 0.0);
        Ok(match self {
            Quantity::Gamma0(obs) => gamma0(t, config, obs)?,
            Quantity::Gamma1(obs) => gamma1(t, config, obs)?,
            Quantity::Expectation(obs) => real(expectation(t, config, obs)?),
            Quantity::R1 => r1(t, config),
            Quantity::R1ModSq => real(r1_modsq(t, config)),
            Quantity::R2 { particle, block } => real(r2(t, &config.particles[*particle], block)),
            Quantity::Case2(blocks) => real(case2_expectation(t, config, blocks)?),
            Quantity::R3 { p } => real(r3(t, config, *p)?),
        })
    }
}

/// Evaluate `quantity` at every grid time, in grid order.
///
/// `R1` with more than `NAIVE_PRODUCT_MAX_N` particles goes through
/// [`r1_series`] with the rescaled accumulator; everything else is a pointwise
/// call of the scalar function.
pub fn evaluate_series(
    quantity: &Quantity,
    grid: &TimeGrid,
    config: &SpinBathConfig,
) -> Result<DecoherenceSeries> {
    quantity.check(config)?;
    let times = grid.times();
    let values: Vec<Complex64> = if matches!(quantity, Quantity::R1) && config.n() > NAIVE_PRODUCT_MAX_N {
        r1_series(config, grid, Accumulation::Rescaled)
            .into_iter()
            .map(|v| v.to_complex())
            .collect()
    } else {
        times
            .par_iter()
            .map(|&t| quantity.at(t, config))
            .collect::<Result<_>>()?
    };
    DecoherenceSeries::new(quantity.label(), times, values)
}

/// How [`r1_series`] multiplies the factors together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulation {
    /// Plain complex product; underflows to zero for very large baths.
    Naive,
    /// Product kept as mantissa times a power of two.
    Rescaled,
}

/// `r₁` over a whole grid for large baths.
///
/// Particles form the outer loop so each pass is a tight loop over the grid.
/// The phasor `e^{igt_k}` is built as `e^{igt_b} · e^{ig(k-b)dt}` from an
/// anchor every `B ≈ √steps` points and a per-particle offset table, which
/// needs about `2√steps` sine/cosine evaluations per particle instead of
/// `steps`, at a cost of a few ulps per factor. Both accumulation modes
/// share the same factors, so they differ only by rounding of the product.
pub fn r1_series(config: &SpinBathConfig, grid: &TimeGrid, mode: Accumulation) -> Vec<LogPolar> {
    let steps = grid.steps();
    let block = ((steps as f64).sqrt().ceil() as usize).max(1);
    let dt = grid.dt();
    let anchors: Vec<usize> = (0..steps).step_by(block).collect();
    let anchor_times: Vec<f64> = anchors.iter().map(|&k| grid.time(k)).collect();

    let mut offsets = vec![Complex64::new(1.0, 0.0); block];
    let mut anchor_phasors = vec![Complex64::new(1.0, 0.0); anchors.len()];
    let mut factors = vec![Complex64::new(1.0, 0.0); steps];

    let mut naive = match mode {
        Accumulation::Naive => vec![Complex64::new(1.0, 0.0); steps],
        Accumulation::Rescaled => Vec::new(),
    };
    let mut scaled = match mode {
        Accumulation::Naive => Vec::new(),
        Accumulation::Rescaled => vec![ScaledProduct::new(); steps],
    };

    for p in &config.particles {
        let w = polarization(p);
        for (j, o) in offsets.iter_mut().enumerate() {
            let (s, c) = (p.g * (j as f64 * dt)).sin_cos();
            *o = Complex64::new(c, s);
        }
        for (a, &t) in anchor_phasors.iter_mut().zip(&anchor_times) {
            let (s, c) = (p.g * t).sin_cos();
            *a = Complex64::new(c, s);
        }
        for (chunk, &anchor) in factors.chunks_mut(block).zip(&anchor_phasors) {
            for (f, &o) in chunk.iter_mut().zip(&offsets) {
                *f = r1_factor_from_phasor(w, anchor * o);
            }
        }
        match mode {
            Accumulation::Naive => {
                for (acc, &f) in naive.iter_mut().zip(&factors) {
                    *acc *= f;
                }
            }
            Accumulation::Rescaled => {
                for (acc, &f) in scaled.iter_mut().zip(&factors) {
                    acc.mul(f);
                }
            }
        }
    }

    match mode {
        Accumulation::Naive => naive
            .into_iter()
            .map(|z| {
                if z.re == 0.0 && z.im == 0.0 {
                    LogPolar {
                        log_magnitude: f64::NEG_INFINITY,
                        phase: 0.0,
                    }
                } else {
                    LogPolar {
                        log_magnitude: z.norm().ln(),
                        phase: z.arg(),
                    }
                }
            })
            .collect(),
        Accumulation::Rescaled => scaled.iter().map(|acc| acc.finish()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{observable_case1, BathParticle};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn cfg(n: usize) -> SpinBathConfig {
        let particles = (0..n)
            .map(|i| {
                let x = ((i as f64 * 0.618_033_988_7).fract() * 0.98) + 0.01;
                let g = ((i as f64 * 0.414_213_562_3).fract()) + 0.05;
                BathParticle::new(Complex64::new(x.sqrt(), 0.0), Complex64::new((1.0 - x).sqrt(), 0.0), g)
            })
            .collect();
        SpinBathConfig::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0), particles)
    }

    #[test]
    fn single_point_grid() {
        let grid = TimeGrid::new(0.0, 0.0, 1).unwrap();
        let s = evaluate_series(&Quantity::R1, &grid, &cfg(3)).unwrap();
        assert_eq!(s.times, vec![0.0]);
        assert_eq!(s.values, vec![Complex64::new(1.0, 0.0)]);
        assert_eq!(s.label, "r1");
    }

    #[test]
    fn identity_system_expectation_is_constant_one() {
        let config = cfg(6);
        let grid = TimeGrid::new(0.0, 20.0, 50).unwrap();
        let obs = observable_case1(HermitianBlock2::identity(), 6).unwrap();
        let s = evaluate_series(&Quantity::Expectation(obs), &grid, &config).unwrap();
        assert!(s.values.iter().all(|v| (v.re - 1.0).abs() < 1e-14 && v.im == 0.0));
        assert!(s.is_real());
    }

    #[test]
    fn parameter_errors_surface_before_evaluation() {
        let grid = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let config = cfg(4);
        assert!(evaluate_series(&Quantity::R3 { p: 5 }, &grid, &config).is_err());
        assert!(evaluate_series(&Quantity::Case2(vec![]), &grid, &config).is_err());
        let block = HermitianBlock2::spin_x();
        assert!(evaluate_series(&Quantity::R2 { particle: 4, block }, &grid, &config).is_err());
        assert!(evaluate_series(&Quantity::Gamma0(ObservableSpec::identity(3)), &grid, &config).is_err());
    }

    #[test]
    fn series_constructor_checks_shape() {
        assert!(DecoherenceSeries::from_real("x", vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(DecoherenceSeries::from_real("x", vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn fast_kernel_matches_pointwise() {
        let config = cfg(300);
        let grid = TimeGrid::new(0.0, 50.0, 777).unwrap();
        let fast = r1_series(&config, &grid, Accumulation::Naive);
        for (k, v) in fast.iter().enumerate() {
            let direct = r1(grid.time(k), &config);
            let got = v.to_complex();
            assert!((got - direct).norm() <= 1e-11 * direct.norm().max(1e-300), "k = {k}");
        }
    }

    #[test]
    fn accumulations_agree_when_representable() {
        let config = cfg(1000);
        let grid = TimeGrid::new(0.0, 50.0, 200).unwrap();
        let naive = r1_series(&config, &grid, Accumulation::Naive);
        let scaled = r1_series(&config, &grid, Accumulation::Rescaled);
        for (a, b) in naive.iter().zip(&scaled) {
            let (a, b) = (a.to_complex(), b.to_complex());
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }
}

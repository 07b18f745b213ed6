//! Closed-form decoherence factors and expectation values.
//!
//! Phase convention: the bath state conditioned on `P = ⇑` is
//! `⊗ᵢ (αᵢ e^{+i gᵢ t/2} |↑ᵢ⟩ + βᵢ e^{-i gᵢ t/2} |↓ᵢ⟩)` and the one conditioned
//! on `⇓` is the same expression at `-t`. All products run left to right over
//! the particle index.

mod product;
mod series;

pub use product::{stable_product_accumulate, LogPolar, ScaledProduct};
pub use series::{evaluate_series, r1_series, Accumulation, DecoherenceSeries, Quantity};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{BathParticle, HermitianBlock2, ObservableSpec, SpinBathConfig};

/// Above this many particles `r1` switches to the rescaled accumulator.
pub const NAIVE_PRODUCT_MAX_N: usize = 10_000;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
fn phasor(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

/// `|α|² ε↑↑ + |β|² ε↓↓ + α*β ε↑↓ e^{-igt} + c.c.`
#[inline]
fn gamma0_factor(p: &BathParticle, block: &HermitianBlock2, t: f64) -> Complex64 {
    let z = p.coherence() * block.od;
    let e = phasor(p.g * t);
    Complex64::new(p.up_weight() * block.uu, 0.0)
        + z * e.conj()
        + Complex64::new(p.down_weight() * block.dd, 0.0)
        + z.conj() * e
}

/// `|α|² ε↑↑ e^{igt} + |β|² ε↓↓ e^{-igt} + α*β ε↑↓ + c.c.`
#[inline]
fn gamma1_factor(p: &BathParticle, block: &HermitianBlock2, t: f64) -> Complex64 {
    let z = p.coherence() * block.od;
    let e = phasor(p.g * t);
    e.scale(p.up_weight() * block.uu) + e.conj().scale(p.down_weight() * block.dd) + (z + z.conj())
}

/// `(|α|² − |β|²) / (|α|² + |β|²)`
#[inline]
pub(crate) fn polarization(p: &BathParticle) -> f64 {
    let (x, y) = (p.up_weight(), p.down_weight());
    (x - y) / (x + y)
}

/// `|α|² e^{igt} + |β|² e^{-igt}` written as `cos gt + i w sin gt` with
/// `w` from [`polarization`], so that the factor is exactly 1 at `t = 0`.
#[inline]
pub(crate) fn r1_factor_from_phasor(w: f64, e: Complex64) -> Complex64 {
    Complex64::new(e.re, w * e.im)
}

#[inline]
fn r1_factor(p: &BathParticle, t: f64) -> Complex64 {
    r1_factor_from_phasor(polarization(p), phasor(p.g * t))
}

fn product(factors: impl Iterator<Item = Complex64>) -> Complex64 {
    factors.fold(ONE, |acc, f| acc * f)
}

/// Diagonal factor `Γ₀(t)`: product over particles of
/// `|αᵢ|² ε↑↑ + αᵢ*βᵢ ε↑↓ e^{-igᵢt} + |βᵢ|² ε↓↓ + c.c.`. Real by construction.
pub fn gamma0(t: f64, config: &SpinBathConfig, obs: &ObservableSpec) -> Result<Complex64> {
    obs.check_matches(config)?;
    Ok(product(
        config
            .particles
            .iter()
            .zip(&obs.particle_blocks)
            .map(|(p, b)| gamma0_factor(p, b, t)),
    ))
}

/// Cross factor `Γ₁(t) = ⟨𝓔⇓(t)| O_bath |𝓔⇑(t)⟩`.
pub fn gamma1(t: f64, config: &SpinBathConfig, obs: &ObservableSpec) -> Result<Complex64> {
    obs.check_matches(config)?;
    Ok(product(
        config
            .particles
            .iter()
            .zip(&obs.particle_blocks)
            .map(|(p, b)| gamma1_factor(p, b, t)),
    ))
}

/// `⟨ψ(t)| O |ψ(t)⟩` for a product observable.
///
/// The `⇑⇑` branch carries `Γ₀(t)` and the `⇓⇓` branch `Γ₀(-t)`, since the
/// environment conditioned on `⇓` is the `⇑` one run backwards. The two
/// coincide whenever every `αᵢ*βᵢ ε↑↓⁽ⁱ⁾` is real.
pub fn expectation(t: f64, config: &SpinBathConfig, obs: &ObservableSpec) -> Result<f64> {
    let s = &obs.system;
    let diag_up = config.a.norm_sqr() * s.uu * gamma0(t, config, obs)?.re;
    let diag_down = config.b.norm_sqr() * s.dd * gamma0(-t, config, obs)?.re;
    let cross = 2.0 * (config.a * config.b.conj() * s.lower() * gamma1(t, config, obs)?).re;
    Ok(diag_up + diag_down + cross)
}

/// Case-1 decoherence factor `r₁(t) = ∏ᵢ (|αᵢ|² e^{igᵢt} + |βᵢ|² e^{-igᵢt})`.
///
/// Uses a plain complex product for `N ≤ NAIVE_PRODUCT_MAX_N` and the
/// rescaled accumulator beyond, where the result may underflow to zero once
/// converted back; use [`r1_log`] to keep the magnitude.
pub fn r1(t: f64, config: &SpinBathConfig) -> Complex64 {
    if config.n() <= NAIVE_PRODUCT_MAX_N {
        r1_naive(t, config)
    } else {
        r1_log(t, config).to_complex()
    }
}

pub fn r1_naive(t: f64, config: &SpinBathConfig) -> Complex64 {
    product(config.particles.iter().map(|p| r1_factor(p, t)))
}

pub fn r1_log(t: f64, config: &SpinBathConfig) -> LogPolar {
    stable_product_accumulate(config.particles.iter().map(|p| r1_factor(p, t)))
}

/// `|r₁(t)|²` from its own product form
/// `∏ᵢ (|αᵢ|⁴ + |βᵢ|⁴ + 2|αᵢ|²|βᵢ|² cos 2gᵢt)`.
pub fn r1_modsq(t: f64, config: &SpinBathConfig) -> f64 {
    config.particles.iter().map(|p| r1_modsq_factor(p, t)).product()
}

#[inline]
pub fn r1_modsq_factor(p: &BathParticle, t: f64) -> f64 {
    let x = p.up_weight();
    let y = p.down_weight();
    let c = (p.g * t).cos();
    // Same polynomial as (x − y)² + 4xy cos² gt, free of cancellation.
    (x - y) * (x - y) + 4.0 * x * y * c * c
}

/// Range of each `|r₁|²` factor over `t`, and of their product.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeBounds {
    pub per_factor_max: Vec<f64>,
    pub per_factor_min: Vec<f64>,
    pub product_min: f64,
    pub product_max: f64,
}

/// Each factor of `|r₁(t)|²` oscillates between `(2|αᵢ|² − 1)²` and 1.
pub fn envelope(config: &SpinBathConfig) -> EnvelopeBounds {
    let per_factor_min: Vec<f64> = config
        .particles
        .iter()
        .map(|p| {
            let d = 2.0 * p.up_weight() - 1.0;
            (d * d).min(1.0)
        })
        .collect();
    EnvelopeBounds {
        per_factor_max: vec![1.0; config.n()],
        product_min: per_factor_min.iter().product(),
        per_factor_min,
        product_max: 1.0,
    }
}

/// Oscillating term of a single observed particle,
/// `Re(αⱼ βⱼ* ε↑↓ e^{igⱼt})`. It has amplitude `|αⱼ βⱼ* ε↑↓|` and never decays.
pub fn r2(t: f64, particle: &BathParticle, block: &HermitianBlock2) -> f64 {
    (particle.alpha * particle.beta.conj() * block.od * phasor(particle.g * t)).re
}

/// Expectation of `I_P ⊗ O_1 ⊗ … ⊗ O_p ⊗ I …`, with `p = blocks.len()`.
///
/// Only the first `p` particles enter, so the value is independent of `N`.
/// Each diagonal branch of `P` contributes its own product (see
/// [`expectation`]); with real `αᵢ*βᵢ ε↑↓⁽ⁱ⁾` this is the single product
/// `∏ᵢ₌₁ᵖ [|αᵢ|² ε↑↑ + |βᵢ|² ε↓↓ + 2 Re(αᵢ*βᵢ ε↑↓ e^{-igᵢt})]`.
pub fn case2_expectation(t: f64, config: &SpinBathConfig, blocks: &[HermitianBlock2]) -> Result<f64> {
    check_observed_count(blocks.len(), config.n())?;
    let observed = || config.particles.iter().zip(blocks);
    let forward = product(observed().map(|(p, b)| gamma0_factor(p, b, t))).re;
    let backward = product(observed().map(|(p, b)| gamma0_factor(p, b, -t))).re;
    Ok(config.a.norm_sqr() * forward + config.b.norm_sqr() * backward)
}

/// `r₃(t) = ∏ᵢ₌₁ᵖ 2 Re(αᵢ* βᵢ · ½ · e^{-igᵢt})`: the expectation of
/// `S_x ⊗ … ⊗ S_x` on the first `p` particles.
pub fn r3(t: f64, config: &SpinBathConfig, p: usize) -> Result<f64> {
    check_observed_count(p, config.n())?;
    let half = HermitianBlock2::spin_x().od;
    Ok(config.particles[..p]
        .iter()
        .map(|q| 2.0 * (q.coherence() * half * phasor(q.g * t).conj()).re)
        .product())
}

fn check_observed_count(p: usize, n: usize) -> Result<()> {
    if p == 0 || p > n {
        return Err(Error::invalid(format!(
            "number of observed particles p = {p} must satisfy 1 <= p <= N = {n}"
        )));
    }
    Ok(())
}

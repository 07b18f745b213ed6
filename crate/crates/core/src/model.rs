//! Model data: initial product state, couplings, product observables and
//! time grids.
//!
//! Basis ordering is fixed throughout the crate: index 0 is `⇑`/`↑` (the
//! `+½` eigenstate of the quantization-axis spin), index 1 is `⇓`/`↓`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex coefficient of the initial state or of an observable block.
pub type ComplexAmplitude = Complex64;

/// Tolerance on `|x|² + |y|² = 1` for every amplitude pair.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// One bath spin: its initial amplitudes on `↑`/`↓` and its coupling to `P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParticle {
    pub alpha: ComplexAmplitude,
    pub beta: ComplexAmplitude,
    /// Coupling constant, an angular frequency (ħ = 1). Any sign is allowed.
    pub g: f64,
}

impl BathParticle {
    pub fn new(alpha: ComplexAmplitude, beta: ComplexAmplitude, g: f64) -> Self {
        Self { alpha, beta, g }
    }

    /// `|α|²`
    #[inline]
    pub fn up_weight(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// `|β|²`
    #[inline]
    pub fn down_weight(&self) -> f64 {
        self.beta.norm_sqr()
    }

    /// `α* β`, the coherence carried by this spin.
    #[inline]
    pub fn coherence(&self) -> ComplexAmplitude {
        self.alpha.conj() * self.beta
    }
}

/// Coefficients of the initial state
/// `(a|⇑⟩ + b|⇓⟩) ⊗ ⊗ᵢ (αᵢ|↑ᵢ⟩ + βᵢ|↓ᵢ⟩)` together with the couplings `gᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBathConfig {
    pub a: ComplexAmplitude,
    pub b: ComplexAmplitude,
    pub particles: Vec<BathParticle>,
}

impl SpinBathConfig {
    pub fn new(a: ComplexAmplitude, b: ComplexAmplitude, particles: Vec<BathParticle>) -> Self {
        Self { a, b, particles }
    }

    /// Like [`SpinBathConfig::new`] but rejects configurations that fail
    /// [`validate_config`].
    pub fn try_new(
        a: ComplexAmplitude,
        b: ComplexAmplitude,
        particles: Vec<BathParticle>,
    ) -> Result<Self> {
        let config = Self::new(a, b, particles);
        let report = validate_config(&config);
        if report.is_ok() {
            Ok(config)
        } else {
            Err(Error::invalid(report.to_string()))
        }
    }

    /// Number of bath particles.
    #[inline]
    pub fn n(&self) -> usize {
        self.particles.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite { what: String },
    SystemNorm { residual: f64 },
    ParticleNorm { index: usize, residual: f64 },
    EmptyBath,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { what } => write!(f, "{what} is not finite"),
            Violation::SystemNorm { residual } => {
                write!(f, "system amplitudes: | |a|²+|b|² - 1 | = {residual:e}")
            }
            Violation::ParticleNorm { index, residual } => write!(
                f,
                "particle {index}: | |alpha|²+|beta|² - 1 | = {residual:e}"
            ),
            Violation::EmptyBath => write!(f, "bath must contain at least one particle"),
        }
    }
}

/// Outcome of [`validate_config`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn is_finite(z: ComplexAmplitude) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Check every invariant of a configuration and collect the violations.
pub fn validate_config(config: &SpinBathConfig) -> ValidationReport {
    let mut violations = Vec::new();

    if !is_finite(config.a) {
        violations.push(Violation::NonFinite { what: "a".into() });
    }
    if !is_finite(config.b) {
        violations.push(Violation::NonFinite { what: "b".into() });
    }
    let residual = (config.a.norm_sqr() + config.b.norm_sqr() - 1.0).abs();
    if !(residual <= NORM_TOLERANCE) {
        violations.push(Violation::SystemNorm { residual });
    }

    if config.particles.is_empty() {
        violations.push(Violation::EmptyBath);
    }
    for (index, p) in config.particles.iter().enumerate() {
        if !is_finite(p.alpha) {
            violations.push(Violation::NonFinite {
                what: format!("particle {index} alpha"),
            });
        }
        if !is_finite(p.beta) {
            violations.push(Violation::NonFinite {
                what: format!("particle {index} beta"),
            });
        }
        if !p.g.is_finite() {
            violations.push(Violation::NonFinite {
                what: format!("particle {index} coupling g"),
            });
        }
        let residual = (p.up_weight() + p.down_weight() - 1.0).abs();
        if !(residual <= NORM_TOLERANCE) {
            violations.push(Violation::ParticleNorm { index, residual });
        }
    }

    ValidationReport { violations }
}

/// A 2×2 Hermitian matrix in the `{⇑/↑, ⇓/↓}` basis.
///
/// Only the upper-right entry `od = M[0][1]` is stored; `M[1][0] = od*`.
/// For a bath block this is `ε↑↓` (so `ε↓↑ = od*`); for the system block it is
/// `s⇑⇓` (so `s⇓⇑ = od*`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianBlock2 {
    /// `M[0][0]`: `s⇑⇑` or `ε↑↑`.
    pub uu: f64,
    /// `M[1][1]`: `s⇓⇓` or `ε↓↓`.
    pub dd: f64,
    /// `M[0][1]`: `s⇑⇓` or `ε↑↓`.
    pub od: ComplexAmplitude,
}

impl HermitianBlock2 {
    pub const fn new(uu: f64, dd: f64, od: ComplexAmplitude) -> Self {
        Self { uu, dd, od }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 1.0, Complex64::new(0.0, 0.0))
    }

    /// `|⇑⟩⟨⇑|`
    pub const fn projector_up() -> Self {
        Self::new(1.0, 0.0, Complex64::new(0.0, 0.0))
    }

    /// `|⇓⟩⟨⇓|`
    pub const fn projector_down() -> Self {
        Self::new(0.0, 1.0, Complex64::new(0.0, 0.0))
    }

    /// Spin projection on x, `S_x = σ_x / 2`.
    pub const fn spin_x() -> Self {
        Self::new(0.0, 0.0, Complex64::new(0.5, 0.0))
    }

    /// The stored conjugate entry `M[1][0]`.
    #[inline]
    pub fn lower(&self) -> ComplexAmplitude {
        self.od.conj()
    }

    pub fn is_finite(&self) -> bool {
        self.uu.is_finite() && self.dd.is_finite() && is_finite(self.od)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Row-major dense form. Hermitian by construction.
    pub fn matrix(&self) -> [[ComplexAmplitude; 2]; 2] {
        [
            [Complex64::new(self.uu, 0.0), self.od],
            [self.od.conj(), Complex64::new(self.dd, 0.0)],
        ]
    }
}

/// A product observable `O_S ⊗ ⊗ᵢ O_i` with one block for `P` and one per
/// bath particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpec {
    pub system: HermitianBlock2,
    pub particle_blocks: Vec<HermitianBlock2>,
}

impl ObservableSpec {
    pub fn new(system: HermitianBlock2, particle_blocks: Vec<HermitianBlock2>) -> Self {
        Self {
            system,
            particle_blocks,
        }
    }

    /// The identity on the full Hilbert space of `n` bath particles.
    pub fn identity(n: usize) -> Self {
        Self::new(HermitianBlock2::identity(), vec![HermitianBlock2::identity(); n])
    }

    pub fn n(&self) -> usize {
        self.particle_blocks.len()
    }

    pub(crate) fn check_matches(&self, config: &SpinBathConfig) -> Result<()> {
        if self.n() != config.n() {
            return Err(Error::invalid(format!(
                "observable has {} particle blocks but the configuration has N = {}",
                self.n(),
                config.n()
            )));
        }
        Ok(())
    }
}

/// Observable of `P` alone: `O_S ⊗ I ⊗ … ⊗ I`.
pub fn observable_case1(system: HermitianBlock2, n: usize) -> Result<ObservableSpec> {
    if n == 0 {
        return Err(Error::invalid("observable_case1 requires n >= 1"));
    }
    Ok(ObservableSpec::new(system, vec![HermitianBlock2::identity(); n]))
}

/// Observable of the first `p = observed.len()` bath particles:
/// `I_P ⊗ O_1 ⊗ … ⊗ O_p ⊗ I ⊗ … ⊗ I`.
pub fn observable_case2(observed: &[HermitianBlock2], n: usize) -> Result<ObservableSpec> {
    let p = observed.len();
    if p == 0 {
        return Err(Error::invalid("observable_case2 requires at least one observed block (p >= 1)"));
    }
    if p > n {
        return Err(Error::invalid(format!(
            "observable_case2: p = {p} observed particles exceeds n = {n}"
        )));
    }
    let mut blocks = observed.to_vec();
    blocks.resize(n, HermitianBlock2::identity());
    Ok(ObservableSpec::new(HermitianBlock2::identity(), blocks))
}

/// Uniform sampling of `[t_start, t_end]` with `steps` points, both ends
/// included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    /// A single point requires `steps == 1`; otherwise `t_start < t_end`.
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::invalid("time grid bounds must be finite"));
        }
        if steps == 0 {
            return Err(Error::invalid("time grid needs steps >= 1"));
        }
        if t_start > t_end {
            return Err(Error::invalid(format!(
                "time grid start {t_start} is after end {t_end}"
            )));
        }
        if steps > 1 && t_start == t_end {
            return Err(Error::invalid(
                "a degenerate time grid (t_start == t_end) must have exactly one step",
            ));
        }
        Ok(Self {
            t_start,
            t_end,
            steps,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Spacing between adjacent points (0 for a single-point grid).
    pub fn dt(&self) -> f64 {
        if self.steps == 1 {
            0.0
        } else {
            (self.t_end - self.t_start) / (self.steps - 1) as f64
        }
    }

    /// The `k`-th grid time. The last point is exactly `t_end`.
    pub fn time(&self, k: usize) -> f64 {
        debug_assert!(k < self.steps);
        if k + 1 == self.steps {
            return self.t_end;
        }
        self.t_start + (self.t_end - self.t_start) * (k as f64 / (self.steps - 1) as f64)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.time(k)).collect()
    }
}

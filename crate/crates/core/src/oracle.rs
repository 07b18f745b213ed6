//! Brute-force reference: the full `2^(N+1)`-dimensional state vector.
//!
//! Nothing here uses the factorized closed forms. The state is built
//! amplitude by amplitude, evolved with the eigenphases of the Hamiltonian,
//! and contracted against the observable as a matrix (explicit for `N ≤ 10`,
//! applied Kronecker factor by factor above that).
//!
//! Index layout: bit `N` (most significant) is `P`, bit `N - 1 - i` is bath
//! particle `i`; a 0 bit means `⇑`/`↑`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{HermitianBlock2, ObservableSpec, SpinBathConfig};

/// Largest bath the oracle accepts.
pub const MAX_ORACLE_N: usize = 14;

/// Largest bath for which the observable is stored as an explicit matrix.
pub const MAX_EXPLICIT_N: usize = 10;

/// Imaginary residual tolerated in [`oracle_expectation`].
pub const IMAG_TOLERANCE: f64 = 1e-10;

fn check_cap(n: usize) -> Result<()> {
    if n > MAX_ORACLE_N {
        return Err(Error::ResourceLimit {
            n,
            cap: MAX_ORACLE_N,
        });
    }
    Ok(())
}

/// Bit of `index` holding bath particle `i` (0 = `↑`).
#[inline]
fn bath_bit(index: usize, i: usize, n: usize) -> usize {
    (index >> (n - 1 - i)) & 1
}

#[inline]
fn system_bit(index: usize, n: usize) -> usize {
    (index >> n) & 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Index of the basis state `(system, bath bits)`; `0` means up.
    pub fn index_of(&self, system: usize, bath: &[usize]) -> usize {
        debug_assert_eq!(bath.len(), self.n);
        bath.iter().fold(system, |acc, &b| (acc << 1) | b)
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &DenseState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest per-amplitude difference after removing one global phase,
    /// chosen to align the largest-modulus amplitude of `self`.
    pub fn distance_up_to_phase(&self, other: &DenseState) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let (k, _) = self
            .amplitudes
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bk, bm), (k, a)| if a.norm() > bm { (k, a.norm()) } else { (bk, bm) });
        let (x, y) = (self.amplitudes[k], other.amplitudes[k]);
        let phase = if x.norm() == 0.0 || y.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            let w = x * y.conj();
            w / w.norm()
        };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }
}

/// `(a|⇑⟩ + b|⇓⟩) ⊗ ⊗ᵢ (αᵢ|↑⟩ + βᵢ|↓⟩)` written out in full.
pub fn build_initial_state(config: &SpinBathConfig) -> Result<DenseState> {
    let n = config.n();
    check_cap(n)?;
    let dim = 1usize << (n + 1);
    let amplitudes = (0..dim)
        .map(|index| {
            let mut amp = if system_bit(index, n) == 0 { config.a } else { config.b };
            for (i, p) in config.particles.iter().enumerate() {
                amp *= if bath_bit(index, i, n) == 0 { p.alpha } else { p.beta };
            }
            amp
        })
        .collect();
    Ok(DenseState { n, amplitudes })
}

/// Eigenvalue of `H = S_P ⊗ Σᵢ 2gᵢ Sᵢ` on a basis state.
pub fn energy(config: &SpinBathConfig, index: usize) -> f64 {
    let n = config.n();
    let spin = |bit: usize| if bit == 0 { 0.5 } else { -0.5 };
    let bath: f64 = config
        .particles
        .iter()
        .enumerate()
        .map(|(i, p)| 2.0 * p.g * spin(bath_bit(index, i, n)))
        .sum();
    spin(system_bit(index, n)) * bath
}

/// Exact evolution: every basis amplitude picks up `e^{+i E t}`.
///
/// The sign is the one under which the bath conditioned on `⇑` reads
/// `⊗ᵢ (αᵢ e^{igᵢt/2}|↑⟩ + βᵢ e^{-igᵢt/2}|↓⟩)`, the convention the closed
/// forms are written in; the opposite sign is the same dynamics with
/// `t → -t`.
pub fn evolve(state: &DenseState, config: &SpinBathConfig, t: f64) -> Result<DenseState> {
    if state.n != config.n() {
        return Err(Error::invalid(format!(
            "state has N = {} but configuration has N = {}",
            state.n,
            config.n()
        )));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(index, &amp)| amp * Complex64::from_polar(1.0, energy(config, index) * t))
        .collect();
    Ok(DenseState {
        n: state.n,
        amplitudes,
    })
}

/// `a|⇑⟩|𝓔⇑(t)⟩ + b|⇓⟩|𝓔⇓(t)⟩` with `|𝓔⇓(t)⟩ = |𝓔⇑(-t)⟩`, built directly
/// from the per-particle environment states.
pub fn evolve_factored(config: &SpinBathConfig, t: f64) -> Result<DenseState> {
    let n = config.n();
    check_cap(n)?;
    let env = |tau: f64| -> Vec<[Complex64; 2]> {
        config
            .particles
            .iter()
            .map(|p| {
                [
                    p.alpha * Complex64::from_polar(1.0, p.g * tau / 2.0),
                    p.beta * Complex64::from_polar(1.0, -p.g * tau / 2.0),
                ]
            })
            .collect()
    };
    let (env_up, env_down) = (env(t), env(-t));
    let dim = 1usize << (n + 1);
    let amplitudes = (0..dim)
        .map(|index| {
            let (mut amp, env) = if system_bit(index, n) == 0 {
                (config.a, &env_up)
            } else {
                (config.b, &env_down)
            };
            for (i, e) in env.iter().enumerate() {
                amp *= e[bath_bit(index, i, n)];
            }
            amp
        })
        .collect();
    Ok(DenseState { n, amplitudes })
}

/// The observable `O_S ⊗ O_1 ⊗ … ⊗ O_N` on the full space.
#[derive(Debug, Clone, PartialEq)]
pub enum DenseObservable {
    /// Row-major `dim × dim` matrix.
    Explicit { n: usize, matrix: Vec<Complex64> },
    /// Kronecker factors, system first; applied one factor at a time.
    Factored { n: usize, blocks: Vec<[[Complex64; 2]; 2]> },
}

fn kron_factors(obs: &ObservableSpec) -> Vec<[[Complex64; 2]; 2]> {
    std::iter::once(&obs.system)
        .chain(&obs.particle_blocks)
        .map(HermitianBlock2::matrix)
        .collect()
}

/// Materialize the product observable, explicitly when `N ≤ MAX_EXPLICIT_N`.
pub fn build_observable(obs: &ObservableSpec) -> Result<DenseObservable> {
    let n = obs.n();
    check_cap(n)?;
    let blocks = kron_factors(obs);
    if n > MAX_EXPLICIT_N {
        return Ok(DenseObservable::Factored { n, blocks });
    }
    // Kronecker product, one factor at a time: M ← M ⊗ B.
    let mut matrix = vec![Complex64::new(1.0, 0.0)];
    let mut side = 1usize;
    for block in &blocks {
        let next_side = side * 2;
        let mut next = vec![Complex64::new(0.0, 0.0); next_side * next_side];
        for r in 0..side {
            for c in 0..side {
                let m = matrix[r * side + c];
                for (br, row) in block.iter().enumerate() {
                    for (bc, &b) in row.iter().enumerate() {
                        next[(2 * r + br) * next_side + 2 * c + bc] = m * b;
                    }
                }
            }
        }
        matrix = next;
        side = next_side;
    }
    Ok(DenseObservable::Explicit { n, matrix })
}

impl DenseObservable {
    pub fn n(&self) -> usize {
        match self {
            DenseObservable::Explicit { n, .. } | DenseObservable::Factored { n, .. } => *n,
        }
    }

    pub fn dim(&self) -> usize {
        1 << (self.n() + 1)
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self {
            DenseObservable::Explicit { matrix, .. } => matrix[row * self.dim() + col],
            DenseObservable::Factored { n, blocks } => {
                // Factor k acts on bit (n - k) of the index.
                blocks.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (k, b)| {
                    let shift = n - k;
                    acc * b[(row >> shift) & 1][(col >> shift) & 1]
                })
            }
        }
    }

    /// Largest `|M[r][c] - conj(M[c][r])|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        worst
    }

    /// `O |ψ⟩`
    pub fn apply(&self, state: &DenseState) -> Result<Vec<Complex64>> {
        if state.n != self.n() {
            return Err(Error::invalid(format!(
                "observable has N = {} but state has N = {}",
                self.n(),
                state.n
            )));
        }
        let dim = self.dim();
        Ok(match self {
            DenseObservable::Explicit { matrix, .. } => matrix
                .chunks_exact(dim)
                .map(|row| row.iter().zip(&state.amplitudes).map(|(m, a)| m * a).sum())
                .collect(),
            DenseObservable::Factored { n, blocks } => {
                let mut v = state.amplitudes.clone();
                for (k, b) in blocks.iter().enumerate() {
                    let stride = 1usize << (n - k);
                    for base in 0..dim {
                        if base & stride != 0 {
                            continue;
                        }
                        let (x0, x1) = (v[base], v[base | stride]);
                        v[base] = b[0][0] * x0 + b[0][1] * x1;
                        v[base | stride] = b[1][0] * x0 + b[1][1] * x1;
                    }
                }
                v
            }
        })
    }

    /// `⟨ψ| O |ψ⟩`, complex.
    pub fn expectation(&self, state: &DenseState) -> Result<Complex64> {
        let applied = self.apply(state)?;
        Ok(state
            .amplitudes
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// `⟨ψ(t)|O|ψ(t)⟩` by brute force, as a complex number.
pub fn oracle_expectation_complex(
    config: &SpinBathConfig,
    obs: &DenseObservable,
    t: f64,
) -> Result<Complex64> {
    let state = evolve(&build_initial_state(config)?, config, t)?;
    obs.expectation(&state)
}

/// `⟨ψ(t)|O|ψ(t)⟩` by brute force. Fails if the imaginary residual exceeds
/// [`IMAG_TOLERANCE`].
pub fn oracle_expectation(config: &SpinBathConfig, obs: &ObservableSpec, t: f64) -> Result<f64> {
    obs.check_matches(config)?;
    let dense = build_observable(obs)?;
    let value = oracle_expectation_complex(config, &dense, t)?;
    if value.im.abs() >= IMAG_TOLERANCE {
        return Err(Error::invalid(format!(
            "oracle expectation has imaginary residual {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

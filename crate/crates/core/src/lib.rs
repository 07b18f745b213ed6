//! Exact simulation of the central-spin / spin-bath decoherence model.
//!
//! A spin-1/2 particle `P` couples to `N` non-interacting bath spins through
//! `H = S_P,z ⊗ Σ 2 g_i S_i,z`. Because `H` is diagonal in the product basis,
//! every expectation value of a product observable has a closed form. This
//! crate evaluates those closed forms ([`closed_form`]), checks them against a
//! brute-force state-vector computation ([`oracle`]), samples random baths and
//! computes ensemble statistics ([`ensembles`]), and exposes all of it through
//! a small CLI ([`cli`]).

pub mod cli;
pub mod closed_form;
pub mod ensembles;
mod error;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Spectral toolkit for singular integral operators, Musielak-Orlicz norms,
//! maximal functions and half-space harmonic extensions on periodic grids,
//! plus an experiment harness that turns quasi-norm equivalences into
//! bounded-ratio measurements.
//!
//! `R^n` is modeled by the torus `[-L, L)^n`; all Fourier-side operators use
//! the unitary DFT fixed in [`field`].

pub mod atoms;
pub mod error;
pub mod exec;
pub mod expr;
pub mod field;
pub mod halfspace;
pub mod harness;
pub mod maximal;
pub mod multipliers;
pub mod musielak;
pub mod weights;

pub use error::{MhError, Result};

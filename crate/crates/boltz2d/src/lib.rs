//! Monte Carlo kinetics for the two-dimensional spatially homogeneous
//! Boltzmann equation with hard potentials and a non-integrable angular
//! singularity (no Grad cutoff).
//!
//! The crate is organized around the jump-chain representation of the
//! velocity process: a power-law angular kernel with closed-form tail
//! integral and inverse ([`kernel`]), the smooth truncations that make the
//! jump rate finite ([`mollifier`]), an event-driven mean-field particle
//! simulator with coupled-level experiments ([`particles`]), per-path
//! tangent-flow and covariance diagnostics ([`malliavin`]), and the
//! regularity-exponent calculus together with empirical Fourier estimators
//! ([`regularity`]).
//!
//! The crate is `no_std` (with `alloc`); all floating-point transcendentals
//! go through `libm`. IO, CLI, and file formats live in the companion
//! `boltz2d-cli` crate.

#![cfg_attr(not(test), no_std)]
// Parameter guards are written as !(x > bound) so NaN inputs fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod algebra;
pub mod error;
pub mod kernel;
pub mod malliavin;
pub mod math;
pub mod mollifier;
pub mod particles;
pub mod quad;
pub mod regularity;
pub mod rng;

pub use algebra::{Mat2, Vec2};
pub use error::{Error, Result};

//! Explicit high-order energy-preserving time integration for Hamiltonian
//! PDEs on periodic domains.
//!
//! The crate combines four pieces:
//!
//! * [`spectral`]: periodic grids, the discrete `h`-weighted inner product and
//!   a Fourier pseudo-spectral Laplacian in one and two dimensions.
//! * [`integrator`] and [`tableaux`]: explicit Runge-Kutta steps, an embedded
//!   adaptive Dormand-Prince step and a fixed-point 2-stage Gauss step.
//! * [`projection`]: closed-form post-steps that restore a quadratic invariant
//!   after every explicit step (a norm rescaling and a modified projection
//!   along `L Φ` for general quadratic energies `½(Φ, LΦ)`).
//! * [`quadratization`] and [`models`]: energy quadratization with an
//!   auxiliary variable and the concrete nonlinear Schrödinger and sine-Gordon
//!   systems.
//!
//! [`harness`] wires everything into experiments (evolution, convergence,
//! scheme comparison, snapshots) and is what the `epx` binary drives.

// NaN must fail range checks, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod integrator;
pub mod models;
pub mod projection;
pub mod quadratization;
pub mod spectral;
pub mod tableaux;

pub use error::{Error, Result};

//! Numerics for the focusing inhomogeneous nonlinear Schrödinger equation
//! `i u_t + Δu + |x|^{-b} |u|^α u = 0`.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod groundstate;
pub mod params;
pub mod rational;
pub mod spectral;

pub use error::{Error, Result};
pub use params::{validate_params, ProblemParams};
pub use rational::{Exponent, Rational};

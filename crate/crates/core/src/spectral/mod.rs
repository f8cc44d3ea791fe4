//! Grids, Fourier-side operators and the regularized singular weight.

pub mod bump;
pub(crate) mod fft;
mod field;
pub mod fields;
mod grid;
mod ops;
mod radial;
pub mod snapshot;

pub use field::SpectralField;
pub use grid::{Grid, GridMode, GridSpec};
pub use ops::{
    default_reg_radius, free_propagate, gradient, gradient_density, h1_norm, inverse_helmholtz,
    kinetic, laplacian, littlewood_paley, make_weight, sobolev_norm, SingularWeight, WeightInfo,
};
pub use radial::sphere_area;

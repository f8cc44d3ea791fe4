//! Standard initial data and random test fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::field::SpectralField;
use super::grid::Grid;

/// `amplitude * exp(-|x - center|^2 / (2 width^2))`. The center is ignored
/// on radial grids.
pub fn gaussian(grid: &Grid, amplitude: f64, width: f64, center: [f64; 2]) -> SpectralField {
    let inv = 1.0 / (2.0 * width * width);
    if grid.is_radial() {
        SpectralField::from_radial_fn(grid, |r| amplitude * (-r * r * inv).exp())
    } else {
        SpectralField::from_fn(grid, |x| {
            let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
            Complex64::new(amplitude * (-d2 * inv).exp(), 0.0)
        })
    }
}

/// `e^{i (m0 x + m1 y) pi / L}`: an exact grid eigenmode (Cartesian only).
pub fn plane_wave(grid: &Grid, modes: [i64; 2]) -> Option<SpectralField> {
    if grid.is_radial() {
        return None;
    }
    let dk = PI / grid.extent();
    let k = [modes[0] as f64 * dk, modes[1] as f64 * dk];
    Some(SpectralField::from_fn(grid, |x| {
        Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1])
    }))
}

/// Periodic translation `f(x - shift)` via the spectrum (Cartesian only).
pub fn translate(f: &SpectralField, shift: [f64; 2]) -> Option<SpectralField> {
    let grid = f.grid();
    let k = grid.wavenumbers()?;
    let n = grid.points();
    let coeffs = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let phase = -(k[idx / n] * shift[0] + k[idx % n] * shift[1]);
            c * Complex64::from_polar(1.0, phase)
        })
        .collect();
    SpectralField::from_spectrum(grid, coeffs).ok()
}

/// Smooth, well-localized random field: a sum of one to four modulated
/// Gaussian packets (radial packets on radial grids).
pub fn random_smooth_field<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> SpectralField {
    let packets = rng.gen_range(1..=4);
    let l = grid.extent();
    let mut params = Vec::with_capacity(packets);
    for _ in 0..packets {
        let amp = Complex64::from_polar(rng.gen_range(0.1..1.0), rng.gen_range(0.0..2.0 * PI));
        let width = rng.gen_range(0.6..2.5);
        let center = [rng.gen_range(-l / 6.0..l / 6.0), rng.gen_range(-l / 6.0..l / 6.0)];
        let k = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
        let bend = rng.gen_range(-0.3..0.3);
        params.push((amp, width, center, k, bend));
    }
    if grid.is_radial() {
        SpectralField::from_fn(grid, |x| {
            let r = x[0];
            params
                .iter()
                .map(|(amp, width, _, _, bend)| {
                    amp * ((-r * r / (2.0 * width * width)).exp() * (1.0 + bend * r * r))
                })
                .sum()
        })
    } else {
        SpectralField::from_fn(grid, |x| {
            params
                .iter()
                .map(|(amp, width, c, k, _)| {
                    let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                    amp * (-d2 / (2.0 * width * width)).exp()
                        * Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1])
                })
                .sum()
        })
    }
}

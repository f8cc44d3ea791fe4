use std::sync::OnceLock;

use num_complex::Complex64;

use super::grid::{Backend, Grid};
use crate::error::GridError;

/// Complex samples on a grid with a lazily cached spectrum.
///
/// Spectral coefficients are orthonormal: `sum |c_k|^2` equals the discrete
/// `L^2` norm squared. The cache is dropped on every mutable access.
#[derive(Debug)]
pub struct SpectralField {
    grid: Grid,
    values: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Clone for SpectralField {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        SpectralField {
            grid: self.grid.clone(),
            values: self.values.clone(),
            spectrum,
        }
    }
}

impl SpectralField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(SpectralField {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        SpectralField::new(grid.clone(), vec![Complex64::new(0.0, 0.0); grid.len()]).unwrap()
    }

    /// Samples `f` at node coordinates (`[x, y]` or `[r]`).
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        SpectralField::new(grid.clone(), values).unwrap()
    }

    /// Real profile sampled as a function of `|x|`.
    pub fn from_radial_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid
            .radii()
            .iter()
            .map(|&r| Complex64::new(f(r), 0.0))
            .collect();
        SpectralField::new(grid.clone(), values).unwrap()
    }

    pub fn from_real(grid: &Grid, values: &[f64]) -> Result<Self, GridError> {
        SpectralField::new(
            grid.clone(),
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Builds a field from orthonormal spectral coefficients.
    pub fn from_spectrum(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self, GridError> {
        if coeffs.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        let values = match &grid.0.backend {
            Backend::Cartesian { fft, .. } => {
                let n = grid.points() as f64;
                let scale = 1.0 / (n * grid.spacing());
                let mut data = coeffs.clone();
                fft.inverse(&mut data);
                data.iter_mut().for_each(|z| *z *= scale);
                data
            }
            Backend::Radial(op) => op.inverse(&coeffs),
        };
        let field = SpectralField::new(grid.clone(), values)?;
        let _ = field.spectrum.set(coeffs);
        Ok(field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        self.spectrum.take();
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_cached(&self) -> bool {
        self.spectrum.get().is_some()
    }

    /// Orthonormal spectral coefficients (cached).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| match &self.grid.0.backend {
            Backend::Cartesian { fft, .. } => {
                let scale = self.grid.spacing() / self.grid.points() as f64;
                let mut data = self.values.clone();
                fft.forward(&mut data);
                data.iter_mut().for_each(|z| *z *= scale);
                data
            }
            Backend::Radial(op) => op.forward(&self.values),
        })
    }

    /// Returns a new field with spectrum `m(|xi|^2) * c`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> SpectralField {
        let coeffs = self
            .spectrum()
            .iter()
            .zip(self.grid.symbols())
            .map(|(c, &l)| c * m(l))
            .collect();
        SpectralField::from_spectrum(&self.grid, coeffs).expect("same grid")
    }

    /// Real multiplier variant of [`apply_multiplier`](Self::apply_multiplier).
    pub fn apply_real_multiplier(&self, m: impl Fn(f64) -> f64) -> SpectralField {
        self.apply_multiplier(|l| Complex64::new(m(l), 0.0))
    }

    /// `sum_k m(|xi_k|^2) |c_k|^2`.
    pub fn spectral_quadratic(&self, m: impl Fn(f64) -> f64) -> f64 {
        self.spectrum()
            .iter()
            .zip(self.grid.symbols())
            .map(|(c, &l)| m(l) * c.norm_sqr())
            .sum()
    }

    /// Discrete `L^2` norm squared (the mass).
    pub fn norm_sqr(&self) -> f64 {
        self.grid.integrate_with(|i| self.values[i].norm_sqr())
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `∫ f conj(g)`.
    pub fn inner(&self, other: &SpectralField) -> Result<Complex64, GridError> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .map(|((a, b), w)| a * b.conj() * *w)
            .sum())
    }

    pub fn check_grid(&self, other: &SpectralField) -> Result<(), GridError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(GridError::GridMismatch)
        }
    }

    pub fn scaled(&self, c: Complex64) -> SpectralField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= c);
        if let Some(s) = out.spectrum.get_mut() {
            s.iter_mut().for_each(|z| *z *= c);
        }
        out
    }

    pub fn scaled_real(&self, c: f64) -> SpectralField {
        self.scaled(Complex64::new(c, 0.0))
    }

    /// Pointwise map; the spectrum cache is not carried over.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SpectralField {
        SpectralField::new(self.grid.clone(), self.values.iter().map(|&z| f(z)).collect())
            .unwrap()
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField, GridError> {
        self.check_grid(other)?;
        SpectralField::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField, GridError> {
        self.check_grid(other)?;
        SpectralField::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

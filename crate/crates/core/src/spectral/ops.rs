use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bump::bump;
use super::field::SpectralField;
use super::grid::{Backend, Grid};
use crate::error::SpectralError;
use crate::rational::Rational;

/// `|| |∇|^s f ||` (homogeneous) or `|| (1-Δ)^{s/2} f ||`, `s ∈ [0, 1]`.
pub fn sobolev_norm(f: &SpectralField, s: f64, homogeneous: bool) -> Result<f64, SpectralError> {
    if !(0.0..=1.0).contains(&s) || s.is_nan() {
        return Err(SpectralError::SobolevIndex(s));
    }
    if s == 0.0 {
        return Ok(f.norm_l2());
    }
    let sq = if homogeneous {
        f.spectral_quadratic(|l| l.powf(s))
    } else {
        f.spectral_quadratic(|l| (1.0 + l).powf(s))
    };
    Ok(sq.sqrt())
}

/// `||f||_{H^1}` with the inhomogeneous weight `(1 + |xi|^2)`.
pub fn h1_norm(f: &SpectralField) -> f64 {
    (f.norm_sqr() + kinetic(f)).sqrt()
}

/// `∫ |∇f|^2`. Radial mode uses the stiffness form directly.
pub fn kinetic(f: &SpectralField) -> f64 {
    match f.grid().radial_op() {
        Some(op) => {
            let re: Vec<f64> = f.values().iter().map(|z| z.re).collect();
            let im: Vec<f64> = f.values().iter().map(|z| z.im).collect();
            let kre = op.stiffness(&re);
            let kim = op.stiffness(&im);
            re.iter().zip(&kre).map(|(a, b)| a * b).sum::<f64>()
                + im.iter().zip(&kim).map(|(a, b)| a * b).sum::<f64>()
        }
        None => f.spectral_quadratic(|l| l),
    }
}

/// `e^{itΔ} f`: multiplies the spectrum by `e^{-it|xi|^2}`.
pub fn free_propagate(f: &SpectralField, t: f64) -> SpectralField {
    if t == 0.0 {
        return f.clone();
    }
    f.apply_multiplier(|l| Complex64::from_polar(1.0, -t * l))
}

/// Smooth projection onto `|xi| <= cutoff` (symbol supported in `|xi| <= 2 cutoff`).
pub fn littlewood_paley(f: &SpectralField, cutoff: f64) -> Result<SpectralField, SpectralError> {
    if !(cutoff > 0.0) {
        return Err(SpectralError::BadCutoff(cutoff));
    }
    if cutoff >= f.grid().nyquist() {
        log::warn!(
            "cutoff {cutoff} is beyond the resolved band {}; projection is the identity",
            f.grid().nyquist()
        );
        return Ok(f.clone());
    }
    Ok(f.apply_real_multiplier(|l| bump(l.sqrt() / cutoff)))
}

/// `(1 - Δ)^{-1} f`.
pub fn inverse_helmholtz(f: &SpectralField) -> SpectralField {
    f.apply_real_multiplier(|l| 1.0 / (1.0 + l))
}

/// Spatial gradient: `[∂_x f, ∂_y f]` (Cartesian) or `[∂_r f]` (radial).
pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    let grid = f.grid();
    match &grid.0.backend {
        Backend::Cartesian { k, .. } => {
            let n = grid.points();
            let spec = f.spectrum();
            (0..2)
                .map(|axis| {
                    let coeffs = spec
                        .iter()
                        .enumerate()
                        .map(|(idx, c)| {
                            let kk = if axis == 0 { k[idx / n] } else { k[idx % n] };
                            c * Complex64::new(0.0, kk)
                        })
                        .collect();
                    SpectralField::from_spectrum(grid, coeffs).unwrap()
                })
                .collect()
        }
        Backend::Radial(op) => {
            let re: Vec<f64> = f.values().iter().map(|z| z.re).collect();
            let im: Vec<f64> = f.values().iter().map(|z| z.im).collect();
            let dre = op.radial_derivative(&re);
            let dim = op.radial_derivative(&im);
            let values = dre
                .into_iter()
                .zip(dim)
                .map(|(a, b)| Complex64::new(a, b))
                .collect();
            vec![SpectralField::new(grid.clone(), values).unwrap()]
        }
    }
}

/// `|∇f|^2` pointwise.
pub fn gradient_density(f: &SpectralField) -> Vec<f64> {
    let grads = gradient(f);
    (0..f.len())
        .map(|i| grads.iter().map(|g| g.values()[i].norm_sqr()).sum())
        .collect()
}

/// `Δf`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    match f.grid().radial_op() {
        Some(op) => {
            let re: Vec<f64> = f.values().iter().map(|z| z.re).collect();
            let im: Vec<f64> = f.values().iter().map(|z| z.im).collect();
            let lre = op.laplacian(&re);
            let lim = op.laplacian(&im);
            let values = lre
                .into_iter()
                .zip(lim)
                .map(|(a, b)| Complex64::new(a, b))
                .collect();
            SpectralField::new(f.grid().clone(), values).unwrap()
        }
        None => f.apply_real_multiplier(|l| -l),
    }
}

/// Truncated power law `max(|x|, rho)^{-b}`.
#[derive(Debug, Clone)]
pub struct SingularWeight {
    grid: Grid,
    b: Rational,
    reg_radius: f64,
    samples: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightInfo {
    pub b: Rational,
    pub reg_radius: f64,
    pub max_value: f64,
    pub truncated_nodes: usize,
}

impl SingularWeight {
    /// `w ≡ 0`: the linear Schrödinger flow.
    pub fn vanishing(grid: &Grid) -> Self {
        SingularWeight {
            grid: grid.clone(),
            b: Rational::zero(),
            reg_radius: f64::INFINITY,
            samples: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn reg_radius(&self) -> f64 {
        self.reg_radius
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn is_vanishing(&self) -> bool {
        self.samples.iter().all(|&w| w == 0.0)
    }

    /// Radial derivative `w'(|x|)`; zero inside the truncation radius.
    pub fn radial_derivative(&self) -> Vec<f64> {
        if self.is_vanishing() {
            return vec![0.0; self.samples.len()];
        }
        let b = self.b.to_f64();
        self.grid
            .radii()
            .iter()
            .map(|&r| if r > self.reg_radius { -b * r.powf(-b - 1.0) } else { 0.0 })
            .collect()
    }

    pub fn info(&self) -> WeightInfo {
        WeightInfo {
            b: self.b.clone(),
            reg_radius: self.reg_radius,
            max_value: self.samples.iter().cloned().fold(0.0, f64::max),
            truncated_nodes: self
                .grid
                .radii()
                .iter()
                .filter(|&&r| r < self.reg_radius)
                .count(),
        }
    }
}

/// Default truncation radius: `dx/2` in Cartesian mode, half the first node
/// radius in radial mode (so no radial node is truncated).
pub fn default_reg_radius(grid: &Grid) -> f64 {
    if grid.is_radial() {
        grid.radii()[0] / 2.0
    } else {
        grid.spacing() / 2.0
    }
}

pub fn make_weight(grid: &Grid, b: &Rational, reg_radius: f64) -> Result<SingularWeight, SpectralError> {
    if !(reg_radius > 0.0) {
        return Err(SpectralError::BadRegularization(reg_radius));
    }
    let bf = b.to_f64();
    let samples = grid
        .radii()
        .iter()
        .map(|&r| if b.is_zero() { 1.0 } else { r.max(reg_radius).powf(-bf) })
        .collect();
    Ok(SingularWeight {
        grid: grid.clone(),
        b: b.clone(),
        reg_radius,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::super::grid::GridSpec;
    use super::*;

    #[test]
    fn weight_values() {
        let g = Grid::new(GridSpec::cartesian(8.0, 64)).unwrap();
        let rho = default_reg_radius(&g);
        let w = make_weight(&g, &Rational::new(1, 2), rho).unwrap();
        for (r, v) in g.radii().iter().zip(w.samples()) {
            if *r >= rho {
                assert_eq!(*v, r.powf(-0.5));
            } else {
                assert_eq!(*v, rho.powf(-0.5));
            }
        }
        let flat = make_weight(&g, &Rational::zero(), rho).unwrap();
        assert!(flat.samples().iter().all(|&v| v == 1.0));
        assert!(make_weight(&g, &Rational::one(), 0.0).is_err());
    }

    #[test]
    fn radial_nodes_are_never_truncated() {
        let g = Grid::new(GridSpec::radial(3, 16.0, 64, 2)).unwrap();
        let w = make_weight(&g, &Rational::new(1, 2), default_reg_radius(&g)).unwrap();
        assert_eq!(w.info().truncated_nodes, 0);
        let rho = 0.25;
        let w = make_weight(&g, &Rational::new(1, 3), rho).unwrap();
        let v = make_weight(&g, &Rational::new(1, 3), rho).unwrap();
        assert_eq!(w.samples(), v.samples());
        let at = (2.0 * rho).powf(-1.0 / 3.0);
        assert_eq!(at, (2.0f64 * rho).max(rho).powf(-1.0 / 3.0));
    }

    #[test]
    fn sobolev_index_range() {
        let g = Grid::new(GridSpec::cartesian(8.0, 16)).unwrap();
        let f = SpectralField::zeros(&g);
        assert!(sobolev_norm(&f, 1.5, true).is_err());
        assert!(sobolev_norm(&f, -0.1, false).is_err());
        assert!(littlewood_paley(&f, 0.0).is_err());
    }
}

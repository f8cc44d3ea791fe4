use crate::spectral::{kinetic, SingularWeight, SpectralField};

/// `M[u] = ∫ |u|^2`.
pub fn mass(f: &SpectralField) -> f64 {
    f.norm_sqr()
}

/// `∫ w |u|^{alpha+2}`.
pub fn potential(f: &SpectralField, weight: &SingularWeight, alpha: f64) -> f64 {
    let w = weight.samples();
    let p = alpha + 2.0;
    f.grid()
        .integrate_with(|i| w[i] * f.values()[i].norm().powf(p))
}

/// `E[u] = ∫ |∇u|^2 / 2 - w |u|^{alpha+2} / (alpha+2)`.
pub fn energy(f: &SpectralField, weight: &SingularWeight, alpha: f64) -> f64 {
    0.5 * kinetic(f) - potential(f, weight, alpha) / (alpha + 2.0)
}

/// `||∇u||_{L^2}`.
pub fn grad_norm(f: &SpectralField) -> f64 {
    kinetic(f).max(0.0).sqrt()
}

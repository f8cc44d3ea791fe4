//! Localized virial identities for `psi(x) = R^2 phi(x/R)`.

use serde::{Deserialize, Serialize};

use crate::spectral::bump::{bump_jet, Jet};
use crate::spectral::{gradient, Grid, SingularWeight, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VirialKind {
    /// `phi = |x|^2`.
    Quadratic,
    /// `phi = |x|^2` on `|x| <= 1`, zero beyond 2, bump transition.
    Localized { radius: f64 },
}

/// Radial profile `Psi(r)` and derivatives up to fourth order.
fn profile_jet(kind: VirialKind, r: f64) -> [f64; 5] {
    match kind {
        VirialKind::Quadratic => [r * r, 2.0 * r, 2.0, 0.0, 0.0],
        VirialKind::Localized { radius } => {
            if r <= radius {
                [r * r, 2.0 * r, 2.0, 0.0, 0.0]
            } else if r >= 2.0 * radius {
                [0.0; 5]
            } else {
                let x = Jet::variable(r / radius);
                let phi = x * x * bump_jet(x);
                let mut out = [0.0; 5];
                for (k, o) in out.iter_mut().enumerate() {
                    // d^k/dr^k [R^2 Phi(r/R)] = R^{2-k} Phi^{(k)}.
                    *o = radius.powi(2 - k as i32) * phi.derivative(k);
                }
                out
            }
        }
    }
}

/// Virial weight sampled on a grid.
#[derive(Debug, Clone)]
pub struct VirialWeight {
    pub kind: VirialKind,
    pub dimension: usize,
    /// `psi`.
    pub phi: Vec<f64>,
    /// `Psi'(r)`.
    pub dphi: Vec<f64>,
    /// `Psi'(r)/r` (finite at the origin).
    pub dphi_over_r: Vec<f64>,
    /// `Psi''(r)`.
    pub d2phi: Vec<f64>,
    pub laplacian_phi: Vec<f64>,
    pub bilaplacian_phi: Vec<f64>,
}

impl VirialWeight {
    pub fn new(grid: &Grid, kind: VirialKind) -> Self {
        let n = grid.dimension() as f64;
        let len = grid.len();
        let mut w = VirialWeight {
            kind,
            dimension: grid.dimension(),
            phi: Vec::with_capacity(len),
            dphi: Vec::with_capacity(len),
            dphi_over_r: Vec::with_capacity(len),
            d2phi: Vec::with_capacity(len),
            laplacian_phi: Vec::with_capacity(len),
            bilaplacian_phi: Vec::with_capacity(len),
        };
        let inner = match kind {
            VirialKind::Quadratic => f64::INFINITY,
            VirialKind::Localized { radius } => radius,
        };
        for &r in grid.radii() {
            let d = profile_jet(kind, r);
            w.phi.push(d[0]);
            w.dphi.push(d[1]);
            w.d2phi.push(d[2]);
            if r <= inner {
                // Exactly |x|^2 here.
                w.dphi_over_r.push(2.0);
                w.laplacian_phi.push(2.0 * n);
                w.bilaplacian_phi.push(0.0);
            } else {
                let nm1 = n - 1.0;
                w.dphi_over_r.push(d[1] / r);
                w.laplacian_phi.push(d[2] + nm1 * d[1] / r);
                let h2 = d[4] + nm1 * (d[3] / r - 2.0 * d[2] / (r * r) + 2.0 * d[1] / (r * r * r));
                let h1 = d[3] + nm1 * (d[2] / r - d[1] / (r * r));
                w.bilaplacian_phi.push(h2 + nm1 * h1 / r);
            }
        }
        w
    }

    pub fn quadratic(grid: &Grid) -> Self {
        VirialWeight::new(grid, VirialKind::Quadratic)
    }

    /// The transition has a Gevrey-class Fourier tail; its terms are
    /// resolved once `radius / dx` reaches about 64.
    pub fn localized(grid: &Grid, radius: f64) -> Self {
        VirialWeight::new(grid, VirialKind::Localized { radius })
    }

    pub fn radius(&self) -> f64 {
        match self.kind {
            VirialKind::Quadratic => f64::INFINITY,
            VirialKind::Localized { radius } => radius,
        }
    }
}

/// Gradient split into its radial part `x/|x| · ∇u` and `|∇u|^2`.
struct GradParts {
    radial: Vec<num_complex::Complex64>,
    full_sq: Vec<f64>,
}

fn grad_parts(u: &SpectralField) -> GradParts {
    let grid = u.grid();
    let grads = gradient(u);
    if grid.is_radial() {
        let radial = grads[0].values().to_vec();
        let full_sq = radial.iter().map(|z| z.norm_sqr()).collect();
        GradParts { radial, full_sq }
    } else {
        let mut radial = Vec::with_capacity(u.len());
        let mut full_sq = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let x = grid.point(i);
            let r = grid.radii()[i];
            let (gx, gy) = (grads[0].values()[i], grads[1].values()[i]);
            radial.push(if r > 0.0 { (gx * x[0] + gy * x[1]) / r } else { gx * 0.0 });
            full_sq.push(gx.norm_sqr() + gy.norm_sqr());
        }
        GradParts { radial, full_sq }
    }
}

/// `z = ∫ psi |u|^2`.
pub fn virial_z(u: &SpectralField, w: &VirialWeight) -> f64 {
    u.grid().integrate_with(|i| w.phi[i] * u.values()[i].norm_sqr())
}

/// `z' = 2 Im ∫ ∇psi · ∇u conj(u)`.
pub fn virial_zprime(u: &SpectralField, w: &VirialWeight) -> f64 {
    let g = grad_parts(u);
    2.0 * u
        .grid()
        .integrate_with(|i| w.dphi[i] * (g.radial[i] * u.values()[i].conj()).im)
}

/// The three pieces of `z''`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZSecondParts {
    /// `4 Re ∫ ∂_k u ∂_j conj(u) ∂_jk psi`.
    pub kinetic: f64,
    /// `-∫ |u|^2 Δ^2 psi`.
    pub bilaplacian: f64,
    /// `-(2 alpha/(alpha+2)) ∫ w |u|^{alpha+2} Δpsi + (4/(alpha+2)) ∫ ∇w·∇psi |u|^{alpha+2}`.
    pub nonlinear: f64,
}

impl ZSecondParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.bilaplacian + self.nonlinear
    }
}

/// Terms of `z''`. The weight gradient uses homogeneity,
/// `x·∇w = -b w`, so the truncated core (if any) is treated consistently.
pub fn virial_zsecond_parts(
    u: &SpectralField,
    w: &VirialWeight,
    weight: &SingularWeight,
    alpha: f64,
) -> ZSecondParts {
    zsecond_from(u, &grad_parts(u), w, weight, alpha)
}

fn zsecond_from(
    u: &SpectralField,
    g: &GradParts,
    w: &VirialWeight,
    weight: &SingularWeight,
    alpha: f64,
) -> ZSecondParts {
    let grid = u.grid();
    let b = weight.b().to_f64();
    let ws = weight.samples();
    let kinetic = 4.0
        * grid.integrate_with(|i| {
            let rad = g.radial[i].norm_sqr();
            w.d2phi[i] * rad + w.dphi_over_r[i] * (g.full_sq[i] - rad)
        });
    let bilaplacian = -grid.integrate_with(|i| u.values()[i].norm_sqr() * w.bilaplacian_phi[i]);
    let p = alpha + 2.0;
    let nonlinear = grid.integrate_with(|i| {
        let a = u.values()[i].norm_sqr().powf(0.5 * p) * ws[i];
        // ∇w·∇psi = w'(r) Psi'(r) = -b w Psi'(r)/r.
        -(2.0 * alpha / p) * a * w.laplacian_phi[i] + (4.0 / p) * (-b * w.dphi_over_r[i]) * a
    });
    ZSecondParts {
        kinetic,
        bilaplacian,
        nonlinear,
    }
}

/// `(z, z', z'')` sharing one gradient evaluation.
pub fn virial_triple(
    u: &SpectralField,
    w: &VirialWeight,
    weight: &SingularWeight,
    alpha: f64,
) -> [f64; 3] {
    let g = grad_parts(u);
    let zp = 2.0
        * u.grid()
            .integrate_with(|i| w.dphi[i] * (g.radial[i] * u.values()[i].conj()).im);
    [
        virial_z(u, w),
        zp,
        zsecond_from(u, &g, w, weight, alpha).total(),
    ]
}

pub fn virial_zsecond(
    u: &SpectralField,
    w: &VirialWeight,
    weight: &SingularWeight,
    alpha: f64,
) -> f64 {
    virial_zsecond_parts(u, w, weight, alpha).total()
}

/// `∫_{|x|>R} |∇u|^2 + R^{-2} |u|^2 + R^{-b} |u|^{alpha+2}`.
pub fn virial_error_bound(u: &SpectralField, radius: f64, b: f64, alpha: f64) -> f64 {
    let grid = u.grid();
    let g = grad_parts(u);
    let rb = radius.powf(-b);
    let r2 = radius.powi(-2);
    grid.integrate_with(|i| {
        if grid.radii()[i] > radius {
            let m = u.values()[i].norm();
            g.full_sq[i] + r2 * m * m + rb * m.powf(alpha + 2.0)
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;

    #[test]
    fn localized_profile_plateaus() {
        let r = 3.0;
        assert_eq!(profile_jet(VirialKind::Localized { radius: r }, 2.0), [4.0, 4.0, 2.0, 0.0, 0.0]);
        assert_eq!(profile_jet(VirialKind::Localized { radius: r }, 6.5), [0.0; 5]);
        // Continuity across the inner edge, to the orders the bump is flat.
        let inside = profile_jet(VirialKind::Localized { radius: r }, r);
        let just_out = profile_jet(VirialKind::Localized { radius: r }, r * (1.0 + 1e-9));
        for k in 0..5 {
            assert!((inside[k] - just_out[k]).abs() < 1e-6, "order {k}");
        }
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let kind = VirialKind::Localized { radius: 2.0 };
        let h = 1e-4;
        for k in 1..40 {
            let r = 2.0 + k as f64 * 0.05;
            let d = profile_jet(kind, r);
            for order in 1..5 {
                let f = |x: f64| profile_jet(kind, x)[order - 1];
                let fd = (f(r + h) - f(r - h)) / (2.0 * h);
                assert!((fd - d[order]).abs() < 1e-4 * (1.0 + fd.abs()), "r = {r}, order {order}: {fd} vs {}", d[order]);
            }
        }
    }

    #[test]
    fn bilaplacian_matches_finite_differences() {
        let g = Grid::new(GridSpec::radial(3, 20.0, 64, 1)).unwrap();
        let radius = 4.0;
        let w = VirialWeight::localized(&g, radius);
        let kind = VirialKind::Localized { radius };
        let lap = |r: f64| {
            let d = profile_jet(kind, r);
            d[2] + 2.0 * d[1] / r
        };
        for (i, &r) in g.radii().iter().enumerate() {
            if r > radius * 1.05 && r < 2.0 * radius * 0.95 {
                let h = 1e-3;
                let d2 = (lap(r + h) - 2.0 * lap(r) + lap(r - h)) / (h * h);
                let d1 = (lap(r + h) - lap(r - h)) / (2.0 * h);
                let fd = d2 + 2.0 * d1 / r;
                assert!((fd - w.bilaplacian_phi[i]).abs() < 1e-3 * (1.0 + fd.abs()), "r = {r}: {fd} vs {}", w.bilaplacian_phi[i]);
            }
        }
    }
}

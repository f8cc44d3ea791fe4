//! Radial reduction: nodes `r_j = g(s_j)` with `g(s) = s^p`, `s_j = (j+1/2) ds`.
//!
//! The Laplacian is `-W^{-1} K` where `W` holds the quadrature weights and
//! `K = D^T diag(F) D` is a symmetric stiffness matrix built from a fourth
//! order staggered derivative `D`. Node values are reflected evenly across
//! the origin and vanish beyond the outer edge. Fourier multipliers act on
//! the eigenbasis of `W^{-1/2} K W^{-1/2}`, whose eigenvalues play the role
//! of `|xi|^2`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Surface area of the unit sphere in `R^N`.
pub fn sphere_area(dimension: usize) -> f64 {
    match dimension {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        n => {
            // 2 pi^{n/2} / Gamma(n/2), Gamma by recursion on half-integers.
            let half = n as f64 / 2.0;
            let mut gamma = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
            let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
            while x < half {
                gamma *= x;
                x += 1.0;
            }
            2.0 * std::f64::consts::PI.powf(half) / gamma
        }
    }
}

#[derive(Debug)]
pub(crate) struct RadialEigen {
    pub lambda: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Debug)]
pub(crate) struct RadialOperator {
    pub m: usize,
    pub ds: f64,
    pub gprime: Vec<f64>,
    pub weights: Vec<f64>,
    pub sqrt_w: Vec<f64>,
    /// `F ds` at half nodes `s = j ds`, `j = 0..=m`.
    flux: Vec<f64>,
    eigen: OnceLock<RadialEigen>,
}

const STAGGER: [f64; 4] = [1.0, -27.0, 27.0, -1.0];
const CENTRED: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

impl RadialOperator {
    /// Builds the operator; returns the node radii alongside.
    pub fn new(dimension: usize, extent: f64, m: usize, stretch: u32) -> (Self, Vec<f64>) {
        let p = stretch as f64;
        let ds = extent.powf(1.0 / p) / m as f64;
        let sigma = sphere_area(dimension);
        let nm1 = dimension as i32 - 1;
        let g = |s: f64| s.powf(p);
        let gp = |s: f64| p * s.powf(p - 1.0);
        let s: Vec<f64> = (0..m).map(|j| (j as f64 + 0.5) * ds).collect();
        let radii: Vec<f64> = s.iter().map(|&s| g(s)).collect();
        let gprime: Vec<f64> = s.iter().map(|&s| gp(s)).collect();
        let weights: Vec<f64> = radii
            .iter()
            .zip(&gprime)
            .map(|(r, gp)| sigma * r.powi(nm1) * gp * ds)
            .collect();
        let sqrt_w = weights.iter().map(|w| w.sqrt()).collect();
        let flux = (0..=m)
            .map(|j| {
                if j == 0 {
                    0.0
                } else {
                    let sh = j as f64 * ds;
                    sigma * g(sh).powi(nm1) / gp(sh) * ds
                }
            })
            .collect();
        (
            RadialOperator {
                m,
                ds,
                gprime,
                weights,
                sqrt_w,
                flux,
                eigen: OnceLock::new(),
            },
            radii,
        )
    }

    /// Maps a virtual node index to a stored one (even reflection, zero beyond).
    #[inline]
    fn node(&self, i: isize) -> Option<usize> {
        let i = if i < 0 { -i - 1 } else { i };
        if (i as usize) < self.m {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Nonzero entries of row `j` of the staggered derivative.
    fn stagger_row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let scale = 1.0 / (24.0 * self.ds);
        (0..4).filter_map(move |k| {
            self.node(j as isize - 2 + k as isize)
                .map(|i| (i, STAGGER[k] * scale))
        })
    }

    /// `K u` in O(m).
    pub fn stiffness(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for j in 1..=self.m {
            let du: f64 = self.stagger_row(j).map(|(i, c)| c * u[i]).sum();
            let fdu = self.flux[j] * du;
            for (i, c) in self.stagger_row(j) {
                out[i] += c * fdu;
            }
        }
        out
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness(u)
            .into_iter()
            .zip(&self.weights)
            .map(|(k, w)| -k / w)
            .collect()
    }

    /// `∂_r u` at the nodes: centred fourth-order difference in `s`, over `g'`.
    pub fn radial_derivative(&self, u: &[f64]) -> Vec<f64> {
        let scale = 1.0 / (12.0 * self.ds);
        (0..self.m)
            .map(|j| {
                let d: f64 = (0..5)
                    .filter_map(|k| {
                        self.node(j as isize - 2 + k as isize)
                            .map(|i| CENTRED[k] * u[i])
                    })
                    .sum();
                d * scale / self.gprime[j]
            })
            .collect()
    }

    fn dense_stiffness(&self) -> DMatrix<f64> {
        let mut k = DMatrix::<f64>::zeros(self.m, self.m);
        for j in 1..=self.m {
            let row: Vec<(usize, f64)> = self.stagger_row(j).collect();
            for &(a, ca) in &row {
                for &(b, cb) in &row {
                    k[(a, b)] += ca * self.flux[j] * cb;
                }
            }
        }
        k
    }

    pub fn eigen(&self) -> &RadialEigen {
        self.eigen.get_or_init(|| {
            let mut a = self.dense_stiffness();
            for i in 0..self.m {
                for j in 0..self.m {
                    a[(i, j)] /= self.sqrt_w[i] * self.sqrt_w[j];
                }
            }
            let eig = SymmetricEigen::new(a);
            RadialEigen {
                lambda: eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect(),
                vectors: eig.eigenvectors,
            }
        })
    }

    /// Orthonormal coefficients: `sum |c|^2 = sum W |u|^2`.
    pub fn forward(&self, u: &[Complex64]) -> Vec<Complex64> {
        let v = &self.eigen().vectors;
        let mut x = DMatrix::<f64>::zeros(self.m, 2);
        for (i, z) in u.iter().enumerate() {
            x[(i, 0)] = z.re * self.sqrt_w[i];
            x[(i, 1)] = z.im * self.sqrt_w[i];
        }
        let c = v.tr_mul(&x);
        (0..self.m)
            .map(|k| Complex64::new(c[(k, 0)], c[(k, 1)]))
            .collect()
    }

    pub fn inverse(&self, c: &[Complex64]) -> Vec<Complex64> {
        let v = &self.eigen().vectors;
        let mut x = DMatrix::<f64>::zeros(self.m, 2);
        for (k, z) in c.iter().enumerate() {
            x[(k, 0)] = z.re;
            x[(k, 1)] = z.im;
        }
        let u = v * x;
        (0..self.m)
            .map(|i| Complex64::new(u[(i, 0)], u[(i, 1)]) / self.sqrt_w[i])
            .collect()
    }
}

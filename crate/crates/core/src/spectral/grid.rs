use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fft::Fft2;
use super::radial::RadialOperator;
use crate::error::GridError;

/// Grid geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GridMode {
    /// Periodic square `[-L, L)^2`, `points` per axis.
    Cartesian2d,
    /// Radial profile on `(0, L)`: `r = s^stretch` with `s_j = (j + 1/2) ds`.
    /// `stretch = 1` is the uniform grid `r_j = (j + 1/2) dr`.
    Radial { stretch: u32 },
}

/// Serializable description of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub mode: GridMode,
    pub dimension: usize,
    pub extent: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn cartesian(extent: f64, points: usize) -> Self {
        GridSpec {
            mode: GridMode::Cartesian2d,
            dimension: 2,
            extent,
            points,
        }
    }

    pub fn radial(dimension: usize, extent: f64, points: usize, stretch: u32) -> Self {
        GridSpec {
            mode: GridMode::Radial { stretch },
            dimension,
            extent,
            points,
        }
    }

    pub fn build(&self) -> Result<Grid, GridError> {
        Grid::new(*self)
    }
}

pub(crate) enum Backend {
    Cartesian {
        fft: Fft2,
        /// Angular wavenumbers in FFT order.
        k: Vec<f64>,
    },
    Radial(RadialOperator),
}

pub(crate) struct GridData {
    pub spec: GridSpec,
    /// `dx` (Cartesian) or `ds` in the computational variable (radial).
    pub spacing: f64,
    /// `|x|` at each node.
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
    pub backend: Backend,
    /// `|xi|^2` per spectral index (Cartesian only; radial symbols come from
    /// the eigen-decomposition on first use).
    pub symbols: Option<Vec<f64>>,
}

/// Shared, immutable grid. Cloning is cheap.
#[derive(Clone)]
pub struct Grid(pub(crate) Arc<GridData>);

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Grid").field(&self.0.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

/// Angular wavenumbers `2 pi k / (2L)` in FFT order.
fn wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    let dk = PI / extent;
    (0..n)
        .map(|j| {
            let k = if j < n / 2 { j as isize } else { j as isize - n as isize };
            k as f64 * dk
        })
        .collect()
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self, GridError> {
        if !(spec.extent.is_finite() && spec.extent > 0.0) {
            return Err(GridError::BadExtent(spec.extent));
        }
        let n = spec.points;
        let data = match spec.mode {
            GridMode::Cartesian2d => {
                if spec.dimension != 2 {
                    return Err(GridError::UnsupportedDimension {
                        dimension: spec.dimension,
                        mode: "cartesian",
                    });
                }
                if n < 16 || !n.is_power_of_two() {
                    return Err(GridError::BadPointCount(n));
                }
                let dx = 2.0 * spec.extent / n as f64;
                let x: Vec<f64> = (0..n).map(|j| -spec.extent + j as f64 * dx).collect();
                let mut radii = Vec::with_capacity(n * n);
                for &x0 in &x {
                    for &x1 in &x {
                        radii.push(x0.hypot(x1));
                    }
                }
                let k = wavenumbers(n, spec.extent);
                let mut symbols = Vec::with_capacity(n * n);
                for &k0 in &k {
                    for &k1 in &k {
                        symbols.push(k0 * k0 + k1 * k1);
                    }
                }
                GridData {
                    spec,
                    spacing: dx,
                    radii,
                    weights: vec![dx * dx; n * n],
                    backend: Backend::Cartesian {
                        fft: Fft2::new(n),
                        k,
                    },
                    symbols: Some(symbols),
                }
            }
            GridMode::Radial { stretch } => {
                if !(2..=3).contains(&spec.dimension) {
                    return Err(GridError::UnsupportedDimension {
                        dimension: spec.dimension,
                        mode: "radial",
                    });
                }
                if n < 16 {
                    return Err(GridError::TooFewRadialPoints(n));
                }
                if !(1..=2).contains(&stretch) {
                    return Err(GridError::BadStretch(stretch));
                }
                let (op, radii) = RadialOperator::new(spec.dimension, spec.extent, n, stretch);
                GridData {
                    spec,
                    spacing: op.ds,
                    radii,
                    weights: op.weights.clone(),
                    backend: Backend::Radial(op),
                    symbols: None,
                }
            }
        };
        Ok(Grid(Arc::new(data)))
    }

    /// The default 2D grid: `L = 32`, 512 points per axis.
    pub fn default_cartesian() -> Self {
        Grid::new(GridSpec::cartesian(32.0, 512)).expect("valid default grid")
    }

    /// The default radial grid: `L = 32`, 1024 square-root-stretched nodes.
    pub fn default_radial(dimension: usize) -> Result<Self, GridError> {
        Grid::new(GridSpec::radial(dimension, 32.0, 1024, 2))
    }

    pub fn spec(&self) -> GridSpec {
        self.0.spec
    }

    pub fn mode(&self) -> GridMode {
        self.0.spec.mode
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.0.spec.mode, GridMode::Radial { .. })
    }

    pub fn dimension(&self) -> usize {
        self.0.spec.dimension
    }

    pub fn extent(&self) -> f64 {
        self.0.spec.extent
    }

    /// Points per axis (Cartesian) or radial node count.
    pub fn points(&self) -> usize {
        self.0.spec.points
    }

    /// Total number of stored samples.
    pub fn len(&self) -> usize {
        self.0.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.radii.is_empty()
    }

    /// `dx = 2L/points` (Cartesian) or the computational spacing `ds` (radial).
    pub fn spacing(&self) -> f64 {
        self.0.spacing
    }

    /// Smallest physical distance between neighbouring nodes.
    pub fn min_spacing(&self) -> f64 {
        match &self.0.backend {
            Backend::Cartesian { .. } => self.0.spacing,
            Backend::Radial(_) => self.0.radii[1] - self.0.radii[0],
        }
    }

    /// `|x|` at each node.
    pub fn radii(&self) -> &[f64] {
        &self.0.radii
    }

    /// Quadrature weights, including the sphere area in radial mode.
    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    /// Coordinates of node `idx`: `[x, y]` (Cartesian) or `[r]` (radial).
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        match &self.0.backend {
            Backend::Cartesian { .. } => {
                let n = self.points();
                let dx = self.0.spacing;
                let l = self.extent();
                vec![-l + (idx / n) as f64 * dx, -l + (idx % n) as f64 * dx]
            }
            Backend::Radial(_) => vec![self.0.radii[idx]],
        }
    }

    /// Cartesian position of a node without allocating; radial nodes map to
    /// `[r, 0]`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match &self.0.backend {
            Backend::Cartesian { .. } => {
                let n = self.points();
                let dx = self.0.spacing;
                let l = self.extent();
                [-l + (idx / n) as f64 * dx, -l + (idx % n) as f64 * dx]
            }
            Backend::Radial(_) => [self.0.radii[idx], 0.0],
        }
    }

    /// Angular wavenumbers per axis (Cartesian only).
    pub fn wavenumbers(&self) -> Option<&[f64]> {
        match &self.0.backend {
            Backend::Cartesian { k, .. } => Some(k),
            Backend::Radial(_) => None,
        }
    }

    /// `|xi|^2` per spectral index.
    pub fn symbols(&self) -> &[f64] {
        match (&self.0.symbols, &self.0.backend) {
            (Some(s), _) => s,
            (None, Backend::Radial(op)) => &op.eigen().lambda,
            (None, Backend::Cartesian { .. }) => unreachable!("cartesian symbols are eager"),
        }
    }

    /// Largest resolved frequency `max |xi|`.
    pub fn nyquist(&self) -> f64 {
        self.symbols().iter().cloned().fold(0.0, f64::max).sqrt()
    }

    /// Fraction-of-extent shell `|x| > (1 - frac) L`, per node. In Cartesian
    /// mode the shell is the outer band of the box in the sup norm.
    pub fn outer_shell_mask(&self, frac: f64) -> Vec<bool> {
        let edge = (1.0 - frac) * self.extent();
        match &self.0.backend {
            Backend::Cartesian { .. } => (0..self.len())
                .map(|i| {
                    let c = self.coords(i);
                    c[0].abs().max(c[1].abs()) > edge
                })
                .collect(),
            Backend::Radial(_) => self.0.radii.iter().map(|&r| r > edge).collect(),
        }
    }

    pub(crate) fn radial_op(&self) -> Option<&RadialOperator> {
        match &self.0.backend {
            Backend::Radial(op) => Some(op),
            Backend::Cartesian { .. } => None,
        }
    }

    pub(crate) fn fft(&self) -> Option<&Fft2> {
        match &self.0.backend {
            Backend::Cartesian { fft, .. } => Some(fft),
            Backend::Radial(_) => None,
        }
    }

    /// Quadrature of real samples.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.len());
        samples.iter().zip(&self.0.weights).map(|(f, w)| f * w).sum()
    }

    /// Quadrature of `f(node)` evaluated on the fly.
    pub fn integrate_with(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.0.weights.iter().enumerate().map(|(i, w)| f(i) * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            Grid::new(GridSpec::cartesian(8.0, 100)),
            Err(GridError::BadPointCount(100))
        ));
        assert!(matches!(
            Grid::new(GridSpec::cartesian(8.0, 8)),
            Err(GridError::BadPointCount(8))
        ));
        assert!(matches!(
            Grid::new(GridSpec::cartesian(-1.0, 64)),
            Err(GridError::BadExtent(_))
        ));
        assert!(matches!(
            Grid::new(GridSpec::radial(4, 8.0, 64, 1)),
            Err(GridError::UnsupportedDimension { .. })
        ));
        assert!(matches!(
            Grid::new(GridSpec::radial(3, 8.0, 64, 3)),
            Err(GridError::BadStretch(3))
        ));
    }

    #[test]
    fn cartesian_quadrature_of_one_is_box_area() {
        let g = Grid::new(GridSpec::cartesian(8.0, 64)).unwrap();
        assert_eq!(g.integrate(&vec![1.0; g.len()]), 256.0);
        assert!((g.spacing() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn uniform_radial_nodes_are_offset() {
        let g = Grid::new(GridSpec::radial(2, 8.0, 64, 1)).unwrap();
        let dr = 8.0 / 64.0;
        for (j, r) in g.radii().iter().enumerate() {
            assert!((r - (j as f64 + 0.5) * dr).abs() < 1e-14);
        }
        // Midpoint rule is exact for r^{N-1} with N = 2.
        let area = g.integrate(&vec![1.0; g.len()]);
        assert!((area - PI * 64.0).abs() < 1e-10);
    }

    #[test]
    fn radial_quadrature_of_one_converges() {
        let exact = 4.0 / 3.0 * PI * 8.0f64.powi(3);
        let err = |m| {
            let g = Grid::new(GridSpec::radial(3, 8.0, m, 2)).unwrap();
            (g.integrate(&vec![1.0; g.len()]) - exact).abs() / exact
        };
        assert!(err(256) < 1e-4);
        assert!(err(128) / err(256) > 3.5);
    }
}

use num_complex::Complex64;

use std::sync::atomic::{AtomicBool, Ordering};

use crate::spectral::fft::{transpose_into, Direction, Fft2};
use crate::spectral::{Grid, SingularWeight};

/// Strang splitting `L(dt/2) N(dt) L(dt/2)` with consecutive half steps
/// fused. `dt` may be negative (backward integration).
pub struct Stepper {
    grid: Grid,
    weight: Vec<f64>,
    linear_only: bool,
    alpha: f64,
    alpha_int: Option<i32>,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: &Grid, weight: &SingularWeight, alpha: f64, dt: f64) -> Self {
        // Cartesian transforms are unnormalized; fold 1/n^2 into the phases.
        let scale = if grid.is_radial() {
            1.0
        } else {
            1.0 / (grid.len() as f64)
        };
        let phases = |tau: f64| -> Vec<Complex64> {
            grid.symbols()
                .iter()
                .map(|&l| Complex64::from_polar(scale, -tau * l))
                .collect()
        };
        let alpha_int = if alpha.fract() == 0.0 && alpha.abs() < 64.0 {
            Some(alpha as i32)
        } else {
            None
        };
        Stepper {
            grid: grid.clone(),
            weight: weight.samples().to_vec(),
            linear_only: weight.is_vanishing(),
            alpha,
            alpha_int,
            dt,
            half: phases(0.5 * dt),
            full: phases(dt),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Exact nonlinear phase rotation on `block`, whose first entry sits at
    /// flat index `offset`. Returns false on a non-finite sample.
    fn rotate_block(&self, offset: usize, block: &mut [Complex64]) -> bool {
        if self.linear_only {
            return block.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        }
        let dt = self.dt;
        let (half_alpha, alpha_int) = (0.5 * self.alpha, self.alpha_int);
        let weight = &self.weight[offset..offset + block.len()];
        // A NaN or infinity anywhere propagates into the running sum of |u|^2.
        let mut acc = 0.0;
        for (z, &w) in block.iter_mut().zip(weight) {
            // |u|^alpha from |u|^2, avoiding hypot.
            let m2 = z.norm_sqr();
            acc += m2;
            let p = match alpha_int {
                Some(2) => m2,
                Some(k) if k % 2 == 0 => m2.powi(k / 2),
                Some(k) => m2.powi(k / 2) * m2.sqrt(),
                None => m2.powf(half_alpha),
            };
            let (s, c) = (dt * w * p).sin_cos();
            *z *= Complex64::new(c, s);
        }
        acc.is_finite()
    }

    /// Advances `steps` full steps. On a non-finite value returns the
    /// 1-based index of the offending step.
    pub fn advance(&self, u: &mut Vec<Complex64>, steps: usize) -> Result<(), usize> {
        if steps == 0 {
            return Ok(());
        }
        match self.grid.fft() {
            Some(fft) => self.advance_cartesian(fft, u, steps),
            None => self.advance_radial(u, steps),
        }
    }

    fn advance_radial(&self, u: &mut Vec<Complex64>, steps: usize) -> Result<(), usize> {
        let op = self.grid.radial_op().expect("radial grid");
        let linear = |u: &mut Vec<Complex64>, phases: &[Complex64]| {
            let mut c = op.forward(u);
            c.iter_mut().zip(phases).for_each(|(z, p)| *z *= p);
            *u = op.inverse(&c);
        };
        linear(u, &self.half);
        for i in 0..steps {
            if !self.rotate_block(0, u) {
                return Err(i + 1);
            }
            linear(u, if i + 1 < steps { &self.full } else { &self.half });
        }
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(steps);
        }
        Ok(())
    }

    /// Each Cartesian step is two fused sweeps separated by transposes:
    /// in physical layout, inverse row transforms, the nonlinear rotation and
    /// the next forward row transforms; in the axis-swapped spectral layout,
    /// forward row transforms, the phase multiplier and inverse row
    /// transforms. The symbol `|k|^2` and the weight are both symmetric
    /// under the axis swap, so neither needs reordering.
    fn advance_cartesian(&self, fft: &Fft2, u: &mut Vec<Complex64>, steps: usize) -> Result<(), usize> {
        let n = self.grid.points();
        let mut other = vec![Complex64::new(0.0, 0.0); u.len()];
        let spectral_sweep = |data: &mut [Complex64], phases: &[Complex64]| {
            fft.fused_rows(
                data,
                Some(Direction::Forward),
                |offset, block| {
                    for (z, p) in block.iter_mut().zip(&phases[offset..]) {
                        *z *= p;
                    }
                },
                Some(Direction::Inverse),
            );
        };
        fft.fused_rows(u, Some(Direction::Forward), |_, _| {}, None);
        transpose_into(u, &mut other, n);
        spectral_sweep(&mut other, &self.half);
        transpose_into(&other, u, n);
        let finite = AtomicBool::new(true);
        for i in 0..steps {
            fft.fused_rows(
                u,
                Some(Direction::Inverse),
                |offset, block| {
                    if !self.rotate_block(offset, block) {
                        finite.store(false, Ordering::Relaxed);
                    }
                },
                Some(Direction::Forward),
            );
            if !finite.load(Ordering::Relaxed) {
                return Err(i + 1);
            }
            transpose_into(u, &mut other, n);
            spectral_sweep(&mut other, if i + 1 < steps { &self.full } else { &self.half });
            transpose_into(&other, u, n);
        }
        fft.fused_rows(u, Some(Direction::Inverse), |_, _| {}, None);
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(steps);
        }
        Ok(())
    }
}


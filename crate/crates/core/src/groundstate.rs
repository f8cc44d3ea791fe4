//! Ground state `-ΔQ + Q = |x|^{-b} Q^{alpha+1}` by Petviashvili iteration,
//! with Pohozaev checks, the sharp Gagliardo–Nirenberg constant and the
//! threshold quantities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::GroundStateError;
use crate::evolution::{mass, potential};
use crate::params::ProblemParams;
use crate::spectral::{
    default_reg_radius, inverse_helmholtz, kinetic, laplacian, make_weight, Grid, SingularWeight,
    SpectralField,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateConfig {
    /// Bound on `|m - 1|` and on the equation residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Truncation radius of the weight; `None` picks the grid default.
    pub reg_radius: Option<f64>,
    /// Width of the initial Gaussian `e^{-|x|^2 / (2 w^2)}`.
    pub initial_width: f64,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        GroundStateConfig {
            tol: 1e-10,
            max_iter: 5000,
            reg_radius: None,
            initial_width: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

/// Raw output of the fixed-point iteration.
#[derive(Debug, Clone)]
pub struct PetviashviliOutcome {
    /// Normalized so that the stabilizing factor is exactly 1.
    pub profile: SpectralField,
    pub iterations: usize,
    /// `m_n` per iteration.
    pub factors: Vec<f64>,
    /// `sup |Q - (1-Δ)^{-1}[w Q^{alpha+1}]|`.
    pub residual: f64,
}

fn nonlinear_term(q: &SpectralField, weight: &SingularWeight, alpha: f64) -> SpectralField {
    let w = weight.samples();
    let values = q
        .values()
        .iter()
        .zip(w)
        .map(|(z, wi)| Complex64::new(wi * z.re.abs().powf(alpha) * z.re, 0.0))
        .collect();
    SpectralField::new(q.grid().clone(), values).expect("same grid")
}

fn real_inner(a: &SpectralField, b: &SpectralField) -> f64 {
    a.grid()
        .integrate_with(|i| a.values()[i].re * b.values()[i].re)
}

fn sup_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Petviashvili iteration for `-ΔQ + Q = w Q^{alpha+1}` on any grid and
/// weight. Stops when `|m_n - 1| < tol` and the residual is below `tol`.
pub fn petviashvili(
    grid: &Grid,
    weight: &SingularWeight,
    alpha: f64,
    cfg: &GroundStateConfig,
) -> Result<PetviashviliOutcome, GroundStateError> {
    if !(alpha > 0.0) {
        return Err(GroundStateError::Invalid(format!("alpha = {alpha} must be positive")));
    }
    if weight.grid() != grid {
        return Err(GroundStateError::Invalid("weight lives on another grid".into()));
    }
    let gamma = (alpha + 1.0) / alpha;
    let width = cfg.initial_width;
    let mut q = SpectralField::from_radial_fn(grid, |r| (-r * r / (2.0 * width * width)).exp());
    let mut factors = Vec::new();
    for iteration in 1..=cfg.max_iter {
        let nl = nonlinear_term(&q, weight, alpha);
        let denom = real_inner(&nl, &q);
        let numer = q.norm_sqr() + kinetic(&q);
        let m = numer / denom;
        if !m.is_finite() {
            return Err(GroundStateError::NonFinite(iteration));
        }
        factors.push(m);
        let update = inverse_helmholtz(&nl);
        let next = update.map(|z| Complex64::new(m.powf(gamma) * z.re, 0.0));
        if next.values().iter().any(|z| !z.re.is_finite()) {
            return Err(GroundStateError::NonFinite(iteration));
        }
        let norm = next.norm_l2();
        if norm < 1e-10 {
            return Err(GroundStateError::Collapsed { iteration, norm });
        }
        q = next;
        if (m - 1.0).abs() < cfg.tol {
            // Rescale so the factor is exactly one: m(cQ) = c^{-alpha} m(Q).
            let nl = nonlinear_term(&q, weight, alpha);
            let m = (q.norm_sqr() + kinetic(&q)) / real_inner(&nl, &q);
            q = q.scaled_real(m.powf(1.0 / alpha));
            let residual = sup_diff(&q, &inverse_helmholtz(&nonlinear_term(&q, weight, alpha)));
            if residual < cfg.tol {
                return Ok(PetviashviliOutcome {
                    profile: q,
                    iterations: iteration,
                    factors,
                    residual,
                });
            }
        }
    }
    let nl = nonlinear_term(&q, weight, alpha);
    let m = (q.norm_sqr() + kinetic(&q)) / real_inner(&nl, &q);
    Err(GroundStateError::NotConverged {
        iterations: cfg.max_iter,
        factor_gap: (m - 1.0).abs(),
        residual: sup_diff(&q, &inverse_helmholtz(&nl)),
    })
}

/// Relative residuals of the two Pohozaev-type identities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PohozaevReport {
    /// `|K + M - P| / P` (pairing with `Q`).
    pub pairing: f64,
    /// `|(N-2)/2 K + N/2 M - (N-b)/(alpha+2) P| / P` (pairing with `x·∇Q`).
    pub dilation: f64,
    pub ratio: f64,
    /// `(N alpha + 2b) / (4 - 2b - (N-2) alpha)`.
    pub ratio_expected: f64,
    pub ratio_error: f64,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub profile: SpectralField,
    pub weight: SingularWeight,
    pub params: ProblemParams,
    pub mass: f64,
    /// `||∇Q||^2`.
    pub kinetic: f64,
    /// `∫ w Q^{alpha+2}`.
    pub potential: f64,
    pub energy: f64,
    /// Preconditioned residual `sup |Q - (1-Δ)^{-1}[w Q^{alpha+1}]|`.
    pub residual: f64,
    /// `sup |-ΔQ + Q - w Q^{alpha+1}|` (roundoff-limited on stretched grids).
    pub raw_residual: f64,
    pub iterations: usize,
    pub factors: Vec<f64>,
    pub pohozaev: PohozaevReport,
    pub gn_constant: f64,
    pub threshold_me: f64,
    pub threshold_grad: f64,
}

/// Scalar summary suitable for JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateRecord {
    pub dimension: u32,
    pub b: String,
    pub alpha: String,
    pub critical_index: String,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub residual: f64,
    pub raw_residual: f64,
    pub iterations: usize,
    pub final_factor: f64,
    pub pohozaev: PohozaevReport,
    pub gn_constant: f64,
    pub threshold_me: f64,
    pub threshold_grad: f64,
    pub profile_peak: f64,
    pub monotone_profile: bool,
    pub reg_radius: f64,
}

/// GN exponents `((N alpha + 2b)/4, (4 - 2b - alpha (N-2))/4)` on `K`, `M`.
pub fn gn_exponents(params: &ProblemParams) -> (f64, f64) {
    let n = params.dimension() as f64;
    let a = params.alpha_f64();
    let b = params.b_f64();
    ((n * a + 2.0 * b) / 4.0, (4.0 - 2.0 * b - a * (n - 2.0)) / 4.0)
}

/// `C_GN = P / (K^{(N alpha + 2b)/4} M^{(4 - 2b - alpha(N-2))/4})` at `Q`.
pub fn gn_constant(gs: &GroundState, params: &ProblemParams) -> f64 {
    let (ek, em) = gn_exponents(params);
    gs.potential / (gs.kinetic.powf(ek) * gs.mass.powf(em))
}

/// `P[u] / (C_GN K[u]^{..} M[u]^{..})`; at most one for every `u`.
pub fn gn_ratio(u: &SpectralField, weight: &SingularWeight, params: &ProblemParams, c_gn: f64) -> f64 {
    let (ek, em) = gn_exponents(params);
    let p = potential(u, weight, params.alpha_f64());
    p / (c_gn * kinetic(u).powf(ek) * mass(u).powf(em))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Thresholds {
    /// `E[Q]^{s_c} M[Q]^{1-s_c}`.
    pub threshold_me: f64,
    /// `||∇Q||^{s_c} ||Q||^{1-s_c}`.
    pub threshold_grad: f64,
}

pub fn threshold_quantities(gs: &GroundState, params: &ProblemParams) -> Thresholds {
    let sc = params.critical_index_f64();
    Thresholds {
        threshold_me: gs.energy.powf(sc) * gs.mass.powf(1.0 - sc),
        threshold_grad: gs.kinetic.powf(sc / 2.0) * gs.mass.powf((1.0 - sc) / 2.0),
    }
}

impl GroundState {
    /// Evaluates every derived quantity of a converged profile.
    pub fn from_outcome(
        outcome: PetviashviliOutcome,
        weight: SingularWeight,
        params: &ProblemParams,
    ) -> Self {
        let q = outcome.profile;
        let alpha = params.alpha_f64();
        let b = params.b_f64();
        let n = params.dimension() as f64;
        let m = mass(&q);
        let k = kinetic(&q);
        let p = potential(&q, &weight, alpha);
        let energy = 0.5 * k - p / (alpha + 2.0);
        let lap = laplacian(&q);
        let nl = nonlinear_term(&q, &weight, alpha);
        let raw_residual = q
            .values()
            .iter()
            .zip(lap.values())
            .zip(nl.values())
            .map(|((u, l), f)| (-l + u - f).norm())
            .fold(0.0, f64::max);
        let ratio = k / m;
        let ratio_expected = (n * alpha + 2.0 * b) / (4.0 - 2.0 * b - (n - 2.0) * alpha);
        let pohozaev = PohozaevReport {
            pairing: (k + m - p).abs() / p,
            dilation: ((n - 2.0) / 2.0 * k + n / 2.0 * m - (n - b) / (alpha + 2.0) * p).abs() / p,
            ratio,
            ratio_expected,
            ratio_error: (ratio - ratio_expected).abs() / ratio_expected,
        };
        let mut gs = GroundState {
            profile: q,
            weight,
            params: params.clone(),
            mass: m,
            kinetic: k,
            potential: p,
            energy,
            residual: outcome.residual,
            raw_residual,
            iterations: outcome.iterations,
            factors: outcome.factors,
            pohozaev,
            gn_constant: 0.0,
            threshold_me: 0.0,
            threshold_grad: 0.0,
        };
        gs.gn_constant = gn_constant(&gs, params);
        let t = threshold_quantities(&gs, params);
        gs.threshold_me = t.threshold_me;
        gs.threshold_grad = t.threshold_grad;
        gs
    }

    /// `Q` positive at the innermost node and nonincreasing in `|x|`
    /// (checked on the radial profile, or along sorted radii on Cartesian
    /// grids within roundoff).
    pub fn profile_is_monotone(&self) -> bool {
        let grid = self.profile.grid();
        let mut pairs: Vec<(f64, f64)> = grid
            .radii()
            .iter()
            .zip(self.profile.values())
            .map(|(&r, z)| (r, z.re))
            .collect();
        if !grid.is_radial() {
            // First half-axis only, inside half the box: periodic images
            // lift the far tail.
            let n = grid.points();
            pairs = (n / 2..3 * n / 4)
                .map(|i0| {
                    let idx = i0 * n + n / 2;
                    (grid.radii()[idx], self.profile.values()[idx].re)
                })
                .collect();
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let peak = pairs[0].1;
        peak > 0.0
            && pairs
                .windows(2)
                .all(|w| w[1].1 <= w[0].1 + 1e-12 * peak)
    }

    pub fn record(&self) -> GroundStateRecord {
        GroundStateRecord {
            dimension: self.params.dimension(),
            b: self.params.b().to_string(),
            alpha: self.params.alpha().to_string(),
            critical_index: self.params.critical_index().to_string(),
            mass: self.mass,
            kinetic: self.kinetic,
            potential: self.potential,
            energy: self.energy,
            residual: self.residual,
            raw_residual: self.raw_residual,
            iterations: self.iterations,
            final_factor: *self.factors.last().unwrap_or(&f64::NAN),
            pohozaev: self.pohozaev.clone(),
            gn_constant: self.gn_constant,
            threshold_me: self.threshold_me,
            threshold_grad: self.threshold_grad,
            profile_peak: self.profile.sup_norm(),
            monotone_profile: self.profile_is_monotone(),
            reg_radius: self.weight.reg_radius(),
        }
    }
}

/// Solves for `Q` with the default configuration and the given tolerance.
pub fn solve_ground_state(
    params: &ProblemParams,
    grid: &Grid,
    tol: f64,
) -> Result<GroundState, GroundStateError> {
    let cfg = GroundStateConfig {
        tol,
        ..GroundStateConfig::default()
    };
    solve_ground_state_with(params, grid, &cfg)
}

pub fn solve_ground_state_with(
    params: &ProblemParams,
    grid: &Grid,
    cfg: &GroundStateConfig,
) -> Result<GroundState, GroundStateError> {
    if grid.dimension() != params.dimension() as usize {
        return Err(GroundStateError::Invalid(format!(
            "grid dimension {} differs from N = {}",
            grid.dimension(),
            params.dimension()
        )));
    }
    let rho = cfg.reg_radius.unwrap_or_else(|| default_reg_radius(grid));
    let weight =
        make_weight(grid, params.b(), rho).map_err(|e| GroundStateError::Invalid(e.to_string()))?;
    let outcome = petviashvili(grid, &weight, params.alpha_f64(), cfg)?;
    Ok(GroundState::from_outcome(outcome, weight, params))
}

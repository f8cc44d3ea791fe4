use serde::{Deserialize, Serialize};

use crate::evolution::{GuardSettings, Stepper};
use crate::spectral::bump::{smooth_step, smooth_step_jet, Jet};
use crate::spectral::fields::translate;
use crate::spectral::{free_propagate, h1_norm, littlewood_paley, SingularWeight, SpectralField};

/// Deviations closer than this are treated as equal in the monotonicity check.
pub const NOISE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct FarTranslationConfig {
    pub alpha: f64,
    pub weight: SingularWeight,
    pub dt: f64,
    /// Steps between deviation samples.
    pub sample_stride: usize,
    pub guard: GuardSettings,
    /// Unit vector along which the profile is moved.
    pub direction: [f64; 2],
}

impl FarTranslationConfig {
    pub fn new(weight: SingularWeight, alpha: f64) -> Self {
        FarTranslationConfig {
            alpha,
            weight,
            dt: 1e-3,
            sample_stride: 50,
            guard: GuardSettings::default(),
            direction: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarTranslationRow {
    pub offset: f64,
    /// Reason the row was not run, if any.
    pub skipped: Option<String>,
    /// `sup_t ||u(t) - e^{itΔ} u(0)||_{H^1}` over the sampled times.
    pub deviation: f64,
    pub deviation_time: f64,
    pub initial_h1: f64,
    pub initial_shell_ratio: f64,
    /// Largest shell ratio seen while evolving.
    pub max_shell_ratio: f64,
    pub guard_violated: bool,
    /// `|x_n| sup |∇χ_n|`; bounded independently of the offset.
    pub cutoff_gradient_constant: f64,
    /// Frequency cutoff `|x_n|^θ` of the projector.
    pub frequency_cutoff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarTranslationTable {
    pub theta: f64,
    pub t_final: f64,
    pub rows: Vec<FarTranslationRow>,
    /// Nonincreasing in the offset up to [`NOISE_FLOOR`], over rows that ran.
    pub nonincreasing: bool,
    pub strictly_decreasing: bool,
    /// First over last deviation among nonzero offsets that ran.
    pub first_last_ratio: Option<f64>,
    /// Least-squares slope of `log deviation` against `log offset`.
    pub loglog_slope: Option<f64>,
}

impl FarTranslationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "offset,status,deviation,deviation_time,initial_h1,initial_shell_ratio,max_shell_ratio,guard_violated,cutoff_gradient_constant,frequency_cutoff\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e},{:.17e}\n",
                r.offset,
                if r.skipped.is_some() { "skipped" } else { "ok" },
                r.deviation,
                r.deviation_time,
                r.initial_h1,
                r.initial_shell_ratio,
                r.max_shell_ratio,
                r.guard_violated,
                r.cutoff_gradient_constant,
                r.frequency_cutoff
            ));
        }
        out
    }
}

/// `χ(x) = s((|x| - d/4)/(d/4))` for the smooth step `s`: zero on
/// `|x| < d/4`, one on `|x| > d/2`. Evaluated at the translated frame, this
/// is the cutoff `χ_n(x - x_n)`.
pub fn far_cutoff(radius: f64, offset: f64) -> f64 {
    let a = offset / 4.0;
    smooth_step((radius - a) / a)
}

fn far_cutoff_slope(radius: f64, offset: f64) -> f64 {
    let a = offset / 4.0;
    smooth_step_jet(Jet::variable((radius - a) / a)).derivative(1) / a
}

fn shell_ratio(u: &SpectralField, shell: &[bool]) -> f64 {
    let outer = u
        .grid()
        .integrate_with(|i| if shell[i] { u.values()[i].norm_sqr() } else { 0.0 });
    (outer / u.norm_sqr().max(f64::MIN_POSITIVE)).sqrt()
}

/// Builds `χ_n P_n ψ` translated by `offset` along `direction`. Offset zero
/// returns `ψ` itself (the baseline row). Returns `None` on radial grids.
pub fn far_initial_data(
    psi: &SpectralField,
    offset: f64,
    theta: f64,
    direction: [f64; 2],
) -> Option<SpectralField> {
    if psi.grid().is_radial() {
        return None;
    }
    if offset == 0.0 {
        return Some(psi.clone());
    }
    let projected = littlewood_paley(psi, offset.powf(theta)).ok()?;
    let moved = translate(&projected, [offset * direction[0], offset * direction[1]])?;
    let grid = moved.grid().clone();
    let values = moved
        .values()
        .iter()
        .zip(grid.radii())
        .map(|(z, &r)| z * far_cutoff(r, offset))
        .collect();
    SpectralField::new(grid, values).ok()
}

fn run_row(psi: &SpectralField, offset: f64, theta: f64, t_final: f64, cfg: &FarTranslationConfig) -> FarTranslationRow {
    let grid = psi.grid();
    let shell = grid.outer_shell_mask(cfg.guard.shell_fraction);
    let cutoff_gradient_constant = if offset > 0.0 {
        offset
            * grid
                .radii()
                .iter()
                .map(|&r| far_cutoff_slope(r, offset).abs())
                .fold(0.0, f64::max)
    } else {
        0.0
    };
    let mut row = FarTranslationRow {
        offset,
        skipped: None,
        deviation: 0.0,
        deviation_time: 0.0,
        initial_h1: 0.0,
        initial_shell_ratio: 0.0,
        max_shell_ratio: 0.0,
        guard_violated: false,
        cutoff_gradient_constant,
        frequency_cutoff: if offset > 0.0 { offset.powf(theta) } else { f64::INFINITY },
    };
    let u0 = match far_initial_data(psi, offset, theta, cfg.direction) {
        Some(u) => u,
        None => {
            row.skipped = Some("far translation needs a Cartesian grid".into());
            return row;
        }
    };
    row.initial_h1 = h1_norm(&u0);
    row.initial_shell_ratio = shell_ratio(&u0, &shell);
    row.max_shell_ratio = row.initial_shell_ratio;
    if row.initial_shell_ratio > cfg.guard.tolerance {
        row.skipped = Some(format!(
            "translated data does not fit the grid: shell ratio {:.3e} exceeds {:.1e}",
            row.initial_shell_ratio, cfg.guard.tolerance
        ));
        return row;
    }
    let steps = (t_final / cfg.dt).round() as usize;
    let stepper = Stepper::new(grid, &cfg.weight, cfg.alpha, cfg.dt);
    let mut values = u0.values().to_vec();
    let mut done = 0;
    while done < steps {
        let chunk = cfg.sample_stride.max(1).min(steps - done);
        if let Err(k) = stepper.advance(&mut values, chunk) {
            row.skipped = Some(format!("non-finite field at t = {}", (done + k) as f64 * cfg.dt));
            return row;
        }
        done += chunk;
        let t = done as f64 * cfg.dt;
        let u = SpectralField::new(grid.clone(), values.clone()).expect("same grid");
        let d = h1_norm(&u.sub(&free_propagate(&u0, t)).expect("same grid"));
        if d > row.deviation {
            row.deviation = d;
            row.deviation_time = t;
        }
        let ratio = shell_ratio(&u, &shell);
        row.max_shell_ratio = row.max_shell_ratio.max(ratio);
    }
    row.guard_violated = row.max_shell_ratio > cfg.guard.tolerance;
    row
}

/// Evolves remotely translated, frequency-localized copies of `psi` under
/// the full flow and tabulates their deviation from free evolution. Rows
/// are returned in increasing offset order.
pub fn far_translation_experiment(
    psi: &SpectralField,
    offsets: &[f64],
    theta: f64,
    t_final: f64,
    cfg: &FarTranslationConfig,
) -> FarTranslationTable {
    let mut sorted = offsets.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let rows: Vec<FarTranslationRow> = sorted
        .iter()
        .map(|&d| run_row(psi, d, theta, t_final, cfg))
        .collect();
    let ran: Vec<&FarTranslationRow> = rows.iter().filter(|r| r.skipped.is_none()).collect();
    let nonincreasing = ran
        .windows(2)
        .all(|w| w[1].deviation <= w[0].deviation + NOISE_FLOOR);
    let strictly_decreasing = ran.windows(2).all(|w| w[1].deviation < w[0].deviation);
    let positive: Vec<&&FarTranslationRow> = ran.iter().filter(|r| r.offset > 0.0).collect();
    let first_last_ratio = match (positive.first(), positive.last()) {
        (Some(a), Some(b)) if positive.len() >= 2 && b.deviation > 0.0 => Some(a.deviation / b.deviation),
        _ => None,
    };
    let pts: Vec<(f64, f64)> = positive
        .iter()
        .filter(|r| r.deviation > 0.0)
        .map(|r| (r.offset.ln(), r.deviation.ln()))
        .collect();
    let loglog_slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    FarTranslationTable {
        theta,
        t_final,
        rows,
        nonincreasing,
        strictly_decreasing,
        first_last_ratio,
        loglog_slope,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_plateaus_are_exact() {
        for d in [4.0, 8.0, 24.0] {
            for k in 0..200 {
                let r = k as f64 * d / 100.0;
                let c = far_cutoff(r, d);
                if r < d / 4.0 {
                    assert_eq!(c, 0.0);
                } else if r > d / 2.0 {
                    assert_eq!(c, 1.0);
                } else {
                    assert!((0.0..=1.0).contains(&c));
                }
            }
        }
    }

    #[test]
    fn cutoff_slope_scales_inversely_with_offset() {
        let sup = |d: f64| {
            (0..4000)
                .map(|k| far_cutoff_slope(k as f64 * d / 4000.0, d).abs())
                .fold(0.0, f64::max)
                * d
        };
        assert!((sup(4.0) - sup(24.0)).abs() < 1e-9 * sup(4.0));
    }
}

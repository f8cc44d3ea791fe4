use serde::{Deserialize, Serialize};

use super::virial::{virial_error_bound, VirialKind};
use crate::evolution::{RunStatus, Trajectory};
use crate::spectral::{free_propagate, h1_norm, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringConfig {
    /// Relative `H^1` distance the last quarter must settle below.
    pub settle_tolerance: f64,
    /// Required `max_t P(t) / P(T)`.
    pub decay_factor: f64,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        ScatteringConfig {
            settle_tolerance: 1e-3,
            decay_factor: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatteringVerdict {
    ScatteringConsistent,
    Inconclusive,
    Growth,
}

#[derive(Debug, Clone)]
pub struct ScatteringReport {
    /// `e^{-iTΔ} u(T)`.
    pub u_plus: SpectralField,
    pub final_time: f64,
    /// Times of the stored snapshots, where the distance is evaluated.
    pub distance_times: Vec<f64>,
    /// `||u(t) - e^{itΔ} u_+||_{H^1}` at `distance_times`.
    pub h1_distance: Vec<f64>,
    /// Potential-energy channel, aligned with the trajectory's monitor times.
    pub potential_times: Vec<f64>,
    pub potential: Vec<f64>,
    pub potential_decay: f64,
    /// Largest relative distance over the last quarter, excluding `t = T`.
    pub settle_distance: f64,
    pub settling_monotone: bool,
    pub guard_violated: bool,
    pub config: ScatteringConfig,
    pub verdict: ScatteringVerdict,
    /// The verdict the same tests give when the guard is disregarded.
    pub verdict_ignoring_guard: ScatteringVerdict,
}

/// Summary for serialization (the field `u_plus` is written separately).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringSummary {
    pub final_time: f64,
    pub potential_decay: f64,
    pub settle_distance: f64,
    pub settling_monotone: bool,
    pub guard_violated: bool,
    pub config: ScatteringConfig,
    pub verdict: ScatteringVerdict,
    pub verdict_ignoring_guard: ScatteringVerdict,
    pub u_plus_h1: f64,
}

impl ScatteringReport {
    pub fn summary(&self) -> ScatteringSummary {
        ScatteringSummary {
            final_time: self.final_time,
            potential_decay: self.potential_decay,
            settle_distance: self.settle_distance,
            settling_monotone: self.settling_monotone,
            guard_violated: self.guard_violated,
            config: self.config,
            verdict: self.verdict,
            verdict_ignoring_guard: self.verdict_ignoring_guard,
            u_plus_h1: h1_norm(&self.u_plus),
        }
    }

    /// `time,h1_distance` rows.
    pub fn distance_csv(&self) -> String {
        let mut out = String::from("time,h1_distance\n");
        for (t, d) in self.distance_times.iter().zip(&self.h1_distance) {
            out.push_str(&format!("{t:.17e},{d:.17e}\n"));
        }
        out
    }

    /// `time,potential` rows.
    pub fn potential_csv(&self) -> String {
        let mut out = String::from("time,potential\n");
        for (t, p) in self.potential_times.iter().zip(&self.potential) {
            out.push_str(&format!("{t:.17e},{p:.17e}\n"));
        }
        out
    }
}

pub fn scattering_diagnostic(traj: &Trajectory) -> ScatteringReport {
    scattering_diagnostic_with(traj, ScatteringConfig::default())
}

/// Estimates `u_+` at the final time and tests the two settling criteria:
/// potential decay by `decay_factor` from its maximum, and an `H^1`
/// distance that is nonincreasing over the last quarter of the run and
/// stays below `settle_tolerance` relative to `||u_+||_{H^1}`.
pub fn scattering_diagnostic_with(traj: &Trajectory, config: ScatteringConfig) -> ScatteringReport {
    let t_final = traj.final_time();
    let u_plus = free_propagate(&traj.final_state, -t_final);
    let h1_distance: Vec<f64> = traj
        .snapshot_times
        .iter()
        .zip(&traj.snapshots)
        .map(|(&t, u)| h1_norm(&u.sub(&free_propagate(&u_plus, t)).expect("same grid")))
        .collect();

    let p = &traj.monitors.potential;
    let p_max = p.iter().cloned().fold(0.0, f64::max);
    let p_last = *p.last().unwrap_or(&0.0);
    let potential_decay = if p_max == 0.0 {
        f64::INFINITY
    } else if p_last <= 0.0 {
        f64::INFINITY
    } else {
        p_max / p_last
    };

    let scale = h1_norm(&u_plus).max(f64::MIN_POSITIVE);
    let tail: Vec<f64> = traj
        .snapshot_times
        .iter()
        .zip(&h1_distance)
        .filter(|(&t, _)| t >= 0.75 * t_final)
        .map(|(_, &d)| d / scale)
        .collect();
    let settling_monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    let settle_distance = tail
        .iter()
        .take(tail.len().saturating_sub(1))
        .cloned()
        .fold(0.0, f64::max);
    // A settling test needs at least one sample before T.
    let enough_samples = tail.len() >= 2;

    let growth = matches!(traj.status, RunStatus::GradientGrowth { .. });
    let tests_pass = enough_samples
        && settling_monotone
        && settle_distance < config.settle_tolerance
        && potential_decay >= config.decay_factor;
    let verdict_ignoring_guard = if growth {
        ScatteringVerdict::Growth
    } else if tests_pass {
        ScatteringVerdict::ScatteringConsistent
    } else {
        ScatteringVerdict::Inconclusive
    };
    let guard_violated = traj.guard.violated();
    let verdict = if guard_violated && verdict_ignoring_guard == ScatteringVerdict::ScatteringConsistent {
        ScatteringVerdict::Inconclusive
    } else {
        verdict_ignoring_guard
    };

    ScatteringReport {
        u_plus,
        final_time: t_final,
        distance_times: traj.snapshot_times.clone(),
        h1_distance,
        potential_times: traj.times.clone(),
        potential: p.clone(),
        potential_decay,
        settle_distance,
        settling_monotone,
        guard_violated,
        config,
        verdict,
        verdict_ignoring_guard,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContradictionReport {
    pub radius: Option<f64>,
    pub delta: f64,
    pub final_time: f64,
    /// Trapezoidal `∫_0^T z''`.
    pub zpp_integral: f64,
    /// `z'(T) - z'(0)`.
    pub zp_change: f64,
    pub ftc_discrepancy: f64,
    /// Trapezoid error estimate `T h^2 max|z''''| / 6` plus a roundoff floor.
    pub ftc_bound: f64,
    pub ftc_consistent: bool,
    /// `δ ∫_0^T ||∇u||^2`.
    pub dissipation: f64,
    /// `R sup_t ||u||_{H^1}^2`.
    pub boundary_term: f64,
    /// Trapezoidal `∫_0^T` of the exterior error terms, on snapshot times.
    pub error_integral: f64,
    /// `dissipation / (boundary_term + error_integral)`.
    pub ratio: f64,
    /// Fraction of samples where `z'' > δ ||∇u||^2`.
    pub coercive_fraction: f64,
    /// Set when some sample has `z'' <= δ ||∇u||^2`.
    pub non_coercive: bool,
    /// Largest `|z'| / (R ||u||_{H^1}^2)` over the samples.
    pub zprime_constant: f64,
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(tw, fw)| 0.5 * (tw[1] - tw[0]) * (fw[0] + fw[1]))
        .sum()
}

/// Runs the localized-virial bookkeeping on a trajectory: the calculus
/// identity `∫ z'' = z'(T) - z'(0)` and the ratio of the dissipation
/// `δ ∫ ||∇u||^2` to `R ||u||_{L^∞H^1}^2 + ∫ error(t)`. A bounded ratio as
/// `T` grows means no contradiction is reached.
pub fn virial_contradiction_monitor(traj: &Trajectory, delta: f64) -> ContradictionReport {
    let t = &traj.times;
    let m = &traj.monitors;
    let radius = match traj.virial {
        VirialKind::Localized { radius } => Some(radius),
        VirialKind::Quadratic => None,
    };
    let zpp_integral = trapezoid(t, &m.virial_zpp);
    let zp_change = m.virial_zp.last().unwrap_or(&0.0) - m.virial_zp.first().unwrap_or(&0.0);
    let ftc_discrepancy = (zpp_integral - zp_change).abs();

    // Trapezoid error needs the second derivative of the integrand z''.
    let f = &m.virial_zpp;
    let mut max_curv: f64 = 0.0;
    let mut max_h: f64 = 0.0;
    for k in 1..t.len().saturating_sub(1) {
        let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        if h1 > 0.0 && h2 > 0.0 {
            max_h = max_h.max(h1).max(h2);
            let d2 = 2.0 * ((f[k + 1] - f[k]) / h2 - (f[k] - f[k - 1]) / h1) / (h1 + h2);
            max_curv = max_curv.max(d2.abs());
        }
    }
    let final_time = traj.final_time();
    let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    // Factor two of slack on the estimated curvature, plus a roundoff floor.
    let ftc_bound = 2.0 * final_time * max_h * max_h * max_curv / 12.0 + 1e-9 * scale * final_time.max(1.0);
    let ftc_consistent = ftc_discrepancy <= ftc_bound;

    let k_series: Vec<f64> = m.grad_norm.iter().map(|g| g * g).collect();
    let dissipation = delta * trapezoid(t, &k_series);
    let h1_sq: Vec<f64> = m.mass.iter().zip(&k_series).map(|(a, b)| a + b).collect();
    let sup_h1 = h1_sq.iter().cloned().fold(0.0, f64::max);
    let r = radius.unwrap_or(f64::NAN);
    let boundary_term = radius.map_or(f64::INFINITY, |r| r * sup_h1);

    let error_integral = match radius {
        Some(r) => {
            let b = traj.weight.b().to_f64();
            let errs: Vec<f64> = traj
                .snapshots
                .iter()
                .map(|u| virial_error_bound(u, r, b, traj.alpha))
                .collect();
            trapezoid(&traj.snapshot_times, &errs)
        }
        None => 0.0,
    };
    let ratio = dissipation / (boundary_term + error_integral);

    let coercive = m
        .virial_zpp
        .iter()
        .zip(&k_series)
        .filter(|(zpp, k)| **zpp > delta * **k)
        .count();
    let coercive_fraction = if t.is_empty() { 0.0 } else { coercive as f64 / t.len() as f64 };
    let zprime_constant = m
        .virial_zp
        .iter()
        .zip(&h1_sq)
        .map(|(zp, h)| zp.abs() / (r * h))
        .filter(|c| c.is_finite())
        .fold(0.0, f64::max);

    ContradictionReport {
        radius,
        delta,
        final_time,
        zpp_integral,
        zp_change,
        ftc_discrepancy,
        ftc_bound,
        ftc_consistent,
        dissipation,
        boundary_term,
        error_integral,
        ratio,
        coercive_fraction,
        non_coercive: coercive < t.len(),
        zprime_constant,
    }
}

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::functionals::{mass, potential};
use super::stepper::Stepper;
use crate::diagnostics::virial::{virial_triple, VirialKind, VirialWeight};
use crate::error::EvolutionError;
use crate::spectral::snapshot::save_snapshot;
use crate::spectral::{kinetic, SingularWeight, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuardSettings {
    /// Outer shell as a fraction of the extent.
    pub shell_fraction: f64,
    /// Allowed `||u||_{L^2(shell)} / ||u||_{L^2}`.
    pub tolerance: f64,
}

impl Default for GuardSettings {
    fn default() -> Self {
        GuardSettings {
            shell_fraction: 0.1,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Steps between stored snapshots.
    pub snapshot_stride: usize,
    /// Steps between monitor samples.
    pub monitor_stride: usize,
    pub weight: SingularWeight,
    pub alpha: f64,
    pub wraparound_guard: bool,
    pub guard: GuardSettings,
    /// Stop with [`RunStatus::GradientGrowth`] once `||∇u||` exceeds this
    /// multiple of its initial value.
    pub growth_limit: f64,
    pub virial: VirialKind,
}

impl EvolutionConfig {
    /// Defaults: `dt = 1e-3`, snapshots every 100 steps, monitors every 10,
    /// guard on, growth limit 100, virial weight localized at `L/4`.
    pub fn new(weight: SingularWeight, alpha: f64, t_final: f64) -> Self {
        let radius = weight.grid().extent() / 4.0;
        EvolutionConfig {
            dt: 1e-3,
            t_final,
            snapshot_stride: 100,
            monitor_stride: 10,
            weight,
            alpha,
            wraparound_guard: true,
            guard: GuardSettings::default(),
            growth_limit: 100.0,
            virial: VirialKind::Localized { radius },
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EvolutionError::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(EvolutionError::InvalidConfig(format!(
                "t_final = {} must be nonnegative",
                self.t_final
            )));
        }
        if self.snapshot_stride == 0 || self.monitor_stride == 0 {
            return Err(EvolutionError::InvalidConfig("strides must be at least 1".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(EvolutionError::InvalidConfig(format!("alpha = {} must be positive", self.alpha)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Monitor channels, aligned with [`Trajectory::times`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Monitors {
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub potential: Vec<f64>,
    pub virial_z: Vec<f64>,
    pub virial_zp: Vec<f64>,
    pub virial_zpp: Vec<f64>,
    pub shell_mass: Vec<f64>,
}

pub const MONITOR_COLUMNS: [&str; 9] = [
    "time",
    "mass",
    "energy",
    "grad_norm",
    "potential",
    "virial_z",
    "virial_zp",
    "virial_zpp",
    "shell_mass",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    GradientGrowth { time: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuardReport {
    pub enabled: bool,
    pub settings: GuardSettings,
    /// Largest `||u||_{L^2(shell)} / ||u||_{L^2}` seen at monitor times.
    pub max_ratio: f64,
    pub violated_at: Option<f64>,
}

impl GuardReport {
    pub fn violated(&self) -> bool {
        self.enabled && self.violated_at.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub monitors: Monitors,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub status: RunStatus,
    pub guard: GuardReport,
    pub dt: f64,
    pub steps: usize,
    pub alpha: f64,
    pub weight: SingularWeight,
    pub virial: VirialKind,
    pub final_state: SpectralField,
}

/// Scalar summary written to the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub status: RunStatus,
    pub guard: GuardReport,
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    pub samples: usize,
    pub snapshots: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub virial: VirialKind,
}

fn max_rel_drift(series: &[f64]) -> f64 {
    let first = match series.first() {
        Some(f) => *f,
        None => return 0.0,
    };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    series
        .iter()
        .map(|v| (v - first).abs() / scale)
        .fold(0.0, f64::max)
}

impl Trajectory {
    pub fn mass_drift(&self) -> f64 {
        max_rel_drift(&self.monitors.mass)
    }

    pub fn energy_drift(&self) -> f64 {
        max_rel_drift(&self.monitors.energy)
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            status: self.status,
            guard: self.guard.clone(),
            dt: self.dt,
            steps: self.steps,
            final_time: self.final_time(),
            samples: self.times.len(),
            snapshots: self.snapshots.len(),
            mass_drift: self.mass_drift(),
            energy_drift: self.energy_drift(),
            virial: self.virial,
        }
    }

    /// Monitor CSV with one row per sample. Values use a fixed
    /// round-trippable format so identical runs give identical bytes.
    pub fn write_monitor_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", MONITOR_COLUMNS.join(","))?;
        let m = &self.monitors;
        for (i, t) in self.times.iter().enumerate() {
            let row = [
                *t,
                m.mass[i],
                m.energy[i],
                m.grad_norm[i],
                m.potential[i],
                m.virial_z[i],
                m.virial_zp[i],
                m.virial_zpp[i],
                m.shell_mass[i],
            ];
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Writes `trajectory.json`, `monitors.csv` and `snapshots/snap_NNNNN.bin`.
    pub fn persist(&self, dir: &Path) -> Result<(), crate::Error> {
        std::fs::create_dir_all(dir.join("snapshots"))?;
        let file = std::fs::File::create(dir.join("monitors.csv"))?;
        self.write_monitor_csv(std::io::BufWriter::new(file))?;
        let b = self.weight.b().to_f64();
        for (k, (t, f)) in self.snapshot_times.iter().zip(&self.snapshots).enumerate() {
            save_snapshot(dir.join("snapshots").join(format!("snap_{k:05}.bin")), f, b, *t)?;
        }
        let summary = serde_json::to_string_pretty(&self.summary())?;
        std::fs::write(dir.join("trajectory.json"), summary)?;
        Ok(())
    }
}

struct Sampler<'a> {
    cfg: &'a EvolutionConfig,
    virial: VirialWeight,
    shell: Vec<bool>,
}

impl Sampler<'_> {
    fn sample(&self, u: &SpectralField, t: f64, traj: &mut Monitors) -> (f64, f64) {
        let m = mass(u);
        let k = kinetic(u);
        let p = potential(u, &self.cfg.weight, self.cfg.alpha);
        traj.mass.push(m);
        traj.energy.push(0.5 * k - p / (self.cfg.alpha + 2.0));
        traj.grad_norm.push(k.max(0.0).sqrt());
        traj.potential.push(p);
        let [z, zp, zpp] = virial_triple(u, &self.virial, &self.cfg.weight, self.cfg.alpha);
        traj.virial_z.push(z);
        traj.virial_zp.push(zp);
        traj.virial_zpp.push(zpp);
        let shell = u
            .grid()
            .integrate_with(|i| if self.shell[i] { u.values()[i].norm_sqr() } else { 0.0 });
        traj.shell_mass.push(shell);
        let _ = t;
        (k.max(0.0).sqrt(), (shell / m.max(f64::MIN_POSITIVE)).sqrt())
    }
}

/// Largest `dt w |u|^alpha` over the grid: the nonlinear rotation applied
/// in one step. Values of order one mean the weight core is too stiff for
/// the chosen step.
pub fn max_phase_per_step(u: &SpectralField, cfg: &EvolutionConfig) -> f64 {
    u.values()
        .iter()
        .zip(cfg.weight.samples())
        .map(|(z, w)| cfg.dt.abs() * w * z.norm().powf(cfg.alpha))
        .fold(0.0, f64::max)
}

/// Repeated Strang steps with monitor sampling, snapshots, wrap-around
/// guard and gradient-growth termination.
pub fn evolve(u0: &SpectralField, cfg: &EvolutionConfig) -> Result<Trajectory, EvolutionError> {
    cfg.validate()?;
    let grid = u0.grid().clone();
    if cfg.weight.grid() != &grid {
        return Err(EvolutionError::Grid(crate::error::GridError::GridMismatch));
    }
    let stepper = Stepper::new(&grid, &cfg.weight, cfg.alpha, cfg.dt);
    let phase = max_phase_per_step(u0, cfg);
    if phase > 0.5 {
        log::warn!(
            "nonlinear phase per step reaches {phase:.3} rad; the truncated weight core is under-resolved at dt = {}",
            cfg.dt
        );
    }
    let sampler = Sampler {
        cfg,
        virial: VirialWeight::new(&grid, cfg.virial),
        shell: grid.outer_shell_mask(cfg.guard.shell_fraction),
    };
    let total = cfg.steps();
    let mut monitors = Monitors::default();
    let mut times = Vec::new();
    let mut snapshot_times = Vec::new();
    let mut snapshots = Vec::new();
    let mut guard = GuardReport {
        enabled: cfg.wraparound_guard,
        settings: cfg.guard,
        max_ratio: 0.0,
        violated_at: None,
    };
    let mut status = RunStatus::Completed;

    let mut u = u0.clone();
    let (grad0, ratio0) = sampler.sample(&u, 0.0, &mut monitors);
    times.push(0.0);
    snapshot_times.push(0.0);
    snapshots.push(u.clone());
    guard.max_ratio = ratio0;
    if cfg.wraparound_guard && ratio0 > cfg.guard.tolerance {
        guard.violated_at = Some(0.0);
    }

    let mut step = 0usize;
    while step < total {
        let next_monitor = (step / cfg.monitor_stride + 1) * cfg.monitor_stride;
        let next_snapshot = (step / cfg.snapshot_stride + 1) * cfg.snapshot_stride;
        let target = next_monitor.min(next_snapshot).min(total);
        let mut values = u.into_values();
        if let Err(k) = stepper.advance(&mut values, target - step) {
            return Err(EvolutionError::NonFinite {
                time: (step + k) as f64 * cfg.dt,
            });
        }
        step = target;
        u = SpectralField::new(grid.clone(), values).expect("same grid");
        let t = step as f64 * cfg.dt;
        let monitor_due = step % cfg.monitor_stride == 0 || step == total;
        let mut grad = None;
        if monitor_due {
            let (g, ratio) = sampler.sample(&u, t, &mut monitors);
            times.push(t);
            grad = Some(g);
            guard.max_ratio = guard.max_ratio.max(ratio);
            if cfg.wraparound_guard && ratio > cfg.guard.tolerance && guard.violated_at.is_none() {
                guard.violated_at = Some(t);
            }
        }
        if step % cfg.snapshot_stride == 0 || step == total {
            snapshot_times.push(t);
            snapshots.push(u.clone());
        }
        if let Some(g) = grad {
            if g > cfg.growth_limit * grad0 {
                status = RunStatus::GradientGrowth { time: t };
                if snapshot_times.last() != Some(&t) {
                    snapshot_times.push(t);
                    snapshots.push(u.clone());
                }
                break;
            }
        }
    }

    Ok(Trajectory {
        times,
        monitors,
        snapshot_times,
        snapshots,
        status,
        guard,
        dt: cfg.dt,
        steps: step,
        alpha: cfg.alpha,
        weight: cfg.weight.clone(),
        virial: cfg.virial,
        final_state: u,
    })
}

/// One Strang step.
pub fn step(u: &SpectralField, dt: f64, cfg: &EvolutionConfig) -> Result<SpectralField, EvolutionError> {
    let stepper = Stepper::new(u.grid(), &cfg.weight, cfg.alpha, dt);
    let mut values = u.values().to_vec();
    stepper
        .advance(&mut values, 1)
        .map_err(|_| EvolutionError::NonFinite { time: dt })?;
    Ok(SpectralField::new(u.grid().clone(), values).expect("same grid"))
}

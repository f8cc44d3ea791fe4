//! Time integration of the flow by Strang splitting, with monitors.

mod functionals;
mod stepper;
mod trajectory;

pub use functionals::{energy, grad_norm, mass, potential};
pub use stepper::Stepper;
pub use trajectory::{
    evolve, max_phase_per_step, step, EvolutionConfig, GuardReport, GuardSettings, Monitors, RunStatus, Trajectory,
    TrajectorySummary, MONITOR_COLUMNS,
};

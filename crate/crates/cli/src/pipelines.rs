//! One function per subcommand. Each writes its artifacts into the run
//! directory and returns a JSON summary for the manifest.

use inls_core::diagnostics::{
    classify_threshold_with, coercivity_check, far_translation_experiment, scattering_diagnostic_with,
    virial_contradiction_monitor, FarTranslationConfig, FarTranslationTable, ScatteringConfig, ScatteringReport,
    ThresholdReport, VirialKind,
};
use inls_core::evolution::{evolve, EvolutionConfig, GuardSettings, Trajectory};
use inls_core::groundstate::{gn_ratio, solve_ground_state_with, GroundState, GroundStateConfig};
use inls_core::spectral::fields::{gaussian, random_smooth_field, translate};
use inls_core::spectral::snapshot::{save_snapshot, write_profile_csv};
use inls_core::spectral::{default_reg_radius, make_weight, Grid, SingularWeight, SpectralField};
use inls_core::ProblemParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::certify::{certify_point, certify_region};
use crate::config::{parse_rational, ExperimentConfig, InitialKind, VirialChoice};
use crate::error::CliError;
use crate::output::RunDir;

/// Inputs shared by every pipeline.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub params: ProblemParams,
    pub grid: Grid,
}

pub fn solve_ground_state(cfg: &ExperimentConfig, params: &ProblemParams, grid: &Grid) -> Result<GroundState, CliError> {
    let g = &cfg.groundstate;
    let gs_cfg = GroundStateConfig {
        tol: g.tol,
        max_iter: g.max_iter,
        reg_radius: g.reg_radius,
        initial_width: g.initial_width,
    };
    solve_ground_state_with(params, grid, &gs_cfg).map_err(|e| CliError::run(format!("ground state: {e}")))
}

/// Weight of the flow: the ground state's when one was solved, so the
/// evolution sees exactly the same truncation.
pub fn flow_weight(
    cfg: &ExperimentConfig,
    params: &ProblemParams,
    grid: &Grid,
    gs: Option<&GroundState>,
) -> Result<SingularWeight, CliError> {
    if let Some(gs) = gs {
        return Ok(gs.weight.clone());
    }
    let rho = cfg.groundstate.reg_radius.unwrap_or_else(|| default_reg_radius(grid));
    make_weight(grid, params.b(), rho).map_err(|e| CliError::config(format!("weight: {e}")))
}

pub fn initial_field(
    cfg: &ExperimentConfig,
    grid: &Grid,
    gs: Option<&GroundState>,
    seed: u64,
) -> Result<SpectralField, CliError> {
    let init = &cfg.initial;
    match init.kind {
        InitialKind::GroundState => {
            let gs = gs.ok_or_else(|| CliError::run("ground-state initial data needs a solved ground state"))?;
            let u = gs.profile.scaled_real(init.amplitude);
            if init.center == [0.0, 0.0] {
                Ok(u)
            } else {
                translate(&u, init.center)
                    .ok_or_else(|| CliError::config("initial.center needs a cartesian grid"))
            }
        }
        InitialKind::Gaussian => Ok(gaussian(grid, init.amplitude, init.width, init.center)),
        InitialKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(random_smooth_field(grid, &mut rng).scaled_real(init.amplitude))
        }
    }
}

pub fn evolution_config(cfg: &ExperimentConfig, weight: SingularWeight, alpha: f64) -> EvolutionConfig {
    let e = &cfg.evolution;
    let extent = weight.grid().extent();
    let mut ec = EvolutionConfig::new(weight, alpha, e.t_final);
    ec.dt = e.dt;
    ec.snapshot_stride = e.snapshot_stride;
    ec.monitor_stride = e.monitor_stride;
    ec.wraparound_guard = e.wraparound_guard;
    ec.growth_limit = e.growth_limit;
    ec.virial = match e.virial {
        VirialChoice::Quadratic => VirialKind::Quadratic,
        VirialChoice::Localized => VirialKind::Localized {
            radius: e.virial_radius.unwrap_or(extent / 4.0),
        },
    };
    ec
}

fn needs_ground_state(cfg: &ExperimentConfig) -> bool {
    cfg.initial.kind == InitialKind::GroundState
}

pub fn run_evolution(cfg: &ExperimentConfig, u0: &SpectralField, weight: SingularWeight, alpha: f64) -> Result<Trajectory, CliError> {
    let ec = evolution_config(cfg, weight, alpha);
    ec.validate().map_err(|e| CliError::config(e.to_string()))?;
    evolve(u0, &ec).map_err(|e| CliError::run(format!("evolution: {e}")))
}

/// Writes `monitors.csv`, `trajectory.json` and, when enabled, the
/// snapshots, under `prefix`.
pub fn persist_trajectory(run: &mut RunDir, prefix: &str, traj: &Trajectory, snapshots: bool) -> Result<(), CliError> {
    let rel = |name: &str| if prefix.is_empty() { name.to_string() } else { format!("{prefix}/{name}") };
    if snapshots {
        traj.persist(&run.join(prefix))?;
        run.record(rel("monitors.csv"));
        run.record(rel("trajectory.json"));
        for k in 0..traj.snapshots.len() {
            run.record(rel(&format!("snapshots/snap_{k:05}.bin")));
        }
    } else {
        let mut csv = Vec::new();
        traj.write_monitor_csv(&mut csv)?;
        run.write(&rel("monitors.csv"), csv)?;
        run.write_json(&rel("trajectory.json"), &traj.summary())?;
    }
    Ok(())
}

pub fn certify(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let points = ctx.cfg.certify.region_points;
    if points > 0 {
        let report = certify_region(points);
        run.write_json("certify.json", &report)?;
        let summary = json!({
            "mode": "region",
            "points_per_axis": points,
            "samples": report.samples,
            "passed": report.passed,
            "all_pass": report.all_pass,
        });
        if !report.all_pass {
            return Err(CliError::run(format!(
                "{} of {} region samples failed certification",
                report.samples - report.passed,
                report.samples
            ))
            .with_detail(summary));
        }
        return Ok(summary);
    }
    let p = &ctx.cfg.params;
    let theta = p.theta.as_deref().map(|t| parse_rational("params.theta", t)).transpose()?;
    let epsilon = p.epsilon.as_deref().map(|e| parse_rational("params.epsilon", e)).transpose()?;
    let report = certify_point(&ctx.params, theta, epsilon);
    run.write_json("certify.json", &report)?;
    let summary = json!({
        "mode": "point",
        "theta": report.theta,
        "epsilon": report.epsilon,
        "all_pass": report.all_pass,
        "first_failure": report.first_failure,
    });
    if !report.all_pass {
        return Err(CliError::run("exponent family rejected").with_detail(summary));
    }
    Ok(summary)
}

pub fn groundstate(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let gs = solve_ground_state(ctx.cfg, &ctx.params, &ctx.grid)?;
    save_snapshot(run.join("profile.bin"), &gs.profile, ctx.params.b_f64(), 0.0)
        .map_err(|e| CliError::run(format!("snapshot: {e}")))?;
    run.record("profile.bin");
    let mut csv = Vec::new();
    write_profile_csv(&mut csv, &gs.profile)?;
    run.write("profile.csv", csv)?;

    let samples = ctx.cfg.groundstate.gn_samples;
    let gn_check = (samples > 0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
        let ratios: Vec<f64> = (0..samples)
            .map(|_| gn_ratio(&random_smooth_field(&ctx.grid, &mut rng), &gs.weight, &ctx.params, gs.gn_constant))
            .collect();
        let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        json!({ "samples": samples, "max_ratio": max, "ratios": ratios })
    });
    let record = gs.record();
    run.write_json("groundstate.json", &json!({ "record": record, "gn_check": gn_check }))?;
    Ok(json!({
        "residual": record.residual,
        "iterations": record.iterations,
        "pohozaev_ratio_error": record.pohozaev.ratio_error,
        "gn_max_ratio": gn_check.as_ref().map(|g| g["max_ratio"].clone()),
    }))
}

fn classification(ctx: &Context, u0: &SpectralField, gs: &GroundState) -> Result<ThresholdReport, CliError> {
    classify_threshold_with(u0, gs, &ctx.params, ctx.cfg.diagnostics.band).map_err(|e| CliError::run(e.to_string()))
}

pub fn classify(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let gs = solve_ground_state(ctx.cfg, &ctx.params, &ctx.grid)?;
    let u0 = initial_field(ctx.cfg, &ctx.grid, Some(&gs), ctx.cfg.seed)?;
    let report = classification(ctx, &u0, &gs)?;
    let coercivity = coercivity_check(&u0, &gs, &ctx.params).map_err(|e| CliError::run(e.to_string()))?;
    run.write_json(
        "classify.json",
        &json!({ "initial": ctx.cfg.initial, "threshold": report, "coercivity": coercivity }),
    )?;
    Ok(json!({
        "classification": report.classification,
        "grad_ratio": report.grad_ratio,
        "me_ratio": report.me_ratio,
    }))
}

fn evolve_from_config(ctx: &Context) -> Result<(Option<GroundState>, SpectralField, Trajectory), CliError> {
    let gs = if needs_ground_state(ctx.cfg) {
        Some(solve_ground_state(ctx.cfg, &ctx.params, &ctx.grid)?)
    } else {
        None
    };
    let u0 = initial_field(ctx.cfg, &ctx.grid, gs.as_ref(), ctx.cfg.seed)?;
    let weight = flow_weight(ctx.cfg, &ctx.params, &ctx.grid, gs.as_ref())?;
    let traj = run_evolution(ctx.cfg, &u0, weight, ctx.params.alpha_f64())?;
    Ok((gs, u0, traj))
}

pub fn evolve_pipeline(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let (_, _, traj) = evolve_from_config(ctx)?;
    persist_trajectory(run, "", &traj, ctx.cfg.evolution.persist_snapshots)?;
    Ok(serde_json::to_value(traj.summary())?)
}

pub fn virial(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let (_, _, traj) = evolve_from_config(ctx)?;
    persist_trajectory(run, "", &traj, ctx.cfg.evolution.persist_snapshots)?;
    let report = virial_contradiction_monitor(&traj, ctx.cfg.diagnostics.delta);
    let m = &traj.monitors;
    let mut csv = String::from("time,z,zp,zpp\n");
    for (i, t) in traj.times.iter().enumerate() {
        csv.push_str(&format!(
            "{t:.17e},{:.17e},{:.17e},{:.17e}\n",
            m.virial_z[i], m.virial_zp[i], m.virial_zpp[i]
        ));
    }
    run.write("virial.csv", csv)?;
    run.write_json("virial.json", &report)?;
    Ok(json!({
        "ftc_consistent": report.ftc_consistent,
        "ratio": report.ratio,
        "non_coercive": report.non_coercive,
    }))
}

/// Everything `scatter-test` computes, for callers that need more than
/// the files.
pub struct ScatterOutcome {
    pub classification: ThresholdReport,
    pub trajectory: Trajectory,
    pub scattering: ScatteringReport,
}

pub fn scatter_outcome(ctx: &Context, gs: &GroundState, u0: &SpectralField) -> Result<ScatterOutcome, CliError> {
    let classification = classification(ctx, u0, gs)?;
    let trajectory = run_evolution(ctx.cfg, u0, gs.weight.clone(), ctx.params.alpha_f64())?;
    let d = &ctx.cfg.diagnostics;
    let scattering = scattering_diagnostic_with(
        &trajectory,
        ScatteringConfig {
            settle_tolerance: d.settle_tolerance,
            decay_factor: d.decay_factor,
        },
    );
    Ok(ScatterOutcome {
        classification,
        trajectory,
        scattering,
    })
}

pub fn write_scatter(run: &mut RunDir, prefix: &str, out: &ScatterOutcome, snapshots: bool, b: f64) -> Result<(), CliError> {
    let rel = |name: &str| if prefix.is_empty() { name.to_string() } else { format!("{prefix}/{name}") };
    persist_trajectory(run, prefix, &out.trajectory, snapshots)?;
    run.write(&rel("distance.csv"), out.scattering.distance_csv())?;
    run.write(&rel("potential.csv"), out.scattering.potential_csv())?;
    save_snapshot(run.join(&rel("u_plus.bin")), &out.scattering.u_plus, b, 0.0)
        .map_err(|e| CliError::run(format!("snapshot: {e}")))?;
    run.record(rel("u_plus.bin"));
    run.write_json(
        &rel("scatter.json"),
        &json!({
            "classification": out.classification,
            "trajectory": out.trajectory.summary(),
            "scattering": out.scattering.summary(),
        }),
    )?;
    Ok(())
}

pub fn scatter_test(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let gs = solve_ground_state(ctx.cfg, &ctx.params, &ctx.grid)?;
    let u0 = initial_field(ctx.cfg, &ctx.grid, Some(&gs), ctx.cfg.seed)?;
    let out = scatter_outcome(ctx, &gs, &u0)?;
    write_scatter(run, "", &out, ctx.cfg.evolution.persist_snapshots, ctx.params.b_f64())?;
    Ok(json!({
        "classification": out.classification.classification,
        "verdict": out.scattering.verdict,
        "verdict_ignoring_guard": out.scattering.verdict_ignoring_guard,
        "guard_violated": out.scattering.guard_violated,
        "potential_decay": out.scattering.potential_decay,
        "settle_distance": out.scattering.settle_distance,
    }))
}

pub fn far_config(cfg: &ExperimentConfig, gs: &GroundState, alpha: f64) -> FarTranslationConfig {
    let d = &cfg.diagnostics;
    let mut fc = FarTranslationConfig::new(gs.weight.clone(), alpha);
    fc.dt = d.far_dt;
    fc.sample_stride = d.far_sample_stride;
    fc.guard = GuardSettings::default();
    fc
}

pub fn far_table(ctx: &Context, offsets: &[f64]) -> Result<FarTranslationTable, CliError> {
    if ctx.grid.is_radial() {
        return Err(CliError::config("far translation needs grid.mode = \"cartesian\""));
    }
    let gs = solve_ground_state(ctx.cfg, &ctx.params, &ctx.grid)?;
    let fc = far_config(ctx.cfg, &gs, ctx.params.alpha_f64());
    let d = &ctx.cfg.diagnostics;
    Ok(far_translation_experiment(&gs.profile, offsets, d.theta, d.far_t_final, &fc))
}

pub fn far_translate(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let table = far_table(ctx, &ctx.cfg.diagnostics.offsets)?;
    run.write("far.csv", table.to_csv())?;
    run.write_json("far.json", &table)?;
    Ok(json!({
        "strictly_decreasing": table.strictly_decreasing,
        "first_last_ratio": table.first_last_ratio,
        "loglog_slope": table.loglog_slope,
        "skipped": table.rows.iter().filter(|r| r.skipped.is_some()).count(),
    }))
}

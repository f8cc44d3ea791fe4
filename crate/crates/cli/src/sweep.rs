//! Parameter sweeps: one independent run per value, executed on a fixed
//! size thread pool, aggregated into a CSV in input order.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use inls_core::diagnostics::{ScatteringVerdict, ThresholdClass};
use inls_core::groundstate::GroundState;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{parse_rational, ExperimentConfig, SweepAxis};
use crate::error::CliError;
use crate::output::{csv_cell, RunDir};
use crate::pipelines::{far_table, initial_field, scatter_outcome, solve_ground_state, write_scatter, Context};

pub const SWEEP_HEADER: &str = "index,axis,value,status,classification,subthreshold,grad_ratio,me_ratio,energy,verdict,potential_decay,settle_distance,guard_violated,error";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: String,
    pub error: Option<String>,
    pub classification: Option<ThresholdClass>,
    pub subthreshold: Option<bool>,
    pub grad_ratio: Option<f64>,
    pub me_ratio: Option<f64>,
    pub energy: Option<f64>,
    pub verdict: Option<ScatteringVerdict>,
    pub potential_decay: Option<f64>,
    pub settle_distance: Option<f64>,
    pub guard_violated: Option<bool>,
    #[serde(skip)]
    pub artifacts: Vec<String>,
}

fn cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn float_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

fn kebab<T: Serialize>(v: &Option<T>) -> String {
    v.as_ref()
        .and_then(|x| serde_json::to_value(x).ok())
        .and_then(|x| x.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl SweepRow {
    pub fn csv_line(&self, axis: SweepAxis) -> String {
        [
            self.index.to_string(),
            axis.name().to_string(),
            csv_cell(&self.value),
            if self.error.is_some() { "failed" } else { "ok" }.to_string(),
            kebab(&self.classification),
            cell(&self.subthreshold),
            float_cell(self.grad_ratio),
            float_cell(self.me_ratio),
            float_cell(self.energy),
            kebab(&self.verdict),
            float_cell(self.potential_decay),
            float_cell(self.settle_distance),
            cell(&self.guard_violated),
            csv_cell(self.error.as_deref().unwrap_or("")),
        ]
        .join(",")
    }
}

/// Number of sign changes of the sub-threshold indicator over rows that ran.
pub fn subthreshold_flips(rows: &[SweepRow]) -> usize {
    let flags: Vec<bool> = rows.iter().filter_map(|r| r.subthreshold).collect();
    flags.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn row_config(base: &ExperimentConfig, axis: SweepAxis, value: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Amplitude => {
            cfg.initial.amplitude = parse_rational("sweep.values", value)?.to_f64();
        }
        SweepAxis::B => cfg.params.b = value.to_string(),
        SweepAxis::Alpha => cfg.params.alpha = value.to_string(),
        SweepAxis::Offset => {
            cfg.diagnostics.offsets = vec![parse_rational("sweep.values", value)?.to_f64()];
        }
    }
    Ok(cfg)
}

fn run_row(
    base: &ExperimentConfig,
    axis: SweepAxis,
    index: usize,
    value: &str,
    shared: Option<&GroundState>,
    dir: &std::path::Path,
) -> Result<SweepRow, CliError> {
    let cfg = row_config(base, axis, value)?;
    let resolved = cfg.resolve()?;
    let grid = match shared {
        Some(gs) => gs.profile.grid().clone(),
        None => cfg.build_grid(&resolved.grid_spec)?,
    };
    let ctx = Context {
        cfg: &cfg,
        params: resolved.params,
        grid,
    };
    let owned;
    let gs = match shared {
        Some(gs) => gs,
        None => {
            owned = solve_ground_state(&cfg, &ctx.params, &ctx.grid)?;
            &owned
        }
    };
    let seed = cfg.seed.wrapping_add(index as u64);
    let u0 = initial_field(&cfg, &ctx.grid, Some(gs), seed)?;
    let mut row = SweepRow {
        index,
        value: value.to_string(),
        ..SweepRow::default()
    };
    let report = if cfg.sweep.evolve {
        let out = scatter_outcome(&ctx, gs, &u0)?;
        let rel = format!("rows/row_{index:04}");
        let mut sub = RunDir::at(dir.join(&rel), "sweep-row")?;
        write_scatter(&mut sub, "", &out, cfg.evolution.persist_snapshots, ctx.params.b_f64())?;
        row.artifacts = sub.take_artifacts().into_iter().map(|a| format!("{rel}/{a}")).collect();
        row.verdict = Some(out.scattering.verdict);
        row.potential_decay = Some(out.scattering.potential_decay);
        row.settle_distance = Some(out.scattering.settle_distance);
        row.guard_violated = Some(out.scattering.guard_violated);
        out.classification
    } else {
        inls_core::diagnostics::classify_threshold_with(&u0, gs, &ctx.params, cfg.diagnostics.band)
            .map_err(|e| CliError::run(e.to_string()))?
    };
    row.classification = Some(report.classification);
    row.subthreshold = Some(report.is_subthreshold());
    row.grad_ratio = Some(report.grad_ratio);
    row.me_ratio = report.me_ratio;
    row.energy = Some(report.energy);
    Ok(row)
}

fn isolated_row(
    base: &ExperimentConfig,
    axis: SweepAxis,
    index: usize,
    value: &str,
    shared: Option<&GroundState>,
    dir: &std::path::Path,
) -> SweepRow {
    let failed = |message: String| SweepRow {
        index,
        value: value.to_string(),
        error: Some(message),
        ..SweepRow::default()
    };
    match catch_unwind(AssertUnwindSafe(|| run_row(base, axis, index, value, shared, dir))) {
        Ok(Ok(row)) => row,
        Ok(Err(e)) => failed(e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "row panicked".into());
            failed(format!("panic: {msg}"))
        }
    }
}

pub fn resolve_threads(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

/// Runs every row and writes `sweep.csv` (plus per-row artifacts).
pub fn sweep(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let cfg = ctx.cfg;
    let axis = cfg.sweep.axis;
    let values = &cfg.sweep.values;
    let threads = resolve_threads(cfg.sweep.threads);
    if axis == SweepAxis::Offset {
        return offset_sweep(ctx, run);
    }
    if values.is_empty() {
        run.write("sweep.csv", format!("{SWEEP_HEADER}\n"))?;
        return Ok(json!({ "axis": axis, "rows": 0, "failed": 0, "threads": threads }));
    }
    // Rows along the amplitude axis share one ground state.
    let shared: Option<Arc<GroundState>> = if axis == SweepAxis::Amplitude {
        Some(Arc::new(solve_ground_state(cfg, &ctx.params, &ctx.grid)?))
    } else {
        None
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::run(format!("thread pool: {e}")))?;
    let dir = run.path().to_path_buf();
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, v)| isolated_row(cfg, axis, i, v, shared.as_deref(), &dir))
            .collect()
    });
    let mut csv = format!("{SWEEP_HEADER}\n");
    for row in &rows {
        csv.push_str(&row.csv_line(axis));
        csv.push('\n');
        for a in &row.artifacts {
            run.record(a.clone());
        }
    }
    run.write("sweep.csv", csv)?;
    run.write_json("sweep.json", &rows)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(json!({
        "axis": axis,
        "rows": rows.len(),
        "failed": failed,
        "subthreshold_flips": subthreshold_flips(&rows),
        "threads": threads,
    }))
}

/// Offset sweeps run one far-translation experiment over every parsable
/// value; unparsable values become failed rows.
fn offset_sweep(ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    let mut offsets = Vec::new();
    let mut failures = Vec::new();
    for v in &ctx.cfg.sweep.values {
        match parse_rational("sweep.values", v) {
            Ok(r) => offsets.push(r.to_f64()),
            Err(e) => failures.push((v.clone(), e.to_string())),
        }
    }
    let table = if offsets.is_empty() {
        None
    } else {
        Some(far_table(ctx, &offsets)?)
    };
    let mut csv = match &table {
        Some(t) => t.to_csv(),
        None => inls_core::diagnostics::FarTranslationTable {
            theta: ctx.cfg.diagnostics.theta,
            t_final: ctx.cfg.diagnostics.far_t_final,
            rows: Vec::new(),
            nonincreasing: true,
            strictly_decreasing: true,
            first_last_ratio: None,
            loglog_slope: None,
        }
        .to_csv(),
    };
    let columns = csv.lines().next().map(|h| h.split(',').count()).unwrap_or(1);
    for (value, msg) in &failures {
        let mut cells = vec![csv_cell(value), "failed".to_string()];
        cells.resize(columns, String::new());
        log::warn!("offset {value:?} skipped: {msg}");
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    run.write("sweep.csv", csv)?;
    if let Some(t) = &table {
        run.write_json("far.json", t)?;
    }
    Ok(json!({
        "axis": SweepAxis::Offset,
        "rows": offsets.len() + failures.len(),
        "failed": failures.len(),
        "failures": failures.iter().map(|(v, m)| json!({ "value": v, "error": m })).collect::<Vec<_>>(),
        "strictly_decreasing": table.as_ref().map(|t| t.strictly_decreasing),
        "first_last_ratio": table.as_ref().and_then(|t| t.first_last_ratio),
    }))
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use inls_cli::config::{GridKind, InitialKind, SweepAxis, VirialChoice};
use inls_cli::{ExperimentConfig, Manifest, OUTPUT_ROOT_ENV};
use inls_core::diagnostics::far_translation_experiment;
use inls_core::spectral::snapshot::load_snapshot;
use proptest::prelude::*;
use serde_json::Value;

fn inls(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inls"))
        .args(args)
        .env(OUTPUT_ROOT_ENV, root)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"))
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn run_dir(out: &Output) -> PathBuf {
    PathBuf::from(stdout_json(out)["run_dir"].as_str().expect("run_dir"))
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const SMALL_RADIAL: [&str; 2] = ["--grid.mode=radial", "--grid-points=512"];

fn rational_text() -> impl Strategy<Value = String> {
    prop_oneof![
        (1i64..50, 1i64..50).prop_map(|(n, d)| format!("{n}/{d}")),
        (0u32..1000).prop_map(|k| format!("{}.{:03}", k / 100, k % 1000)),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![1e-6..1e3f64, Just(1e-10), Just(0.1), Just(std::f64::consts::FRAC_1_SQRT_2)]
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (
        any::<u64>(),
        (rational_text(), rational_text(), prop::option::of(rational_text())),
        (prop::bool::ANY, finite(), 4u32..12, 1u32..=2),
        (finite(), finite(), 1usize..1000, 1usize..1000, prop::option::of(finite())),
        (0usize..3, finite(), finite(), -5.0..5.0f64),
        (prop::collection::vec(rational_text(), 0..6), 0usize..4, prop::bool::ANY),
        prop::collection::vec(finite(), 0..5),
    )
        .prop_map(|(seed, (b, alpha, theta), grid, evo, init, sweep, offsets)| {
            let mut c = ExperimentConfig::default();
            c.seed = seed;
            c.params.b = b;
            c.params.alpha = alpha;
            c.params.theta = theta;
            c.grid.mode = if grid.0 { GridKind::Radial } else { GridKind::Cartesian };
            c.grid.extent = grid.1;
            c.grid.points = 1 << grid.2;
            c.grid.stretch = grid.3;
            c.evolution.dt = evo.0;
            c.evolution.t_final = evo.1;
            c.evolution.snapshot_stride = evo.2;
            c.evolution.monitor_stride = evo.3;
            c.evolution.virial_radius = evo.4;
            c.evolution.virial = if evo.4.is_some() { VirialChoice::Localized } else { VirialChoice::Quadratic };
            c.initial.kind = [InitialKind::GroundState, InitialKind::Gaussian, InitialKind::Random][init.0];
            c.initial.amplitude = init.1;
            c.initial.width = init.2;
            c.initial.center = [init.3, -init.3];
            c.sweep.values = sweep.0;
            c.sweep.axis = [SweepAxis::Amplitude, SweepAxis::B, SweepAxis::Alpha, SweepAxis::Offset][sweep.1];
            c.sweep.evolve = sweep.2;
            c.diagnostics.offsets = offsets;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips_through_toml(cfg in config_strategy()) {
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn overrides_accept_dotted_keys_and_shorthands() {
    let base = ExperimentConfig::default();
    let pairs = inls_cli::config::parse_overrides(&[
        "--N=3".into(),
        "--b".into(),
        "2/3".into(),
        "--alpha=2".into(),
        "--grid.mode=radial".into(),
        "--grid-points=256".into(),
        "--evolution.t-final=2.5".into(),
        "--sweep.values=0.1,1/3".into(),
        "--diagnostics.offsets=[4, 8]".into(),
    ])
    .unwrap();
    let cfg = base.with_overrides(&pairs).unwrap();
    assert_eq!(cfg.params.n, "3");
    assert_eq!(cfg.params.b, "2/3");
    assert_eq!(cfg.params.alpha, "2");
    assert_eq!(cfg.grid.mode, GridKind::Radial);
    assert_eq!(cfg.grid.points, 256);
    assert_eq!(cfg.evolution.t_final, 2.5);
    assert_eq!(cfg.sweep.values, vec!["0.1".to_string(), "1/3".to_string()]);
    assert_eq!(cfg.diagnostics.offsets, vec![4.0, 8.0]);
    assert!(cfg.resolve().is_ok());
}

#[test]
fn config_files_accept_numbers_for_rational_fields() {
    let cfg = ExperimentConfig::from_toml_str("[params]\nN = 2\nb = 0.5\nalpha = \"3\"\n[sweep]\nvalues = [0.5, \"3/4\"]\n").unwrap();
    assert_eq!(cfg.params.n, "2");
    assert_eq!(cfg.params.b, "0.5");
    assert_eq!(cfg.sweep.values, vec!["0.5".to_string(), "3/4".to_string()]);
}

#[test]
fn malformed_rational_is_a_config_error_with_json() {
    let root = tempfile::tempdir().unwrap();
    let out = inls(root.path(), &["certify", "--b=1/0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "config-error");
    assert_eq!(err["error"]["exit_code"], 2);
    assert_eq!(err["error"]["detail"]["input"], "1/0");
    assert_eq!(err["error"]["detail"]["field"], "params.b");
    // Nothing is written for a rejected configuration.
    assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);
}

#[test]
fn unknown_keys_and_bad_params_are_config_errors() {
    let root = tempfile::tempdir().unwrap();
    for args in [
        vec!["evolve", "--evolution.bogus=1"],
        vec!["certify", "--alpha=1"],
        vec!["groundstate", "--N=3"],
        vec!["nonsense"],
    ] {
        let out = inls(root.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_json(&out)["error"]["kind"], "config-error", "{args:?}");
    }
}

#[test]
fn certify_writes_manifest_and_resolved_config() {
    let root = tempfile::tempdir().unwrap();
    let out = inls(root.path(), &["certify", "--N=2", "--b=1/2", "--alpha=3", "--theta=1/4"]);
    assert_eq!(out.status.code(), Some(0));
    let dir = run_dir(&out);
    assert!(dir.starts_with(root.path()));
    assert!(dir.file_name().unwrap().to_str().unwrap().starts_with("certify-"));
    let m = manifest(&dir);
    assert_eq!(m.status, "ok");
    assert_eq!(m.subcommand, "certify");
    assert!(m.artifacts.contains(&"certify.json".to_string()));
    let written = ExperimentConfig::load(&dir.join(&m.config)).unwrap();
    assert_eq!(written.params.theta.as_deref(), Some("1/4"));
    assert_eq!(ExperimentConfig::from_toml_str(&written.to_toml_string()).unwrap(), written);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("certify.json")).unwrap()).unwrap();
    assert_eq!(report["all_pass"], true);
    assert_eq!(report["theta"], "1/4");
    assert!(report["family"]["relations"].as_array().unwrap().iter().all(|r| r["holds"] == true));
}

#[test]
fn rejected_family_is_a_run_failure() {
    let root = tempfile::tempdir().unwrap();
    let out = inls(root.path(), &["certify", "--theta=5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "run-failure");
    let m = manifest(&run_dir(&out));
    assert_eq!(m.status, "failed");
    assert_eq!(m.exit_code, 1);
}

#[test]
fn nonconverged_ground_state_is_a_run_failure() {
    let root = tempfile::tempdir().unwrap();
    let mut args = vec!["groundstate", "--groundstate.max_iter=2"];
    args.extend(SMALL_RADIAL);
    let out = inls(root.path(), &args);
    assert_eq!(out.status.code(), Some(1));
    let m = manifest(&run_dir(&out));
    assert_eq!(m.error.unwrap()["error"]["kind"], "run-failure");
}

#[test]
fn groundstate_writes_snapshot_profile_and_record() {
    let root = tempfile::tempdir().unwrap();
    let mut args = vec!["groundstate", "--groundstate.gn_samples=10"];
    args.extend(SMALL_RADIAL);
    let out = inls(root.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = run_dir(&out);
    let (profile, meta) = load_snapshot(dir.join("profile.bin"), None).unwrap();
    assert_eq!(meta.b, 0.5);
    assert_eq!(profile.len(), 512);
    let rows = csv_rows(&dir.join("profile.csv"));
    assert_eq!(rows[0], ["r", "re", "im", "abs"]);
    assert_eq!(rows.len(), 513);
    let record: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("groundstate.json")).unwrap()).unwrap();
    assert!(record["record"]["residual"].as_f64().unwrap() < 1e-10);
    assert!(record["gn_check"]["max_ratio"].as_f64().unwrap() <= 1.0 + 1e-3);
    let peak = record["record"]["profile_peak"].as_f64().unwrap();
    let max_abs = profile.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert_eq!(peak, max_abs);
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let root = tempfile::tempdir().unwrap();
    for axis in ["amplitude", "offset"] {
        let axis_arg = format!("--sweep.axis={axis}");
        let out = inls(root.path(), &["sweep", &axis_arg, "--sweep.values="]);
        assert_eq!(out.status.code(), Some(0));
        let text = std::fs::read_to_string(run_dir(&out).join("sweep.csv")).unwrap();
        assert_eq!(text.lines().count(), 1, "{axis}: {text}");
        assert!(text.ends_with('\n'));
    }
}

#[test]
fn amplitude_sweep_flips_the_classification_once() {
    let root = tempfile::tempdir().unwrap();
    let values: Vec<String> = (1..=15).map(|k| format!("{}/10", k)).collect();
    let values_arg = format!("--sweep.values={}", values.join(","));
    let mut args = vec!["sweep", "--sweep.axis=amplitude", values_arg.as_str()];
    args.extend(SMALL_RADIAL);
    let out = inls(root.path(), &args);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&run_dir(&out).join("sweep.csv"));
    let header = &rows[0];
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let body = &rows[1..];
    assert_eq!(body.len(), 15);
    let sub: Vec<bool> = body.iter().map(|r| r[col("subthreshold")] == "true").collect();
    let flips = sub.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1);
    // The flip sits where c ||∇Q||^{s_c} ||Q||^{1-s_c} crosses that of Q.
    let grad: Vec<f64> = body.iter().map(|r| r[col("grad_ratio")].parse().unwrap()).collect();
    for (k, (&g, &s)) in grad.iter().zip(&sub).enumerate() {
        let c = (k + 1) as f64 / 10.0;
        assert!((g - c).abs() < 1e-12, "grad ratio is linear in the amplitude");
        assert_eq!(s, c < 1.0);
    }
    assert_eq!(stdout_json(&out)["summary"]["subthreshold_flips"], 1);
}

#[test]
fn failed_row_does_not_abort_siblings() {
    let root = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--sweep.axis=alpha", "--sweep.values=3,1/0,7/2,1/2"];
    args.extend(SMALL_RADIAL);
    let out = inls(root.path(), &args);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&run_dir(&out).join("sweep.csv"));
    let status: Vec<&str> = rows[1..].iter().map(|r| r[3].as_str()).collect();
    assert_eq!(status, ["ok", "failed", "ok", "failed"]);
    assert_eq!(stdout_json(&out)["summary"]["failed"], 2);
}

#[test]
fn offset_sweep_delegates_to_far_translation() {
    let root = tempfile::tempdir().unwrap();
    let common = [
        "--grid.extent=32",
        "--grid-points=128",
        "--diagnostics.far_dt=0.01",
        "--diagnostics.far_t_final=0.2",
        "--diagnostics.far_sample_stride=5",
    ];
    let mut args = vec!["sweep", "--sweep.axis=offset", "--sweep.values=8,0,x"];
    args.extend(common);
    let out = inls(root.path(), &args);
    assert_eq!(out.status.code(), Some(0));
    let dir = run_dir(&out);
    let text = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();

    let cfg = ExperimentConfig::load(&dir.join("config.toml")).unwrap();
    let resolved = cfg.resolve().unwrap();
    let grid = cfg.build_grid(&resolved.grid_spec).unwrap();
    let gs = inls_cli::pipelines::solve_ground_state(&cfg, &resolved.params, &grid).unwrap();
    let fc = inls_cli::pipelines::far_config(&cfg, &gs, resolved.params.alpha_f64());
    let table = far_translation_experiment(&gs.profile, &[8.0, 0.0], 0.5, 0.2, &fc);
    let direct = table.to_csv();
    assert!(text.starts_with(&direct), "{text}\nvs\n{direct}");
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("x,failed"));
}

#[test]
fn evolved_sweep_rows_are_bit_identical_across_runs() {
    let root = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--sweep.axis=amplitude",
        "--sweep.values=0.3,0.6",
        "--sweep.evolve=true",
        "--sweep.threads=2",
        "--grid.extent=16",
        "--grid-points=64",
        "--evolution.t_final=0.2",
        "--evolution.persist_snapshots=false",
    ];
    let a = run_dir(&inls(root.path(), &args));
    let b = run_dir(&inls(root.path(), &args));
    assert_ne!(a, b);
    for row in ["row_0000", "row_0001"] {
        let ma = std::fs::read(a.join("rows").join(row).join("monitors.csv")).unwrap();
        let mb = std::fs::read(b.join("rows").join(row).join("monitors.csv")).unwrap();
        assert!(!ma.is_empty());
        assert_eq!(ma, mb, "{row}");
    }
    assert_eq!(manifest(&a).threads, 2);
}

#[test]
fn evolve_and_virial_write_monitor_series() {
    let root = tempfile::tempdir().unwrap();
    let common = [
        "--initial.kind=gaussian",
        "--initial.amplitude=0.5",
        "--grid.extent=16",
        "--grid-points=64",
        "--evolution.t_final=0.1",
    ];
    for sub in ["evolve", "virial"] {
        let mut args = vec![sub];
        args.extend(common);
        let out = inls(root.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        let dir = run_dir(&out);
        let rows = csv_rows(&dir.join("monitors.csv"));
        assert_eq!(rows[0][0], "time");
        assert_eq!(rows.len(), 1 + 11);
        assert!(dir.join("snapshots/snap_00001.bin").exists());
    }
}

#[test]
fn seeded_random_initial_data_is_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let args = ["classify", "--initial.kind=random", "--initial.amplitude=0.1", "--seed=7"];
    let mut a = args.to_vec();
    a.extend(SMALL_RADIAL);
    let first = stdout_json(&inls(root.path(), &a))["summary"].clone();
    let second = stdout_json(&inls(root.path(), &a))["summary"].clone();
    assert_eq!(first, second);
    a[3] = "--seed=8";
    let third = stdout_json(&inls(root.path(), &a))["summary"].clone();
    assert_ne!(first["grad_ratio"], third["grad_ratio"]);
}

#[test]
fn long_help_lists_the_default_config() {
    let root = tempfile::tempdir().unwrap();
    let out = inls(root.path(), &["sweep", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("default config"));
    assert!(ExperimentConfig::from_toml_str(text.split("default config:").nth(1).unwrap()).is_ok());
}

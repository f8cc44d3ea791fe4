//! Config-driven runner: `inls <subcommand> [--config <path>] [--key=value ...]`.
//!
//! Every run resolves its configuration, writes it as `config.toml` into a
//! fresh timestamped directory, executes one pipeline and finishes with
//! `manifest.json`. Exit codes: 0 success, 1 run failure, 2 config error;
//! failures are reported as JSON on stderr.

pub mod certify;
pub mod config;
pub mod error;
pub mod output;
pub mod pipelines;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, ValueEnum};
use serde_json::{json, Value};

pub use config::ExperimentConfig;
pub use error::{CliError, EXIT_CONFIG_ERROR, EXIT_RUN_FAILURE};
pub use output::{Manifest, OUTPUT_ROOT_ENV};

use output::{output_root, RunDir, CONFIG_FILE};
use pipelines::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pipeline {
    /// Exact exponent-family certification.
    Certify,
    /// Ground state and its scalar record.
    #[value(name = "groundstate")]
    GroundState,
    /// Evolution with monitors and snapshots.
    Evolve,
    /// Threshold classification and coercivity items.
    Classify,
    /// Evolution plus the localized-virial bookkeeping.
    Virial,
    /// Classification, evolution and the scattering diagnostic.
    ScatterTest,
    /// Deviation table for remotely translated data.
    FarTranslate,
    /// One independent run per value along an axis.
    Sweep,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Certify => "certify",
            Pipeline::GroundState => "groundstate",
            Pipeline::Evolve => "evolve",
            Pipeline::Classify => "classify",
            Pipeline::Virial => "virial",
            Pipeline::ScatterTest => "scatter-test",
            Pipeline::FarTranslate => "far-translate",
            Pipeline::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "inls", version, about = "Numerical experiments for the focusing inhomogeneous NLS")]
struct Cli {
    #[arg(value_enum)]
    pipeline: Pipeline,
    /// `--config <path>` followed by `--key=value` overrides, e.g.
    /// `--evolution.t_final=5 --N=2 --b=1/2 --alpha=3`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    rest: Vec<String>,
}

/// Result of one run.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// Absent when the configuration was rejected before a directory was made.
    pub dir: Option<PathBuf>,
    pub manifest: Option<Manifest>,
    pub error: Option<CliError>,
}

impl RunOutcome {
    fn rejected(e: CliError) -> Self {
        RunOutcome {
            exit_code: e.exit_code(),
            dir: None,
            manifest: None,
            error: Some(e),
        }
    }
}

fn dispatch(p: Pipeline, ctx: &Context, run: &mut RunDir) -> Result<Value, CliError> {
    match p {
        Pipeline::Certify => pipelines::certify(ctx, run),
        Pipeline::GroundState => pipelines::groundstate(ctx, run),
        Pipeline::Evolve => pipelines::evolve_pipeline(ctx, run),
        Pipeline::Classify => pipelines::classify(ctx, run),
        Pipeline::Virial => pipelines::virial(ctx, run),
        Pipeline::ScatterTest => pipelines::scatter_test(ctx, run),
        Pipeline::FarTranslate => pipelines::far_translate(ctx, run),
        Pipeline::Sweep => sweep::sweep(ctx, run),
    }
}

/// Runs `p` under `INLS_OUTPUT_ROOT`, or `cfg.output_dir` when unset.
pub fn run_experiment(p: Pipeline, cfg: &ExperimentConfig) -> RunOutcome {
    run_experiment_in(p, cfg, &output_root(&cfg.output_dir))
}

pub fn run_experiment_in(p: Pipeline, cfg: &ExperimentConfig, root: &Path) -> RunOutcome {
    let resolved = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => return RunOutcome::rejected(e),
    };
    let grid = match cfg.build_grid(&resolved.grid_spec) {
        Ok(g) => g,
        Err(e) => return RunOutcome::rejected(e),
    };
    let mut run = match RunDir::create(root, p.name()) {
        Ok(r) => r,
        Err(e) => return RunOutcome::rejected(CliError::run(format!("cannot create run directory: {e}"))),
    };
    let dir = run.path().to_path_buf();
    if let Err(e) = std::fs::write(run.join(CONFIG_FILE), cfg.to_toml_string()) {
        return RunOutcome::rejected(CliError::run(format!("cannot write config: {e}")));
    }
    let ctx = Context {
        cfg,
        params: resolved.params,
        grid,
    };
    let threads = if p == Pipeline::Sweep {
        sweep::resolve_threads(cfg.sweep.threads)
    } else {
        rayon::current_num_threads()
    };
    log::info!("{} -> {}", p.name(), dir.display());
    let result = dispatch(p, &ctx, &mut run);
    let (summary, error, code) = match &result {
        Ok(s) => (s.clone(), None, 0),
        Err(e) => (Value::Null, Some(e.to_json()), e.exit_code()),
    };
    let manifest = run.finish(cfg.seed, threads, summary, error, code);
    match (result, manifest) {
        (Ok(_), Ok(m)) => RunOutcome {
            exit_code: 0,
            dir: Some(dir),
            manifest: Some(m),
            error: None,
        },
        (Err(e), m) => RunOutcome {
            exit_code: e.exit_code(),
            dir: Some(dir),
            manifest: m.ok(),
            error: Some(e),
        },
        (Ok(_), Err(e)) => RunOutcome {
            exit_code: EXIT_RUN_FAILURE,
            dir: Some(dir),
            manifest: None,
            error: Some(CliError::run(format!("cannot write manifest: {e}"))),
        },
    }
}

/// Splits `--config` out of the trailing arguments.
fn split_config(rest: &[String]) -> Result<(Option<PathBuf>, Vec<String>), CliError> {
    let mut config = None;
    let mut others = Vec::new();
    let mut i = 0;
    while i < rest.len() {
        let tok = &rest[i];
        if let Some(path) = tok.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else if tok == "--config" || tok == "-c" {
            let path = rest
                .get(i + 1)
                .ok_or_else(|| CliError::config("--config needs a path"))?;
            config = Some(PathBuf::from(path));
            i += 1;
        } else {
            others.push(tok.clone());
        }
        i += 1;
    }
    Ok((config, others))
}

fn report_error(e: &CliError) {
    let text = serde_json::to_string(&e.to_json()).unwrap_or_else(|_| e.to_string());
    let _ = writeln!(std::io::stderr(), "{text}");
}

/// Parses a command line and runs it; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let command = Cli::command().after_long_help(help_text());
    let parsed = command
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            report_error(&CliError::config(e.to_string().trim().to_string()));
            return EXIT_CONFIG_ERROR;
        }
    };
    if cli.rest.iter().any(|a| a == "--help" || a == "-h") {
        let _ = writeln!(std::io::stdout(), "{}", help_text());
        return 0;
    }
    let cfg = match load(&cli.rest) {
        Ok(c) => c,
        Err(e) => {
            report_error(&e);
            return e.exit_code();
        }
    };
    let outcome = run_experiment(cli.pipeline, &cfg);
    if let Some(e) = &outcome.error {
        report_error(e);
    }
    if let Some(m) = &outcome.manifest {
        let dir = outcome.dir.as_ref().map(|d| d.display().to_string());
        let line = json!({ "run_dir": dir, "status": m.status, "summary": m.summary });
        let _ = writeln!(std::io::stdout(), "{line}");
    }
    outcome.exit_code
}

fn load(rest: &[String]) -> Result<ExperimentConfig, CliError> {
    let (path, overrides) = split_config(rest)?;
    let base = match path {
        Some(p) => ExperimentConfig::load(&p)?,
        None => ExperimentConfig::default(),
    };
    let pairs = config::parse_overrides(&overrides)?;
    base.with_overrides(&pairs)
}

fn help_text() -> String {
    format!(
        "usage: inls <subcommand> [--config <path>] [--key=value ...]\n\n\
         subcommands: certify, groundstate, evolve, classify, virial, scatter-test, far-translate, sweep\n\
         overrides use dotted keys (evolution.t_final, grid.points, sweep.values, ...);\n\
         --N --b --alpha --theta --epsilon --grid-points --extent --tol --dt --t-final\n\
         --amplitude --axis --values --threads are shorthands.\n\
         outputs go under ${OUTPUT_ROOT_ENV} when set, else output_dir.\n\n\
         default config:\n\n{}",
        ExperimentConfig::default().to_toml_string()
    )
}

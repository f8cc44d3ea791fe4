//! Experiment configuration: a TOML document with one section per stage.
//! Parameters are kept as rational strings so they never pass through
//! floating point before validation.

use std::path::{Path, PathBuf};

use inls_core::spectral::{Grid, GridSpec};
use inls_core::{validate_params, ProblemParams, Rational};
use serde::de::Deserializer;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for every random field a run draws.
    pub seed: u64,
    /// Root of the run directories unless `INLS_OUTPUT_ROOT` is set.
    pub output_dir: PathBuf,
    pub params: ParamsBlock,
    pub grid: GridBlock,
    pub groundstate: GroundStateBlock,
    pub initial: InitialBlock,
    pub evolution: EvolutionBlock,
    pub diagnostics: DiagnosticsBlock,
    pub certify: CertifyBlock,
    pub sweep: SweepBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: PathBuf::from("runs"),
            params: ParamsBlock::default(),
            grid: GridBlock::default(),
            groundstate: GroundStateBlock::default(),
            initial: InitialBlock::default(),
            evolution: EvolutionBlock::default(),
            diagnostics: DiagnosticsBlock::default(),
            certify: CertifyBlock::default(),
            sweep: SweepBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsBlock {
    #[serde(rename = "N", deserialize_with = "lenient_string")]
    pub n: String,
    #[serde(deserialize_with = "lenient_string")]
    pub b: String,
    #[serde(deserialize_with = "lenient_string")]
    pub alpha: String,
    /// Exponent-family `theta`; `certify` uses the certified window when absent.
    #[serde(skip_serializing_if = "Option::is_none", deserialize_with = "lenient_option")]
    pub theta: Option<String>,
    /// Exponent-family `epsilon`; defaults to `theta`.
    #[serde(skip_serializing_if = "Option::is_none", deserialize_with = "lenient_option")]
    pub epsilon: Option<String>,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        ParamsBlock {
            n: "2".into(),
            b: "1/2".into(),
            alpha: "3".into(),
            theta: None,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Cartesian,
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    pub mode: GridKind,
    /// Half-width `L` of the box, or the outer radius.
    pub extent: f64,
    pub points: usize,
    /// Radial node stretch exponent (1 or 2).
    pub stretch: u32,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            mode: GridKind::Cartesian,
            extent: 32.0,
            points: 512,
            stretch: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateBlock {
    pub tol: f64,
    pub max_iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reg_radius: Option<f64>,
    pub initial_width: f64,
    /// Random fields drawn for the Gagliardo-Nirenberg check; 0 skips it.
    pub gn_samples: usize,
}

impl Default for GroundStateBlock {
    fn default() -> Self {
        GroundStateBlock {
            tol: 1e-10,
            max_iter: 5000,
            reg_radius: None,
            initial_width: std::f64::consts::FRAC_1_SQRT_2,
            gn_samples: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// `amplitude * Q`, moved to `center` on Cartesian grids.
    GroundState,
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    Gaussian,
    /// `amplitude` times a seeded random smooth field.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialBlock {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub width: f64,
    pub center: [f64; 2],
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock {
            kind: InitialKind::GroundState,
            amplitude: 1.0,
            width: 1.0,
            center: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VirialChoice {
    Quadratic,
    Localized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionBlock {
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub monitor_stride: usize,
    pub wraparound_guard: bool,
    pub growth_limit: f64,
    pub virial: VirialChoice,
    /// Radius of the localized virial weight; `extent / 4` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub virial_radius: Option<f64>,
    /// Write the strided binary snapshots next to the monitors.
    pub persist_snapshots: bool,
}

impl Default for EvolutionBlock {
    fn default() -> Self {
        EvolutionBlock {
            dt: 1e-3,
            t_final: 1.0,
            snapshot_stride: 100,
            monitor_stride: 10,
            wraparound_guard: true,
            growth_limit: 100.0,
            virial: VirialChoice::Localized,
            virial_radius: None,
            persist_snapshots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsBlock {
    /// Half-width of the at-threshold band.
    pub band: f64,
    /// Coercivity constant of the contradiction monitor.
    pub delta: f64,
    pub settle_tolerance: f64,
    pub decay_factor: f64,
    /// Frequency-cutoff exponent of the far-translation projector.
    pub theta: f64,
    pub offsets: Vec<f64>,
    pub far_t_final: f64,
    pub far_dt: f64,
    pub far_sample_stride: usize,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        DiagnosticsBlock {
            band: 1e-6,
            delta: 0.1,
            settle_tolerance: 1e-3,
            decay_factor: 100.0,
            theta: 0.5,
            offsets: vec![4.0, 8.0, 16.0, 24.0],
            far_t_final: 2.0,
            far_dt: 1e-3,
            far_sample_stride: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyBlock {
    /// Samples per axis of the region grid; 0 certifies the single
    /// parameter point of `[params]`.
    pub region_points: usize,
}

impl Default for CertifyBlock {
    fn default() -> Self {
        CertifyBlock { region_points: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Amplitude,
    B,
    Alpha,
    Offset,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Amplitude => "amplitude",
            SweepAxis::B => "b",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Offset => "offset",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub axis: SweepAxis,
    /// Values as strings; `b` and `alpha` are parsed as exact rationals.
    #[serde(deserialize_with = "lenient_strings")]
    pub values: Vec<String>,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Also evolve each row and run the scattering diagnostic.
    pub evolve: bool,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            axis: SweepAxis::Amplitude,
            values: Vec::new(),
            threads: 0,
            evolve: false,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Text(String),
    Int(i64),
    Float(f64),
}

impl Scalar {
    fn into_string(self) -> String {
        match self {
            Scalar::Text(s) => s,
            Scalar::Int(i) => i.to_string(),
            Scalar::Float(x) => x.to_string(),
        }
    }
}

fn lenient_string<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    Scalar::deserialize(d).map(Scalar::into_string)
}

fn lenient_option<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    Option::<Scalar>::deserialize(d).map(|s| s.map(Scalar::into_string))
}

fn lenient_strings<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    Vec::<Scalar>::deserialize(d).map(|v| v.into_iter().map(Scalar::into_string).collect())
}

/// Keys whose override values are taken verbatim as strings.
const STRING_KEYS: [&str; 6] = [
    "params.N",
    "params.b",
    "params.alpha",
    "params.theta",
    "params.epsilon",
    "output_dir",
];

/// Short flags accepted in place of the dotted keys.
fn alias(key: &str) -> Option<&'static str> {
    Some(match key {
        "N" | "n" => "params.N",
        "b" => "params.b",
        "alpha" => "params.alpha",
        "theta" => "params.theta",
        "epsilon" => "params.epsilon",
        "grid-points" | "grid_points" | "points" => "grid.points",
        "extent" => "grid.extent",
        "tol" => "groundstate.tol",
        "dt" => "evolution.dt",
        "t-final" | "t_final" => "evolution.t_final",
        "amplitude" => "initial.amplitude",
        "axis" => "sweep.axis",
        "values" => "sweep.values",
        "threads" => "sweep.threads",
        _ => return None,
    })
}

fn canonical_key(raw: &str) -> String {
    if let Some(k) = alias(raw) {
        return k.to_string();
    }
    raw.split('.')
        .map(|part| if part == "N" { part.to_string() } else { part.replace('-', "_") })
        .collect::<Vec<_>>()
        .join(".")
}

fn parse_value(key: &str, raw: &str) -> toml::Value {
    if STRING_KEYS.contains(&key) {
        return toml::Value::String(raw.to_string());
    }
    if key == "sweep.values" {
        let inner = raw.trim().trim_start_matches('[').trim_end_matches(']');
        let items = inner
            .split(',')
            .map(|s| s.trim().trim_matches('"').to_string())
            .filter(|s| !s.is_empty())
            .map(toml::Value::String)
            .collect();
        return toml::Value::Array(items);
    }
    if let Ok(mut table) = toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        if let Some(v) = table.remove("v") {
            return v;
        }
    }
    if raw.contains(',') {
        return toml::Value::Array(raw.split(',').map(|s| parse_value("", s.trim())).collect());
    }
    toml::Value::String(raw.to_string())
}

/// Splits `--key=value` / `--key value` tokens into pairs.
pub fn parse_overrides(tokens: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        let body = tok
            .strip_prefix("--")
            .ok_or_else(|| CliError::config(format!("unexpected argument {tok:?}; overrides take the form --key=value")))?;
        match body.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = tokens
                    .get(i + 1)
                    .filter(|v| !v.starts_with("--"))
                    .ok_or_else(|| CliError::config(format!("override --{body} has no value")))?;
                out.push((body.to_string(), v.clone()));
                i += 1;
            }
        }
        i += 1;
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {}", e.message().trim())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Applies dotted-key overrides; unknown keys and ill-typed values are
    /// configuration errors.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self, CliError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = toml::Value::try_from(self).expect("config serializes");
        for (raw_key, raw_value) in overrides {
            let key = canonical_key(raw_key);
            let value = parse_value(&key, raw_value);
            let parts: Vec<&str> = key.split('.').collect();
            let (last, sections) = parts.split_last().expect("split yields one part");
            let mut node = &mut doc;
            for s in sections {
                node = node
                    .as_table_mut()
                    .and_then(|t| t.get_mut(*s))
                    .filter(|v| v.is_table())
                    .ok_or_else(|| CliError::config(format!("unknown config section in override --{raw_key}")))?;
            }
            node.as_table_mut()
                .expect("sections are tables")
                .insert((*last).to_string(), value);
        }
        let cfg: ExperimentConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(format!("invalid override: {}", e.message().trim())))?;
        Ok(cfg)
    }
}

/// Validated view of a configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: ProblemParams,
    pub grid_spec: GridSpec,
}

pub fn parse_rational(field: &str, text: &str) -> Result<Rational, CliError> {
    text.parse::<Rational>().map_err(|e| {
        CliError::config(format!("cannot parse {field} = {text:?}: {e}"))
            .with_detail(json!({ "field": field, "input": text, "reason": e.to_string() }))
    })
}

pub fn parse_dimension(text: &str) -> Result<i64, CliError> {
    let n = parse_rational("params.N", text)?;
    if n.denom().to_string() != "1" {
        return Err(CliError::config(format!("params.N = {text:?} is not an integer")));
    }
    n.numer()
        .to_string()
        .parse::<i64>()
        .map_err(|_| CliError::config(format!("params.N = {text:?} is out of range")))
}

impl ExperimentConfig {
    /// Parses and validates the parameters and the grid geometry.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let params = self.problem_params()?;
        let grid_spec = self.grid_spec(params.dimension() as usize)?;
        Ok(Resolved { params, grid_spec })
    }

    pub fn problem_params(&self) -> Result<ProblemParams, CliError> {
        let n = parse_dimension(&self.params.n)?;
        let b = parse_rational("params.b", &self.params.b)?;
        let alpha = parse_rational("params.alpha", &self.params.alpha)?;
        validate_params(n, b, alpha).map_err(|rej| {
            let detail = serde_json::to_value(&rej).unwrap_or(serde_json::Value::Null);
            CliError::config(format!("parameters rejected: {rej}")).with_detail(detail)
        })
    }

    pub fn grid_spec(&self, dimension: usize) -> Result<GridSpec, CliError> {
        let g = &self.grid;
        let spec = match g.mode {
            GridKind::Cartesian => {
                if dimension != 2 {
                    return Err(CliError::config(format!(
                        "cartesian grids are two-dimensional; N = {dimension} needs grid.mode = \"radial\""
                    )));
                }
                GridSpec::cartesian(g.extent, g.points)
            }
            GridKind::Radial => GridSpec::radial(dimension, g.extent, g.points, g.stretch),
        };
        Ok(spec)
    }

    pub fn build_grid(&self, spec: &GridSpec) -> Result<Grid, CliError> {
        Grid::new(*spec).map_err(|e| CliError::config(format!("invalid grid: {e}")))
    }
}

//! Config-driven experiment runner behind the `gpm` binary.
//!
//! A config is one JSON document:
//!
//! ```json
//! { "experiment": "fock-ideal",
//!   "parameters": { "n_t": [100, 1600], "N": 8 },
//!   "output_path": "fock.csv" }
//! ```
//!
//! List-valued parameters expand into a sweep over their Cartesian product.
//! Each run writes its CSV file(s) plus `<stem>.manifest.json`, which holds
//! the fully resolved config and can be fed back to `run` to reproduce the
//! CSV byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{
    self, central_binomial, fit_log_scaling, fit_log_scaling_free, fit_qfi_quadratic, poisson_peak,
    SearchOptions, TargetKind,
};
use crate::dicke::{
    self, build_dicke_schedule, initial_product_state, optimal_phi, rounds_to_unit_xi, XiIndexing,
};
use crate::dispersive::build_dispersive_schedule;
use crate::fock::{self, build_fock_schedule, Rounding};
use crate::hilbert::{coherent_cutoff, coherent_state, C64};
use crate::open_system::{
    noisy_coherent_state, run_noisy_protocol, NoiseParams, NoisyOptions, NoisySchedule,
    Representation,
};

/// Failure of a config or a run. [`ExperimentError::exit_code`] maps it to
/// the CLI's exit status.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid parameter '{key}': {message}")]
    Parameter { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("simulation failed: {0}")]
    Simulation(#[from] crate::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Config(_) | Self::Parameter { .. } => 2,
            Self::Io { .. } | Self::Simulation(_) | Self::Csv(_) => 3,
        }
    }

    fn param(key: &str, message: impl Into<String>) -> Self {
        Self::Parameter {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

pub type ExperimentResult<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FockIdeal,
    FockNoisy,
    FockScaling,
    DispersiveCompare,
    DickeIdeal,
    DickeScaling,
    QfiSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::FockIdeal,
        Self::FockNoisy,
        Self::FockScaling,
        Self::DispersiveCompare,
        Self::DickeIdeal,
        Self::DickeScaling,
        Self::QfiSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::FockIdeal => "fock-ideal",
            Self::FockNoisy => "fock-noisy",
            Self::FockScaling => "fock-scaling",
            Self::DispersiveCompare => "dispersive-compare",
            Self::DickeIdeal => "dicke-ideal",
            Self::DickeScaling => "dicke-scaling",
            Self::QfiSweep => "qfi-sweep",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::FockIdeal => "closed-system resonant protocol from a coherent state; per-round fidelity and success",
            Self::FockNoisy => "resonant protocol under cavity decay, qubit decay and dephasing",
            Self::FockScaling => "minimum rounds to reach a fidelity threshold over n_t, with log2(sqrt n_t) fit",
            Self::DispersiveCompare => "resonant vs dispersive protocol under identical noise (two CSV files)",
            Self::DickeIdeal => "hybrid e/g protocol towards |J,0> from the equatorial product state",
            Self::DickeScaling => "minimum rounds to reach a fidelity threshold over M, with log2(sqrt M) fit",
            Self::QfiSweep => "quantum Fisher information of the protocol output over M, with quadratic fit",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Self::FockIdeal => &["n_t", "N"],
            Self::FockNoisy | Self::DispersiveCompare => &["n_t", "N", "kappa"],
            Self::FockScaling => &["n_t"],
            Self::DickeIdeal | Self::QfiSweep => &["M", "N"],
            Self::DickeScaling => &["M"],
        }
    }

    fn allowed(self) -> &'static [&'static str] {
        match self {
            Self::FockIdeal => &["n_t", "N", "g", "rounding"],
            Self::FockNoisy => &[
                "n_t",
                "N",
                "g",
                "kappa",
                "gamma",
                "gamma_phi",
                "rounding",
                "tolerance",
                "representation",
            ],
            Self::DispersiveCompare => &[
                "n_t",
                "N",
                "g",
                "chi",
                "kappa",
                "gamma",
                "gamma_phi",
                "rounding",
                "tolerance",
                "representation",
            ],
            Self::FockScaling => &["n_t", "g", "threshold", "rounding", "cap"],
            Self::DickeIdeal | Self::QfiSweep => &["M", "N", "g", "rounding", "indexing"],
            Self::DickeScaling => &["M", "g", "threshold", "rounding", "indexing", "cap"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> ExperimentResult<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                ExperimentError::Config(format!(
                    "unknown experiment '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

/// Parameter map as written in a config; absent keys are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t: Option<OneOrMany<usize>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub spins: Option<OneOrMany<usize>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<OneOrMany<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<OneOrMany<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<Rounding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indexing: Option<XiIndexing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<Representation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
}

impl Parameters {
    fn present(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |set: bool, key: &'static str| {
            if set {
                keys.push(key);
            }
        };
        mark(self.n_t.is_some(), "n_t");
        mark(self.spins.is_some(), "M");
        mark(self.rounds.is_some(), "N");
        mark(self.g.is_some(), "g");
        mark(self.chi.is_some(), "chi");
        mark(self.kappa.is_some(), "kappa");
        mark(self.gamma.is_some(), "gamma");
        mark(self.gamma_phi.is_some(), "gamma_phi");
        mark(self.threshold.is_some(), "threshold");
        mark(self.rounding.is_some(), "rounding");
        mark(self.tolerance.is_some(), "tolerance");
        mark(self.indexing.is_some(), "indexing");
        mark(self.representation.is_some(), "representation");
        mark(self.cap.is_some(), "cap");
        keys
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    #[serde(default)]
    parameters: Parameters,
    #[serde(default)]
    output_path: Option<PathBuf>,
    /// Run metadata written into manifests; ignored on input.
    #[serde(default)]
    #[allow(dead_code)]
    manifest: Option<Value>,
}

pub const DEFAULT_G: f64 = 1e8;
pub const DEFAULT_CHI: f64 = 2e6;
pub const DEFAULT_GAMMA: f64 = 1e5;
pub const DEFAULT_GAMMA_PHI: f64 = 1e5;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_FOCK_THRESHOLD: f64 = 0.98;
pub const DEFAULT_DICKE_THRESHOLD: f64 = 0.90;
pub const DEFAULT_CAP: usize = 20;

/// Validated config with every applicable default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub parameters: Parameters,
    pub output_path: PathBuf,
}

/// Parses and validates a JSON config.
pub fn validate_config(raw: &str) -> ExperimentResult<ExperimentConfig> {
    validate_config_with_overrides(raw, &[])
}

/// [`validate_config`] with `key=value` parameter overrides applied on top
/// of the file (values are parsed as JSON, falling back to strings).
pub fn validate_config_with_overrides(
    raw: &str,
    overrides: &[(String, String)],
) -> ExperimentResult<ExperimentConfig> {
    let parse_err = |e: serde_json::Error| ExperimentError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let parsed: RawConfig = if overrides.is_empty() {
        serde_json::from_str(raw).map_err(parse_err)?
    } else {
        let mut doc: Value = serde_json::from_str(raw).map_err(parse_err)?;
        let root = doc
            .as_object_mut()
            .ok_or_else(|| ExperimentError::Config("config must be a JSON object".into()))?;
        let params = root.entry("parameters").or_insert_with(|| json!({}));
        let params = params
            .as_object_mut()
            .ok_or_else(|| ExperimentError::Config("'parameters' must be an object".into()))?;
        for (key, value) in overrides {
            let v = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.clone()));
            params.insert(key.clone(), v);
        }
        serde_json::from_value(doc).map_err(|e| ExperimentError::Config(e.to_string()))?
    };
    let experiment: ExperimentKind = parsed.experiment.parse()?;
    let parameters = resolve(experiment, parsed.parameters)?;
    let output_path = parsed
        .output_path
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.name())));
    Ok(ExperimentConfig {
        experiment,
        parameters,
        output_path,
    })
}

fn resolve(kind: ExperimentKind, mut p: Parameters) -> ExperimentResult<Parameters> {
    let present = p.present();
    let stray: Vec<_> = present
        .iter()
        .filter(|k| !kind.allowed().contains(k))
        .collect();
    if let Some(key) = stray.first() {
        return Err(ExperimentError::param(
            key,
            format!("not used by experiment {kind}"),
        ));
    }
    let missing: Vec<_> = kind
        .required()
        .iter()
        .filter(|k| !present.contains(k))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(ExperimentError::Config(format!(
            "experiment {kind} is missing required parameter(s): {}",
            missing.join(", ")
        )));
    }
    let allowed = kind.allowed();
    let fill = |key: &str| allowed.contains(&key);
    if fill("g") {
        p.g.get_or_insert(DEFAULT_G);
    }
    if fill("chi") {
        p.chi.get_or_insert(DEFAULT_CHI);
    }
    if fill("gamma") {
        p.gamma.get_or_insert(DEFAULT_GAMMA);
    }
    if fill("gamma_phi") {
        p.gamma_phi.get_or_insert(DEFAULT_GAMMA_PHI);
    }
    if fill("tolerance") {
        p.tolerance.get_or_insert(DEFAULT_TOLERANCE);
    }
    if fill("rounding") {
        p.rounding.get_or_insert(Rounding::Floor);
    }
    if fill("indexing") {
        p.indexing.get_or_insert(XiIndexing::Literal);
    }
    if fill("representation") {
        p.representation.get_or_insert(Representation::Sector);
    }
    if fill("cap") {
        p.cap.get_or_insert(DEFAULT_CAP);
    }
    if fill("threshold") {
        p.threshold.get_or_insert(match kind {
            ExperimentKind::DickeScaling => DEFAULT_DICKE_THRESHOLD,
            _ => DEFAULT_FOCK_THRESHOLD,
        });
    }
    check_ranges(&p)?;
    Ok(p)
}

fn check_list<T>(
    key: &str,
    v: &Option<OneOrMany<T>>,
    ok: impl Fn(&T) -> bool,
    what: &str,
) -> ExperimentResult<()>
where
    T: Clone + fmt::Display,
{
    if let Some(v) = v {
        let values = v.values();
        if values.is_empty() {
            return Err(ExperimentError::param(key, "list must not be empty"));
        }
        if let Some(bad) = values.iter().find(|x| !ok(x)) {
            return Err(ExperimentError::param(key, format!("{what}, got {bad}")));
        }
    }
    Ok(())
}

fn check_scalar(
    key: &str,
    v: Option<f64>,
    ok: impl Fn(f64) -> bool,
    what: &str,
) -> ExperimentResult<()> {
    match v {
        Some(x) if !ok(x) => Err(ExperimentError::param(key, format!("{what}, got {x}"))),
        _ => Ok(()),
    }
}

fn check_ranges(p: &Parameters) -> ExperimentResult<()> {
    check_list("n_t", &p.n_t, |&n| n >= 1, "must be >= 1")?;
    check_list(
        "M",
        &p.spins,
        |&m| m >= 2 && m % 2 == 0,
        "must be even and >= 2",
    )?;
    check_list(
        "N",
        &p.rounds,
        |&n| (1..=60).contains(&n),
        "must lie in 1..=60",
    )?;
    check_list(
        "kappa",
        &p.kappa,
        |&k| k >= 0.0 && k.is_finite(),
        "must be >= 0",
    )?;
    let positive = |x: f64| x > 0.0 && x.is_finite();
    let rate = |x: f64| x >= 0.0 && x.is_finite();
    check_scalar("g", p.g, positive, "must be > 0")?;
    check_scalar("chi", p.chi, positive, "must be > 0")?;
    check_scalar("gamma", p.gamma, rate, "must be >= 0")?;
    check_scalar("gamma_phi", p.gamma_phi, rate, "must be >= 0")?;
    check_scalar(
        "threshold",
        p.threshold,
        |x| x > 0.0 && x < 1.0,
        "must lie in (0, 1)",
    )?;
    check_scalar(
        "tolerance",
        p.tolerance,
        |x| x > 0.0 && x <= 1e-2,
        "must lie in (0, 1e-2]",
    )?;
    if p.cap == Some(0) {
        return Err(ExperimentError::param("cap", "must be >= 1"));
    }
    Ok(())
}

pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    ExperimentKind::ALL
        .iter()
        .map(|k| (k.name(), k.description()))
        .collect()
}

/// Files written by [`run_experiment`] and the summary stored in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub data_files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub summary: Value,
}

/// Runs `config`, writing outputs under `out_dir` (file names taken from
/// `output_path`) or at `output_path` itself.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> ExperimentResult<ExperimentOutput> {
    let start = Instant::now();
    let csv_path = match out_dir {
        Some(dir) => dir.join(
            config
                .output_path
                .file_name()
                .unwrap_or_else(|| config.experiment.name().as_ref()),
        ),
        None => config.output_path.clone(),
    };
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| ExperimentError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let tables = compute(config)?;
    let mut data_files = Vec::new();
    for table in &tables.tables {
        let path = match &table.suffix {
            None => csv_path.clone(),
            Some(suffix) => with_suffix(&csv_path, suffix),
        };
        table.write(&path)?;
        data_files.push(path);
    }
    let manifest_path = manifest_path(&csv_path);
    let manifest = json!({
        "experiment": config.experiment,
        "parameters": config.parameters,
        "output_path": config.output_path,
        "manifest": {
            "version": crate::VERSION,
            "wall_clock_seconds": start.elapsed().as_secs_f64(),
            "data_files": data_files,
            "summary": tables.summary,
        },
    });
    log::info!(
        "{} finished in {:.2} s, wrote {} data file(s)",
        config.experiment.name(),
        start.elapsed().as_secs_f64(),
        data_files.len()
    );
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(|source| ExperimentError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    Ok(ExperimentOutput {
        data_files,
        manifest: manifest_path,
        summary: tables.summary,
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn manifest_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    csv.with_file_name(format!("{stem}.manifest.json"))
}

/// One CSV file: header plus rows of preformatted fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    suffix: Option<String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            suffix: None,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn write(&self, path: &Path) -> ExperimentResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

struct Computed {
    tables: Vec<Table>,
    summary: Value,
}

/// CSV headers per experiment; dispersive-compare writes two files with the
/// noisy header.
pub fn csv_header(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::FockIdeal => &[
            "n_t",
            "N",
            "round",
            "multiplier",
            "duration_ns",
            "elapsed_ns",
            "fidelity",
            "success_prob",
            "cumulative_prob",
        ],
        ExperimentKind::FockNoisy | ExperimentKind::DispersiveCompare => &[
            "protocol",
            "n_t",
            "N",
            "kappa",
            "round",
            "duration_ns",
            "elapsed_ns",
            "fidelity",
            "success_prob",
            "cumulative_prob",
        ],
        ExperimentKind::FockScaling => &["n_t", "threshold", "min_rounds", "log2_sqrt_n_t"],
        ExperimentKind::DickeIdeal => &[
            "M",
            "N",
            "round",
            "ancilla",
            "xi",
            "duration_ns",
            "elapsed_ns",
            "fidelity",
            "success_prob",
            "cumulative_prob",
        ],
        ExperimentKind::DickeScaling => &["M", "threshold", "min_rounds", "log2_sqrt_M"],
        ExperimentKind::QfiSweep => &["M", "N", "qfi", "ideal_qfi", "fidelity"],
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn ns(seconds: f64) -> String {
    f(seconds * 1e9)
}

fn list<T: Clone>(v: &Option<OneOrMany<T>>) -> Vec<T> {
    v.as_ref().map(OneOrMany::values).unwrap_or_default()
}

fn product<A: Clone + Sync + Send, B: Clone + Sync + Send>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x.clone(), y.clone())))
        .collect()
}

fn compute(config: &ExperimentConfig) -> ExperimentResult<Computed> {
    let p = &config.parameters;
    let kind = config.experiment;
    let g = p.g.unwrap_or(DEFAULT_G);
    let rounding = p.rounding.unwrap_or_default();
    let indexing = p.indexing.unwrap_or_default();
    let search = SearchOptions {
        cap: p.cap.unwrap_or(DEFAULT_CAP),
        rounding,
        indexing,
        g,
    };
    let mut table = Table::new(csv_header(kind));
    match kind {
        ExperimentKind::FockIdeal => {
            let points = product(&list(&p.n_t), &list(&p.rounds));
            let runs: Vec<_> = points
                .par_iter()
                .map(|&(n_t, n)| -> crate::Result<_> {
                    let schedule = build_fock_schedule(n_t, n, g, rounding)?;
                    let init = coherent_state(
                        C64::new((n_t as f64).sqrt(), 0.0),
                        coherent_cutoff(n_t as f64),
                    )?;
                    let record = fock::run_ideal_protocol(&init, &schedule)?;
                    let steady = fock::steady_state_success(&init, &schedule)?;
                    Ok((schedule, record, steady))
                })
                .collect::<crate::Result<_>>()?;
            let mut summary = Vec::new();
            for (&(n_t, n), (schedule, record, steady)) in points.iter().zip(&runs) {
                let elapsed = record.elapsed_per_round();
                for (k, &elapsed) in elapsed.iter().enumerate() {
                    table.rows.push(vec![
                        n_t.to_string(),
                        n.to_string(),
                        (k + 1).to_string(),
                        schedule.rounds()[k].multiplier.to_string(),
                        ns(record.duration_per_round()[k]),
                        ns(elapsed),
                        f(record.fidelity_per_round()[k]),
                        f(record.success_prob_per_round()[k]),
                        f(record.cumulative_per_round()[k]),
                    ]);
                }
                summary.push(json!({
                    "n_t": n_t, "N": n,
                    "final_fidelity": record.final_fidelity(),
                    "first_round_reaching_0.99": record.first_round_reaching(0.99),
                    "cumulative_prob": record.cumulative_success(),
                    "steady_state_success": steady,
                    "exact_target_weight": poisson_peak(n_t),
                    "total_time_ns": record.total_time() * 1e9,
                }));
            }
            Ok(Computed {
                tables: vec![table],
                summary: json!({ "points": summary }),
            })
        }
        ExperimentKind::FockNoisy | ExperimentKind::DispersiveCompare => {
            let noisy = NoisyOptions {
                tolerance: p.tolerance.unwrap_or(DEFAULT_TOLERANCE),
                representation: p.representation.unwrap_or_default(),
            };
            let (gamma, gamma_phi) = (
                p.gamma.unwrap_or(DEFAULT_GAMMA),
                p.gamma_phi.unwrap_or(DEFAULT_GAMMA_PHI),
            );
            let chi = p.chi.unwrap_or(DEFAULT_CHI);
            let protocols: Vec<&str> = if kind == ExperimentKind::FockNoisy {
                vec!["resonant"]
            } else {
                vec!["resonant", "dispersive"]
            };
            let mut points = Vec::new();
            for &proto in &protocols {
                for (n_t, n) in product(&list(&p.n_t), &list(&p.rounds)) {
                    for kappa in list(&p.kappa) {
                        points.push((proto, n_t, n, kappa));
                    }
                }
            }
            let runs: Vec<_> = points
                .par_iter()
                .map(|&(proto, n_t, n, kappa)| -> crate::Result<_> {
                    let schedule = if proto == "resonant" {
                        NoisySchedule::Resonant(build_fock_schedule(n_t, n, g, rounding)?)
                    } else {
                        NoisySchedule::Dispersive(build_dispersive_schedule(n_t, n, chi)?)
                    };
                    let noise = NoiseParams::new(kappa, gamma, gamma_phi)?;
                    run_noisy_protocol(&noisy_coherent_state(n_t)?, &schedule, &noise, &noisy)
                })
                .collect::<crate::Result<_>>()?;
            let mut tables: BTreeMap<&str, Table> = BTreeMap::new();
            let mut summary = Vec::new();
            for (&(proto, n_t, n, kappa), record) in points.iter().zip(&runs) {
                let t = tables.entry(proto).or_insert_with(|| {
                    let mut t = Table::new(csv_header(kind));
                    if kind == ExperimentKind::DispersiveCompare {
                        t.suffix = Some(proto.to_string());
                    }
                    t
                });
                let elapsed = record.elapsed_per_round();
                for (k, &elapsed) in elapsed.iter().enumerate() {
                    t.rows.push(vec![
                        proto.to_string(),
                        n_t.to_string(),
                        n.to_string(),
                        f(kappa),
                        (k + 1).to_string(),
                        ns(record.duration_per_round()[k]),
                        ns(elapsed),
                        f(record.fidelity_per_round()[k]),
                        f(record.success_prob_per_round()[k]),
                        f(record.cumulative_per_round()[k]),
                    ]);
                }
                summary.push(json!({
                    "protocol": proto, "n_t": n_t, "N": n, "kappa": kappa,
                    "final_fidelity": record.final_fidelity(),
                    "cumulative_prob": record.cumulative_success(),
                    "total_time_ns": record.total_time() * 1e9,
                }));
            }
            let tables = protocols
                .iter()
                .filter_map(|proto| tables.remove(proto))
                .collect();
            Ok(Computed {
                tables,
                summary: json!({ "points": summary }),
            })
        }
        ExperimentKind::FockScaling | ExperimentKind::DickeScaling => {
            let (target, sizes) = if kind == ExperimentKind::FockScaling {
                (TargetKind::Fock, list(&p.n_t))
            } else {
                (TargetKind::Dicke, list(&p.spins))
            };
            let threshold = p.threshold.unwrap_or(DEFAULT_FOCK_THRESHOLD);
            let results = analysis::min_rounds_sweep(target, &sizes, threshold, &search);
            let mut reached = Vec::new();
            let mut unreached = Vec::new();
            for (&size, result) in sizes.iter().zip(results) {
                let n = match result {
                    Ok(n) => {
                        reached.push((size as f64, n as f64));
                        n.to_string()
                    }
                    Err(crate::Error::NotReached { .. }) => {
                        unreached.push(size);
                        String::new()
                    }
                    Err(e) => return Err(e.into()),
                };
                table.rows.push(vec![
                    size.to_string(),
                    f(threshold),
                    n,
                    f(0.5 * (size as f64).log2()),
                ]);
            }
            let fit = |r: crate::Result<analysis::ScalingFit>| r.ok().map(|fit| json!(fit));
            Ok(Computed {
                tables: vec![table],
                summary: json!({
                    "threshold": threshold,
                    "unreached": unreached,
                    "fit": fit(fit_log_scaling(&reached)),
                    "free_slope_fit": fit(fit_log_scaling_free(&reached)),
                }),
            })
        }
        ExperimentKind::DickeIdeal => {
            let points = product(&list(&p.spins), &list(&p.rounds));
            let runs: Vec<_> = points
                .par_iter()
                .map(|&(m, n)| -> crate::Result<_> {
                    let schedule = build_dicke_schedule(m, n, g, rounding, indexing)?;
                    let init = initial_product_state(m, optimal_phi(0, m)?)?;
                    let record = dicke::run_dicke_protocol(&init, &schedule)?;
                    let long = build_dicke_schedule(
                        m,
                        n.max(rounds_to_unit_xi(m)),
                        g,
                        rounding,
                        indexing,
                    )?;
                    let steady = dicke::steady_state_success(&init, &long)?;
                    Ok((schedule, record, steady))
                })
                .collect::<crate::Result<_>>()?;
            let mut summary = Vec::new();
            for (&(m, n), (schedule, record, steady)) in points.iter().zip(&runs) {
                let elapsed = record.elapsed_per_round();
                for (k, &elapsed) in elapsed.iter().enumerate() {
                    let round = &schedule.rounds()[k];
                    table.rows.push(vec![
                        m.to_string(),
                        n.to_string(),
                        (k + 1).to_string(),
                        round.ancilla.label().to_string(),
                        round.xi.to_string(),
                        ns(record.duration_per_round()[k]),
                        ns(elapsed),
                        f(record.fidelity_per_round()[k]),
                        f(record.success_prob_per_round()[k]),
                        f(record.cumulative_per_round()[k]),
                    ]);
                }
                summary.push(json!({
                    "M": m, "N": n,
                    "final_fidelity": record.final_fidelity(),
                    "cumulative_prob": record.cumulative_success(),
                    "steady_state_success": steady,
                    "exact_target_weight": central_binomial(m),
                    "total_time_ns": record.total_time() * 1e9,
                }));
            }
            Ok(Computed {
                tables: vec![table],
                summary: json!({ "points": summary }),
            })
        }
        ExperimentKind::QfiSweep => {
            let spins = list(&p.spins);
            let rounds = list(&p.rounds);
            let points = product(&rounds, &spins);
            let runs: Vec<_> = points
                .par_iter()
                .map(|&(n, m)| -> crate::Result<_> {
                    let schedule = build_dicke_schedule(m, n, g, rounding, indexing)?;
                    let init = initial_product_state(m, optimal_phi(0, m)?)?;
                    let record = dicke::run_dicke_protocol(&init, &schedule)?;
                    let fidelity = record.final_fidelity().unwrap_or(0.0);
                    let out = dicke::DickeEnsemble::new(m, record.into_final_state())?;
                    Ok((dicke::qfi_x(&out), fidelity))
                })
                .collect::<crate::Result<_>>()?;
            let mut by_n: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
            for (&(n, m), &(qfi, fidelity)) in points.iter().zip(&runs) {
                let mf = m as f64;
                table.rows.push(vec![
                    m.to_string(),
                    n.to_string(),
                    f(qfi),
                    f(mf * mf / 2.0 + mf),
                    f(fidelity),
                ]);
                by_n.entry(n).or_default().push((mf, qfi));
            }
            let fits: Vec<_> = by_n
                .iter()
                .map(|(n, pts)| json!({ "N": n, "fit": fit_qfi_quadratic(pts).ok() }))
                .collect();
            Ok(Computed {
                tables: vec![table],
                summary: json!({ "fits": fits }),
            })
        }
    }
}

//! Experiment manifests: a flat TOML document naming the experiment, its
//! parameters and its output files.

use std::fmt;
use std::path::PathBuf;

use reflang::experiments::{
    DimensionParams, EntranceParams, ExcursionParams, ExitLawParams, ScalingParams, SimulateParams,
};
use reflang::Execution;
use serde_json::{json, Value};
use toml::Table;

pub const MANIFEST_VERSION: i64 = 1;

#[derive(Debug, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Simulate(SimulateParams),
    Excursions(ExcursionParams),
    ExitLaw(ExitLawParams),
    Scaling(ScalingParams),
    Dimension(DimensionParams),
    Entrance(EntranceParams),
}

impl Experiment {
    pub fn command(&self) -> &'static str {
        match self {
            Experiment::Simulate(_) => "simulate",
            Experiment::Excursions(_) => "excursions",
            Experiment::ExitLaw(_) => "exit-law",
            Experiment::Scaling(_) => "scaling",
            Experiment::Dimension(_) => "dimension",
            Experiment::Entrance(_) => "entrance",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Experiment::Simulate(p) => p.seed,
            Experiment::Excursions(p) => p.seed,
            Experiment::ExitLaw(p) => p.seed,
            Experiment::Scaling(p) => p.seed,
            Experiment::Dimension(p) => p.seed,
            Experiment::Entrance(p) => p.seed,
        }
    }

    /// Output keys the experiment writes besides `out` and `report`.
    fn extra_outputs(command: &str) -> &'static [&'static str] {
        match command {
            "simulate" => &["reflected"],
            "excursions" => &["stats"],
            "exit-law" => &["gof"],
            "scaling" => &["lifetimes"],
            _ => &[],
        }
    }

    fn params_json(&self) -> Value {
        let v = match self {
            Experiment::Simulate(p) => serde_json::to_value(p),
            Experiment::Excursions(p) => serde_json::to_value(p),
            Experiment::ExitLaw(p) => serde_json::to_value(p),
            Experiment::Scaling(p) => serde_json::to_value(p),
            Experiment::Dimension(p) => serde_json::to_value(p),
            Experiment::Entrance(p) => serde_json::to_value(p),
        };
        v.expect("parameter sets serialise")
    }

    fn validate(&self) -> reflang::Result<()> {
        match self {
            Experiment::Simulate(p) => p.validate(),
            Experiment::Excursions(p) => p.validate(),
            Experiment::ExitLaw(p) => p.validate(),
            Experiment::Scaling(p) => p.validate(),
            Experiment::Dimension(p) => p.validate(),
            Experiment::Entrance(p) => p.validate(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    /// Main CSV data file.
    pub out: Option<PathBuf>,
    /// JSON report; printed to stdout when absent.
    pub report: Option<PathBuf>,
    /// Secondary CSV files by key (`stats`, `gof`, `reflected`, `lifetimes`).
    pub extra: Vec<(String, PathBuf)>,
}

impl Outputs {
    pub fn extra(&self, key: &str) -> Option<&PathBuf> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, p)| p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub version: i64,
    pub experiment: Experiment,
    pub execution: Execution,
    pub outputs: Outputs,
}

impl Manifest {
    /// The manifest with every default filled in, as embedded in reports.
    pub fn echo(&self) -> Value {
        let mut outputs = serde_json::Map::new();
        if let Some(p) = &self.outputs.out {
            outputs.insert("out".into(), json!(p));
        }
        if let Some(p) = &self.outputs.report {
            outputs.insert("report".into(), json!(p));
        }
        for (k, p) in &self.outputs.extra {
            outputs.insert(k.clone(), json!(p));
        }
        json!({
            "version": self.version,
            "command": self.experiment.command(),
            "execution": self.execution,
            "outputs": outputs,
            "params": self.experiment.params_json(),
        })
    }
}

pub fn parse_manifest(text: &str) -> Result<Manifest, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| config(e.message().trim().to_string()))?;
    manifest_from_table(table)
}

fn take_string(table: &mut Table, key: &str) -> Result<Option<String>, ConfigError> {
    match table.remove(key) {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(config(format!("{key}: expected a string, got {}", other.type_str()))),
    }
}

/// Builds a manifest from parsed key-value pairs. Reserved keys are
/// `command`, `version`, `execution` and the output paths; every other key
/// must be a parameter of the named experiment.
pub fn manifest_from_table(mut table: Table) -> Result<Manifest, ConfigError> {
    let command = take_string(&mut table, "command")?.ok_or_else(|| config("command: missing"))?;
    let version = match table.remove("version") {
        None => MANIFEST_VERSION,
        Some(toml::Value::Integer(v)) => v,
        Some(other) => return Err(config(format!("version: expected an integer, got {}", other.type_str()))),
    };
    if version != MANIFEST_VERSION {
        return Err(config(format!("version: unsupported manifest version {version}")));
    }
    let execution = match take_string(&mut table, "execution")?.as_deref() {
        None | Some("parallel") => Execution::Parallel,
        Some("sequential") => Execution::Sequential,
        Some(other) => return Err(config(format!("execution: expected parallel or sequential, got {other}"))),
    };
    let mut outputs = Outputs {
        out: take_string(&mut table, "out")?.map(PathBuf::from),
        report: take_string(&mut table, "report")?.map(PathBuf::from),
        extra: Vec::new(),
    };
    for key in Experiment::extra_outputs(&command) {
        if let Some(p) = take_string(&mut table, key)? {
            outputs.extra.push((key.to_string(), PathBuf::from(p)));
        }
    }

    let rest = toml::Value::Table(table);
    let experiment = match command.as_str() {
        "simulate" => Experiment::Simulate(params(rest)?),
        "excursions" => Experiment::Excursions(params(rest)?),
        "exit-law" => Experiment::ExitLaw(params(rest)?),
        "scaling" => Experiment::Scaling(params(rest)?),
        "dimension" => Experiment::Dimension(params(rest)?),
        "entrance" => Experiment::Entrance(params(rest)?),
        other => return Err(config(format!("command: unknown experiment {other:?}"))),
    };
    experiment.validate().map_err(|e| config(strip_prefix(&e.to_string())))?;
    Ok(Manifest { version, experiment, execution, outputs })
}

fn params<T: serde::de::DeserializeOwned>(v: toml::Value) -> Result<T, ConfigError> {
    v.try_into().map_err(|e: toml::de::Error| config(e.message().trim().to_string()))
}

fn strip_prefix(msg: &str) -> String {
    msg.strip_prefix("invalid argument: ").unwrap_or(msg).to_string()
}

/// Parses the right-hand side of `key=value` as a TOML value, falling back
/// to a bare string.
pub fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

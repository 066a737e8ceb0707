use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::influent::InfluentSpec;
use crate::control::ControllerConfig;
use crate::reactor::ReactorParams;

const SHIPPED_DEFAULT: &str = include_str!("../../scenarios/default.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("bad override '{0}': expected key=value")]
    Override(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn default_ts() -> f64 {
    0.001
}

fn default_biomass_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BackwashSchedule {
    /// Fraction of biomass removed at each event.
    #[serde(default)]
    pub removal: f64,
    /// Period of a regular schedule, days.
    #[serde(default)]
    pub every_days: Option<f64>,
    /// First event of the regular schedule, days (defaults to one period).
    #[serde(default)]
    pub start_days: Option<f64>,
    /// Additional explicit event times, days.
    #[serde(default)]
    pub at_days: Vec<f64>,
}

impl BackwashSchedule {
    fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.removal) {
            return Err(format!(
                "backwash.removal must be in [0, 1], got {}",
                self.removal
            ));
        }
        if let Some(every) = self.every_days {
            if !(every > 0.0) {
                return Err(format!("backwash.every_days must be > 0, got {every}"));
            }
        }
        if self.at_days.iter().any(|t| !(*t >= 0.0)) {
            return Err("backwash.at_days must be >= 0".into());
        }
        Ok(())
    }

    /// Sample indices (1..=n_samples) right after which a backwash happens.
    pub fn sample_indices(&self, duration: f64, ts: f64) -> Vec<usize> {
        let n = (duration / ts).round() as usize;
        let mut times = self.at_days.clone();
        if let Some(every) = self.every_days {
            let mut t = self.start_days.unwrap_or(every);
            while t <= duration + 0.5 * ts {
                times.push(t);
                t += every;
            }
        }
        let mut idx: Vec<usize> = times
            .into_iter()
            .map(|t| (t / ts).round() as usize)
            .filter(|&k| k >= 1 && k <= n)
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    /// Amplitude of uniform zero-mean noise on the nitrite measurement, g/m³.
    #[serde(default)]
    pub s2_noise: f64,
}

/// One simulation run. Times are in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub duration_days: f64,
    #[serde(default = "default_ts")]
    pub ts_days: f64,
    #[serde(default)]
    pub warmup_days: f64,
    #[serde(default)]
    pub seed: u64,
    /// Initial biomass as a fraction of `biomass_max`.
    #[serde(default = "default_biomass_fraction")]
    pub initial_biomass_fraction: f64,
    pub reactor: ReactorParams,
    pub controller: ControllerConfig,
    pub influent: InfluentSpec,
    #[serde(default)]
    pub backwash: BackwashSchedule,
    #[serde(default)]
    pub sensor: SensorSpec,
    /// Directory that relative paths in the scenario resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Scenario {
    /// The scenario file shipped with the crate (uncalibrated defaults).
    pub fn shipped_default() -> Scenario {
        Scenario::from_toml_str(SHIPPED_DEFAULT, &[]).expect("shipped default scenario parses")
    }

    pub fn shipped_default_toml() -> &'static str {
        SHIPPED_DEFAULT
    }

    /// Parse TOML text, applying `key.path=value` overrides first. Does not
    /// validate.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Scenario, ScenarioError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ScenarioError::Parse(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut sc = Scenario::from_toml_str(&text, overrides)?;
        sc.base_dir = path.parent().map(Path::to_path_buf);
        if sc.name.is_empty() {
            sc.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
        }
        Ok(sc)
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_days / self.ts_days).round() as usize
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.ts_days > 0.0 && self.ts_days.is_finite()) {
            return bad(format!("ts_days must be > 0, got {}", self.ts_days));
        }
        if !(self.warmup_days >= 0.0 && self.duration_days > self.warmup_days) {
            return bad(format!(
                "need duration_days > warmup_days >= 0 (got {} and {})",
                self.duration_days, self.warmup_days
            ));
        }
        let steps = self.duration_days / self.ts_days;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return bad(format!(
                "duration_days = {} is not a whole number of samples of {}",
                self.duration_days, self.ts_days
            ));
        }
        if !(self.initial_biomass_fraction > 0.0 && self.initial_biomass_fraction <= 1.0) {
            return bad(format!(
                "initial_biomass_fraction must be in (0, 1], got {}",
                self.initial_biomass_fraction
            ));
        }
        self.reactor
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.controller
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.influent.validate().map_err(ScenarioError::Invalid)?;
        self.backwash.validate().map_err(ScenarioError::Invalid)?;
        if !(self.sensor.s2_noise >= 0.0 && self.sensor.s2_noise.is_finite()) {
            return bad(format!(
                "sensor.s2_noise must be >= 0, got {}",
                self.sensor.s2_noise
            ));
        }
        Ok(())
    }

    /// Non-fatal remarks about the scenario.
    pub fn warnings(&self) -> Vec<String> {
        self.reactor.sanity_warnings()
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ScenarioError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ScenarioError::Override(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ScenarioError::Override(spec.to_string()));
    }
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut node = table;
    for part in parts {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| ScenarioError::Override(format!("{spec}: '{part}' is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::reactor::InfluentSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfluentMode {
    Constant,
    Diurnal,
    File,
}

fn default_period() -> f64 {
    1.0
}

/// Influent nitrate/nitrite. Concentrations in g/m³, times in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfluentSpec {
    pub mode: InfluentMode,
    pub s1_in: f64,
    pub s2_in: f64,
    /// Relative amplitude of the diurnal swing.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_period")]
    pub period_days: f64,
    /// Amplitude of uniform additive noise, g/m³.
    #[serde(default)]
    pub noise: f64,
    /// CSV with columns `t_days,s1_in,s2_in` and optionally `velocity` (m/h).
    #[serde(default)]
    pub file: Option<PathBuf>,
}

impl InfluentSpec {
    pub fn constant(s1_in: f64, s2_in: f64) -> Self {
        InfluentSpec {
            mode: InfluentMode::Constant,
            s1_in,
            s2_in,
            amplitude: 0.0,
            period_days: 1.0,
            noise: 0.0,
            file: None,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if !(self.s1_in >= 0.0 && self.s2_in >= 0.0) {
            return Err("influent base levels must be >= 0".into());
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(format!(
                "influent.amplitude must be >= 0, got {}",
                self.amplitude
            ));
        }
        if !(self.period_days > 0.0) {
            return Err(format!(
                "influent.period_days must be > 0, got {}",
                self.period_days
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(format!("influent.noise must be >= 0, got {}", self.noise));
        }
        if self.mode == InfluentMode::File && self.file.is_none() {
            return Err("influent.mode = \"file\" needs influent.file".into());
        }
        Ok(())
    }
}

/// Influent for the constant and diurnal modes at time `t` (days). Noise, if
/// any, is drawn from `rng`. File mode falls back to the base levels; use
/// [`InfluentGenerator`] for recorded series.
pub fn generate_influent<R: Rng>(spec: &InfluentSpec, t: f64, rng: &mut R) -> InfluentSample {
    let shape = match spec.mode {
        InfluentMode::Diurnal => {
            1.0 + spec.amplitude * (2.0 * std::f64::consts::PI * t / spec.period_days).sin()
        }
        InfluentMode::Constant | InfluentMode::File => 1.0,
    };
    let mut s1 = spec.s1_in * shape;
    let mut s2 = spec.s2_in * shape;
    if spec.noise > 0.0 {
        s1 += rng.gen_range(-spec.noise..=spec.noise);
        s2 += rng.gen_range(-spec.noise..=spec.noise);
    }
    InfluentSample::new(s1.max(0.0), s2.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluentReading {
    pub sample: InfluentSample,
    /// A recorded series ran out and its last value is being held.
    pub exhausted: bool,
}

#[derive(Debug, Deserialize)]
struct SeriesRow {
    t_days: f64,
    s1_in: f64,
    s2_in: f64,
    #[serde(default)]
    velocity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct InfluentGenerator {
    spec: InfluentSpec,
    rng: ChaCha8Rng,
    series: Vec<(f64, InfluentSample)>,
}

impl InfluentGenerator {
    /// `resolve` maps the spec's file path (relative paths are the caller's
    /// business).
    pub fn new(
        spec: &InfluentSpec,
        seed: u64,
        resolve: impl Fn(&Path) -> PathBuf,
    ) -> Result<Self, HarnessError> {
        let series = match (&spec.mode, &spec.file) {
            (InfluentMode::File, Some(path)) => load_series(&resolve(path))?,
            _ => Vec::new(),
        };
        Ok(InfluentGenerator {
            spec: spec.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            series,
        })
    }

    pub fn sample(&mut self, t: f64) -> InfluentReading {
        if self.spec.mode != InfluentMode::File {
            return InfluentReading {
                sample: generate_influent(&self.spec, t, &mut self.rng),
                exhausted: false,
            };
        }
        // sample-and-hold on the recorded series
        let idx = self.series.partition_point(|(ts, _)| *ts <= t + 1e-12);
        let (last_t, _) = self.series[self.series.len() - 1];
        let mut sample = self.series[idx.saturating_sub(1)].1;
        if self.spec.noise > 0.0 {
            let n = self.spec.noise;
            sample.s1_in = (sample.s1_in + self.rng.gen_range(-n..=n)).max(0.0);
            sample.s2_in = (sample.s2_in + self.rng.gen_range(-n..=n)).max(0.0);
        }
        InfluentReading {
            sample,
            exhausted: t > last_t + 1e-12,
        }
    }
}

fn load_series(path: &Path) -> Result<Vec<(f64, InfluentSample)>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => HarnessError::io(
            format!("influent file {}", path.display()),
            std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
        ),
        _ => HarnessError::Csv(e),
    })?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<SeriesRow>() {
        let row = row?;
        rows.push((
            row.t_days,
            InfluentSample {
                s1_in: row.s1_in.max(0.0),
                s2_in: row.s2_in.max(0.0),
                velocity: row.velocity,
            },
        ));
    }
    if rows.is_empty() {
        return Err(HarnessError::io(
            format!("influent file {}", path.display()),
            std::io::Error::new(std::io::ErrorKind::InvalidData, "no rows"),
        ));
    }
    if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(HarnessError::io(
            format!("influent file {}", path.display()),
            std::io::Error::new(std::io::ErrorKind::InvalidData, "t_days must increase"),
        ));
    }
    if rows
        .iter()
        .any(|(_, s)| matches!(s.velocity, Some(v) if !(v > 0.0)))
    {
        return Err(HarnessError::io(
            format!("influent file {}", path.display()),
            std::io::Error::new(std::io::ErrorKind::InvalidData, "velocity must be > 0"),
        ));
    }
    Ok(rows)
}

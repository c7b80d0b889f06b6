//! Plain-text key/value scenario configuration.
//!
//! The format is one `key = value` pair per line, `#` starts a comment,
//! blank lines are ignored. Keys are namespaced with dots; unknown keys are
//! rejected. Frequencies are in Hz, fields in Tesla, durations in seconds.
//!
//! ```text
//! system.i_isotope = 1H
//! system.s_isotope = 13C
//! system.j12_hz = 12.279744720924
//! system.j13_hz = 2.601025516923
//! system.j23_hz = -0.450082057569
//!
//! protocol.b_bias_t = 0.0
//! protocol.b_rot_t = 4e-6
//! protocol.nu_rot_hz = 1150.0
//! protocol.tau_s = 0.2
//!
//! sweep.axis = frequency
//! sweep.min = 300.0
//! sweep.max = 2000.0
//! sweep.points = 341
//!
//! output.path = sweep.csv
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

use storm_core::{FieldProtocol, SpinSpecies, SpinSystem, StormError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Malformed { line: usize, text: String },

    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },

    #[error("key '{key}': {reason}")]
    BadValue { key: String, reason: String },

    #[error("missing required key '{key}'")]
    Missing { key: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] StormError),

    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Frequency,
    Duration,
}

impl SweepAxis {
    pub fn column_name(self) -> &'static str {
        match self {
            SweepAxis::Frequency => "frequency_hz",
            SweepAxis::Duration => "duration_s",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct QuadSpec {
    pub isotope: String,
    /// Fixed couplings of the partner to spins 1, 2 and 3, Hz.
    pub j14: f64,
    pub j24: f64,
    pub j34: f64,
    /// Uniform-coupling grid for the efficiency map, Hz.
    pub j_min: f64,
    pub j_max: f64,
    pub j_points: usize,
    /// Frequency grid half-width around the working frequency, Hz.
    pub nu_halfspan: f64,
    pub nu_points: usize,
}

#[derive(Debug, Clone)]
pub struct CalibrateSpec {
    /// Bias field of each calibration condition, Tesla.
    pub bias_fields: Vec<f64>,
    /// Observed resonance of each condition, Hz.
    pub target_roots: Vec<f64>,
}

/// Frequency window for resonance searches, Hz.
#[derive(Debug, Clone, Copy)]
pub struct SearchWindow {
    pub min: f64,
    pub max: f64,
}

impl Default for SearchWindow {
    fn default() -> Self {
        Self {
            min: -5000.0,
            max: 5000.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub system: SpinSystem,
    pub b_bias: f64,
    pub b_rot: f64,
    pub nu_rot: Option<f64>,
    pub tau: Option<f64>,
    pub sweep: Option<SweepSpec>,
    pub quad: Option<QuadSpec>,
    pub calibrate: Option<CalibrateSpec>,
    pub search: SearchWindow,
    pub output: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "system.i_isotope",
    "system.s_isotope",
    "system.j12_hz",
    "system.j13_hz",
    "system.j23_hz",
    "protocol.b_bias_t",
    "protocol.b_rot_t",
    "protocol.nu_rot_hz",
    "protocol.tau_s",
    "sweep.axis",
    "sweep.min",
    "sweep.max",
    "sweep.points",
    "quad.isotope",
    "quad.j14_hz",
    "quad.j24_hz",
    "quad.j34_hz",
    "quad.j_min_hz",
    "quad.j_max_hz",
    "quad.j_points",
    "quad.nu_halfspan_hz",
    "quad.nu_points",
    "calibrate.bias_t",
    "calibrate.roots_hz",
    "search.min_hz",
    "search.max_hz",
    "output.path",
];

struct RawConfig {
    entries: Vec<(String, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line: line_no,
                    text: raw_line.into(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line: line_no, key });
            }
            if !seen.insert(key.clone()) {
                return Err(ConfigError::DuplicateKey { line: line_no, key });
            }
            entries.push((key, value));
        }
        Ok(Self { entries })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError::Missing { key: key.into() })
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|e| ConfigError::BadValue {
                    key: key.into(),
                    reason: format!("'{v}' is not a number ({e})"),
                })
            })
            .transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64_opt(key)?
            .ok_or_else(|| ConfigError::Missing { key: key.into() })
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse::<usize>().map_err(|e| ConfigError::BadValue {
                key: key.into(),
                reason: format!("'{v}' is not a positive integer ({e})"),
            }),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim()
                            .parse::<f64>()
                            .map_err(|e| ConfigError::BadValue {
                                key: key.into(),
                                reason: format!("'{item}' is not a number ({e})"),
                            })
                    })
                    .collect()
            })
            .transpose()
    }
}

impl ScenarioConfig {
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let raw = RawConfig::parse(text)?;

        let i_isotope = raw.require("system.i_isotope")?;
        let s_isotope = raw.require("system.s_isotope")?;
        let system = SpinSystem::i2s(
            SpinSpecies::from_label(i_isotope)?,
            SpinSpecies::from_label(s_isotope)?,
            raw.f64_req("system.j12_hz")?,
            raw.f64_req("system.j13_hz")?,
            raw.f64_req("system.j23_hz")?,
        )?;

        let b_bias = raw.f64_req("protocol.b_bias_t")?;
        let b_rot = raw.f64_req("protocol.b_rot_t")?;
        let nu_rot = raw.f64_opt("protocol.nu_rot_hz")?;
        let tau = raw.f64_opt("protocol.tau_s")?;
        if b_rot < 0.0 {
            return Err(ConfigError::BadValue {
                key: "protocol.b_rot_t".into(),
                reason: "must be >= 0".into(),
            });
        }
        if let Some(t) = tau {
            if t < 0.0 {
                return Err(ConfigError::BadValue {
                    key: "protocol.tau_s".into(),
                    reason: "must be >= 0".into(),
                });
            }
        }

        let sweep = match raw.get("sweep.axis") {
            None => {
                for key in ["sweep.min", "sweep.max", "sweep.points"] {
                    if raw.get(key).is_some() {
                        return Err(ConfigError::Invalid(format!(
                            "'{key}' given without 'sweep.axis'"
                        )));
                    }
                }
                None
            }
            Some(axis_text) => {
                let axis = match axis_text {
                    "frequency" => SweepAxis::Frequency,
                    "duration" => SweepAxis::Duration,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: "sweep.axis".into(),
                            reason: format!("'{other}' is not 'frequency' or 'duration'"),
                        })
                    }
                };
                let min = raw.f64_req("sweep.min")?;
                let max = raw.f64_req("sweep.max")?;
                let points = raw.usize_or("sweep.points", 201)?;
                if !min.is_finite() || !max.is_finite() || min >= max {
                    return Err(ConfigError::Invalid("sweep window is empty".into()));
                }
                if axis == SweepAxis::Duration && min < 0.0 {
                    return Err(ConfigError::Invalid(
                        "duration sweeps cannot start below zero".into(),
                    ));
                }
                if points < 2 {
                    return Err(ConfigError::Invalid("sweep needs at least 2 points".into()));
                }
                Some(SweepSpec {
                    axis,
                    min,
                    max,
                    points,
                })
            }
        };

        let quad = match raw.get("quad.isotope") {
            None => None,
            Some(isotope) => Some(QuadSpec {
                isotope: isotope.to_string(),
                j14: raw.f64_or("quad.j14_hz", 0.0)?,
                j24: raw.f64_or("quad.j24_hz", 0.0)?,
                j34: raw.f64_or("quad.j34_hz", 0.0)?,
                j_min: raw.f64_or("quad.j_min_hz", 0.0)?,
                j_max: raw.f64_or("quad.j_max_hz", 5.0)?,
                j_points: raw.usize_or("quad.j_points", 6)?,
                nu_halfspan: raw.f64_or("quad.nu_halfspan_hz", 20.0)?,
                nu_points: raw.usize_or("quad.nu_points", 9)?,
            }),
        };

        let calibrate = match (
            raw.f64_list("calibrate.bias_t")?,
            raw.f64_list("calibrate.roots_hz")?,
        ) {
            (None, None) => None,
            (Some(bias_fields), Some(target_roots)) => {
                if bias_fields.len() != target_roots.len() || bias_fields.is_empty() {
                    return Err(ConfigError::Invalid(
                        "calibrate.bias_t and calibrate.roots_hz need the same nonzero length"
                            .into(),
                    ));
                }
                Some(CalibrateSpec {
                    bias_fields,
                    target_roots,
                })
            }
            _ => {
                return Err(ConfigError::Invalid(
                    "calibrate.bias_t and calibrate.roots_hz must be given together".into(),
                ))
            }
        };

        let search = SearchWindow {
            min: raw.f64_or("search.min_hz", SearchWindow::default().min)?,
            max: raw.f64_or("search.max_hz", SearchWindow::default().max)?,
        };
        if !search.min.is_finite() || !search.max.is_finite() || search.min >= search.max {
            return Err(ConfigError::Invalid("search window is empty".into()));
        }

        let output = raw.get("output.path").map(PathBuf::from);

        Ok(Self {
            system,
            b_bias,
            b_rot,
            nu_rot,
            tau,
            sweep,
            quad,
            calibrate,
            search,
            output,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Fixed-frequency, fixed-duration protocol; both fields required.
    pub fn protocol(&self) -> Result<FieldProtocol, ConfigError> {
        let nu = self.nu_rot.ok_or_else(|| ConfigError::Missing {
            key: "protocol.nu_rot_hz".into(),
        })?;
        let tau = self.tau.ok_or_else(|| ConfigError::Missing {
            key: "protocol.tau_s".into(),
        })?;
        Ok(FieldProtocol::new(self.b_bias, self.b_rot, nu, tau)?)
    }
}

//! Run configuration: defaults, a flat `key = value` file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use setmffu::campaign::{Confidence, DEFAULT_MARGINS};
use setmffu::cones::SiteMode;
use setmffu::propagation::{DEFAULT_CONFLICT_CAP, DEFAULT_PATTERN_CAP};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey { path: String, line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub mode: SiteMode,
    pub exclude: Vec<String>,
    pub pattern_cap: usize,
    pub conflict_cap: u64,
    pub margins: Vec<f64>,
    pub confidence: Confidence,
    pub out: PathBuf,
    pub jobs: usize,
    pub seed: u64,
    pub dimacs: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            mode: SiteMode::Collapsed,
            exclude: Vec::new(),
            pattern_cap: DEFAULT_PATTERN_CAP,
            conflict_cap: DEFAULT_CONFLICT_CAP,
            margins: DEFAULT_MARGINS.to_vec(),
            confidence: Confidence::P95,
            out: PathBuf::from("out"),
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            seed: 0,
            dimacs: false,
        }
    }
}

const KEYS: [&str; 11] = [
    "input",
    "mode",
    "exclude",
    "pattern-cap",
    "conflict-cap",
    "margins",
    "confidence",
    "out",
    "jobs",
    "seed",
    "dimacs",
];

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// Comma- or whitespace-separated list.
pub fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
}

pub fn parse_margins(value: &str) -> Result<Vec<f64>, ConfigError> {
    let margins: Vec<f64> = split_list(value)
        .map(|m| {
            let (num, scale) = match m.strip_suffix('%') {
                Some(p) => (p, 100.0),
                None => (m, 1.0),
            };
            num.parse::<f64>()
                .map(|x| x / scale)
                .map_err(|e| bad("margins", value, e))
        })
        .collect::<Result<_, _>>()?;
    if margins.is_empty() {
        return Err(bad("margins", value, "at least one margin is required"));
    }
    if let Some(m) = margins.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
        return Err(bad("margins", value, format!("{m} is outside (0, 1)")));
    }
    Ok(margins)
}

impl RunConfig {
    /// Apply one setting, as given in a config file or on the command line.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.replace('_', "-");
        match key.as_str() {
            "input" => self.input = Some(PathBuf::from(value)),
            "mode" => self.mode = value.parse().map_err(|e: String| bad(&key, value, e))?,
            "exclude" => self.exclude = split_list(value).map(str::to_string).collect(),
            "pattern-cap" => {
                self.pattern_cap = value.parse().map_err(|e| bad(&key, value, e))?;
                if self.pattern_cap == 0 {
                    return Err(bad(&key, value, "must be at least 1"));
                }
            }
            "conflict-cap" => self.conflict_cap = value.parse().map_err(|e| bad(&key, value, e))?,
            "margins" => self.margins = parse_margins(value)?,
            "confidence" => self.confidence = value.parse().map_err(|e| bad(&key, value, e))?,
            "out" => self.out = PathBuf::from(value),
            "jobs" => {
                self.jobs = value.parse().map_err(|e| bad(&key, value, e))?;
                if self.jobs == 0 {
                    return Err(bad(&key, value, "must be at least 1"));
                }
            }
            "seed" => self.seed = value.parse().map_err(|e| bad(&key, value, e))?,
            "dimacs" => self.dimacs = value.parse().map_err(|e| bad(&key, value, e))?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    path: String::new(),
                    line: 0,
                    key,
                })
            }
        }
        Ok(())
    }

    /// Parse config file text into ordered key/value pairs. `#` starts a
    /// comment; keys use flag spelling (`pattern-cap` or `pattern_cap`).
    pub fn parse_file_text(text: &str, path: &str) -> Result<BTreeMap<String, String>, ConfigError> {
        let mut out = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    path: path.to_string(),
                    line: i + 1,
                });
            };
            let k = k.trim().replace('_', "-");
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey {
                    path: path.to_string(),
                    line: i + 1,
                    key: k,
                });
            }
            out.insert(k, v.trim().to_string());
        }
        Ok(out)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        for (k, v) in Self::parse_file_text(&text, &display)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }
}

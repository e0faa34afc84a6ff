//! Flat `key = value` configuration files.
//!
//! One entry per line. Blank lines and lines starting with `#` or `;` are
//! ignored. `[section]` headers are allowed for organization but carry no
//! meaning: keys are global and may appear at most once. Every key has a
//! command-line flag of the same name, and flags win over file values.
//!
//! ```text
//! # sweep setup
//! [grid]
//! scenarios = MU U NY, E S MI
//! seeds     = 1, 2, 3, 4, 5
//!
//! [market]
//! agents   = 1000
//! days     = 100
//! turns    = 12
//! auctions = off
//! p0       = 100.0
//!
//! [output]
//! out  = runs
//! jobs = 4
//! ```

use std::collections::HashSet;
use std::fmt;

pub const KNOWN_KEYS: [&str; 10] = [
    "scenarios",
    "seeds",
    "days",
    "agents",
    "turns",
    "auctions",
    "p0",
    "out",
    "tail-crossover",
    "jobs",
];

/// Values read from a configuration file. `None` means the key was absent;
/// the caller layers flags and defaults on top.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileConfig {
    pub scenarios: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    pub days: Option<u32>,
    pub agents: Option<u32>,
    pub turns: Option<u32>,
    pub auctions: Option<bool>,
    pub p0: Option<f64>,
    pub out: Option<String>,
    pub tail_crossover: Option<f64>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigFileError {
    Malformed { line: usize, text: String },
    BadSection { line: usize, text: String },
    UnknownKey { line: usize, key: String },
    DuplicateKey { line: usize, key: String },
    BadValue { line: usize, key: String, reason: String },
}

impl fmt::Display for ConfigFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigFileError::Malformed { line, text } => {
                write!(f, "line {line}: expected `key = value`, got {text:?}")
            }
            ConfigFileError::BadSection { line, text } => {
                write!(f, "line {line}: malformed section header {text:?}")
            }
            ConfigFileError::UnknownKey { line, key } => {
                write!(
                    f,
                    "line {line}: unknown key `{key}` (expected one of {})",
                    KNOWN_KEYS.join(", ")
                )
            }
            ConfigFileError::DuplicateKey { line, key } => {
                write!(f, "line {line}: duplicate key `{key}`")
            }
            ConfigFileError::BadValue { line, key, reason } => {
                write!(f, "line {line}: invalid value for `{key}`: {reason}")
            }
        }
    }
}

impl std::error::Error for ConfigFileError {}

/// Parse a configuration file. Purely textual: scenario labels are kept as
/// strings and validated when the grid is assembled.
pub fn parse_config(text: &str) -> Result<FileConfig, ConfigFileError> {
    let mut cfg = FileConfig::default();
    let mut seen: HashSet<String> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if trimmed.starts_with('[') {
            let well_formed = trimmed.ends_with(']') && trimmed.len() > 2;
            if !well_formed {
                return Err(ConfigFileError::BadSection {
                    line,
                    text: trimmed.to_string(),
                });
            }
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigFileError::Malformed {
                line,
                text: trimmed.to_string(),
            });
        };
        // Keys are case-insensitive and accept `_` for `-`.
        let key = key.trim().to_lowercase().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigFileError::Malformed {
                line,
                text: trimmed.to_string(),
            });
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigFileError::UnknownKey { line, key });
        }
        if !seen.insert(key.clone()) {
            return Err(ConfigFileError::DuplicateKey { line, key });
        }
        if value.is_empty() {
            return Err(ConfigFileError::BadValue {
                line,
                key,
                reason: "value is empty".to_string(),
            });
        }

        match key.as_str() {
            "scenarios" => cfg.scenarios = Some(split_list(value)),
            "seeds" => cfg.seeds = Some(parse_seeds(line, value)?),
            "days" => cfg.days = Some(parse_positive_u32(line, "days", value)?),
            "agents" => cfg.agents = Some(parse_positive_u32(line, "agents", value)?),
            "turns" => cfg.turns = Some(parse_positive_u32(line, "turns", value)?),
            "auctions" => cfg.auctions = Some(parse_bool(line, value)?),
            "p0" => cfg.p0 = Some(parse_finite(line, "p0", value)?),
            "out" => cfg.out = Some(value.to_string()),
            "tail-crossover" => {
                cfg.tail_crossover = Some(parse_finite(line, "tail-crossover", value)?)
            }
            "jobs" => cfg.jobs = Some(parse_jobs(line, value)?),
            _ => unreachable!("key membership already checked"),
        }
    }
    Ok(cfg)
}

/// Comma-separated list with trimmed entries; empty entries dropped.
fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_seeds(line: usize, value: &str) -> Result<Vec<u64>, ConfigFileError> {
    let mut seeds = Vec::new();
    for token in value.split(|c: char| c == ',' || c.is_whitespace()) {
        if token.is_empty() {
            continue;
        }
        let seed = token.parse::<u64>().map_err(|_| ConfigFileError::BadValue {
            line,
            key: "seeds".to_string(),
            reason: format!("`{token}` is not a nonnegative integer"),
        })?;
        seeds.push(seed);
    }
    if seeds.is_empty() {
        return Err(ConfigFileError::BadValue {
            line,
            key: "seeds".to_string(),
            reason: "no seeds given".to_string(),
        });
    }
    Ok(seeds)
}

fn parse_positive_u32(line: usize, key: &str, value: &str) -> Result<u32, ConfigFileError> {
    match value.parse::<u32>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(ConfigFileError::BadValue {
            line,
            key: key.to_string(),
            reason: format!("`{value}` is not a positive integer"),
        }),
    }
}

fn parse_bool(line: usize, value: &str) -> Result<bool, ConfigFileError> {
    match value.to_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(ConfigFileError::BadValue {
            line,
            key: "auctions".to_string(),
            reason: format!("`{value}` is not a boolean (use on/off, true/false, yes/no, 1/0)"),
        }),
    }
}

fn parse_finite(line: usize, key: &str, value: &str) -> Result<f64, ConfigFileError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigFileError::BadValue {
            line,
            key: key.to_string(),
            reason: format!("`{value}` is not a finite number"),
        }),
    }
}

fn parse_jobs(line: usize, value: &str) -> Result<usize, ConfigFileError> {
    match value.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(ConfigFileError::BadValue {
            line,
            key: "jobs".to_string(),
            reason: format!("`{value}` is not a positive integer"),
        }),
    }
}

//! Configuration loading and resolution.
//!
//! Config files are flat `key = value` text (`#` or `;` comments). A JSON
//! manifest emitted by a previous run is also accepted: its echoed `config`
//! object is read back with the same keys, so any run can be reproduced
//! directly from its manifest. Command-line flags override file values; the
//! seed additionally honors `RATEKIN_SEED` between the flag and the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
}

fn json_to_string(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(items) => {
            let mut out = String::new();
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", json_to_string(item));
            }
            out
        }
        other => other.to_string(),
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|msg| {
            CliError::Usage(format!("invalid config {}: {msg}", path.display()))
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(trimmed).map_err(|e| format!("not valid JSON: {e}"))?;
            let object = value
                .get("config")
                .and_then(|c| c.as_object())
                .or_else(|| value.as_object())
                .ok_or("JSON config must be an object")?;
            let file = object
                .iter()
                .map(|(k, v)| (k.clone(), json_to_string(v)))
                .collect();
            return Ok(Self { file });
        }

        let mut file = BTreeMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected `key = value`", line_no + 1));
            };
            file.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { file })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.file.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Usage(format!("config key `{key}`: `{s}` is not a number"))),
            None => Ok(default),
        }
    }

    pub fn usize_or(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            Some(s) => s.parse().map_err(|_| {
                CliError::Usage(format!("config key `{key}`: `{s}` is not an unsigned integer"))
            }),
            None => Ok(default),
        }
    }

    pub fn string_or(&self, key: &str, flag: Option<&str>, default: &str) -> String {
        if let Some(v) = flag {
            return v.to_string();
        }
        self.raw(key).unwrap_or(default).to_string()
    }

    /// Seed precedence: `--seed` flag, then `RATEKIN_SEED`, then the config
    /// file, then the fixed default 42.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Ok(env) = std::env::var("RATEKIN_SEED") {
            return env.trim().parse().map_err(|_| {
                CliError::Usage(format!(
                    "RATEKIN_SEED must be an unsigned 64-bit integer, got `{env}`"
                ))
            });
        }
        match self.raw("seed") {
            Some(s) => s.parse().map_err(|_| {
                CliError::Usage(format!("config key `seed`: `{s}` is not an unsigned integer"))
            }),
            None => Ok(42),
        }
    }

    pub fn list_f64_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| {
                        CliError::Usage(format!("config key `{key}`: `{item}` is not a number"))
                    })
                })
                .collect(),
        }
    }

    pub fn list_usize_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| {
                        CliError::Usage(format!(
                            "config key `{key}`: `{item}` is not an unsigned integer"
                        ))
                    })
                })
                .collect(),
        }
    }
}

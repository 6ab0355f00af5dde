//! Flat `key = value` configuration files with `[section]` headers.
//! No nesting, no quoting; `#` starts a comment. Keys are addressed as
//! `section.key`. The schema is documented in the repository README.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// The experiment kinds the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Converge,
    LinearFlow,
    InterpTest,
    Aliasing,
    Growth,
    FunctionalCheck,
    Simulate,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Converge => "converge",
            Kind::LinearFlow => "linear-flow",
            Kind::InterpTest => "interp-test",
            Kind::Aliasing => "aliasing",
            Kind::Growth => "growth",
            Kind::FunctionalCheck => "functional-check",
            Kind::Simulate => "simulate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "converge" => Kind::Converge,
            "linear-flow" => Kind::LinearFlow,
            "interp-test" => Kind::InterpTest,
            "aliasing" => Kind::Aliasing,
            "growth" => Kind::Growth,
            "functional-check" => Kind::FunctionalCheck,
            "simulate" => Kind::Simulate,
            other => return Err(HarnessError::Config(format!("unknown experiment kind '{other}'"))),
        })
    }
}

/// Parsed configuration: ordered `section.key -> value` strings plus typed
/// accessors. Kept stringly so the report can echo it verbatim.
#[derive(Debug, Clone, Default)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim();
            if key.is_empty() || section.is_empty() {
                return Err(HarnessError::Config(format!(
                    "line {}: keys must live under a [section]",
                    lineno + 1
                )));
            }
            entries.insert(format!("{section}.{key}"), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str()).filter(|s| !s.is_empty())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| HarnessError::Config(format!("missing required key '{key}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.require(key)?, key)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => parse_f64(v, key),
            None => Ok(default),
        }
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_f64(v, key)).transpose()
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| HarnessError::Config(format!("key '{key}': expected integer, got '{v}'"))),
            None => Ok(default),
        }
    }

    pub fn i64_or(&self, key: &str, default: i64) -> Result<i64> {
        match self.get(key) {
            Some(v) => v
                .parse::<i64>()
                .map_err(|_| HarnessError::Config(format!("key '{key}': expected integer, got '{v}'"))),
            None => Ok(default),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(HarnessError::Config(format!("key '{key}': expected boolean, got '{v}'"))),
            None => Ok(default),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Comma-separated list of reals.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.require(key)?
            .split(',')
            .map(|tok| parse_f64(tok.trim(), key))
            .collect()
    }

    /// Decreasing dyadic step list: at least three entries, each half the
    /// previous one.
    pub fn dyadic_h_values(&self) -> Result<Vec<f64>> {
        let hs = self.f64_list("domain.h_values")?;
        if hs.len() < 3 {
            return Err(HarnessError::Config(format!(
                "domain.h_values needs at least 3 entries, got {}",
                hs.len()
            )));
        }
        for w in hs.windows(2) {
            if w[1].is_nan() || w[1] <= 0.0 || (w[1] - w[0] / 2.0).abs() > 1e-9 * w[0] {
                return Err(HarnessError::Config(format!(
                    "domain.h_values must be dyadic decreasing (each half the previous): {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(hs)
    }

    /// `(lambda, p, d)` from the `[model]` section, validated upstream.
    pub fn model(&self) -> Result<dnls_core::dynamics::ModelParams> {
        let lambda = self.i64_or("model.lambda", 1)? as i32;
        let p = self.u64_or("model.p", 3)? as u32;
        let d = self.u64_or("model.d", 1)? as usize;
        Ok(dnls_core::dynamics::ModelParams::new(lambda, p, d)?)
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("experiment.seed", 0)
    }
}

fn parse_f64(v: &str, key: &str) -> Result<f64> {
    match v {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => v
            .parse::<f64>()
            .map_err(|_| HarnessError::Config(format!("key '{key}': expected number, got '{v}'"))),
    }
}

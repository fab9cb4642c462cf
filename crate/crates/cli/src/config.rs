//! Effective configuration: defaults, then a config file, then flags.
//!
//! Config files are either flat `key = value` text (`#` starts a comment) or
//! a JSON document. For JSON, a top-level `config` object (as echoed in run
//! reports) is used when present, otherwise the top-level object itself.

use std::collections::BTreeMap;

use serde_json::Value;
use zeronoise::{GammaExponent, SimConfig};

pub const KEYS: [&str; 8] = ["gamma", "epsilon", "a", "T", "dt", "paths", "seed", "antithetic"];

/// Values collected from one source; `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partial {
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub a: Option<f64>,
    pub horizon_t: Option<f64>,
    pub dt: Option<f64>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub antithetic: Option<bool>,
}

impl Partial {
    /// Fields set in `over` win.
    pub fn overlay(self, over: Partial) -> Partial {
        Partial {
            gamma: over.gamma.or(self.gamma),
            epsilon: over.epsilon.or(self.epsilon),
            a: over.a.or(self.a),
            horizon_t: over.horizon_t.or(self.horizon_t),
            dt: over.dt.or(self.dt),
            paths: over.paths.or(self.paths),
            seed: over.seed.or(self.seed),
            antithetic: over.antithetic.or(self.antithetic),
        }
    }

    fn set(&mut self, key: &str, raw: &str) -> Result<(), String> {
        let f = || raw.parse::<f64>().map_err(|e| format!("{key}: {e}"));
        let u = || raw.parse::<u64>().map_err(|e| format!("{key}: {e}"));
        match key {
            "gamma" => self.gamma = Some(f()?),
            "epsilon" => self.epsilon = Some(f()?),
            "a" => self.a = Some(f()?),
            "T" => self.horizon_t = Some(f()?),
            "dt" => self.dt = Some(f()?),
            "paths" => self.paths = Some(u()?),
            "seed" => self.seed = Some(u()?),
            "antithetic" => self.antithetic = Some(raw.parse::<bool>().map_err(|e| format!("{key}: {e}"))?),
            _ => return Err(format!("unknown key `{key}` (expected one of {})", KEYS.join(", "))),
        }
        Ok(())
    }

    /// Resolves against defaults. When `a` is absent it is the midpoint of
    /// its admissible interval `(2γ/(1+γ), 1)`.
    pub fn resolve(&self) -> Result<SimConfig, String> {
        let gamma = GammaExponent::new(self.gamma.unwrap_or(0.0)).map_err(|e| e.to_string())?;
        let a = self.a.unwrap_or_else(|| 0.5 * (SimConfig::min_a_exponent(gamma) + 1.0));
        Ok(SimConfig {
            gamma,
            epsilon: self.epsilon.unwrap_or(0.05),
            a_exponent: a,
            horizon_t: self.horizon_t.unwrap_or(1.0),
            dt: self.dt.unwrap_or(1e-4),
            n_paths: self.paths.unwrap_or(10_000),
            master_seed: self.seed.unwrap_or(42),
        })
    }
}

pub fn parse_config(text: &str) -> Result<Partial, String> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_key_value(text)
    }
}

fn parse_key_value(text: &str) -> Result<Partial, String> {
    let mut seen = BTreeMap::new();
    let mut p = Partial::default();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", no + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if seen.insert(k.to_string(), no + 1).is_some() {
            return Err(format!("line {}: duplicate key `{k}`", no + 1));
        }
        p.set(k, v).map_err(|e| format!("line {}: {e}", no + 1))?;
    }
    Ok(p)
}

fn parse_json(text: &str) -> Result<Partial, String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let mut obj = doc.get("config").unwrap_or(&doc).as_object().ok_or("JSON config must be an object")?.clone();
    if let Some(anti) = doc.get("antithetic") {
        obj.entry("antithetic").or_insert(anti.clone());
    }
    let mut p = Partial::default();
    for (k, v) in &obj {
        if !KEYS.contains(&k.as_str()) {
            continue;
        }
        let raw = match v {
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::String(s) => s.clone(),
            other => return Err(format!("{k}: unsupported value {other}")),
        };
        p.set(k, &raw)?;
    }
    Ok(p)
}

#[cfg(test)]
/// `key = value` rendering of a configuration, readable by [`parse_config`].
pub fn to_key_value(c: &SimConfig, antithetic: bool) -> String {
    format!(
        "gamma = {}\nepsilon = {}\na = {}\nT = {}\ndt = {}\npaths = {}\nseed = {}\nantithetic = {}\n",
        c.gamma.value(),
        c.epsilon,
        c.a_exponent,
        c.horizon_t,
        c.dt,
        c.n_paths,
        c.master_seed,
        antithetic
    )
}

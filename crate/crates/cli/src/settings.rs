//! Run settings: defaults, a `key = value` config file, then flags.

use std::collections::BTreeMap;
use std::path::Path;

use affine_trace::inequalities::Resolution;
use affine_trace::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub n: usize,
    pub alpha: f64,
    pub res: Resolution,
    pub seed: u64,
    /// Evaluations per optimizer run.
    pub budget: usize,
    pub jobs: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { n: 3, alpha: 0.5, res: Resolution::default(), seed: 7, budget: 300, jobs: 1 }
    }
}

/// Keys accepted in config files, mirroring the long flags.
pub const KEYS: [&str; 10] = ["n", "alpha", "grid", "extent", "tnodes", "tmax", "sphere-nodes", "seed", "budget", "jobs"];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key = value, got '{raw}'", no + 1)))?;
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Usage(format!("config line {}: unknown key '{k}'", no + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn parse<V: std::str::FromStr>(key: &str, v: &str) -> Result<V> {
    v.parse().map_err(|_| Error::Usage(format!("bad value '{v}' for {key}")))
}

impl Settings {
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "n" => self.n = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "grid" => self.res.grid = parse(key, v)?,
            "extent" => self.res.extent = parse(key, v)?,
            "tnodes" => self.res.tnodes = parse(key, v)?,
            "tmax" => self.res.t_max = parse(key, v)?,
            "sphere-nodes" => self.res.sphere_nodes = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "budget" => self.budget = parse(key, v)?,
            "jobs" => self.jobs = parse(key, v)?,
            _ => return Err(Error::Usage(format!("unknown setting '{key}'"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            return Err(Error::Usage("jobs must be at least 1".into()));
        }
        if self.res.grid < 8 || !self.res.grid.is_multiple_of(2) {
            return Err(Error::Usage(format!("grid must be even and at least 8, got {}", self.res.grid)));
        }
        if self.res.tnodes < 8 {
            return Err(Error::Usage(format!("tnodes must be at least 8, got {}", self.res.tnodes)));
        }
        if !(self.res.extent > 0.0 && self.res.t_max > 0.0) {
            return Err(Error::Usage("extent and tmax must be positive".into()));
        }
        Ok(())
    }
}

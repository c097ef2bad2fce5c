//! Plain-text `key = value` settings.
//!
//! A config file and `--set key=value` flags share one key space. Later
//! sources win: file, then `--set`, then the dedicated command-line flags.
//! Lines starting with `#` and blank lines are ignored.
//!
//! Sampler keys mirror [`NSConfig`] field names (`n_live`, `tol`, `min_ref`,
//! `max_ref`, `delta_p`, `dt_ini`, `kill_fraction`, `prune_patience`,
//! `clustering_enabled`, `adaptive_dt`, `termination_mode`, `fixed_steps`,
//! `max_restarts`, `max_steps`, `max_iterations`). Problem parameters use a
//! `param.` prefix (`param.sigma = 2`). Experiment keys are `problem`, `dim`,
//! `dims`, `seeds`, `seed`, `n_lives` and `plot`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ggns_core::problems::ProblemParams;
use ggns_core::NSConfig;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

const EXPERIMENT_KEYS: &[&str] = &["problem", "dim", "dims", "seeds", "seed", "n_lives", "plot"];

const SAMPLER_KEYS: &[&str] = &[
    "n_live",
    "tol",
    "min_ref",
    "max_ref",
    "delta_p",
    "dt_ini",
    "kill_fraction",
    "prune_patience",
    "clustering_enabled",
    "adaptive_dt",
    "termination_mode",
    "fixed_steps",
    "max_restarts",
    "max_steps",
    "max_iterations",
];

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            s.set_pair(line).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(s)
    }

    /// Parses one `key=value` pair and stores it.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got `{pair}`"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        let known = EXPERIMENT_KEYS.contains(&key)
            || SAMPLER_KEYS.contains(&key)
            || key.strip_prefix("param.").is_some_and(|k| !k.is_empty());
        if !known {
            bail!("unknown setting `{key}`");
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|raw| {
                raw.parse::<T>()
                    .map_err(|_| anyhow!("cannot parse setting {key}={raw}"))
            })
            .transpose()
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|raw| parse_list(raw).with_context(|| format!("setting {key}")))
            .transpose()
    }

    /// Overlays `other` on top of `self`.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    /// Sampler configuration: defaults overridden by every sampler key present.
    pub fn ns_config(&self) -> Result<NSConfig> {
        let mut cfg = NSConfig::default();
        for (key, raw) in &self.values {
            let bad = || anyhow!("cannot parse setting {key}={raw}");
            match key.as_str() {
                "n_live" => cfg.n_live = raw.parse().map_err(|_| bad())?,
                "tol" => cfg.tol = raw.parse().map_err(|_| bad())?,
                "min_ref" => cfg.min_ref = raw.parse().map_err(|_| bad())?,
                "max_ref" => cfg.max_ref = raw.parse().map_err(|_| bad())?,
                "delta_p" => cfg.delta_p = raw.parse().map_err(|_| bad())?,
                "dt_ini" => cfg.dt_ini = raw.parse().map_err(|_| bad())?,
                "kill_fraction" => cfg.kill_fraction = raw.parse().map_err(|_| bad())?,
                "prune_patience" => cfg.prune_patience = raw.parse().map_err(|_| bad())?,
                "clustering_enabled" => cfg.clustering_enabled = parse_bool(raw).ok_or_else(bad)?,
                "adaptive_dt" => cfg.adaptive_dt = parse_bool(raw).ok_or_else(bad)?,
                "termination_mode" => cfg.termination_mode = raw.parse()?,
                "fixed_steps" => {
                    cfg.fixed_steps = match raw.as_str() {
                        "" | "none" => None,
                        v => Some(v.parse().map_err(|_| bad())?),
                    }
                }
                "max_restarts" => cfg.max_restarts = raw.parse().map_err(|_| bad())?,
                "max_steps" => cfg.max_steps = raw.parse().map_err(|_| bad())?,
                "max_iterations" => cfg.max_iterations = raw.parse().map_err(|_| bad())?,
                _ => {}
            }
        }
        if let Some(seed) = self.parsed("seed")? {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// `param.*` keys, plus `dim` when the problem takes one.
    pub fn problem_params(&self) -> ProblemParams {
        let mut p = ProblemParams::new();
        for (key, value) in &self.values {
            if let Some(k) = key.strip_prefix("param.") {
                p.set(k, value);
            }
        }
        if let Some(dim) = self.get("dim") {
            p.set("dim", dim);
        }
        p
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some(raw) => parse_bool(raw).ok_or_else(|| anyhow!("cannot parse setting {key}={raw}")),
        }
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

pub fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>> {
    let items = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| anyhow!("bad list entry `{s}`")))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        bail!("empty list");
    }
    Ok(items)
}

//! Flat `key=value` configuration with command-line overrides.

use std::collections::BTreeMap;

use bubble_core::market::normalize_params;
use bubble_core::{Error as CoreError, Grid, ModelParams};

use crate::error::{CliError, Result};

pub const MODEL_KEYS: [&str; 7] = ["kappa1", "kappa2", "theta1", "theta2", "sigma1", "sigma2", "lambda"];
pub const SETTING_KEYS: [&str; 7] = ["d_max", "grid_n", "tol", "horizon", "dt", "paths", "seed"];

pub const DEFAULT_GRID_N: usize = 1001;
pub const DEFAULT_TOL: f64 = bubble_core::hjb::DEFAULT_TOL;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_PATHS: usize = 10_000;

fn is_known(key: &str) -> bool {
    MODEL_KEYS.contains(&key) || SETTING_KEYS.contains(&key)
}

/// Key/value pairs before validation. Later insertions win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if raw.entries.contains_key(key) {
                return Err(CliError::config(key, format!("duplicate key on line {}", i + 1)));
            }
            raw.set(key, value)?;
        }
        Ok(raw)
    }

    /// Sets or overrides one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !is_known(key) {
            return Err(CliError::config(key, "unknown key"));
        }
        if value.is_empty() {
            return Err(CliError::config(key, "empty value"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| CliError::config(key, format!("`{v}` is not a finite number")))
            })
            .transpose()
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        match self.float(key)? {
            Some(v) if v <= 0.0 => Err(CliError::config(key, format!("must be positive, got {v}"))),
            other => Ok(other),
        }
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::config(key, format!("`{v}` is not a nonnegative integer")))
            })
            .transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.float(key)?.ok_or_else(|| CliError::config(key, "missing"))
    }
}

/// Validated run configuration. Model parameters are normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    /// Groups were exchanged to reach `kappa1 >= kappa2`.
    pub swapped: bool,
    /// Grid extent; `None` selects the solver default.
    pub d_max: Option<f64>,
    pub grid_n: usize,
    pub tol: f64,
    /// Simulation horizon; `None` selects `12/lambda`.
    pub horizon: Option<f64>,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut values = [0.0; 7];
        for (slot, key) in values.iter_mut().zip(MODEL_KEYS) {
            *slot = raw.required(key)?;
        }
        let [kappa1, kappa2, theta1, theta2, sigma1, sigma2, lambda] = values;
        let input = ModelParams {
            kappa1,
            kappa2,
            theta1,
            theta2,
            sigma1,
            sigma2,
            lambda,
        };
        let normalized = normalize_params(input).map_err(|e| match e {
            CoreError::NonPositive { name, value } => CliError::config(name, format!("must be positive, got {value}")),
            CoreError::Feller { group, ratio } => {
                let g = group.number();
                CliError::config(
                    format!("sigma{g}"),
                    format!("Feller condition fails: 2*kappa{g}*theta{g}/sigma{g}^2 = {ratio} < 1"),
                )
            }
            other => other.into(),
        })?;
        let params = normalized.params;

        let grid_n = raw.integer::<usize>("grid_n")?.unwrap_or(DEFAULT_GRID_N);
        if grid_n < 3 {
            return Err(CliError::config(
                "grid_n",
                format!("need at least 3 nodes, got {grid_n}"),
            ));
        }
        let d_max = raw.positive("d_max")?;
        if let Some(d) = d_max {
            Grid::new(&params, d, grid_n).map_err(|e| CliError::config("d_max", e.to_string()))?;
        }
        let tol = raw.positive("tol")?.unwrap_or(DEFAULT_TOL);
        let dt = raw.positive("dt")?.unwrap_or(DEFAULT_DT);
        let horizon = raw.positive("horizon")?;
        if let Some(h) = horizon {
            if h < dt {
                return Err(CliError::config(
                    "horizon",
                    format!("must be at least dt = {dt}, got {h}"),
                ));
            }
        }
        let paths = raw.integer::<usize>("paths")?.unwrap_or(DEFAULT_PATHS);
        if paths == 0 {
            return Err(CliError::config("paths", "need at least one path"));
        }
        let seed = raw.integer::<u64>("seed")?.unwrap_or(0);
        Ok(RunConfig {
            params,
            swapped: normalized.swapped,
            d_max,
            grid_n,
            tol,
            horizon,
            dt,
            paths,
            seed,
        })
    }

    /// Parses `text` and then applies `overrides` in order.
    pub fn parse(text: Option<&str>, overrides: &[(&str, String)]) -> Result<Self> {
        let mut raw = match text {
            Some(t) => RawConfig::parse(t)?,
            None => RawConfig::default(),
        };
        for (k, v) in overrides {
            raw.set(k, v)?;
        }
        Self::from_raw(&raw)
    }

    /// Solver grid: `d_max` if set, else the default extent.
    pub fn grid(&self) -> Result<Grid> {
        Ok(match self.d_max {
            Some(d) => Grid::new(&self.params, d, self.grid_n)?,
            None => Grid::with_default_extent(&self.params, self.grid_n)?,
        })
    }

    pub fn horizon_or_default(&self) -> f64 {
        self.horizon.unwrap_or(12.0 / self.params.lambda)
    }

    /// Header lines shared by every output.
    pub fn notes(&self) -> Vec<String> {
        if self.swapped {
            vec!["groups swapped so that kappa1 >= kappa2".to_string()]
        } else {
            Vec::new()
        }
    }
}

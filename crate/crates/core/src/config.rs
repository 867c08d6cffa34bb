//! Tracker parameters and their JSON form.
//!
//! The config document is a flat JSON object whose keys are exactly the field
//! names below. Missing keys take the defaults; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable that overrides `cn_table_path`.
pub const CN_TABLE_ENV: &str = "DRIFTGUARD_CN_TABLE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Ridge regularizer.
    pub lambda1: f64,
    /// Weight of the distractor suppression term; 0 gives a plain CF tracker.
    pub lambda2: f64,
    /// Model learning rate.
    pub theta: f64,
    pub hog_cell: usize,
    pub cn_cell: usize,
    /// Search window size as a multiple of the target size.
    pub padding: f64,
    /// Label sigma relative to the target's extent in cells.
    pub sigma_factor: f64,
    /// Distractor distance gate as a fraction of the smaller window side (cells).
    pub d_max_factor: f64,
    /// Secondary peaks must exceed this fraction of the primary peak.
    pub peak_gate: f64,
    /// Colour-name table; the built-in prototype table is used when unset.
    pub cn_table_path: Option<PathBuf>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            lambda1: 1e-2,
            lambda2: 15.0,
            theta: 0.015,
            hog_cell: 9,
            cn_cell: 4,
            padding: 2.0,
            sigma_factor: 0.1,
            d_max_factor: 0.5,
            peak_gate: 0.20,
            cn_table_path: None,
        }
    }
}

/// Keys that accept a numeric override from the command line.
pub const NUMERIC_KEYS: &[&str] = &[
    "lambda1",
    "lambda2",
    "theta",
    "hog_cell",
    "cn_cell",
    "padding",
    "sigma_factor",
    "d_max_factor",
    "peak_gate",
];

impl TrackerConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrackerConfig = serde_json::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `DRIFTGUARD_CN_TABLE` when set and non-empty.
    pub fn apply_env(&mut self) {
        if let Some(path) = std::env::var_os(CN_TABLE_ENV) {
            if !path.is_empty() {
                self.cn_table_path = Some(PathBuf::from(path));
            }
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let real = || -> Result<f64> {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("{key}: '{value}' is not a number")))
        };
        let cells = || -> Result<usize> {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("{key}: '{value}' is not a positive integer")))
        };
        match key {
            "lambda1" => self.lambda1 = real()?,
            "lambda2" => self.lambda2 = real()?,
            "theta" => self.theta = real()?,
            "hog_cell" => self.hog_cell = cells()?,
            "cn_cell" => self.cn_cell = cells()?,
            "padding" => self.padding = real()?,
            "sigma_factor" => self.sigma_factor = real()?,
            "d_max_factor" => self.d_max_factor = real()?,
            "peak_gate" => self.peak_gate = real()?,
            "cn_table_path" => self.cn_table_path = Some(PathBuf::from(value)),
            _ => return Err(Error::invalid(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(msg));
        if !(self.lambda1 > 0.0) {
            return fail(format!("lambda1 must be > 0, got {}", self.lambda1));
        }
        if !(self.lambda2 >= 0.0) {
            return fail(format!("lambda2 must be >= 0, got {}", self.lambda2));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return fail(format!("theta must lie in (0, 1], got {}", self.theta));
        }
        if self.hog_cell == 0 || self.cn_cell == 0 {
            return fail("cell sizes must be >= 1".into());
        }
        if !(self.padding >= 1.0) || !self.padding.is_finite() {
            return fail(format!("padding must be >= 1, got {}", self.padding));
        }
        if !(self.sigma_factor > 0.0) {
            return fail(format!("sigma_factor must be > 0, got {}", self.sigma_factor));
        }
        if !(self.d_max_factor >= 0.0) {
            return fail(format!("d_max_factor must be >= 0, got {}", self.d_max_factor));
        }
        if !(self.peak_gate > 0.0 && self.peak_gate < 1.0) {
            return fail(format!("peak_gate must lie in (0, 1), got {}", self.peak_gate));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrackerConfig::default();
        assert_eq!(c.lambda1, 1e-2);
        assert_eq!(c.lambda2, 15.0);
        assert_eq!((c.hog_cell, c.cn_cell), (9, 4));
        c.validate().unwrap();
    }

    #[test]
    fn missing_keys_default_and_unknown_keys_fail() {
        let c = TrackerConfig::from_json(r#"{"lambda2": 0.5}"#).unwrap();
        assert_eq!(c.lambda2, 0.5);
        assert_eq!(c.theta, 0.015);
        assert!(matches!(
            TrackerConfig::from_json(r#"{"lambda3": 1}"#),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let c = TrackerConfig {
            cn_table_path: Some("w2c.txt".into()),
            ..TrackerConfig::default()
        };
        assert_eq!(TrackerConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(TrackerConfig::from_json(r#"{"lambda1": 0}"#).is_err());
        assert!(TrackerConfig::from_json(r#"{"theta": 1.5}"#).is_err());
        assert!(TrackerConfig::from_json(r#"{"peak_gate": 1.0}"#).is_err());
        assert!(TrackerConfig::from_json(r#"{"hog_cell": 0}"#).is_err());
    }

    #[test]
    fn set_by_key() {
        let mut c = TrackerConfig::default();
        c.set("lambda2", "50").unwrap();
        c.set("hog_cell", "4").unwrap();
        assert_eq!((c.lambda2, c.hog_cell), (50.0, 4));
        assert!(c.set("hog_cell", "2.5").is_err());
        assert!(c.set("nope", "1").is_err());
    }
}

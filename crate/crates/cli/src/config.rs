//! `key = value` run configuration files.
//!
//! Recognised keys: `P`, `I`, `eta`, `J_T`, `patience`, `seed`, `mode`,
//! `absolute_output`. Blank lines and `#` comments are ignored.

use std::str::FromStr;

use bicap_core::{Mode, OptimizerConfig};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConfigFile {
    pub population: Option<usize>,
    pub max_iterations: Option<usize>,
    pub eta: Option<f64>,
    pub fitness_threshold: Option<f64>,
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub absolute_output: Option<bool>,
}

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError(format!("line {line}: bad value {raw:?} for {key}")))
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, val) =
                content.split_once('=').ok_or_else(|| ConfigError(format!("line {line}: expected key = value")))?;
            let (key, val) = (key.trim(), val.trim());
            match key {
                "P" => cfg.population = Some(value(key, val, line)?),
                "I" => cfg.max_iterations = Some(value(key, val, line)?),
                "eta" => cfg.eta = Some(value(key, val, line)?),
                "J_T" => cfg.fitness_threshold = Some(value(key, val, line)?),
                "patience" => cfg.patience = Some(value(key, val, line)?),
                "seed" => cfg.seed = Some(value(key, val, line)?),
                "mode" => cfg.mode = Some(value(key, val, line)?),
                "absolute_output" => cfg.absolute_output = Some(value(key, val, line)?),
                other => return Err(ConfigError(format!("line {line}: unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }

    /// Later values win: `self` is overridden field by field by `other`.
    pub fn merged(&self, other: &ConfigFile) -> ConfigFile {
        ConfigFile {
            population: other.population.or(self.population),
            max_iterations: other.max_iterations.or(self.max_iterations),
            eta: other.eta.or(self.eta),
            fitness_threshold: other.fitness_threshold.or(self.fitness_threshold),
            patience: other.patience.or(self.patience),
            seed: other.seed.or(self.seed),
            mode: other.mode.or(self.mode),
            absolute_output: other.absolute_output.or(self.absolute_output),
        }
    }

    pub fn optimizer(&self) -> Result<OptimizerConfig, ConfigError> {
        let d = OptimizerConfig::default();
        let cfg = OptimizerConfig {
            population: self.population.unwrap_or(d.population),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            eta: self.eta.unwrap_or(d.eta),
            fitness_threshold: self.fitness_threshold.unwrap_or(d.fitness_threshold),
            patience: self.patience.unwrap_or(d.patience),
            seed: self.seed.unwrap_or(d.seed),
            mode: self.mode.unwrap_or(d.mode),
            parallel: d.parallel,
        };
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# run\nP = 12\nI=300\neta = 0.5\nJ_T = 0\npatience = 3 # note\nseed = 7\nmode = obj2\nabsolute_output = false\n";
        let cfg = ConfigFile::parse(text).unwrap();
        let opt = cfg.optimizer().unwrap();
        assert_eq!((opt.population, opt.max_iterations, opt.patience, opt.seed), (12, 300, 3, 7));
        assert_eq!(opt.mode, Mode::Obj2);
        assert_eq!(opt.fitness_threshold, 0.0);
        assert_eq!(cfg.absolute_output, Some(false));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigFile::parse("Q = 1").is_err());
        assert!(ConfigFile::parse("P 3").is_err());
        assert!(ConfigFile::parse("eta = lots").is_err());
        assert!(ConfigFile::parse("eta = 2").unwrap().optimizer().is_err());
    }

    #[test]
    fn overrides() {
        let file = ConfigFile::parse("P = 5\nseed = 1").unwrap();
        let flags = ConfigFile { seed: Some(9), ..Default::default() };
        let merged = file.merged(&flags);
        assert_eq!((merged.population, merged.seed), (Some(5), Some(9)));
    }
}

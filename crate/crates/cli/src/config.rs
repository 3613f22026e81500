use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use lineup_core::analytics::RefitFrequency;
use lineup_core::domain::{Formation, PlayerId};
use lineup_core::optimizer::{ObjectiveKind, OpponentAssumption, OptimizerConfig};
use lineup_core::pipeline::FitConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Search parameters other than seed, formations and player constraints,
/// which have their own keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchParams {
    pub min_iterations: usize,
    pub min_random_starts: usize,
    pub delta: f64,
    pub max_iterations: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        SearchParams {
            min_iterations: d.min_iterations,
            min_random_starts: d.min_random_starts,
            delta: d.delta,
            max_iterations: d.max_iterations,
        }
    }
}

/// Everything a command may need. Loaded from `--config`, then overlaid with
/// whichever flags were given on the command line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub team: Option<String>,
    pub train_until: Option<NaiveDate>,
    pub test_from: Option<NaiveDate>,
    pub test_until: Option<NaiveDate>,
    pub opponent: Option<String>,
    pub date: Option<NaiveDate>,
    pub home: Option<bool>,
    /// Written as strings such as "4-4-2".
    #[serde(with = "formation_strings")]
    pub formations: Vec<Formation>,
    pub pinned: BTreeSet<PlayerId>,
    pub excluded: BTreeSet<PlayerId>,
    pub opponent_assumption: OpponentAssumption,
    pub objective: ObjectiveKind,
    pub refit: RefitFrequency,
    pub seed: Option<u64>,
    pub search: SearchParams,
    pub fit: FitConfig,
    pub threads: Option<usize>,
    pub bind: Option<String>,
    pub artifacts: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::data("io", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))
    }

    pub fn require<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::validation("missing", format!("`{name}` is required (flag or config key)")))
    }

    pub fn data_dir(&self) -> Result<&Path, CliError> {
        Self::require(&self.data, "data").map(PathBuf::as_path)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        Self::require(&self.seed, "seed").copied()
    }

    /// Training (strictly before `train_until`) must end before testing starts.
    pub fn check_windows(&self) -> Result<(), CliError> {
        if let (Some(train), Some(test)) = (self.train_until, self.test_from) {
            if train > test {
                return Err(CliError::validation(
                    "window",
                    format!("train window (until {train}) overlaps test window (from {test})"),
                ));
            }
        }
        if let (Some(from), Some(until)) = (self.test_from, self.test_until) {
            if from > until {
                return Err(CliError::validation(
                    "window",
                    format!("test window is empty: {from} > {until}"),
                ));
            }
        }
        Ok(())
    }

    pub fn optimizer(&self) -> Result<OptimizerConfig, CliError> {
        let cfg = OptimizerConfig {
            min_iterations: self.search.min_iterations,
            min_random_starts: self.search.min_random_starts,
            delta: self.search.delta,
            seed: self.seed()?,
            pinned: self.pinned.clone(),
            excluded: self.excluded.clone(),
            formations: self.formations.clone(),
            max_iterations: self.search.max_iterations,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

mod formation_strings {
    use lineup_core::domain::Formation;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Formation], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|f| f.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Formation>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_surfaced() {
        let c = RunConfig::default();
        assert_eq!(c.search.delta, 1e-4);
        assert_eq!(c.search.min_iterations, 20);
        assert_eq!(c.search.min_random_starts, 10);
        assert_eq!(c.fit.min_matches, 30);
        assert_eq!(c.fit.max_vars, 20);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig =
            serde_json::from_str(r#"{"team":"T01","search":{"delta":0.01},"formations":["4-4-2"]}"#).unwrap();
        assert_eq!(c.team.as_deref(), Some("T01"));
        assert_eq!(c.search.delta, 0.01);
        assert_eq!(c.search.min_iterations, 20);
        assert_eq!(c.formations[0].to_string(), "4-4-2");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"teem":"T01"}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"formations":["9-0-1"]}"#).is_err());
    }

    #[test]
    fn overlapping_windows_fail() {
        let day = |d| NaiveDate::from_ymd_opt(2021, 1, d).unwrap();
        let c = RunConfig {
            train_until: Some(day(10)),
            test_from: Some(day(5)),
            ..RunConfig::default()
        };
        assert_eq!(c.check_windows().unwrap_err().exit_code(), 1);
        let c = RunConfig {
            train_until: Some(day(5)),
            test_from: Some(day(5)),
            ..RunConfig::default()
        };
        assert!(c.check_windows().is_ok());
    }
}

//! Run configuration: one TOML file covering every subsystem, with
//! defaults matching the benchmark run settings (conf 0.6, 40 candidates).
//! Unknown keys are rejected.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use trackpost::kalman::FilterConfig;
use trackpost::mbpp::MbppConfig;
use trackpost::pairgen::{AugmentationConfig, SamplerConfig};
use trackpost::simulator::SceneConfig;

/// Kalman noise settings as diagonals, the form used in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSettings {
    pub q_diag: [f64; 7],
    pub r_diag: [f64; 4],
    pub p0_diag: [f64; 7],
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            q_diag: [1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-2, 1e-4],
            r_diag: [1.0, 1.0, 10.0, 1e-2],
            p0_diag: [10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4],
        }
    }
}

impl FilterSettings {
    pub fn build(&self) -> Result<FilterConfig> {
        FilterConfig::from_diagonals(self.q_diag, self.r_diag, self.p0_diag)
            .context("invalid [filter] section")
    }
}

/// Candidate-extraction settings for raw response-frame streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateSettings {
    pub n: usize,
    pub nms_threshold: f64,
}

impl Default for CandidateSettings {
    fn default() -> Self {
        Self {
            n: trackpost::candidates::DEFAULT_CANDIDATES,
            nms_threshold: trackpost::candidates::DEFAULT_NMS_THRESHOLD,
        }
    }
}

/// Merged view of every subsystem's configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mbpp: MbppConfig,
    pub filter: FilterSettings,
    pub candidates: CandidateSettings,
    pub scene: SceneConfig,
    pub sampler: SamplerConfig,
    pub augment: AugmentationConfig,
}

impl RunConfig {
    /// Load from a TOML file, or defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let config = match path {
            None => RunConfig::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("invalid config {}", path.display()))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.mbpp.validate().context("invalid [mbpp] section")?;
        self.filter.build()?;
        self.scene.validate().context("invalid [scene] section")?;
        self.augment
            .validate()
            .context("invalid [augment] section")?;
        if self.candidates.n == 0 {
            bail!("invalid [candidates] section: n must be positive");
        }
        if !(0.0..=1.0).contains(&self.candidates.nms_threshold) {
            bail!("invalid [candidates] section: nms_threshold outside [0, 1]");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let config = RunConfig::default();
        let text = config.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("[mbpp]\nconf = 0.5\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
        assert!(toml::from_str::<RunConfig>("[nonsense]\n").is_err());
    }

    #[test]
    fn section_defaults_apply_when_missing() {
        let config: RunConfig = toml::from_str("[mbpp]\nconf = 0.4\n").unwrap();
        assert_eq!(config.mbpp.conf, 0.4);
        assert_eq!(config.candidates.n, 40);
        config.validate().unwrap();
    }

    #[test]
    fn out_of_range_values_fail_validation() {
        let config: RunConfig = toml::from_str("[mbpp]\nconf = 1.5\n").unwrap();
        assert!(config.validate().is_err());
        let config: RunConfig = toml::from_str("[candidates]\nnms_threshold = 2.0\n").unwrap();
        assert!(config.validate().is_err());
    }
}

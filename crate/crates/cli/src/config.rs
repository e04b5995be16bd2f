//! The TOML run configuration. Every table and key is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twcc_core::channel_model::DeviceParams;
use twcc_core::sweep::SweepSettings;
use twcc_core::validation::PairingScenario;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Destination file; standard output when absent.
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Largest set size of the exhaustive dominance check.
    pub max_total: u64,
    pub scenario: PairingScenario,
    /// Failure probabilities the Monte Carlo check requests.
    pub targets: Vec<f64>,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            max_total: 40,
            scenario: PairingScenario::default(),
            targets: vec![1e-2, 1e-3],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceParams,
    pub sweep: SweepSettings,
    pub validation: ValidationConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Reject parameter values the engine cannot run with.
    pub fn validate(&self) -> Result<(), CliError> {
        let config = |e: twcc_core::Error| CliError::Config(e.to_string());
        self.device.validate().map_err(config)?;
        self.sweep.validate().map_err(config)?;
        let v = &self.validation;
        if v.max_total < 2 {
            return Err(CliError::Config(
                "validation.max_total must be at least 2".into(),
            ));
        }
        if v.scenario.trials == 0 {
            return Err(CliError::Config(
                "validation.scenario.trials must be positive".into(),
            ));
        }
        if let Some(t) = v.targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(CliError::Config(format!(
                "validation target {t} is not in (0, 1)"
            )));
        }
        Ok(())
    }
}

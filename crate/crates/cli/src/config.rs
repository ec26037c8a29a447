use std::fs;
use std::path::{Path, PathBuf};

use fractal_ls_core::backtest::BacktestConfig;
use fractal_ls_core::selection::SelectionConfig;
use fractal_ls_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Settings file for a run. Every section is optional; unknown keys are
/// rejected.
///
/// ```toml
/// prices = "prices.csv"
/// output = "report.json"
///
/// [backtest]
/// benchmark_symbol = "SPY"
/// leverage = 2.0
///
/// [selection]
/// hurst_cap = 0.5
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub prices: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub equity_csv: Option<PathBuf>,
    /// Seed for synthetic data only.
    pub seed: Option<u64>,
    pub selection: SelectionConfig,
    pub backtest: BacktestConfig,
    pub synth: SynthConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        self.backtest.validate()?;
        self.synth.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::from_toml("prices = \"p.csv\"\n[backtest]\nleverage = 1.5\n").unwrap();
        assert_eq!(cfg.prices.as_deref(), Some(Path::new("p.csv")));
        assert_eq!(cfg.backtest.leverage, 1.5);
        assert_eq!(cfg.backtest.test_days, 126);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["colour = 1\n", "[backtest]\nleverag = 2.0\n", "[extra]\n"] {
            let err = RunConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn out_of_range_values_rejected() {
        let cfg = RunConfig::from_toml("[backtest]\ntrain_days = 10\n").unwrap();
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        let cfg = RunConfig::from_toml("[selection]\nhurst_cap = 0.9\n").unwrap();
        assert!(cfg.validate().is_err());
    }
}

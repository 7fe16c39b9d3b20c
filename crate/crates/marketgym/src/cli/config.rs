//! The declarative run configuration, read from TOML.
//!
//! ```toml
//! [data]
//! root = "../data"                  # dataset root, relative to this file; MARKETGYM_DATA_DIR overrides it
//! csv = "synthetic_30x500.csv"      # relative paths resolve against the dataset root
//! granularity = "daily"             # optional; inferred from timestamp spacing otherwise
//! tickers = ["T00"]                 # optional subset, in observation order
//!
//! [data.schema]                     # CSV header names, all optional
//! ticker = "symbol"
//!
//! [split.train]                     # or a [rolling] table, never both
//! start = "2018-10-30T00:00:00Z"
//! end = "2020-01-01T00:00:00Z"
//! # [split.validation] and [split.test] likewise
//!
//! [env]
//! task = "multi_stock"              # single_stock | multi_stock | portfolio_allocation
//! initial_capital = 1000000.0
//! action = { kind = "continuous_shares", max_shares = 100 }
//! reward = { kind = "delta_value", scaling = 0.0001 }
//! costs = { flat_fee = 0.0, per_share_rate = 0.001, half_spread = 0.0 }
//! gate = { enabled = false, lookback = 252, threshold = 140.0 }
//!
//! [[agent]]                         # one table per trained agent
//! algorithm = "td3"
//! total_steps = 5000
//!
//! [[baseline]]                      # computed on demand by `compare`
//! kind = "min_variance"
//! window = 252
//!
//! [output]
//! dir = "out"
//! formats = ["text", "csv", "json"]
//! ```
//!
//! Unspecified agent fields take the [`AgentConfig`] defaults.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::agents::AgentConfig;
use crate::baselines::StrategyConfig;
use crate::data::{CsvSchema, Granularity, SplitSpec};
use crate::env::EnvConfig;

/// Environment variable that overrides the dataset root.
pub const DATA_DIR_ENV: &str = "MARKETGYM_DATA_DIR";

pub const DEFAULT_RSI_PERIOD: usize = 14;

fn default_rsi_period() -> usize {
    DEFAULT_RSI_PERIOD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Dataset root relative to the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
    pub csv: PathBuf,
    #[serde(default)]
    pub schema: CsvSchema,
    /// Overrides the schema's granularity when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<Granularity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tickers: Option<Vec<String>>,
    #[serde(default = "default_rsi_period")]
    pub rsi_period: usize,
}

/// Walk-forward parameters. A run uses the window at index `window`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RollingConfig {
    pub train_len: usize,
    pub val_len: usize,
    pub test_len: usize,
    pub stride: usize,
    #[serde(default)]
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Formats written for the comparison table.
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Text, OutputFormat::Csv, OutputFormat::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rolling: Option<RollingConfig>,
    pub env: EnvConfig,
    #[serde(default, rename = "agent")]
    pub agents: Vec<AgentConfig>,
    #[serde(default, rename = "baseline")]
    pub baselines: Vec<StrategyConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses TOML. Syntax and type errors carry the line and column.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Runtime(format!("cannot emit config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// The CSV schema with the data-level granularity applied.
    pub fn schema(&self) -> CsvSchema {
        let mut schema = self.data.schema.clone();
        if self.data.granularity.is_some() {
            schema.granularity = self.data.granularity;
        }
        schema
    }

    /// Absolute data path: as given when absolute, otherwise under `root`.
    pub fn data_path(&self, root: &Path) -> PathBuf {
        if self.data.csv.is_absolute() {
            self.data.csv.clone()
        } else {
            root.join(&self.data.csv)
        }
    }

    /// Checks everything that does not need the data itself.
    pub fn validate(&self, data_root: &Path) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        let path = self.data_path(data_root);
        if !path.is_file() {
            return bad(format!("data file {} does not exist", path.display()));
        }
        if self.data.rsi_period == 0 {
            return bad("data.rsi_period must be >= 1".into());
        }
        if let Some(tickers) = &self.data.tickers {
            let unique: BTreeSet<_> = tickers.iter().collect();
            if tickers.is_empty() || unique.len() != tickers.len() {
                return bad("data.tickers must be non-empty and free of duplicates".into());
            }
        }
        match (&self.split, &self.rolling) {
            (Some(_), Some(_)) => return bad("specify exactly one of [split] and [rolling], not both".into()),
            (None, None) => return bad("specify one of [split] or [rolling]".into()),
            _ => {}
        }
        if let Some(r) = &self.rolling {
            if r.train_len < 2 || r.val_len < 2 || r.test_len < 2 || r.stride == 0 {
                return bad("rolling segments need at least 2 rows each and a positive stride".into());
            }
        }
        self.env.reward.validate().map_err(|e| CliError::Validation(format!("env: {e}")))?;
        self.env.costs.validate().map_err(|e| CliError::Validation(format!("env: {e}")))?;
        if let Some(n) = self.data.tickers.as_ref().map(Vec::len) {
            self.env.validate(n).map_err(|e| CliError::Validation(format!("env: {e}")))?;
        }
        let mut seen = BTreeSet::new();
        for agent in &self.agents {
            agent
                .validate()
                .map_err(|e| CliError::Validation(format!("agent {}: {e}", agent.algorithm)))?;
            if !seen.insert(agent.algorithm) {
                return bad(format!("agent {} is listed twice", agent.algorithm));
            }
        }
        let mut labels = BTreeSet::new();
        for baseline in &self.baselines {
            if baseline.rebalance_every == 0 {
                return bad(format!("baseline {}: rebalance_every must be >= 1", baseline.label()));
            }
            if !labels.insert(baseline.label()) {
                return bad(format!("baseline label {} is used twice", baseline.label()));
            }
        }
        if self.output.formats.is_empty() {
            return bad("output.formats must list at least one format".into());
        }
        Ok(())
    }
}

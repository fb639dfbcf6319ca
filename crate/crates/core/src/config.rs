//! Run-wide settings shared by the command-line verbs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervene::SvdMethod;
use crate::spectral::RandomizedParams;

/// Rows analyzed per dump when no explicit limit is given.
pub const DEFAULT_SAMPLE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Explicit row limit. `None` uses [`DEFAULT_SAMPLE_LIMIT`], capped at the
    /// rows available.
    pub sample_limit: Option<usize>,
    pub seed: u64,
    pub svd_method: SvdMethod,
    pub randomized: RandomizedParams,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sample_limit: None,
            seed: 0,
            svd_method: SvdMethod::Auto,
            randomized: RandomizedParams::default(),
            format: OutputFormat::Table,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.sample_limit {
            if m < 2 {
                return Err(Error::InvalidArgument(format!("sample limit {m} below 2")));
            }
        }
        if self.randomized.oversampling < 1 {
            return Err(Error::InvalidArgument("oversampling must be at least 1".into()));
        }
        Ok(())
    }

    /// Row limit to request from a dump with `available` rows.
    pub fn limit_for(&self, available: usize) -> Option<usize> {
        Some(self.sample_limit.unwrap_or(DEFAULT_SAMPLE_LIMIT.min(available)))
    }
}

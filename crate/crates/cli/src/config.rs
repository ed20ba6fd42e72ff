//! Run configuration: a single JSON file with flag overrides.
//!
//! Schema (all fields optional):
//! ```json
//! {
//!   "jobs": 4,
//!   "budget": 16777216,
//!   "delta": "1/20",
//!   "k_cap": 2,
//!   "lp_cap_bits": 14
//! }
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub jobs: Option<usize>,
    pub budget: Option<u64>,
    pub delta: Option<String>,
    pub k_cap: Option<u32>,
    pub lp_cap_bits: Option<u32>,
}

#[derive(Debug)]
pub struct RunConfig {
    pub jobs: Option<usize>,
    pub budget: u64,
    pub delta: Option<String>,
    pub k_cap: Option<u32>,
    pub lp_cap_bits: u32,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, jobs: Option<usize>, budget: Option<u64>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        Ok(RunConfig {
            jobs: jobs.or(file.jobs),
            budget: budget
                .or(file.budget)
                .unwrap_or(apxdeg::DEFAULT_ENUM_BUDGET),
            delta: file.delta,
            k_cap: file.k_cap,
            lp_cap_bits: file.lp_cap_bits.unwrap_or(apxdeg::DEFAULT_LP_CAP_BITS),
        })
    }
}

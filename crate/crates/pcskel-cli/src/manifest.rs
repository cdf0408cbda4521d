//! Machine-readable run records.

use serde::{Deserialize, Serialize};

/// Summary of one invocation: the resolved parameters plus headline results.
///
/// Serializes to a single flat JSON object and round-trips losslessly
/// (floats are emitted in shortest round-trip form). Fields that do not
/// apply to a subcommand are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    /// Wall-clock time of the run. The only non-reproducible field.
    pub duration_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// The cap as requested on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    /// The cap that actually governed the run once defaults were applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_m_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_reach: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests_total: Option<u64>,
    /// Test counts by conditioning-set size, starting at size 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests_per_level: Option<Vec<u64>>,
}

impl RunManifest {
    /// A manifest with only the always-present fields set.
    pub fn new(subcommand: &str, duration_seconds: f64) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds,
            input: None,
            output: None,
            alpha: None,
            m_max: None,
            effective_m_max: None,
            seed: None,
            m_reach: None,
            tests_total: None,
            tests_per_level: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest has no unserializable fields");
        text.push('\n');
        text
    }
}

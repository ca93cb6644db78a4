use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const ARTIFACT: &str = "longfact";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run facts that legitimately vary between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub wall_clock_s: f64,
    /// Requests that reached the backend; lower than the scorer-call
    /// accounting when the cache served repeats.
    pub backend_calls: u64,
    /// Per-budget wall-clock seconds for sweeps, in sweep order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep_wall_clock_s: Vec<f64>,
}

/// Every report: what produced it, from which input, and the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub corpus_hash: String,
    pub report: T,
    pub metadata: Metadata,
}

#[derive(Serialize)]
struct Canonical<'a, T> {
    artifact: &'a str,
    version: &'a str,
    command: &'a str,
    config: &'a RunConfig,
    corpus_hash: &'a str,
    report: &'a T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, config: &RunConfig, corpus_hash: &str, report: T, metadata: Metadata) -> Self {
        Self {
            artifact: ARTIFACT.into(),
            version: VERSION.into(),
            command: command.into(),
            config: config.clone(),
            corpus_hash: corpus_hash.into(),
            report,
            metadata,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The envelope without `metadata`; identical inputs give identical bytes.
    pub fn canonical_json(&self) -> String {
        let c = Canonical {
            artifact: &self.artifact,
            version: &self.version,
            command: &self.command,
            config: &self.config,
            corpus_hash: &self.corpus_hash,
            report: &self.report,
        };
        serde_json::to_string_pretty(&c).expect("report serializes") + "\n"
    }
}

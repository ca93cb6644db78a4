//! Run configuration: defaults, then a config file, then environment
//! variables, then command-line flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use longfact_core::scorer::backends::LexicalOverlapBackend;
use longfact_core::scorer::remote::{parse_header, RemoteBackend, RemoteConfig, AUTH_ENV, ENDPOINT_ENV};
use longfact_core::{
    Aggregation, Scorer, ScorerBackend, ScorerConfig, TokenCounter, WhitespaceCounter, WordPieceCounter, DEFAULT_BUDGET,
};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Word-overlap oracle; deterministic and offline.
    #[default]
    Overlap,
    /// HTTP entailment service.
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    #[default]
    Whitespace,
    /// WordPiece over the vocabulary file in `vocab`.
    Wordpiece,
}

fn redact<S: Serializer>(value: &Option<String>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(_) => s.serialize_some("<redacted>"),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    /// `"Name: value"`; never written back out.
    #[serde(serialize_with = "redact")]
    pub auth_header: Option<String>,
    pub timeout_ms: u64,
    pub retries: u32,
    pub backoff_ms: u64,
    /// Largest premise the remote backend accepts, in tokens.
    pub max_premise_tokens: Option<usize>,
    pub tokenizer: TokenizerKind,
    pub vocab: Option<PathBuf>,
    pub budget: usize,
    pub k: usize,
    pub aggregation: Aggregation,
    pub bins: usize,
    pub threshold: f64,
    pub concurrency: usize,
    pub cache_size: usize,
    /// Seed for every generated dataset.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Overlap,
            endpoint: None,
            auth_header: None,
            timeout_ms: 30_000,
            retries: 3,
            backoff_ms: 200,
            max_premise_tokens: None,
            tokenizer: TokenizerKind::Whitespace,
            vocab: None,
            budget: DEFAULT_BUDGET,
            k: 2,
            aggregation: Aggregation::Min,
            bins: 10,
            threshold: 0.5,
            concurrency: 4,
            cache_size: 4096,
            seed: 0,
        }
    }
}

/// Flags that override the config file. Every field mirrors [`RunConfig`].
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Config file (TOML, or JSON with a .json extension)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Entailment backend
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    /// Remote scorer URL [env: LONGFACT_ENDPOINT]
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Header sent to the remote scorer, "Name: value" [env: LONGFACT_AUTH_HEADER]
    #[arg(long, global = true)]
    pub auth_header: Option<String>,
    /// Per-request timeout for the remote scorer
    #[arg(long, global = true)]
    pub timeout_ms: Option<u64>,
    /// Retries after a transient remote failure
    #[arg(long, global = true)]
    pub retries: Option<u32>,
    /// Initial retry backoff, doubled per attempt
    #[arg(long, global = true)]
    pub backoff_ms: Option<u64>,
    /// Largest premise the backend accepts
    #[arg(long, global = true)]
    pub max_premise_tokens: Option<usize>,
    /// Token counter for chunk budgets
    #[arg(long, global = true, value_enum)]
    pub tokenizer: Option<TokenizerKind>,
    /// WordPiece vocabulary, one token per line
    #[arg(long, global = true)]
    pub vocab: Option<PathBuf>,
    /// Chunk budget in tokens
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Branching factor for retrieval
    #[arg(short, long, global = true)]
    pub k: Option<usize>,
    /// Sentence-to-text aggregation: min or mean
    #[arg(long, global = true)]
    pub aggregation: Option<Aggregation>,
    /// Calibration bins
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Decision threshold for predicted labels
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Parallel backend requests
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
    /// Score cache entries; 0 disables the cache
    #[arg(long, global = true)]
    pub cache_size: Option<usize>,
    /// Seed for generated test data
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident, $($field:ident),*) => {
        $(if let Some(v) = $ov.$field.clone() { $cfg.$field = v; })*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&raw).map_err(|e| e.to_string())
        } else {
            toml::from_str(&raw).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    /// Layers the config file, `env` and `overrides` over the defaults and validates the result.
    pub fn resolve(overrides: &Overrides, env: impl Fn(&str) -> Option<String>) -> Result<Self, CliError> {
        let mut cfg = match &overrides.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(v) = env(ENDPOINT_ENV).filter(|v| !v.is_empty()) {
            cfg.endpoint = Some(v);
        }
        if let Some(v) = env(AUTH_ENV).filter(|v| !v.is_empty()) {
            cfg.auth_header = Some(v);
        }
        apply!(
            cfg,
            overrides,
            backend,
            tokenizer,
            timeout_ms,
            retries,
            backoff_ms,
            budget,
            k,
            aggregation,
            bins,
            threshold,
            concurrency,
            cache_size,
            seed
        );
        if overrides.endpoint.is_some() {
            cfg.endpoint = overrides.endpoint.clone();
        }
        if overrides.auth_header.is_some() {
            cfg.auth_header = overrides.auth_header.clone();
        }
        if overrides.max_premise_tokens.is_some() {
            cfg.max_premise_tokens = overrides.max_premise_tokens;
        }
        if overrides.vocab.is_some() {
            cfg.vocab = overrides.vocab.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if !(1..=1_000_000).contains(&self.budget) {
            return bad(format!("budget must be in 1..=1000000, got {}", self.budget));
        }
        if !(2..=64).contains(&self.k) {
            return bad(format!("k must be in 2..=64, got {}", self.k));
        }
        if !(1..=1000).contains(&self.bins) {
            return bad(format!("bins must be in 1..=1000, got {}", self.bins));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold must be in [0, 1], got {}", self.threshold));
        }
        if !(1..=256).contains(&self.concurrency) {
            return bad(format!("concurrency must be in 1..=256, got {}", self.concurrency));
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive".into());
        }
        if self.retries > 10 {
            return bad(format!("retries must be at most 10, got {}", self.retries));
        }
        if self.max_premise_tokens == Some(0) {
            return bad("max_premise_tokens must be positive".into());
        }
        if self.backend == BackendKind::Remote && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return bad(format!("the remote backend needs --endpoint or {ENDPOINT_ENV}"));
        }
        if let Some(h) = &self.auth_header {
            if parse_header(h).is_none() {
                return bad(format!(
                    "auth header must look like \"Name: value\" (from --auth-header or {AUTH_ENV})"
                ));
            }
        }
        if self.tokenizer == TokenizerKind::Wordpiece && self.vocab.is_none() {
            return bad("the wordpiece tokenizer needs --vocab".into());
        }
        Ok(())
    }

    pub fn token_counter(&self) -> Result<Arc<dyn TokenCounter>, CliError> {
        Ok(match self.tokenizer {
            TokenizerKind::Whitespace => Arc::new(WhitespaceCounter),
            TokenizerKind::Wordpiece => {
                let path = self.vocab.as_deref().expect("validated");
                Arc::new(
                    WordPieceCounter::from_vocab_file(path, true).map_err(|e| CliError::Validation(e.to_string()))?,
                )
            }
        })
    }

    pub fn scorer_config(&self) -> ScorerConfig {
        ScorerConfig {
            cache_capacity: self.cache_size,
            concurrency: self.concurrency,
        }
    }

    pub fn build_backend(&self) -> Result<Arc<dyn ScorerBackend>, CliError> {
        Ok(match self.backend {
            BackendKind::Overlap => Arc::new(LexicalOverlapBackend),
            BackendKind::Remote => {
                let remote = RemoteBackend::new(RemoteConfig {
                    endpoint: self.endpoint.clone().unwrap_or_default(),
                    auth_header: self.auth_header.as_deref().and_then(parse_header),
                    timeout_ms: self.timeout_ms,
                    retries: self.retries,
                    backoff_ms: self.backoff_ms,
                    max_premise_tokens: self.max_premise_tokens,
                })
                .map_err(|e| CliError::Validation(e.to_string()))?;
                Arc::new(remote)
            }
        })
    }

    pub fn build_scorer(&self, counter: Arc<dyn TokenCounter>) -> Result<Scorer, CliError> {
        Ok(Scorer::new(self.build_backend()?, counter, self.scorer_config()))
    }
}

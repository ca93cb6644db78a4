//! Factual-consistency scoring for long documents.
//!
//! A source document is packed into large token-bounded chunks, every
//! generated sentence is scored against each chunk with an entailment
//! backend, and the sentence score is the maximum over chunks. The same
//! backend drives a greedy search tree that narrows the document down to
//! the single unit that best supports a sentence, using a logarithmic
//! number of backend calls. The [`metrics`] module carries the
//! evaluation and calibration harness.

pub mod chunker;
pub mod corpus;
pub mod engine;
pub mod metrics;
pub mod retrieval;
pub mod scorer;

pub use chunker::{make_chunks, split_range, Chunk, ChunkPlan, UnitRange, DEFAULT_BUDGET};
pub use corpus::{
    split_sentences, Claim, Corpus, CorpusError, CorpusStats, Document, GeneratedText, Granularity, TokenCounter, Unit,
    WhitespaceCounter, WordPieceCounter,
};
pub use engine::{classify, scale_sentence, scale_text, Aggregation, EngineError, SentenceScore, TextScore};
pub use metrics::{CalibrationReport, EvalReport, MetricError};
pub use retrieval::{brute_force_retrieve, retrieval_hit, retrieve, RetrievalError, RetrievalTrace, RetrieveOptions};
pub use scorer::{
    build_prompt, entail_prob, BackendError, BackendOutput, EntailmentScore, ScoreError, ScoreRequest, Scorer,
    ScorerBackend, ScorerConfig,
};

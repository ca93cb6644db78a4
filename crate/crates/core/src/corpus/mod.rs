//! Documents, claims and their line-delimited JSON ingestion.
//!
//! Two record files make up a corpus: `documents_jsonl` with one document
//! per line (`{"id", "units": [{"speaker", "text"}]}`) and `claims_jsonl`
//! with one generated sentence per line
//! (`{"id", "doc_id", "text", "label", "relevant_units"}`). Fields outside
//! the schema are kept and written back out unchanged.

mod segment;
mod tokens;

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use segment::split_sentences;
pub use tokens::{TokenCounter, WhitespaceCounter, WordPieceCounter};

use crate::chunker::UnitRange;

/// Separator placed between rendered units when they are joined into a premise.
pub const UNIT_SEPARATOR: &str = "\n";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("document {doc_id:?} has no units")]
    EmptyDocument { doc_id: String },
    #[error("document {doc_id:?} unit {index} has empty text")]
    EmptyUnit { doc_id: String, index: usize },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("claim {claim_id:?} references unknown document {doc_id:?}")]
    DanglingDocId { claim_id: String, doc_id: String },
    #[error("claim {claim_id:?} marks unit {index} relevant but document {doc_id:?} has {unit_count} units")]
    RelevantUnitOutOfRange {
        claim_id: String,
        doc_id: String,
        index: usize,
        unit_count: usize,
    },
    #[error("claim {claim_id:?} has empty text")]
    EmptyClaim { claim_id: String },
}

/// How a document was segmented into units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One speaker turn per unit.
    Utterance,
    /// One prose sentence per unit.
    Sentence,
}

/// The atomic retrieval target: one sentence or one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub index: usize,
    pub text: String,
    pub speaker: Option<String>,
    extra: Map<String, Value>,
}

impl Unit {
    pub fn new(index: usize, text: impl Into<String>, speaker: Option<String>) -> Self {
        Self {
            index,
            text: text.into(),
            speaker,
            extra: Map::new(),
        }
    }

    /// The unit as it appears inside a premise. Dialogue turns keep their
    /// speaker so the scorer can resolve who said what.
    pub fn rendered(&self) -> Cow<'_, str> {
        match &self.speaker {
            Some(s) => Cow::Owned(format!("{s}: {}", self.text)),
            None => Cow::Borrowed(&self.text),
        }
    }
}

/// A source document: an ordered, gap-free list of units with cached token counts.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    units: Vec<Unit>,
    granularity: Granularity,
    declared_granularity: Option<Granularity>,
    unit_tokens: Vec<usize>,
    total_tokens: usize,
    counter_name: String,
    extra: Map<String, Value>,
}

impl PartialEq for Document {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.units == other.units
            && self.declared_granularity == other.declared_granularity
            && self.extra == other.extra
    }
}

impl Document {
    /// Builds a document from unit texts and optional speakers.
    pub fn new(
        id: impl Into<String>,
        units: Vec<(Option<String>, String)>,
        counter: &dyn TokenCounter,
    ) -> Result<Self, CorpusError> {
        let units = units
            .into_iter()
            .enumerate()
            .map(|(i, (speaker, text))| Unit::new(i, text, speaker))
            .collect();
        Self::from_units(id.into(), units, None, Map::new(), counter)
    }

    /// Builds a prose document by sentence-splitting `text`.
    pub fn from_prose(id: impl Into<String>, text: &str, counter: &dyn TokenCounter) -> Result<Self, CorpusError> {
        let units = split_sentences(text).into_iter().map(|s| (None, s)).collect();
        let mut doc = Self::new(id, units, counter)?;
        doc.declared_granularity = Some(Granularity::Sentence);
        doc.granularity = Granularity::Sentence;
        Ok(doc)
    }

    fn from_units(
        id: String,
        units: Vec<Unit>,
        declared_granularity: Option<Granularity>,
        extra: Map<String, Value>,
        counter: &dyn TokenCounter,
    ) -> Result<Self, CorpusError> {
        if units.is_empty() {
            return Err(CorpusError::EmptyDocument { doc_id: id });
        }
        if let Some(u) = units.iter().find(|u| u.text.trim().is_empty()) {
            return Err(CorpusError::EmptyUnit {
                doc_id: id,
                index: u.index,
            });
        }
        let granularity = declared_granularity.unwrap_or(if units.iter().any(|u| u.speaker.is_some()) {
            Granularity::Utterance
        } else {
            Granularity::Sentence
        });
        let unit_tokens: Vec<usize> = units.iter().map(|u| counter.count(&u.rendered())).collect();
        let total_tokens = unit_tokens.iter().sum();
        Ok(Self {
            id,
            units,
            granularity,
            declared_granularity,
            unit_tokens,
            total_tokens,
            counter_name: counter.name().to_string(),
            extra,
        })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    /// Sum of per-unit token counts under the counter the document was built with.
    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    pub fn counter_name(&self) -> &str {
        &self.counter_name
    }

    /// Per-unit token counts under `counter`, reusing the cache when the
    /// counter matches the one used at construction.
    pub fn token_counts(&self, counter: &dyn TokenCounter) -> Cow<'_, [usize]> {
        if counter.name() == self.counter_name {
            Cow::Borrowed(&self.unit_tokens)
        } else {
            Cow::Owned(self.units.iter().map(|u| counter.count(&u.rendered())).collect())
        }
    }

    /// Rendered units in `range` joined with [`UNIT_SEPARATOR`].
    pub fn text_of(&self, range: UnitRange) -> String {
        let mut out = String::new();
        for (i, u) in self.units[range.start..range.end].iter().enumerate() {
            if i > 0 {
                out.push_str(UNIT_SEPARATOR);
            }
            out.push_str(&u.rendered());
        }
        out
    }

    pub fn full_range(&self) -> UnitRange {
        UnitRange::new(0, self.units.len())
    }

    pub fn full_text(&self) -> String {
        self.text_of(self.full_range())
    }
}

/// One generated sentence to verify against its document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub doc_id: String,
    pub text: String,
    /// `true` when annotated as factually consistent.
    #[serde(default)]
    pub label: Option<bool>,
    #[serde(default)]
    pub relevant_units: Option<Vec<usize>>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

impl Claim {
    pub fn new(id: impl Into<String>, doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            doc_id: doc_id.into(),
            text: text.into(),
            label: None,
            relevant_units: None,
            extra: Map::new(),
        }
    }

    pub fn with_label(mut self, label: bool) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_relevant_units(mut self, units: impl IntoIterator<Item = usize>) -> Self {
        self.relevant_units = Some(units.into_iter().collect());
        self
    }

    pub fn relevant_set(&self) -> Option<BTreeSet<usize>> {
        self.relevant_units.as_ref().map(|v| v.iter().copied().collect())
    }
}

/// The generated sentences that belong to one document, in file order.
#[derive(Debug, Clone)]
pub struct GeneratedText<'a> {
    pub doc_id: &'a str,
    pub sentences: Vec<&'a Claim>,
}

#[derive(Debug, Serialize, Deserialize)]
struct UnitRecord {
    #[serde(default)]
    speaker: Option<String>,
    text: String,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<Vec<UnitRecord>>,
    /// Plain prose alternative to `units`; split into sentences on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    granularity: Option<Granularity>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

impl Document {
    fn from_record(rec: DocumentRecord, counter: &dyn TokenCounter) -> Result<Self, String> {
        let (units, granularity) = match (rec.units, rec.text) {
            (Some(units), None) => (
                units
                    .into_iter()
                    .enumerate()
                    .map(|(index, u)| Unit {
                        index,
                        text: u.text,
                        speaker: u.speaker,
                        extra: u.extra,
                    })
                    .collect::<Vec<_>>(),
                rec.granularity,
            ),
            (None, Some(text)) => (
                split_sentences(&text)
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| Unit::new(i, s, None))
                    .collect(),
                Some(rec.granularity.unwrap_or(Granularity::Sentence)),
            ),
            (Some(_), Some(_)) => return Err("document has both \"units\" and \"text\"".into()),
            (None, None) => return Err("document needs \"units\" or \"text\"".into()),
        };
        Self::from_units(rec.id, units, granularity, rec.extra, counter).map_err(|e| e.to_string())
    }

    fn to_record(&self) -> DocumentRecord {
        DocumentRecord {
            id: self.id.clone(),
            units: Some(
                self.units
                    .iter()
                    .map(|u| UnitRecord {
                        speaker: u.speaker.clone(),
                        text: u.text.clone(),
                        extra: u.extra.clone(),
                    })
                    .collect(),
            ),
            text: None,
            granularity: self.declared_granularity,
            extra: self.extra.clone(),
        }
    }
}

fn read_lines<T, F>(reader: impl Read, file: &str, mut parse: F) -> Result<Vec<T>, CorpusError>
where
    F: FnMut(&str) -> Result<T, String>,
{
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: file.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse(&line).map_err(|message| CorpusError::Malformed {
            file: file.to_string(),
            line: i + 1,
            message,
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Parses a `documents_jsonl` stream. `file` is only used in error messages.
pub fn parse_documents(
    reader: impl Read,
    file: &str,
    counter: &dyn TokenCounter,
) -> Result<Vec<Document>, CorpusError> {
    read_lines(reader, file, |line| {
        let rec: DocumentRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        Document::from_record(rec, counter)
    })
}

/// Parses a `claims_jsonl` stream.
pub fn parse_claims(reader: impl Read, file: &str) -> Result<Vec<Claim>, CorpusError> {
    read_lines(reader, file, |line| {
        let claim: Claim = serde_json::from_str(line).map_err(|e| e.to_string())?;
        Ok(claim)
    })
}

/// Aggregate counts over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub claims: usize,
    pub labeled_claims: usize,
    pub consistent_claims: usize,
    pub units: usize,
    pub tokens: usize,
    pub avg_units_per_doc: f64,
    pub avg_tokens_per_doc: f64,
    /// Mean relevant-unit count over claims that carry annotations.
    pub avg_relevant_units: Option<f64>,
}

/// Documents plus the claims that reference them. Immutable once built.
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    by_id: HashMap<String, usize>,
    claims: Vec<Claim>,
    content_hash: String,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, claims: Vec<Claim>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(documents.len());
        for (i, d) in documents.iter().enumerate() {
            if by_id.insert(d.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    kind: "document",
                    id: d.id.clone(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for c in &claims {
            if !seen.insert(c.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    kind: "claim",
                    id: c.id.clone(),
                });
            }
            if c.text.trim().is_empty() {
                return Err(CorpusError::EmptyClaim { claim_id: c.id.clone() });
            }
            let doc = by_id
                .get(&c.doc_id)
                .map(|&i| &documents[i])
                .ok_or_else(|| CorpusError::DanglingDocId {
                    claim_id: c.id.clone(),
                    doc_id: c.doc_id.clone(),
                })?;
            if let Some(bad) = c.relevant_units.iter().flatten().find(|&&u| u >= doc.len()) {
                return Err(CorpusError::RelevantUnitOutOfRange {
                    claim_id: c.id.clone(),
                    doc_id: doc.id.clone(),
                    index: *bad,
                    unit_count: doc.len(),
                });
            }
        }
        let content_hash = {
            let mut h = Sha256::new();
            for line in Self::document_lines(&documents).chain(Self::claim_lines(&claims)) {
                h.update(line.as_bytes());
                h.update(b"\n");
            }
            hex(&h.finalize())
        };
        Ok(Self {
            documents,
            by_id,
            claims,
            content_hash,
        })
    }

    /// Loads a corpus from a documents file and a claims file.
    pub fn load(documents: &Path, claims: &Path, counter: &dyn TokenCounter) -> Result<Self, CorpusError> {
        let open = |p: &Path| {
            fs::File::open(p).map_err(|source| CorpusError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let docs = parse_documents(open(documents)?, &documents.display().to_string(), counter)?;
        let claims_v = parse_claims(open(claims)?, &claims.display().to_string())?;
        Self::new(docs, claims_v)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.documents[i])
    }

    /// SHA-256 over the canonical serialization of every record.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    /// Claims grouped by document, documents in file order, documents
    /// without claims omitted.
    pub fn texts(&self) -> Vec<GeneratedText<'_>> {
        let mut groups: Vec<GeneratedText<'_>> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut order: Vec<&str> = Vec::new();
        for c in &self.claims {
            let slot = *index.entry(c.doc_id.as_str()).or_insert_with(|| {
                order.push(c.doc_id.as_str());
                groups.push(GeneratedText {
                    doc_id: c.doc_id.as_str(),
                    sentences: Vec::new(),
                });
                groups.len() - 1
            });
            groups[slot].sentences.push(c);
        }
        groups.sort_by_key(|g| self.by_id[g.doc_id]);
        groups
    }

    pub fn stats(&self) -> CorpusStats {
        let documents = self.documents.len();
        let units: usize = self.documents.iter().map(Document::len).sum();
        let tokens: usize = self.documents.iter().map(Document::total_tokens).sum();
        let annotated: Vec<usize> = self
            .claims
            .iter()
            .filter_map(|c| c.relevant_units.as_ref().map(Vec::len))
            .collect();
        let per_doc = |x: usize| {
            if documents == 0 {
                0.0
            } else {
                x as f64 / documents as f64
            }
        };
        CorpusStats {
            documents,
            claims: self.claims.len(),
            labeled_claims: self.claims.iter().filter(|c| c.label.is_some()).count(),
            consistent_claims: self.claims.iter().filter(|c| c.label == Some(true)).count(),
            units,
            tokens,
            avg_units_per_doc: per_doc(units),
            avg_tokens_per_doc: per_doc(tokens),
            avg_relevant_units: (!annotated.is_empty())
                .then(|| annotated.iter().sum::<usize>() as f64 / annotated.len() as f64),
        }
    }

    fn document_lines(docs: &[Document]) -> impl Iterator<Item = String> + '_ {
        docs.iter()
            .map(|d| serde_json::to_string(&d.to_record()).expect("document record serializes"))
    }

    fn claim_lines(claims: &[Claim]) -> impl Iterator<Item = String> + '_ {
        claims
            .iter()
            .map(|c| serde_json::to_string(c).expect("claim serializes"))
    }

    /// Serializes documents back to `documents_jsonl`.
    pub fn documents_jsonl(&self) -> String {
        Self::document_lines(&self.documents).map(|l| l + "\n").collect()
    }

    /// Serializes claims back to `claims_jsonl`.
    pub fn claims_jsonl(&self) -> String {
        Self::claim_lines(&self.claims).map(|l| l + "\n").collect()
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

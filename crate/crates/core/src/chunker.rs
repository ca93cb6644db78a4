//! Unit-aligned chunking of documents.
//!
//! Scoring mode packs a whole document into disjoint, contiguous chunks under
//! a token budget. Retrieval mode splits one unit range into at most `k`
//! token-balanced parts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TokenCounter};

/// Default premise budget in tokens.
pub const DEFAULT_BUDGET: usize = 512;

/// Half-open interval `[start, end)` of unit indices. Serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct UnitRange {
    pub start: usize,
    pub end: usize,
}

impl UnitRange {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, unit: usize) -> bool {
        self.start <= unit && unit < self.end
    }

    pub fn contains_range(&self, other: &UnitRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl From<[usize; 2]> for UnitRange {
    fn from([start, end]: [usize; 2]) -> Self {
        Self { start, end }
    }
}

impl From<UnitRange> for [usize; 2] {
    fn from(r: UnitRange) -> Self {
        [r.start, r.end]
    }
}

impl fmt::Display for UnitRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub unit_range: UnitRange,
    pub text: String,
    pub token_count: usize,
    /// Set when a single unit alone exceeds the budget.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub oversized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub doc_id: String,
    pub budget: usize,
    pub chunks: Vec<Chunk>,
}

impl ChunkPlan {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn max_chunk_tokens(&self) -> usize {
        self.chunks.iter().map(|c| c.token_count).max().unwrap_or(0)
    }
}

/// Greedy left-to-right packing: each chunk takes the longest prefix of the
/// remaining units whose joined text fits `budget` tokens.
///
/// A unit that alone exceeds the budget becomes its own chunk with
/// `oversized` set.
///
/// # Panics
///
/// If `budget` is zero.
pub fn make_chunks(doc: &Document, budget: usize, counter: &dyn TokenCounter) -> ChunkPlan {
    assert!(budget >= 1, "chunk budget must be at least one token");
    let counts = doc.token_counts(counter);
    let n = doc.len();
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        let mut sum = counts[start];
        while end < n && sum + counts[end] <= budget {
            sum += counts[end];
            end += 1;
        }
        // The per-unit sum is exact for whitespace-separated counters; recount
        // the joined text and back off for any counter where it is not.
        let (range, text, token_count) = loop {
            let range = UnitRange::new(start, end);
            let text = doc.text_of(range);
            let tokens = counter.count(&text);
            if tokens <= budget || end == start + 1 {
                break (range, text, tokens);
            }
            end -= 1;
        };
        chunks.push(Chunk {
            doc_id: doc.id.clone(),
            unit_range: range,
            text,
            token_count,
            oversized: token_count > budget,
        });
        start = range.end;
    }
    ChunkPlan {
        doc_id: doc.id.clone(),
        budget,
        chunks,
    }
}

/// Splits `range` into at most `k` contiguous, non-empty, token-balanced parts.
///
/// Boundary `j` is placed at the unit edge whose prefix token count is
/// closest to `j * total / k` (lowest edge on ties), which keeps every part
/// within one unit's worth of tokens of `total / k`. Ranges shorter than `k`
/// are split into singletons.
///
/// # Panics
///
/// If `range` is empty, out of bounds, or `k < 2`.
pub fn split_range(doc: &Document, range: UnitRange, k: usize, counter: &dyn TokenCounter) -> Vec<UnitRange> {
    split_range_capped(doc, range, k, counter, usize::MAX)
}

/// [`split_range`] with an upper bound on the number of units per part.
///
/// The cap takes precedence over token balance; retrieval uses it to bound
/// the depth of the search tree when unit sizes are very skewed. A cap that
/// cannot be met with `k` parts is raised to `ceil(len / k)`.
pub fn split_range_capped(
    doc: &Document,
    range: UnitRange,
    k: usize,
    counter: &dyn TokenCounter,
    max_part_units: usize,
) -> Vec<UnitRange> {
    assert!(k >= 2, "branching factor must be at least 2");
    assert!(!range.is_empty() && range.end <= doc.len(), "invalid range {range}");
    let counts = doc.token_counts(counter);
    balanced_boundaries(&counts[range.start..range.end], k, max_part_units)
        .windows(2)
        .map(|w| UnitRange::new(range.start + w[0], range.start + w[1]))
        .collect()
}

/// Returns part boundaries `0 = b_0 < b_1 < ... < b_p = len` over `sizes`.
pub(crate) fn balanced_boundaries(sizes: &[usize], k: usize, max_part_units: usize) -> Vec<usize> {
    let n = sizes.len();
    if n <= k {
        return (0..=n).collect();
    }
    let cap = max_part_units.max(n.div_ceil(k));
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0usize);
    for &s in sizes {
        prefix.push(prefix.last().unwrap() + s);
    }
    let total = prefix[n] as f64;
    let mut bounds = vec![0usize];
    for j in 1..k {
        let prev = *bounds.last().unwrap();
        let parts_left = k - j;
        // Keep room for the remaining parts and respect the unit cap on both
        // this part and everything after it.
        let lo = (prev + 1).max(n.saturating_sub(cap.saturating_mul(parts_left)));
        let hi = (n - parts_left).min(prev.saturating_add(cap));
        let target = total * j as f64 / k as f64;
        let best = (lo..=hi)
            .min_by(|&a, &b| {
                let da = (prefix[a] as f64 - target).abs();
                let db = (prefix[b] as f64 - target).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("non-empty candidate window");
        bounds.push(best);
    }
    bounds.push(n);
    bounds
}

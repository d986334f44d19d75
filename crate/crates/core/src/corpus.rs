//! In-memory corpora: layered context embeddings with optional parses and
//! sense labels, and labelled model-wide attention vectors.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tree::Tree;
use crate::vector;

/// Tokens that never appear in attention records.
pub const SPECIAL_TOKENS: [&str; 2] = ["[CLS]", "[SEP]"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusMeta {
    pub model: String,
    /// Number of stored embedding layers per token.
    pub layer_count: usize,
    pub head_count: usize,
    pub dim: usize,
    /// Which wordpiece carries a multi-piece word's embedding.
    pub wordpiece: String,
}

impl CorpusMeta {
    pub fn new(model: impl Into<String>, layer_count: usize, head_count: usize, dim: usize) -> Self {
        CorpusMeta {
            model: model.into(),
            layer_count,
            head_count,
            dim,
            wordpiece: "first".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SentenceKind {
    #[default]
    Individual,
    /// Two sentences joined by the exporter; excluded from sense centroids.
    Concatenated,
}

impl SentenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SentenceKind::Individual => "individual",
            SentenceKind::Concatenated => "concatenated",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(SentenceKind::Individual),
            "concatenated" => Ok(SentenceKind::Concatenated),
            other => Err(Error::validation(format!("unknown sentence kind {other:?}"))),
        }
    }
}

/// A dependency parse: one tree node per token plus the relation each token
/// bears to its head (`"root"` for the root).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parse {
    pub tree: Tree,
    pub relations: Vec<String>,
}

impl Parse {
    pub fn new(tree: Tree, relations: Vec<String>) -> Result<Self> {
        if relations.len() != tree.len() {
            return Err(Error::DimensionMismatch {
                expected: tree.len(),
                found: relations.len(),
            });
        }
        Ok(Parse { tree, relations })
    }

    /// Labelled head/dependent edges as `(head, dependent, relation)`.
    pub fn dependencies(&self) -> impl Iterator<Item = (usize, usize, &str)> + '_ {
        self.tree
            .edges()
            .map(move |(dep, head)| (head, dep, self.relations[dep].as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SenseLabel {
    pub lemma: String,
    pub sense: String,
}

impl SenseLabel {
    pub fn new(lemma: impl Into<String>, sense: impl Into<String>) -> Self {
        SenseLabel {
            lemma: lemma.into(),
            sense: sense.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub kind: SentenceKind,
    pub parse: Option<Parse>,
    /// Empty, or one optional label per token.
    pub senses: Vec<Option<SenseLabel>>,
    /// `layer_count × tokens × dim` values, layer-major then token-major.
    pub embeddings: Vec<f32>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn embedding(&self, dim: usize, layer: usize, token: usize) -> &[f32] {
        let start = (layer * self.tokens.len() + token) * dim;
        &self.embeddings[start..start + dim]
    }

    pub fn sense(&self, token: usize) -> Option<&SenseLabel> {
        self.senses.get(token).and_then(|s| s.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCorpus {
    pub meta: CorpusMeta,
    pub sentences: Vec<Sentence>,
}

impl EmbeddingCorpus {
    pub fn new(meta: CorpusMeta, sentences: Vec<Sentence>) -> Result<Self> {
        let corpus = EmbeddingCorpus { meta, sentences };
        corpus.validate()?;
        Ok(corpus)
    }

    /// Checks every sentence against the declared shape, naming the first offender.
    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        if m.dim == 0 || m.layer_count == 0 {
            return Err(Error::validation("corpus must declare dim and layer count"));
        }
        let mut ids = alloc::collections::BTreeSet::new();
        for s in &self.sentences {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::validation(format!("sentence id {:?} appears twice", s.id)));
            }
            let expected = m.layer_count * s.tokens.len() * m.dim;
            if s.embeddings.len() != expected {
                return Err(Error::validation(format!(
                    "sentence {:?}: expected {expected} embedding values, found {}",
                    s.id,
                    s.embeddings.len()
                )));
            }
            if let Some(parse) = &s.parse {
                if parse.tree.len() != s.tokens.len() {
                    return Err(Error::validation(format!(
                        "sentence {:?}: parse has {} nodes for {} tokens",
                        s.id,
                        parse.tree.len(),
                        s.tokens.len()
                    )));
                }
            }
            if !s.senses.is_empty() && s.senses.len() != s.tokens.len() {
                return Err(Error::validation(format!(
                    "sentence {:?}: {} sense slots for {} tokens",
                    s.id,
                    s.senses.len(),
                    s.tokens.len()
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    pub fn sentence(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    pub fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.meta.layer_count {
            return Err(Error::validation(format!(
                "layer {layer} out of range (corpus has {})",
                self.meta.layer_count
            )));
        }
        Ok(())
    }

    /// One token's embedding at `layer`, widened to `f64`.
    pub fn vector(&self, sentence: &Sentence, layer: usize, token: usize) -> Vec<f64> {
        vector::to_f64(sentence.embedding(self.meta.dim, layer, token))
    }

    /// All token embeddings of a sentence at `layer`.
    pub fn layer_vectors(&self, sentence: &Sentence, layer: usize) -> Vec<Vec<f64>> {
        (0..sentence.len())
            .map(|t| self.vector(sentence, layer, t))
            .collect()
    }
}

/// One sense-labelled token occurrence at a fixed layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseOccurrence {
    /// Lower-cased lemma.
    pub lemma: String,
    pub sense: String,
    pub sentence: usize,
    pub token: usize,
    pub vector: Vec<f64>,
}

impl EmbeddingCorpus {
    /// Sense-labelled tokens of individual (not concatenated) sentences, in corpus order.
    pub fn sense_occurrences(&self, layer: usize) -> Result<Vec<SenseOccurrence>> {
        self.check_layer(layer)?;
        let mut out = Vec::new();
        for (si, s) in self.sentences.iter().enumerate() {
            if s.kind != SentenceKind::Individual {
                continue;
            }
            for (t, label) in s.senses.iter().enumerate() {
                if let Some(label) = label {
                    out.push(SenseOccurrence {
                        lemma: label.lemma.to_lowercase(),
                        sense: label.sense.clone(),
                        sentence: si,
                        token: t,
                        vector: self.vector(s, layer, t),
                    });
                }
            }
        }
        Ok(out)
    }
}

/// A model-wide attention vector for one ordered token pair: every head's
/// attention weight from `token_i` to `token_j`, layer-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionVector {
    pub sentence_id: String,
    pub token_i: usize,
    pub token_j: usize,
    /// Surface forms of the two tokens, when the exporter recorded them.
    pub forms: Option<(String, String)>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum AttentionLabel {
    HasRelation(bool),
    Relation(String),
}

impl AttentionLabel {
    pub fn class_name(&self) -> String {
        match self {
            AttentionLabel::HasRelation(b) => b.to_string(),
            AttentionLabel::Relation(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRecord {
    pub vector: AttentionVector,
    pub label: AttentionLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionVectorDataset {
    pub layer_count: usize,
    pub head_count: usize,
    pub records: Vec<AttentionRecord>,
}

impl AttentionVectorDataset {
    pub fn new(layer_count: usize, head_count: usize, records: Vec<AttentionRecord>) -> Result<Self> {
        let ds = AttentionVectorDataset {
            layer_count,
            head_count,
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn vector_len(&self) -> usize {
        self.layer_count * self.head_count
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.vector_len();
        for (idx, r) in self.records.iter().enumerate() {
            validate_attention_record(idx, r, expected)?;
        }
        Ok(())
    }

    /// Number of records per class name.
    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.label.class_name()).or_insert(0) += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> AttentionVectorDataset {
        AttentionVectorDataset {
            layer_count: self.layer_count,
            head_count: self.head_count,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Checks one record against the dataset-wide vector length; `idx` is used in messages.
pub fn validate_attention_record(idx: usize, r: &AttentionRecord, expected: usize) -> Result<()> {
    if r.vector.values.len() != expected {
        return Err(Error::validation(format!(
            "record {idx}: vector length {} but layers × heads = {expected}",
            r.vector.values.len()
        )));
    }
    if r.vector.token_i == r.vector.token_j {
        return Err(Error::validation(format!(
            "record {idx}: token pair must be two distinct positions"
        )));
    }
    if let Some((a, b)) = &r.vector.forms {
        if SPECIAL_TOKENS.contains(&a.as_str()) || SPECIAL_TOKENS.contains(&b.as_str()) {
            return Err(Error::validation(format!(
                "record {idx}: special token in pair ({a}, {b})"
            )));
        }
    }
    if r.vector.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(format!("record {idx}: non-finite attention value")));
    }
    Ok(())
}

/// Relation-frequency filter for the multiclass attention probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationFilter {
    /// A relation is kept only with strictly more examples than this.
    pub min_examples: usize,
    /// At most this many of the most frequent relations are kept.
    pub max_relations: usize,
}

impl Default for RelationFilter {
    fn default() -> Self {
        RelationFilter {
            min_examples: 5000,
            max_relations: 30,
        }
    }
}

/// Keeps relation-labelled records whose relation is frequent enough.
/// Binary-labelled records are dropped.
pub fn filter_relations(ds: &AttentionVectorDataset, filter: RelationFilter) -> AttentionVectorDataset {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &ds.records {
        if let AttentionLabel::Relation(rel) = &r.label {
            *counts.entry(rel.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c > filter.min_examples)
        .collect();
    // Most frequent first; ties by name for determinism.
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(filter.max_relations);
    let keep: Vec<&str> = ranked.iter().map(|(r, _)| *r).collect();

    let records = ds
        .records
        .iter()
        .filter(|r| matches!(&r.label, AttentionLabel::Relation(rel) if keep.contains(&rel.as_str())))
        .cloned()
        .collect();
    AttentionVectorDataset {
        layer_count: ds.layer_count,
        head_count: ds.head_count,
        records,
    }
}

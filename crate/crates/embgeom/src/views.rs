//! Query logic shared by the CLI and the HTTP service, so both emit the same
//! bytes for the same request.

use std::collections::BTreeMap;

use embgeom_core::corpus::EmbeddingCorpus;
use embgeom_core::probes::ProbeMatrix;
use embgeom_core::projection::{build_tree_drawing, pca_project, TreeDrawing};
use serde::Serialize;

/// Squared probe-space distance under which a non-edge pair is drawn dotted.
pub const DEFAULT_DOTTED_THRESHOLD: f64 = 1.0;
pub const DEFAULT_WORD_LIMIT: usize = 1000;
pub const PROJECTION_METHOD: &str = "pca";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QueryError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Unprocessable(String),
}

/// Drawing of one parsed sentence under `probe` at `layer`.
pub fn sentence_tree(
    corpus: &EmbeddingCorpus,
    sentence_id: &str,
    probe: &ProbeMatrix,
    layer: usize,
    dotted_threshold: f64,
) -> Result<TreeDrawing, QueryError> {
    let s = corpus
        .sentence(sentence_id)
        .ok_or_else(|| QueryError::NotFound(format!("sentence {sentence_id:?}")))?;
    check_layer(corpus, layer)?;
    let parse = s
        .parse
        .as_ref()
        .ok_or_else(|| QueryError::Unprocessable(format!("sentence {sentence_id:?} has no parse")))?;
    if probe.input_dim() != corpus.dim() {
        return Err(QueryError::Unprocessable(format!(
            "probe expects dimension {}, corpus has {}",
            probe.input_dim(),
            corpus.dim()
        )));
    }
    build_tree_drawing(&s.tokens, parse, &corpus.layer_vectors(s, layer), probe, dotted_threshold)
        .map_err(|e| QueryError::Unprocessable(e.to_string()))
}

fn check_layer(corpus: &EmbeddingCorpus, layer: usize) -> Result<(), QueryError> {
    if layer >= corpus.meta.layer_count {
        return Err(QueryError::BadRequest(format!(
            "layer {layer} out of range 0..{}",
            corpus.meta.layer_count
        )));
    }
    Ok(())
}

/// Lowercased token → `(sentence index, token index)` in corpus order.
#[derive(Debug, Clone, Default)]
pub struct WordIndex {
    words: BTreeMap<String, Vec<(usize, usize)>>,
}

impl WordIndex {
    pub fn build(corpus: &EmbeddingCorpus) -> Self {
        let mut words: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
        for (si, s) in corpus.sentences.iter().enumerate() {
            for (ti, tok) in s.tokens.iter().enumerate() {
                words.entry(tok.to_lowercase()).or_default().push((si, ti));
            }
        }
        WordIndex { words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn occurrences(&self, word: &str) -> &[(usize, usize)] {
        self.words.get(&word.to_lowercase()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Up to five indexed words closest to `word` by Jaro-Winkler similarity.
    pub fn suggestions(&self, word: &str) -> Vec<String> {
        let w = word.to_lowercase();
        let mut scored: Vec<(f64, &String)> = self
            .words
            .keys()
            .map(|k| (strsim::jaro_winkler(&w, k), k))
            .filter(|(s, _)| *s >= 0.8)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.into_iter().take(5).map(|(_, k)| k.clone()).collect()
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WordPoint {
    pub sentence_id: String,
    pub token: usize,
    pub text: String,
    pub x: f64,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sense: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct QueryResult {
    pub word: String,
    pub layer: usize,
    pub method: &'static str,
    /// Occurrences in the corpus, before `limit` was applied.
    pub total: usize,
    pub points: Vec<WordPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suggestions: Vec<String>,
}

/// The first `limit` occurrences of `word` at `layer`, laid out by PCA.
pub fn query_word(
    corpus: &EmbeddingCorpus,
    index: &WordIndex,
    word: &str,
    layer: usize,
    limit: usize,
) -> Result<QueryResult, QueryError> {
    check_layer(corpus, layer)?;
    if limit == 0 {
        return Err(QueryError::BadRequest("limit must be at least 1".into()));
    }
    let all = index.occurrences(word);
    let taken = &all[..all.len().min(limit)];
    let vectors: Vec<Vec<f64>> = taken
        .iter()
        .map(|&(si, ti)| corpus.vector(&corpus.sentences[si], layer, ti))
        .collect();
    let coords = layout_2d(&vectors)?;
    let points = taken
        .iter()
        .zip(coords)
        .map(|(&(si, ti), [x, y])| {
            let s = &corpus.sentences[si];
            WordPoint {
                sentence_id: s.id.clone(),
                token: ti,
                text: s.tokens.join(" "),
                x,
                y,
                sense: s.sense(ti).map(|l| l.sense.clone()),
            }
        })
        .collect();
    Ok(QueryResult {
        word: word.to_string(),
        layer,
        method: PROJECTION_METHOD,
        total: all.len(),
        points,
        suggestions: if all.is_empty() { index.suggestions(word) } else { Vec::new() },
    })
}

fn layout_2d(vectors: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, QueryError> {
    let dims = vectors.first().map_or(0, Vec::len).min(2);
    if vectors.len() < 2 || dims == 0 {
        return Ok(vec![[0.0, 0.0]; vectors.len()]);
    }
    let p = pca_project(vectors, dims).map_err(|e| QueryError::Unprocessable(e.to_string()))?;
    Ok(p.coords
        .into_iter()
        .map(|c| [c[0], c.get(1).copied().unwrap_or(0.0)])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use embgeom_core::corpus::{CorpusMeta, Sentence, SentenceKind};

    fn corpus() -> EmbeddingCorpus {
        let s = |id: &str, toks: &[&str], base: f32| Sentence {
            id: id.into(),
            tokens: toks.iter().map(|t| t.to_string()).collect(),
            kind: SentenceKind::Individual,
            parse: None,
            senses: vec![None; toks.len()],
            embeddings: (0..toks.len() * 3).map(|i| base + i as f32).collect(),
        };
        EmbeddingCorpus::new(
            CorpusMeta::new("toy", 1, 1, 3),
            vec![
                s("a", &["The", "bank"], 0.0),
                s("b", &["bank", "rates"], 10.0),
                s("c", &["a", "Bank"], -4.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn three_occurrences_three_points() {
        let c = corpus();
        let idx = WordIndex::build(&c);
        let r = query_word(&c, &idx, "bank", 0, 1000).unwrap();
        assert_eq!(r.points.len(), 3);
        assert_eq!(r.total, 3);
        assert_eq!(r.points[0].text, "The bank");
        let r = query_word(&c, &idx, "bank", 0, 2).unwrap();
        assert_eq!((r.points.len(), r.total), (2, 3));
    }

    #[test]
    fn absent_word_suggests() {
        let c = corpus();
        let idx = WordIndex::build(&c);
        let r = query_word(&c, &idx, "banks", 0, 10).unwrap();
        assert!(r.points.is_empty());
        assert_eq!(r.suggestions, vec!["bank".to_string()]);
    }

    #[test]
    fn errors() {
        let c = corpus();
        let idx = WordIndex::build(&c);
        assert!(matches!(query_word(&c, &idx, "bank", 1, 10), Err(QueryError::BadRequest(_))));
        assert!(matches!(query_word(&c, &idx, "bank", 0, 0), Err(QueryError::BadRequest(_))));
        let p = ProbeMatrix::identity(3);
        assert!(matches!(sentence_tree(&c, "zz", &p, 0, 1.0), Err(QueryError::NotFound(_))));
        assert!(matches!(sentence_tree(&c, "a", &p, 0, 1.0), Err(QueryError::Unprocessable(_))));
    }
}

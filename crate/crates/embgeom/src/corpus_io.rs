//! Embedding corpus directories.
//!
//! ```text
//! corpus/
//!   corpus.json          metadata and per-sentence tokens, parses, sense labels
//!   sentences/000000.f32 little-endian float32, layer-major then token-major
//! ```
//!
//! Heads in `corpus.json` follow CoNLL-U: 1-based, 0 for the root.

use std::fs;
use std::path::{Path, PathBuf};

use embgeom_core::corpus::{CorpusMeta, EmbeddingCorpus, Parse, SenseLabel, Sentence, SentenceKind};
use embgeom_core::tree::Tree;
use serde::{Deserialize, Serialize};

use crate::error::{format_err, io_err, IoError, Result};

pub const CORPUS_FORMAT: &str = "embgeom-corpus/1";
pub const METADATA_FILE: &str = "corpus.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub format: String,
    pub model: String,
    pub layer_count: usize,
    pub head_count: usize,
    pub dim: usize,
    #[serde(default = "default_wordpiece")]
    pub wordpiece: String,
    pub sentences: Vec<SentenceEntry>,
}

fn default_wordpiece() -> String {
    "first".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEntry {
    pub id: String,
    /// Relative to the corpus directory.
    pub file: String,
    pub tokens: Vec<String>,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub senses: Vec<Option<SenseEntry>>,
}

fn default_kind() -> String {
    "individual".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseEntry {
    pub lemma: String,
    pub sense: String,
}

pub fn write_embedding_corpus(corpus: &EmbeddingCorpus, dir: &Path) -> Result<()> {
    corpus.validate()?;
    let sentence_dir = dir.join("sentences");
    fs::create_dir_all(&sentence_dir).map_err(io_err(&sentence_dir))?;
    let mut entries = Vec::with_capacity(corpus.sentences.len());
    for (i, s) in corpus.sentences.iter().enumerate() {
        let file = format!("sentences/{i:06}.f32");
        let path = dir.join(&file);
        fs::write(&path, f32_bytes(&s.embeddings)).map_err(io_err(&path))?;
        let (heads, relations) = match &s.parse {
            Some(p) => (
                Some(p.tree.parents().iter().map(|h| h.map_or(0, |h| h + 1)).collect()),
                Some(p.relations.clone()),
            ),
            None => (None, None),
        };
        entries.push(SentenceEntry {
            id: s.id.clone(),
            file,
            tokens: s.tokens.clone(),
            kind: s.kind.as_str().into(),
            heads,
            relations,
            senses: s
                .senses
                .iter()
                .map(|l| {
                    l.as_ref().map(|l| SenseEntry {
                        lemma: l.lemma.clone(),
                        sense: l.sense.clone(),
                    })
                })
                .collect(),
        });
    }
    let meta = CorpusFile {
        format: CORPUS_FORMAT.into(),
        model: corpus.meta.model.clone(),
        layer_count: corpus.meta.layer_count,
        head_count: corpus.meta.head_count,
        dim: corpus.meta.dim,
        wordpiece: corpus.meta.wordpiece.clone(),
        sentences: entries,
    };
    let path = dir.join(METADATA_FILE);
    let json = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    fs::write(&path, json + "\n").map_err(io_err(&path))
}

pub fn read_corpus_metadata(dir: &Path) -> Result<CorpusFile> {
    let path = dir.join(METADATA_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let meta: CorpusFile = serde_json::from_str(&text).map_err(|e| format_err(&path, e.to_string()))?;
    if meta.format != CORPUS_FORMAT {
        return Err(format_err(&path, format!("unsupported format {:?}", meta.format)));
    }
    Ok(meta)
}

pub fn read_embedding_corpus(dir: &Path) -> Result<EmbeddingCorpus> {
    let meta = read_corpus_metadata(dir)?;
    let meta_path = dir.join(METADATA_FILE);
    let mut sentences = Vec::with_capacity(meta.sentences.len());
    for entry in &meta.sentences {
        let bad = |message: String| IoError::Sentence {
            path: meta_path.clone(),
            sentence: entry.id.clone(),
            message,
        };
        let path: PathBuf = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let expected = meta.layer_count * entry.tokens.len() * meta.dim;
        if bytes.len() != expected * 4 {
            return Err(bad(format!(
                "{} holds {} bytes, expected {} ({} layers × {} tokens × {} dims × 4)",
                entry.file,
                bytes.len(),
                expected * 4,
                meta.layer_count,
                entry.tokens.len(),
                meta.dim
            )));
        }
        let kind = SentenceKind::parse(&entry.kind).map_err(|e| bad(e.to_string()))?;
        let parse = match (&entry.heads, &entry.relations) {
            (Some(heads), Some(relations)) => Some(parse_from_heads(heads, relations).map_err(bad)?),
            (None, None) => None,
            _ => return Err(bad("heads and relations must be given together".into())),
        };
        sentences.push(Sentence {
            id: entry.id.clone(),
            tokens: entry.tokens.clone(),
            kind,
            parse,
            senses: entry
                .senses
                .iter()
                .map(|s| s.as_ref().map(|s| SenseLabel::new(s.lemma.clone(), s.sense.clone())))
                .collect(),
            embeddings: f32_from_bytes(&bytes),
        });
    }
    let mut core_meta = CorpusMeta::new(meta.model, meta.layer_count, meta.head_count, meta.dim);
    core_meta.wordpiece = meta.wordpiece;
    EmbeddingCorpus::new(core_meta, sentences).map_err(|e| format_err(&meta_path, e.to_string()))
}

/// CoNLL-style heads (1-based, 0 = root) to a parse.
pub fn parse_from_heads(heads: &[usize], relations: &[String]) -> std::result::Result<Parse, String> {
    let signed: Vec<i64> = heads.iter().map(|&h| h as i64 - 1).collect();
    let tree = Tree::from_signed_parents(&signed).map_err(|e| e.to_string())?;
    Parse::new(tree, relations.to_vec()).map_err(|e| e.to_string())
}

pub fn f32_bytes(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn f32_from_bytes(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub fn f64_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn f64_from_bytes(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect()
}

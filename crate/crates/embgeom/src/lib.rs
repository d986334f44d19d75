//! File formats, reports, the CLI plumbing and the HTTP service built on
//! `embgeom-core`.
//!
//! On-disk artifacts:
//! - embedding corpus: a directory with `corpus.json` and one little-endian
//!   `f32` block per sentence ([`corpus_io`]);
//! - attention dataset: JSON lines with base64 `f32` vectors ([`attention_io`]);
//! - probes and WSD models: a JSON header line followed by a binary payload
//!   ([`probe_io`], [`wsd_io`]);
//! - sentence-pair manifests: JSON lines ([`pairs_io`]);
//! - dependency parses: CoNLL-U ([`conllu`]) or parent arrays ([`tree_json`]).

pub mod attention_io;
pub mod config;
pub mod conllu;
pub mod corpus_io;
pub mod error;
pub mod pairs_io;
pub mod probe_io;
pub mod render;
pub mod report;
pub mod service;
pub mod tree_json;
pub mod views;
pub mod wsd_io;

pub use error::{IoError, Result};

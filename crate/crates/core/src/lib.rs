//! Geometry of contextual token embeddings.
//!
//! - [`tree`] and [`tree_geometry`]: tree metrics, exact and randomized
//!   squared-distance embeddings, and power-p embeddability.
//! - [`probes`]: linear classifiers over attention vectors, structural and
//!   semantic probe matrices.
//! - [`wsd`]: nearest-centroid word-sense disambiguation.
//! - [`concat`]: the sentence-concatenation similarity-ratio experiment.
//! - [`projection`]: PCA layouts of probe-space parse trees.
//! - [`synthetic`]: seeded corpora with planted structure.
//!
//! The crate is `no_std` and needs only `alloc`; file formats, the CLI and the
//! HTTP service live in the `embgeom` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod concat;
pub mod corpus;
pub mod error;
pub mod probes;
pub mod projection;
pub mod synthetic;
pub mod tree;
pub mod tree_geometry;
pub mod vector;
pub mod wsd;

pub use error::{Error, Result};

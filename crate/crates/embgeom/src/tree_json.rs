//! JSON tree descriptions: `{"n": 4, "parents": [null, 0, 0, 1]}`.
//!
//! Parents are 0-based; the root's entry is `null` or `-1`.

use std::fs;
use std::path::Path;

use embgeom_core::tree::Tree;
use serde::{Deserialize, Serialize};

use crate::error::{format_err, io_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub n: usize,
    pub parents: Vec<Option<i64>>,
}

impl TreeJson {
    pub fn from_tree(tree: &Tree) -> Self {
        TreeJson {
            n: tree.len(),
            parents: tree.parents().iter().map(|p| p.map(|p| p as i64)).collect(),
        }
    }

    pub fn to_tree(&self) -> std::result::Result<Tree, String> {
        if self.parents.len() != self.n {
            return Err(format!("n is {} but {} parents given", self.n, self.parents.len()));
        }
        let signed: Vec<i64> = self.parents.iter().map(|p| p.unwrap_or(-1)).collect();
        Tree::from_signed_parents(&signed).map_err(|e| e.to_string())
    }
}

/// Reads one tree, or an array of trees.
pub fn read_trees(path: &Path) -> Result<Vec<Tree>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))?;
    let items: Vec<TreeJson> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|t| vec![t])
    }
    .map_err(|e| format_err(path, e.to_string()))?;
    items
        .iter()
        .enumerate()
        .map(|(i, t)| t.to_tree().map_err(|e| format_err(path, format!("tree {i}: {e}"))))
        .collect()
}

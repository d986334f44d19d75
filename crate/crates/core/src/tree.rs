//! Rooted trees with the shortest-path (edge count) metric.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An immutable rooted tree over nodes `0..n`.
///
/// The root may be any node; parse trees read from treebanks are usually
/// rooted at the main verb rather than at token 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    parent: Vec<Option<usize>>,
    root: usize,
    children: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

impl Tree {
    /// Builds a tree from parent links. Exactly one entry must be `None`.
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::validation("tree must have at least one node"));
        }
        let mut root = None;
        let mut children = vec![Vec::new(); n];
        for (node, p) in parent.iter().enumerate() {
            match *p {
                None => {
                    if let Some(r) = root {
                        return Err(Error::validation(format!(
                            "multiple roots: {r} and {node}"
                        )));
                    }
                    root = Some(node);
                }
                Some(p) if p >= n => {
                    return Err(Error::validation(format!(
                        "node {node} has out-of-range parent {p}"
                    )));
                }
                Some(p) if p == node => {
                    return Err(Error::validation(format!("node {node} is its own parent")));
                }
                Some(p) => children[p].push(node),
            }
        }
        let root = root.ok_or_else(|| Error::validation("tree has no root"))?;

        // Every node must be reachable from the root; otherwise a cycle exists.
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                if !seen[c] {
                    seen[c] = true;
                    reached += 1;
                    queue.push_back(c);
                }
            }
        }
        if reached != n {
            let orphan = seen.iter().position(|s| !s).unwrap_or(0);
            return Err(Error::validation(format!(
                "parent links contain a cycle through node {orphan}"
            )));
        }
        Ok(Tree {
            parent,
            root,
            children,
            labels: None,
        })
    }

    /// Parses the `{n, parents}` convention where the root's parent is `-1`.
    pub fn from_signed_parents(parents: &[i64]) -> Result<Self> {
        let links = parents
            .iter()
            .map(|&p| if p < 0 { None } else { Some(p as usize) })
            .collect();
        Tree::from_parents(links)
    }

    /// Path graph `0 - 1 - ... - (n-1)` rooted at 0.
    pub fn path(n: usize) -> Result<Self> {
        let parent = (0..n).map(|i| i.checked_sub(1)).collect();
        Tree::from_parents(parent)
    }

    /// Root 0 with `k` leaf children.
    pub fn star(k: usize) -> Result<Self> {
        let parent = (0..=k).map(|i| if i == 0 { None } else { Some(0) }).collect();
        Tree::from_parents(parent)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Undirected (child, parent) pairs, one per non-root node, in node order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.parent[a] == Some(b) || self.parent[b] == Some(a)
    }

    /// Nodes in breadth-first order from the root; parents precede children.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut queue = VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            queue.extend(self.children[u].iter().copied());
        }
        order
    }

    fn neighbours(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.children[node].iter().copied().chain(self.parent[node])
    }

    /// All-pairs edge-count distances via one BFS per node.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let n = self.len();
        let mut data = vec![0u32; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            let row = &mut data[src * n..(src + 1) * n];
            let mut seen = vec![false; n];
            seen[src] = true;
            queue.clear();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = row[u];
                for v in self.neighbours(u) {
                    if !seen[v] {
                        seen[v] = true;
                        row[v] = du + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        DistanceMatrix { n, data }
    }
}

/// Symmetric integer matrix of tree distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<u32>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Row-major copy as reals, the form consumed by [`crate::tree_geometry::power_p_feasibility`].
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&d| d as f64).collect()
    }
}

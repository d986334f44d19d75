use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A `k × m` linear map from `k`-dimensional embeddings to an `m`-dimensional
/// probe space, stored row-major. Applying it to `h` yields `Bᵀh`, so two
/// probes over the same embedding space can be compared through `AᵀB`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl ProbeMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if cols > rows {
            return Err(Error::validation("probe rank cannot exceed embedding dimension"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("probe entries must be finite"));
        }
        Ok(ProbeMatrix { rows, cols, entries })
    }

    pub fn identity(k: usize) -> Self {
        let mut entries = alloc::vec![0.0; k * k];
        for i in 0..k {
            entries[i * k + i] = 1.0;
        }
        ProbeMatrix {
            rows: k,
            cols: k,
            entries,
        }
    }

    pub fn zeros(k: usize, m: usize) -> Self {
        ProbeMatrix {
            rows: k,
            cols: m,
            entries: alloc::vec![0.0; k * m],
        }
    }

    /// Gaussian entries with variance `1/k`, reproducible from `seed`.
    pub fn random(k: usize, m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / libm::sqrt(k.max(1) as f64);
        let entries = (0..k * m)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        ProbeMatrix {
            rows: k,
            cols: m,
            entries,
        }
    }

    /// Embedding dimension `k`.
    pub fn input_dim(&self) -> usize {
        self.rows
    }

    /// Probe rank `m`.
    pub fn output_dim(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.entries)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        let entries = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)])
            .collect();
        ProbeMatrix::new(m.nrows(), m.ncols(), entries)
    }

    /// `Bᵀh` for one embedding.
    pub fn apply_one(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: h.len(),
            });
        }
        let mut out = alloc::vec![0.0; self.cols];
        for (r, &x) in h.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &self.entries[r * self.cols..(r + 1) * self.cols];
            for (o, b) in out.iter_mut().zip(row) {
                *o += b * x;
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|x| x * x).sum())
    }
}

/// Transforms every embedding into probe space.
pub fn apply_probe(probe: &ProbeMatrix, embeddings: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    embeddings.iter().map(|h| probe.apply_one(h)).collect()
}

/// Singular values of the two products used to compare probe subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceComparison {
    /// Of `AᵀB` (`m_A × m_B`), descending.
    pub inner: Vec<f64>,
    /// Of `ABᵀ` (`k × k`), descending.
    pub outer: Vec<f64>,
}

pub fn compare_probe_subspaces(a: &ProbeMatrix, b: &ProbeMatrix) -> Result<SubspaceComparison> {
    if a.input_dim() != b.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.input_dim(),
            found: b.input_dim(),
        });
    }
    if a.output_dim() != b.output_dim() {
        // ABᵀ needs matching ranks.
        return Err(Error::DimensionMismatch {
            expected: a.output_dim(),
            found: b.output_dim(),
        });
    }
    let am = a.to_dmatrix();
    let bm = b.to_dmatrix();
    Ok(SubspaceComparison {
        inner: singular_values(am.transpose() * &bm),
        outer: singular_values(&am * bm.transpose()),
    })
}

pub(crate) fn singular_values(m: DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().map(|x| x.max(0.0)).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

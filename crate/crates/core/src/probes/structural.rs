//! Structural probe: a linear map under which squared embedding distances
//! approximate dependency-tree distances.
//!
//! The objective for one sentence is the mean over token pairs `i < j` of
//! `| d_tree(i, j) − ‖Bᵀ(h_i − h_j)‖² |`; the corpus loss averages sentences.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ProbeTrainConfig;
use super::matrix::ProbeMatrix;
use crate::corpus::EmbeddingCorpus;
use crate::error::{Error, Result};

struct SentenceData {
    /// `n × k` token embeddings.
    h: DMatrix<f64>,
    /// `n × n` tree distances.
    dist: DMatrix<f64>,
}

fn collect(corpus: &EmbeddingCorpus, layer: usize) -> Result<Vec<SentenceData>> {
    corpus.check_layer(layer)?;
    let k = corpus.dim();
    let mut out = Vec::new();
    for s in &corpus.sentences {
        let Some(parse) = &s.parse else { continue };
        let n = s.len();
        if n < 2 {
            continue;
        }
        let h = DMatrix::from_fn(n, k, |t, c| s.embedding(k, layer, t)[c] as f64);
        let d = parse.tree.distance_matrix();
        let dist = DMatrix::from_fn(n, n, |i, j| d.get(i, j) as f64);
        out.push(SentenceData { h, dist });
    }
    Ok(out)
}

/// Per-sentence loss and, when `grad` is given, accumulates `scale · ∂loss/∂B`.
fn sentence_loss(data: &SentenceData, b: &DMatrix<f64>, grad: Option<(&mut DMatrix<f64>, f64)>) -> f64 {
    let n = data.h.nrows();
    let p = &data.h * b;
    let pairs = (n * (n - 1) / 2) as f64;
    let mut loss = 0.0;
    let mut weights = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let sq: f64 = p.row(i).iter().zip(p.row(j).iter()).map(|(a, c)| (a - c) * (a - c)).sum();
            let r = sq - data.dist[(i, j)];
            loss += r.abs();
            let s = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            weights[(i, j)] = s;
            weights[(j, i)] = s;
        }
    }
    if let Some((g, scale)) = grad {
        // Σ_{i<j} c_ij (h_i − h_j)(p_i − p_j)ᵀ = Hᵀ (diag(C·1) − C) P
        let c = 2.0 * scale / pairs;
        let mut lap = -weights;
        for i in 0..n {
            let row_sum: f64 = -lap.row(i).sum();
            lap[(i, i)] = row_sum;
        }
        *g += (data.h.transpose() * (lap * p)) * c;
    }
    loss / pairs
}

/// Mean per-sentence absolute error of a structural probe at `layer`.
/// Sentences without a parse or with a single token are skipped.
pub fn structural_loss(probe: &ProbeMatrix, corpus: &EmbeddingCorpus, layer: usize) -> Result<f64> {
    if probe.input_dim() != corpus.dim() {
        return Err(Error::DimensionMismatch {
            expected: corpus.dim(),
            found: probe.input_dim(),
        });
    }
    let data = collect(corpus, layer)?;
    if data.is_empty() {
        return Err(Error::validation("no parsed sentences with at least two tokens"));
    }
    let b = probe.to_dmatrix();
    Ok(data.iter().map(|d| sentence_loss(d, &b, None)).sum::<f64>() / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralFit {
    pub probe: ProbeMatrix,
    /// Training loss before the first update, then after every epoch.
    pub epoch_losses: Vec<f64>,
}

/// Fits a rank-`rank` structural probe by mini-batch SGD over sentences.
///
/// Starts from `init` when given, otherwise from a seeded Gaussian matrix.
pub fn train_structural_probe(
    corpus: &EmbeddingCorpus,
    layer: usize,
    rank: usize,
    cfg: &ProbeTrainConfig,
    init: Option<ProbeMatrix>,
) -> Result<StructuralFit> {
    cfg.validate()?;
    let k = corpus.dim();
    if rank == 0 || rank > k {
        return Err(Error::validation(format!("rank {rank} must lie in 1..={k}")));
    }
    let data = collect(corpus, layer)?;
    if data.is_empty() {
        return Err(Error::validation("no parsed sentences with at least two tokens"));
    }
    let start = match init {
        Some(p) if p.input_dim() != k || p.output_dim() != rank => {
            return Err(Error::validation(format!(
                "initial probe is {}×{}, expected {k}×{rank}",
                p.input_dim(),
                p.output_dim()
            )))
        }
        Some(p) => p,
        None => ProbeMatrix::random(k, rank, cfg.seed),
    };
    let mut b = start.to_dmatrix();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut lr = cfg.learning_rate;
    let total = |b: &DMatrix<f64>| data.iter().map(|d| sentence_loss(d, b, None)).sum::<f64>() / data.len() as f64;
    let mut epoch_losses = alloc::vec![total(&b)];

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = DMatrix::<f64>::zeros(k, rank);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                sentence_loss(&data[i], &b, Some((&mut grad, scale)));
            }
            if cfg.l2_lambda > 0.0 {
                grad += &b * cfg.l2_lambda;
            }
            b -= grad * lr;
        }
        lr *= cfg.lr_decay;
        epoch_losses.push(total(&b));
    }
    Ok(StructuralFit {
        probe: ProbeMatrix::from_dmatrix(&b)?,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Tree;

    fn sentence(h: DMatrix<f64>, tree: &Tree) -> SentenceData {
        let d = tree.distance_matrix();
        let n = tree.len();
        SentenceData {
            h,
            dist: DMatrix::from_fn(n, n, |i, j| d.get(i, j) as f64),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let tree = Tree::from_parents(alloc::vec![None, Some(0), Some(0), Some(1)]).unwrap();
        let h = DMatrix::from_fn(4, 3, |i, j| libm::sin((i * 3 + j) as f64 * 0.7) * 1.3);
        let data = sentence(h, &tree);
        let b = DMatrix::from_fn(3, 2, |i, j| libm::cos((i * 2 + j) as f64 * 1.1) * 0.8);
        let mut g = DMatrix::zeros(3, 2);
        sentence_loss(&data, &b, Some((&mut g, 1.0)));
        let eps = 1e-6;
        for r in 0..3 {
            for c in 0..2 {
                let mut bp = b.clone();
                bp[(r, c)] += eps;
                let mut bm = b.clone();
                bm[(r, c)] -= eps;
                let fd = (sentence_loss(&data, &bp, None) - sentence_loss(&data, &bm, None)) / (2.0 * eps);
                assert!((fd - g[(r, c)]).abs() < 1e-5, "({r},{c}): fd {fd} vs {}", g[(r, c)]);
            }
        }
    }
}

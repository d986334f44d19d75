//! Semantic probe trained with a clamped cosine-similarity objective.
//!
//! For each lemma with at least two senses of at least two occurrences, all
//! same-sense and different-sense occurrence pairs are formed. The loss is
//!
//! ```text
//! mean_diff clip(cos(Bᵀu, Bᵀv), base_diff ± w) − mean_same clip(cos(Bᵀu, Bᵀv), base_same ± w)
//! ```
//!
//! where the baselines are the mean cosines of the untransformed embeddings.
//! Clipping stops the probe from pulling already-separated clusters further
//! apart instead of fixing the ambiguous ones.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ProbeTrainConfig;
use super::matrix::ProbeMatrix;
use crate::corpus::{EmbeddingCorpus, SenseOccurrence};
use crate::error::{Error, Result};
use crate::vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampSpec {
    /// `f64::INFINITY` disables clamping.
    pub half_width: f64,
    pub baseline_same: f64,
    pub baseline_diff: f64,
}

impl ClampSpec {
    pub const DEFAULT_HALF_WIDTH: f64 = 0.1;

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) {
            return Err(Error::validation("clamp half width must be positive"));
        }
        for b in [self.baseline_same, self.baseline_diff] {
            if !(-1.0..=1.0).contains(&b) {
                return Err(Error::validation("clamp baselines must lie in [-1, 1]"));
            }
        }
        Ok(())
    }

    fn window(&self, baseline: f64) -> (f64, f64) {
        (baseline - self.half_width, baseline + self.half_width)
    }
}

/// Occurrences that qualify for semantic-probe training, plus their pairs.
#[derive(Debug, Clone)]
pub struct SensePairs {
    pub occurrences: Vec<SenseOccurrence>,
    pub same: Vec<(u32, u32)>,
    pub diff: Vec<(u32, u32)>,
}

/// Keeps lemmas with at least two senses that each occur at least twice and
/// enumerates same/different-sense pairs within each lemma. Pair lists longer
/// than `max_pairs` are subsampled with `seed`.
pub fn sense_pairs(corpus: &EmbeddingCorpus, layer: usize, max_pairs: usize, seed: u64) -> Result<SensePairs> {
    let all = corpus.sense_occurrences(layer)?;
    let mut grouped: BTreeMap<&str, BTreeMap<&str, Vec<usize>>> = BTreeMap::new();
    for (i, o) in all.iter().enumerate() {
        grouped
            .entry(o.lemma.as_str())
            .or_default()
            .entry(o.sense.as_str())
            .or_default()
            .push(i);
    }

    let mut keep = Vec::new();
    let mut groups: Vec<Vec<Vec<usize>>> = Vec::new();
    for senses in grouped.values() {
        let qualifying: Vec<&Vec<usize>> = senses.values().filter(|v| v.len() >= 2).collect();
        if qualifying.len() < 2 {
            continue;
        }
        let mut lemma_groups = Vec::new();
        for occ in qualifying {
            let ids: Vec<usize> = occ
                .iter()
                .map(|&i| {
                    keep.push(i);
                    keep.len() - 1
                })
                .collect();
            lemma_groups.push(ids);
        }
        groups.push(lemma_groups);
    }
    let occurrences: Vec<SenseOccurrence> = keep.iter().map(|&i| all[i].clone()).collect();

    let mut same = Vec::new();
    let mut diff = Vec::new();
    for lemma_groups in &groups {
        for (a, ga) in lemma_groups.iter().enumerate() {
            for (x, &u) in ga.iter().enumerate() {
                for &v in &ga[x + 1..] {
                    same.push((u as u32, v as u32));
                }
                for gb in &lemma_groups[a + 1..] {
                    for &v in gb {
                        diff.push((u as u32, v as u32));
                    }
                }
            }
        }
    }
    if same.is_empty() || diff.is_empty() {
        return Err(Error::validation(
            "no lemma has two senses with at least two occurrences each",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e5e);
    for list in [&mut same, &mut diff] {
        if list.len() > max_pairs {
            list.shuffle(&mut rng);
            list.truncate(max_pairs);
            list.sort_unstable();
        }
    }
    Ok(SensePairs {
        occurrences,
        same,
        diff,
    })
}

fn mean_cosine(occ: &[SenseOccurrence], pairs: &[(u32, u32)], probe: Option<&ProbeMatrix>) -> f64 {
    let transformed: Option<Vec<Vec<f64>>> =
        probe.map(|p| occ.iter().map(|o| p.apply_one(&o.vector).expect("dimension checked")).collect());
    let get = |i: u32| match &transformed {
        Some(t) => t[i as usize].as_slice(),
        None => occ[i as usize].vector.as_slice(),
    };
    let total: f64 = pairs
        .iter()
        .map(|&(u, v)| vector::cosine(get(u), get(v)).unwrap_or(0.0))
        .sum();
    total / pairs.len() as f64
}

/// Mean same-sense and different-sense cosine similarity, optionally after a probe.
pub fn cosine_baselines(pairs: &SensePairs, probe: Option<&ProbeMatrix>) -> (f64, f64) {
    (
        mean_cosine(&pairs.occurrences, &pairs.same, probe),
        mean_cosine(&pairs.occurrences, &pairs.diff, probe),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticFit {
    pub probe: ProbeMatrix,
    /// Clamp window actually used, with baselines filled in.
    pub clamp: ClampSpec,
    /// Clamped loss on the full pair set before training, then per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Clamped loss of `b` on a pair set.
pub fn clamped_loss(pairs: &SensePairs, b: &ProbeMatrix, clamp: &ClampSpec) -> Result<f64> {
    if b.input_dim() != pairs.occurrences.first().map_or(b.input_dim(), |o| o.vector.len()) {
        return Err(Error::DimensionMismatch {
            expected: pairs.occurrences[0].vector.len(),
            found: b.input_dim(),
        });
    }
    let proj: Vec<Vec<f64>> = pairs
        .occurrences
        .iter()
        .map(|o| b.apply_one(&o.vector))
        .collect::<Result<_>>()?;
    let term = |list: &[(u32, u32)], baseline: f64| {
        let (lo, hi) = clamp.window(baseline);
        list.iter()
            .map(|&(u, v)| {
                vector::cosine(&proj[u as usize], &proj[v as usize])
                    .unwrap_or(0.0)
                    .clamp(lo, hi)
            })
            .sum::<f64>()
            / list.len() as f64
    };
    Ok(term(&pairs.diff, clamp.baseline_diff) - term(&pairs.same, clamp.baseline_same))
}

/// Accumulates `sign · ∂cos(Bᵀu, Bᵀv)/∂B` into `grad` unless the cosine lies
/// outside `[lo, hi]`, where the clipped term is flat.
fn add_cosine_grad(grad: &mut [f64], b: &ProbeMatrix, u: &[f64], v: &[f64], lo: f64, hi: f64, sign: f64) {
    let m = b.output_dim();
    let a = b.apply_one(u).expect("dimension checked");
    let c = b.apply_one(v).expect("dimension checked");
    let na = vector::norm(&a);
    let nc = vector::norm(&c);
    if na == 0.0 || nc == 0.0 {
        return;
    }
    let cos = vector::dot(&a, &c) / (na * nc);
    if cos <= lo || cos >= hi {
        return;
    }
    let da: Vec<f64> = a.iter().zip(&c).map(|(ai, ci)| ci / (na * nc) - cos * ai / (na * na)).collect();
    let dc: Vec<f64> = a.iter().zip(&c).map(|(ai, ci)| ai / (na * nc) - cos * ci / (nc * nc)).collect();
    for (r, (ur, vr)) in u.iter().zip(v).enumerate() {
        let row = &mut grad[r * m..(r + 1) * m];
        for j in 0..m {
            row[j] += sign * (ur * da[j] + vr * dc[j]);
        }
    }
}

/// Trains a `k × rank` semantic probe at `layer`.
///
/// `half_width` sets the clamp window; baselines are measured on the
/// untransformed training embeddings. Each SGD step draws `batch_size`
/// same-sense and `batch_size` different-sense pairs; an epoch covers the
/// longer of the two pair lists once. At most `cfg.max_train` pairs of each
/// kind are used.
pub fn train_semantic_probe(
    corpus: &EmbeddingCorpus,
    layer: usize,
    rank: usize,
    half_width: f64,
    cfg: &ProbeTrainConfig,
) -> Result<SemanticFit> {
    cfg.validate()?;
    let k = corpus.dim();
    if rank == 0 || rank > k {
        return Err(Error::validation(format!("rank {rank} must lie in 1..={k}")));
    }
    let pairs = sense_pairs(corpus, layer, cfg.max_train, cfg.seed)?;
    let (baseline_same, baseline_diff) = cosine_baselines(&pairs, None);
    let clamp = ClampSpec {
        half_width,
        baseline_same,
        baseline_diff,
    };
    clamp.validate()?;

    let mut b = ProbeMatrix::random(k, rank, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut same = pairs.same.clone();
    let mut diff = pairs.diff.clone();
    let steps = same.len().max(diff.len()).div_ceil(cfg.batch_size);
    let mut lr = cfg.learning_rate;
    let mut epoch_losses = alloc::vec![clamped_loss(&pairs, &b, &clamp)?];
    let (same_lo, same_hi) = clamp.window(baseline_same);
    let (diff_lo, diff_hi) = clamp.window(baseline_diff);
    let mut grad = alloc::vec![0.0; k * rank];

    for _ in 0..cfg.epochs {
        same.shuffle(&mut rng);
        diff.shuffle(&mut rng);
        for step in 0..steps {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let pick = |list: &[(u32, u32)], rng: &mut ChaCha8Rng| -> Vec<(u32, u32)> {
                let start = step * cfg.batch_size;
                if start + cfg.batch_size <= list.len() {
                    list[start..start + cfg.batch_size].to_vec()
                } else {
                    (0..cfg.batch_size.min(list.len()))
                        .map(|_| *list.choose(rng).expect("non-empty pair list"))
                        .collect()
                }
            };
            let same_batch = pick(&same, &mut rng);
            let diff_batch = pick(&diff, &mut rng);
            let occ = &pairs.occurrences;
            let ws = 1.0 / same_batch.len() as f64;
            for &(u, v) in &same_batch {
                add_cosine_grad(&mut grad, &b, &occ[u as usize].vector, &occ[v as usize].vector, same_lo, same_hi, -ws);
            }
            let wd = 1.0 / diff_batch.len() as f64;
            for &(u, v) in &diff_batch {
                add_cosine_grad(&mut grad, &b, &occ[u as usize].vector, &occ[v as usize].vector, diff_lo, diff_hi, wd);
            }
            let entries = b.entries_mut();
            for (w, g) in entries.iter_mut().zip(&grad) {
                *w -= lr * (g + cfg.l2_lambda * *w);
            }
        }
        lr *= cfg.lr_decay;
        epoch_losses.push(clamped_loss(&pairs, &b, &clamp)?);
    }
    Ok(SemanticFit {
        probe: b,
        clamp,
        epoch_losses,
    })
}

/// Lemma → sense → occurrence count, restricted to qualifying lemmas.
pub fn qualifying_inventory(pairs: &SensePairs) -> BTreeMap<String, BTreeMap<String, usize>> {
    let mut inv: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for o in &pairs.occurrences {
        *inv.entry(o.lemma.clone()).or_default().entry(o.sense.clone()).or_insert(0) += 1;
    }
    inv
}

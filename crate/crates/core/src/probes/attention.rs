//! Linear classifiers over model-wide attention vectors.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ProbeTrainConfig;
use crate::corpus::{AttentionLabel, AttentionVectorDataset};
use crate::error::{Error, Result};
use crate::vector;

/// A linear classifier. Binary probes hold a single weight row and predict
/// `"true"` when the score is positive; multiclass probes hold one row per
/// class and predict the arg-max.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    classes: Vec<String>,
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    l2_lambda: f64,
}

impl LinearProbe {
    pub fn from_parts(
        classes: Vec<String>,
        dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        l2_lambda: f64,
    ) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::validation("a probe needs at least two classes"));
        }
        let rows = if is_binary_classes(&classes) { 1 } else { classes.len() };
        if weights.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                expected: rows * dim,
                found: weights.len(),
            });
        }
        if bias.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: bias.len(),
            });
        }
        if !vector::is_finite(&weights) || !vector::is_finite(&bias) {
            return Err(Error::validation("probe weights must be finite"));
        }
        Ok(LinearProbe {
            classes,
            dim,
            weights,
            bias,
            l2_lambda,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn l2_lambda(&self) -> f64 {
        self.l2_lambda
    }

    pub fn is_binary(&self) -> bool {
        self.bias.len() == 1
    }

    pub fn weight_norm(&self) -> f64 {
        vector::norm(&self.weights)
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.dim..(r + 1) * self.dim]
    }

    /// Raw scores: one logit for binary probes, one per class otherwise.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.bias.len())
            .map(|r| vector::dot(self.row(r), x) + self.bias[r])
            .collect()
    }

    /// Index into [`LinearProbe::classes`] of the predicted class.
    pub fn predict(&self, x: &[f64]) -> usize {
        let s = self.scores(x);
        if self.is_binary() {
            usize::from(s[0] > 0.0)
        } else {
            argmax(&s)
        }
    }
}

fn is_binary_classes(classes: &[String]) -> bool {
    classes.len() == 2 && classes[0] == "false" && classes[1] == "true"
}

fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in s.iter().enumerate() {
        if v > s[best] {
            best = i;
        }
    }
    best
}

/// A trained probe plus the dataset indices it was trained and held out on.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFit {
    pub probe: LinearProbe,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn split_count(n: usize, fraction: f64) -> usize {
    let k = (n as f64 * fraction) as usize;
    k.clamp(1.min(n), n)
}

/// Trains the has-relation probe: the majority class is downsampled to parity,
/// each class is split `train_fraction` / rest, and a logistic-loss classifier
/// with an L2 penalty is fit by SGD.
pub fn train_attention_binary(ds: &AttentionVectorDataset, cfg: &ProbeTrainConfig) -> Result<ProbeFit> {
    cfg.validate()?;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, r) in ds.records.iter().enumerate() {
        match r.label {
            AttentionLabel::HasRelation(true) => pos.push(i),
            AttentionLabel::HasRelation(false) => neg.push(i),
            AttentionLabel::Relation(_) => {
                return Err(Error::validation(format!(
                    "record {i} carries a relation label; binary probe needs boolean labels"
                )))
            }
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::validation("binary probe needs examples of both classes"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let per_class = pos.len().min(neg.len());
    pos.truncate(per_class);
    neg.truncate(per_class);

    let n_train = split_count(per_class, cfg.train_fraction);
    let mut train: Vec<usize> = pos[..n_train].iter().chain(&neg[..n_train]).copied().collect();
    let mut test: Vec<usize> = pos[n_train..].iter().chain(&neg[n_train..]).copied().collect();
    train.sort_unstable();
    test.sort_unstable();

    let dim = ds.vector_len();
    let xs: Vec<Vec<f64>> = train.iter().map(|&i| vector::to_f64(&ds.records[i].vector.values)).collect();
    let ys: Vec<usize> = train
        .iter()
        .map(|&i| usize::from(ds.records[i].label == AttentionLabel::HasRelation(true)))
        .collect();
    let (weights, bias) = sgd_logistic(&xs, &ys, 1, dim, cfg, &mut rng);
    let probe = LinearProbe::from_parts(
        alloc::vec!["false".to_string(), "true".to_string()],
        dim,
        weights,
        bias,
        cfg.l2_lambda,
    )?;
    Ok(ProbeFit { probe, train, test })
}

/// Trains the which-relation probe with a multinomial logistic loss.
///
/// Run [`crate::corpus::filter_relations`] first to restrict to frequent
/// relations. Train and test sets are a uniform random split capped at
/// `max_train` / `max_test`, so class proportions follow the data.
pub fn train_attention_multiclass(ds: &AttentionVectorDataset, cfg: &ProbeTrainConfig) -> Result<ProbeFit> {
    cfg.validate()?;
    let mut class_index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, r) in ds.records.iter().enumerate() {
        match &r.label {
            AttentionLabel::Relation(rel) => {
                class_index.insert(rel.clone(), 0);
            }
            AttentionLabel::HasRelation(_) => {
                return Err(Error::validation(format!(
                    "record {i} carries a boolean label; multiclass probe needs relation labels"
                )))
            }
        }
    }
    if class_index.len() < 2 {
        return Err(Error::validation(format!(
            "multiclass probe needs at least two non-empty classes, found {}",
            class_index.len()
        )));
    }
    for (i, v) in class_index.values_mut().enumerate() {
        *v = i;
    }
    let classes: Vec<String> = class_index.keys().cloned().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng);
    let n_train = split_count(order.len(), cfg.train_fraction).min(cfg.max_train);
    let mut train = order[..n_train].to_vec();
    let rest = &order[n_train..];
    let mut test = rest[..rest.len().min(cfg.max_test)].to_vec();
    train.sort_unstable();
    test.sort_unstable();

    let dim = ds.vector_len();
    let label_of = |i: usize| match &ds.records[i].label {
        AttentionLabel::Relation(r) => class_index[r],
        AttentionLabel::HasRelation(_) => unreachable!("checked above"),
    };
    let xs: Vec<Vec<f64>> = train.iter().map(|&i| vector::to_f64(&ds.records[i].vector.values)).collect();
    let ys: Vec<usize> = train.iter().map(|&i| label_of(i)).collect();
    let (weights, bias) = sgd_logistic(&xs, &ys, classes.len(), dim, cfg, &mut rng);
    let probe = LinearProbe::from_parts(classes, dim, weights, bias, cfg.l2_lambda)?;
    Ok(ProbeFit { probe, train, test })
}

/// Mini-batch SGD on the logistic (`rows == 1`) or softmax loss with penalty
/// `½·λ‖W‖²` on the weights. Returns `(weights, bias)`.
fn sgd_logistic(
    xs: &[Vec<f64>],
    ys: &[usize],
    classes: usize,
    dim: usize,
    cfg: &ProbeTrainConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let rows = if classes == 1 { 1 } else { classes };
    let mut w = alloc::vec![0.0; rows * dim];
    let mut b = alloc::vec![0.0; rows];
    let mut gw = alloc::vec![0.0; rows * dim];
    let mut gb = alloc::vec![0.0; rows];
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut lr = cfg.learning_rate;
    let mut scores = alloc::vec![0.0; rows];

    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch_size) {
            gw.iter_mut().for_each(|g| *g = 0.0);
            gb.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let x = &xs[i];
                for r in 0..rows {
                    scores[r] = vector::dot(&w[r * dim..(r + 1) * dim], x) + b[r];
                }
                if rows == 1 {
                    // d/ds of log(1 + e^{-y s}) with y in {0, 1}
                    let p = sigmoid(scores[0]);
                    scores[0] = p - ys[i] as f64;
                } else {
                    softmax_in_place(&mut scores);
                    scores[ys[i]] -= 1.0;
                }
                for r in 0..rows {
                    let g = scores[r];
                    if g == 0.0 {
                        continue;
                    }
                    gb[r] += g;
                    for (gwj, xj) in gw[r * dim..(r + 1) * dim].iter_mut().zip(x) {
                        *gwj += g * xj;
                    }
                }
            }
            let inv = 1.0 / batch.len() as f64;
            for (wj, gj) in w.iter_mut().zip(&gw) {
                *wj -= lr * (gj * inv + cfg.l2_lambda * *wj);
            }
            for (bj, gj) in b.iter_mut().zip(&gb) {
                *bj -= lr * gj * inv;
            }
        }
        lr *= cfg.lr_decay;
    }
    (w, b)
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + libm::exp(-s))
    } else {
        let e = libm::exp(s);
        e / (1.0 + e)
    }
}

fn softmax_in_place(s: &mut [f64]) {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in s.iter_mut() {
        *v = libm::exp(*v - max);
        total += *v;
    }
    s.iter_mut().for_each(|v| *v /= total);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
    pub predicted: usize,
    /// The class occurs in the evaluation data but the probe has no row for it.
    pub unseen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeMetrics {
    pub accuracy: f64,
    pub total: usize,
    pub per_class: Vec<ClassMetrics>,
}

/// Accuracy and per-class precision/recall. Precision of a never-predicted
/// class is reported as 0.
pub fn evaluate_probe(probe: &LinearProbe, ds: &AttentionVectorDataset) -> Result<ProbeMetrics> {
    if ds.vector_len() != probe.dim() {
        return Err(Error::DimensionMismatch {
            expected: probe.dim(),
            found: ds.vector_len(),
        });
    }
    let golds: Vec<String> = ds.records.iter().map(|r| r.label.class_name()).collect();
    let preds: Vec<String> = ds
        .records
        .iter()
        .map(|r| probe.classes()[probe.predict(&vector::to_f64(&r.vector.values))].clone())
        .collect();
    Ok(score_predictions(probe.classes(), &golds, &preds))
}

/// Tallies a confusion matrix into [`ProbeMetrics`]. Classes in `golds` that
/// are missing from `known` are appended and flagged as unseen.
pub fn score_predictions(known: &[String], golds: &[String], preds: &[String]) -> ProbeMetrics {
    let mut classes: Vec<(String, bool)> = known.iter().map(|c| (c.clone(), false)).collect();
    for g in golds {
        if !classes.iter().any(|(c, _)| c == g) {
            classes.push((g.clone(), true));
        }
    }
    let per_class = classes
        .iter()
        .map(|(class, unseen)| {
            let support = golds.iter().filter(|g| *g == class).count();
            let predicted = preds.iter().filter(|p| *p == class).count();
            let hits = golds.iter().zip(preds).filter(|(g, p)| *g == class && *p == class).count();
            ClassMetrics {
                class: class.clone(),
                precision: ratio(hits, predicted),
                recall: ratio(hits, support),
                support,
                predicted,
                unseen: *unseen,
            }
        })
        .collect();
    let correct = golds.iter().zip(preds).filter(|(g, p)| g == p).count();
    ProbeMetrics {
        accuracy: ratio(correct, golds.len()),
        total: golds.len(),
        per_class,
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

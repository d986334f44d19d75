//! Nearest-centroid word-sense disambiguation.
//!
//! Each `(lemma, sense)` seen in training gets the mean of its embeddings.
//! A query takes the sense whose centroid is closest in Euclidean distance,
//! falling back to the most frequent sense for lemmas without centroids.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::EmbeddingCorpus;
use crate::error::{Error, Result};
use crate::probes::ProbeMatrix;
use crate::vector;

/// Returned for lemmas with neither centroids nor a frequency record.
pub const UNKNOWN_SENSE: &str = "UNKNOWN";

/// Lemma → sense → occurrence count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SenseInventory {
    counts: BTreeMap<String, BTreeMap<String, usize>>,
}

impl SenseInventory {
    pub fn add(&mut self, lemma: &str, sense: &str, count: usize) {
        *self
            .counts
            .entry(lemma.to_lowercase())
            .or_default()
            .entry(sense.to_string())
            .or_insert(0) += count;
    }

    pub fn from_corpus(corpus: &EmbeddingCorpus) -> Self {
        let mut inv = SenseInventory::default();
        for s in &corpus.sentences {
            for label in s.senses.iter().flatten() {
                inv.add(&label.lemma, &label.sense, 1);
            }
        }
        inv
    }

    pub fn senses(&self, lemma: &str) -> Option<&BTreeMap<String, usize>> {
        self.counts.get(&lemma.to_lowercase())
    }

    /// Highest-count sense; ties go to the lexicographically smallest id.
    pub fn most_frequent(&self, lemma: &str) -> Option<&str> {
        let senses = self.senses(lemma)?;
        let mut best: Option<(&str, usize)> = None;
        for (s, &c) in senses {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((s.as_str(), c));
            }
        }
        best.map(|(s, _)| s)
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenseCentroid {
    pub sense: String,
    pub count: usize,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    layer: usize,
    input_dim: usize,
    probe: Option<ProbeMatrix>,
    /// Lemma → centroids sorted by sense id.
    centroids: BTreeMap<String, Vec<SenseCentroid>>,
    inventory: SenseInventory,
}

/// Where a prediction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction<'a> {
    Centroid(&'a str),
    MostFrequent(&'a str),
    Unknown,
}

impl<'a> Prediction<'a> {
    pub fn sense(&self) -> &'a str {
        match *self {
            Prediction::Centroid(s) | Prediction::MostFrequent(s) => s,
            Prediction::Unknown => UNKNOWN_SENSE,
        }
    }
}

/// Builds centroids from every sense-labelled token of `training` at `layer`,
/// after applying `probe` when given.
pub fn fit_centroids(training: &EmbeddingCorpus, layer: usize, probe: Option<&ProbeMatrix>) -> Result<CentroidModel> {
    let occurrences = training.sense_occurrences(layer)?;
    if occurrences.is_empty() {
        return Err(Error::validation("training corpus has no sense-labelled tokens"));
    }
    if let Some(p) = probe {
        if p.input_dim() != training.dim() {
            return Err(Error::DimensionMismatch {
                expected: training.dim(),
                found: p.input_dim(),
            });
        }
    }
    let mut groups: BTreeMap<(String, String), Vec<Vec<f64>>> = BTreeMap::new();
    let mut inventory = SenseInventory::default();
    for o in occurrences {
        inventory.add(&o.lemma, &o.sense, 1);
        let v = match probe {
            Some(p) => p.apply_one(&o.vector)?,
            None => o.vector,
        };
        groups.entry((o.lemma, o.sense)).or_default().push(v);
    }
    let mut centroids: BTreeMap<String, Vec<SenseCentroid>> = BTreeMap::new();
    for ((lemma, sense), vs) in groups {
        let centroid = vector::mean(vs.iter().map(Vec::as_slice)).expect("group is non-empty");
        centroids.entry(lemma).or_default().push(SenseCentroid {
            sense,
            count: vs.len(),
            centroid,
        });
    }
    Ok(CentroidModel {
        layer,
        input_dim: training.dim(),
        probe: probe.cloned(),
        centroids,
        inventory,
    })
}

impl CentroidModel {
    pub fn from_parts(
        layer: usize,
        input_dim: usize,
        probe: Option<ProbeMatrix>,
        centroids: BTreeMap<String, Vec<SenseCentroid>>,
        inventory: SenseInventory,
    ) -> Result<Self> {
        let out_dim = probe.as_ref().map_or(input_dim, ProbeMatrix::output_dim);
        for (lemma, list) in &centroids {
            for c in list {
                if c.centroid.len() != out_dim || !vector::is_finite(&c.centroid) {
                    return Err(Error::validation(format!(
                        "centroid for ({lemma}, {}) has wrong length or non-finite values",
                        c.sense
                    )));
                }
            }
        }
        let mut centroids = centroids;
        for list in centroids.values_mut() {
            list.sort_by(|a, b| a.sense.cmp(&b.sense));
        }
        Ok(CentroidModel {
            layer,
            input_dim,
            probe,
            centroids,
            inventory,
        })
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn probe(&self) -> Option<&ProbeMatrix> {
        self.probe.as_ref()
    }

    pub fn centroids(&self) -> &BTreeMap<String, Vec<SenseCentroid>> {
        &self.centroids
    }

    pub fn inventory(&self) -> &SenseInventory {
        &self.inventory
    }

    /// Adds frequency records (e.g. from a dictionary) used as the fallback
    /// for lemmas that have no centroids.
    pub fn with_fallback_inventory(mut self, extra: &SenseInventory) -> Self {
        for (lemma, senses) in &extra.counts {
            for (sense, &count) in senses {
                self.inventory.add(lemma, sense, count);
            }
        }
        self
    }

    fn project(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        if embedding.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: embedding.len(),
            });
        }
        match &self.probe {
            Some(p) => p.apply_one(embedding),
            None => Ok(embedding.to_vec()),
        }
    }

    /// Euclidean distance from `embedding` to each of the lemma's centroids.
    pub fn distances(&self, embedding: &[f64], lemma: &str) -> Result<Vec<(&str, f64)>> {
        let q = self.project(embedding)?;
        Ok(self
            .centroids
            .get(&lemma.to_lowercase())
            .map(|list| {
                list.iter()
                    .map(|c| (c.sense.as_str(), libm::sqrt(vector::sq_dist(&q, &c.centroid))))
                    .collect()
            })
            .unwrap_or_default())
    }

    /// Nearest centroid of `lemma`; ties go to the smallest sense id.
    pub fn classify(&self, embedding: &[f64], lemma: &str) -> Result<Prediction<'_>> {
        let key = lemma.to_lowercase();
        if let Some(list) = self.centroids.get(&key) {
            let q = self.project(embedding)?;
            let mut best: Option<(&str, f64)> = None;
            for c in list {
                let d = vector::sq_dist(&q, &c.centroid);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((c.sense.as_str(), d));
                }
            }
            if let Some((s, _)) = best {
                return Ok(Prediction::Centroid(s));
            }
        }
        Ok(match self.inventory.most_frequent(&key) {
            Some(s) => Prediction::MostFrequent(s),
            None => Prediction::Unknown,
        })
    }

    /// Always answers with the most frequent training sense.
    pub fn most_frequent_sense(&self, lemma: &str) -> Prediction<'_> {
        match self.inventory.most_frequent(lemma) {
            Some(s) => Prediction::MostFrequent(s),
            None => Prediction::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WsdScores {
    pub total: usize,
    pub answered: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    /// Micro-averaged; equals accuracy when every instance gets an answer.
    pub f1: f64,
    pub accuracy: f64,
}

impl WsdScores {
    fn from_counts(total: usize, answered: usize, correct: usize) -> Self {
        let precision = if answered == 0 { 0.0 } else { correct as f64 / answered as f64 };
        let recall = correct as f64 / total as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        WsdScores {
            total,
            answered,
            correct,
            precision,
            recall,
            f1,
            accuracy: recall,
        }
    }
}

fn score_with<F>(model: &CentroidModel, test: &EmbeddingCorpus, mut predict: F) -> Result<WsdScores>
where
    F: FnMut(&CentroidModel, &[f64], &str) -> Result<String>,
{
    let occurrences = test.sense_occurrences(model.layer)?;
    if occurrences.is_empty() {
        return Err(Error::validation("test corpus has no sense-labelled tokens"));
    }
    let mut answered = 0;
    let mut correct = 0;
    for o in &occurrences {
        let guess = predict(model, &o.vector, &o.lemma)?;
        if guess != UNKNOWN_SENSE {
            answered += 1;
            if guess == o.sense {
                correct += 1;
            }
        }
    }
    Ok(WsdScores::from_counts(occurrences.len(), answered, correct))
}

/// Scores nearest-centroid predictions on every sense-labelled test token.
/// `UNKNOWN` answers count as abstentions.
pub fn evaluate_f1(model: &CentroidModel, test: &EmbeddingCorpus) -> Result<WsdScores> {
    score_with(model, test, |m, v, lemma| Ok(m.classify(v, lemma)?.sense().to_string()))
}

/// Scores the most-frequent-sense baseline.
pub fn evaluate_most_frequent(model: &CentroidModel, test: &EmbeddingCorpus) -> Result<WsdScores> {
    score_with(model, test, |m, _, lemma| Ok(m.most_frequent_sense(lemma).sense().to_string()))
}

/// Fits and scores one model per layer.
pub fn evaluate_layers(
    train: &EmbeddingCorpus,
    test: &EmbeddingCorpus,
    layers: &[usize],
    probe: Option<&ProbeMatrix>,
) -> Result<Vec<(usize, WsdScores)>> {
    layers
        .iter()
        .map(|&l| {
            let model = fit_centroids(train, l, probe)?;
            Ok((l, evaluate_f1(&model, test)?))
        })
        .collect()
}

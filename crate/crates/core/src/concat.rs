//! Sentence-concatenation experiment.
//!
//! Two sentences using the same keyword in different senses are embedded
//! alone and joined into one sentence. For each keyword instance the
//! *similarity ratio* is `cos(e, matching centroid) / cos(e, opposing centroid)`;
//! comparing the individual and concatenated ratios shows how much the
//! partner sentence pulls the keyword towards the other sense.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{EmbeddingCorpus, SentenceKind};
use crate::error::{Error, Result};
use crate::probes::ProbeMatrix;
use crate::vector;

/// One keyword used in two senses, plus the exporter's concatenation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensePair {
    pub keyword: String,
    pub sentence_a: String,
    pub token_a: usize,
    pub sense_a: String,
    pub sentence_b: String,
    pub token_b: usize,
    pub sense_b: String,
    pub concatenated: String,
    /// Keyword positions inside the concatenated sentence.
    pub concat_token_a: usize,
    pub concat_token_b: usize,
}

impl SensePair {
    pub fn validate(&self) -> Result<()> {
        if self.sense_a == self.sense_b {
            return Err(Error::validation(format!(
                "pair for {:?} uses the same sense {:?} twice",
                self.keyword, self.sense_a
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CentroidMode {
    /// Exclude the instance being scored from its own sense centroid.
    #[default]
    LeaveOneOut,
    Inclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCentroids {
    pub a_matching: Vec<f64>,
    pub a_opposing: Vec<f64>,
    pub b_matching: Vec<f64>,
    pub b_opposing: Vec<f64>,
}

/// Embedding lookup with an optional probe applied, plus per-sense sums of
/// individual-sentence occurrences at one layer.
struct View<'a> {
    corpus: &'a EmbeddingCorpus,
    probe: Option<&'a ProbeMatrix>,
    layer: usize,
    sums: BTreeMap<(String, String), (Vec<f64>, Vec<(usize, usize)>)>,
}

impl<'a> View<'a> {
    fn new(corpus: &'a EmbeddingCorpus, probe: Option<&'a ProbeMatrix>, layer: usize) -> Result<Self> {
        let mut view = View {
            corpus,
            probe,
            layer,
            sums: BTreeMap::new(),
        };
        for (si, s) in corpus.sentences.iter().enumerate() {
            if s.kind != SentenceKind::Individual {
                continue;
            }
            for (t, label) in s.senses.iter().enumerate() {
                let Some(label) = label else { continue };
                let v = view.vector(si, t)?;
                let entry = view
                    .sums
                    .entry((label.lemma.to_lowercase(), label.sense.clone()))
                    .or_insert_with(|| (vector::zeros(v.len()), Vec::new()));
                entry.0.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
                entry.1.push((si, t));
            }
        }
        Ok(view)
    }

    fn vector(&self, sentence: usize, token: usize) -> Result<Vec<f64>> {
        let v = self.corpus.vector(&self.corpus.sentences[sentence], self.layer, token);
        match self.probe {
            Some(p) => p.apply_one(&v),
            None => Ok(v),
        }
    }

    /// Mean over individual-sentence occurrences of `(keyword, sense)`,
    /// leaving out the `(sentence, token)` in `exclude` if it is one of them.
    fn centroid(&self, keyword: &str, sense: &str, exclude: Option<(usize, usize)>) -> Result<Option<Vec<f64>>> {
        let Some((sum, members)) = self.sums.get(&(keyword.to_lowercase(), String::from(sense))) else {
            return Ok(None);
        };
        let mut sum = sum.clone();
        let mut count = members.len();
        if let Some(ex) = exclude.filter(|ex| members.contains(ex)) {
            let v = self.vector(ex.0, ex.1)?;
            sum.iter_mut().zip(&v).for_each(|(a, x)| *a -= x);
            count -= 1;
        }
        if count == 0 {
            return Ok(None);
        }
        sum.iter_mut().for_each(|x| *x /= count as f64);
        Ok(Some(sum))
    }
}

fn sentence_index(corpus: &EmbeddingCorpus, id: &str) -> Result<usize> {
    corpus
        .sentences
        .iter()
        .position(|s| s.id == id)
        .ok_or_else(|| Error::NotFound(format!("sentence {id:?}")))
}

fn check_token(corpus: &EmbeddingCorpus, sentence: usize, token: usize) -> Result<()> {
    let s = &corpus.sentences[sentence];
    if token >= s.len() {
        return Err(Error::validation(format!(
            "token {token} out of range for sentence {:?} ({} tokens)",
            s.id,
            s.len()
        )));
    }
    Ok(())
}

/// Matching and opposing centroids for both sides of a pair at `layer`.
pub fn matching_opposing_centroids(
    pair: &SensePair,
    corpus: &EmbeddingCorpus,
    layer: usize,
    probe: Option<&ProbeMatrix>,
    mode: CentroidMode,
) -> Result<PairCentroids> {
    corpus.check_layer(layer)?;
    let view = View::new(corpus, probe, layer)?;
    centroids_in(&view, pair, mode)
}

fn centroids_in(view: &View<'_>, pair: &SensePair, mode: CentroidMode) -> Result<PairCentroids> {
    pair.validate()?;
    let corpus = view.corpus;
    let sa = sentence_index(corpus, &pair.sentence_a)?;
    let sb = sentence_index(corpus, &pair.sentence_b)?;
    check_token(corpus, sa, pair.token_a)?;
    check_token(corpus, sb, pair.token_b)?;
    let (ex_a, ex_b) = match mode {
        CentroidMode::LeaveOneOut => (Some((sa, pair.token_a)), Some((sb, pair.token_b))),
        CentroidMode::Inclusive => (None, None),
    };
    let missing = |which: &str| Error::validation(format!("no {which} occurrences for keyword {:?}", pair.keyword));
    Ok(PairCentroids {
        a_matching: view.centroid(&pair.keyword, &pair.sense_a, ex_a)?.ok_or_else(|| missing("sense-A"))?,
        a_opposing: view.centroid(&pair.keyword, &pair.sense_b, ex_a)?.ok_or_else(|| missing("sense-B"))?,
        b_matching: view.centroid(&pair.keyword, &pair.sense_b, ex_b)?.ok_or_else(|| missing("sense-B"))?,
        b_opposing: view.centroid(&pair.keyword, &pair.sense_a, ex_b)?.ok_or_else(|| missing("sense-A"))?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityRatio {
    pub value: f64,
    pub cos_matching: f64,
    pub cos_opposing: f64,
    /// The opposing similarity was not positive, so the ratio's sign or
    /// magnitude is not meaningful on its own.
    pub flagged: bool,
}

impl SimilarityRatio {
    /// The keyword sits closer (in cosine) to the opposing sense.
    pub fn misclassified(&self) -> bool {
        self.cos_matching < self.cos_opposing
    }
}

/// `cos(e, matching) / cos(e, opposing)`.
pub fn similarity_ratio(keyword: &[f64], matching: &[f64], opposing: &[f64]) -> Result<SimilarityRatio> {
    if keyword.len() != matching.len() || keyword.len() != opposing.len() {
        return Err(Error::DimensionMismatch {
            expected: keyword.len(),
            found: if keyword.len() != matching.len() { matching.len() } else { opposing.len() },
        });
    }
    let zero = || Error::validation("similarity ratio of a zero vector");
    let cm = vector::cosine(keyword, matching).ok_or_else(zero)?;
    let co = vector::cosine(keyword, opposing).ok_or_else(zero)?;
    Ok(SimilarityRatio {
        value: cm / co,
        cos_matching: cm,
        cos_opposing: co,
        flagged: co <= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceRatios {
    pub side: Side,
    pub individual: SimilarityRatio,
    pub concatenated: SimilarityRatio,
}

/// Individual and concatenated ratios for both keyword instances of a pair.
pub fn pair_ratios(
    pair: &SensePair,
    corpus: &EmbeddingCorpus,
    layer: usize,
    probe: Option<&ProbeMatrix>,
    mode: CentroidMode,
) -> Result<[InstanceRatios; 2]> {
    corpus.check_layer(layer)?;
    let view = View::new(corpus, probe, layer)?;
    ratios_in(&view, pair, mode)
}

fn ratios_in(view: &View<'_>, pair: &SensePair, mode: CentroidMode) -> Result<[InstanceRatios; 2]> {
    let corpus = view.corpus;
    let c = centroids_in(view, pair, mode)?;
    let sa = sentence_index(corpus, &pair.sentence_a)?;
    let sb = sentence_index(corpus, &pair.sentence_b)?;
    let sc = sentence_index(corpus, &pair.concatenated)?;
    check_token(corpus, sc, pair.concat_token_a)?;
    check_token(corpus, sc, pair.concat_token_b)?;
    let ea = view.vector(sa, pair.token_a)?;
    let eb = view.vector(sb, pair.token_b)?;
    let ca = view.vector(sc, pair.concat_token_a)?;
    let cb = view.vector(sc, pair.concat_token_b)?;
    Ok([
        InstanceRatios {
            side: Side::A,
            individual: similarity_ratio(&ea, &c.a_matching, &c.a_opposing)?,
            concatenated: similarity_ratio(&ca, &c.a_matching, &c.a_opposing)?,
        },
        InstanceRatios {
            side: Side::B,
            individual: similarity_ratio(&eb, &c.b_matching, &c.b_opposing)?,
            concatenated: similarity_ratio(&cb, &c.b_matching, &c.b_opposing)?,
        },
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRatios {
    pub layer: usize,
    /// Keyword instances scored (two per usable pair).
    pub instances: usize,
    /// Means over instances whose ratio is not flagged.
    pub mean_individual: f64,
    pub mean_concatenated: f64,
    pub misclassified_individual: f64,
    pub misclassified_concatenated: f64,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub layers: Vec<LayerRatios>,
    pub pairs_total: usize,
    /// `(pair index, reason)` for pairs that could not be scored.
    pub skipped: Vec<(usize, String)>,
    /// Requested layers the corpus does not have.
    pub missing_layers: Vec<usize>,
    pub probe_applied: bool,
}

impl RatioReport {
    pub fn final_layer(&self) -> Option<&LayerRatios> {
        self.layers.last()
    }
}

/// Runs every pair at every requested layer (all corpus layers when `layers`
/// is `None`). Pairs that fail at any layer are skipped for all layers.
pub fn run_experiment(
    pairs: &[SensePair],
    corpus: &EmbeddingCorpus,
    layers: Option<&[usize]>,
    probe: Option<&ProbeMatrix>,
    mode: CentroidMode,
) -> Result<RatioReport> {
    if let Some(p) = probe {
        if p.input_dim() != corpus.dim() {
            return Err(Error::DimensionMismatch {
                expected: corpus.dim(),
                found: p.input_dim(),
            });
        }
    }
    let all: Vec<usize> = (0..corpus.meta.layer_count).collect();
    let requested = layers.unwrap_or(&all);
    let (present, missing_layers): (Vec<usize>, Vec<usize>) =
        requested.iter().partition(|&&l| l < corpus.meta.layer_count);

    let mut per_layer: BTreeMap<usize, Vec<InstanceRatios>> = BTreeMap::new();
    let mut skipped = Vec::new();
    let views = present
        .iter()
        .map(|&l| View::new(corpus, probe, l))
        .collect::<Result<Vec<_>>>()?;
    'pairs: for (i, pair) in pairs.iter().enumerate() {
        let mut results = Vec::with_capacity(present.len());
        for (&l, view) in present.iter().zip(&views) {
            match ratios_in(view, pair, mode) {
                Ok(r) => results.push((l, r)),
                Err(e) => {
                    log::warn!("skipping pair {i} ({}): {e}", pair.keyword);
                    skipped.push((i, format!("{e}")));
                    continue 'pairs;
                }
            }
        }
        for (l, r) in results {
            per_layer.entry(l).or_default().extend(r);
        }
    }
    for l in &missing_layers {
        log::warn!("layer {l} is not present in the corpus");
    }

    let layers = present
        .iter()
        .filter_map(|l| per_layer.get(l).map(|v| (*l, v)))
        .map(|(layer, inst)| summarize(layer, inst))
        .collect();
    Ok(RatioReport {
        layers,
        pairs_total: pairs.len(),
        skipped,
        missing_layers,
        probe_applied: probe.is_some(),
    })
}

fn summarize(layer: usize, inst: &[InstanceRatios]) -> LayerRatios {
    let n = inst.len() as f64;
    let mean_of = |f: fn(&InstanceRatios) -> SimilarityRatio| {
        let kept: Vec<f64> = inst.iter().map(f).filter(|r| !r.flagged).map(|r| r.value).collect();
        if kept.is_empty() {
            f64::NAN
        } else {
            kept.iter().sum::<f64>() / kept.len() as f64
        }
    };
    let rate = |f: fn(&InstanceRatios) -> SimilarityRatio| inst.iter().filter(|r| f(r).misclassified()).count() as f64 / n;
    LayerRatios {
        layer,
        instances: inst.len(),
        mean_individual: mean_of(|r| r.individual),
        mean_concatenated: mean_of(|r| r.concatenated),
        misclassified_individual: rate(|r| r.individual),
        misclassified_concatenated: rate(|r| r.concatenated),
        flagged: inst.iter().filter(|r| r.individual.flagged || r.concatenated.flagged).count(),
    }
}

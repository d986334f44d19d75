//! Seeded generators for corpora with planted structure: linearly separable
//! attention vectors, parse trees embedded by their canonical coordinates,
//! sense clusters hidden in a low-dimensional subspace, and concatenations
//! that mix a keyword towards its opposing sense.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::concat::SensePair;
use crate::corpus::{
    AttentionLabel, AttentionRecord, AttentionVector, AttentionVectorDataset, CorpusMeta, EmbeddingCorpus, Parse,
    SenseLabel, Sentence, SentenceKind,
};
use crate::tree::Tree;
use crate::tree_geometry::canonical_pythagorean_embedding;
use crate::vector;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Vec<f64> {
    (0..n).map(|_| gaussian(rng) * std).collect()
}

fn unit_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, n, 1.0);
        let norm = vector::norm(&v);
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Random recursive tree: node `i > 0` attaches to a uniform earlier node.
pub fn random_tree(n: usize, rng: &mut impl Rng) -> Tree {
    let parents = (0..n)
        .map(|i| if i == 0 { None } else { Some(rng.random_range(0..i)) })
        .collect();
    Tree::from_parents(parents).expect("recursive construction is a tree")
}

/// Boolean labels `w*·x > 0` for Gaussian `x`, discarding points whose
/// normalised margin is below `margin`.
pub fn planted_binary_attention(n: usize, layers: usize, heads: usize, margin: f64, seed: u64) -> AttentionVectorDataset {
    let dim = layers * heads;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = unit_vec(&mut rng, dim);
    let mut records = Vec::with_capacity(n);
    while records.len() < n {
        let x = gaussian_vec(&mut rng, dim, 1.0);
        let s = vector::dot(&w, &x);
        if s.abs() < margin {
            continue;
        }
        records.push(attention_record(records.len(), x, AttentionLabel::HasRelation(s > 0.0)));
    }
    AttentionVectorDataset {
        layer_count: layers,
        head_count: heads,
        records,
    }
}

/// Relation labels `argmax_c w_c·x`, discarding points whose top-two score
/// gap is below `margin`. Classes are named `rel0`, `rel1`, ...
pub fn planted_multiclass_attention(
    n: usize,
    layers: usize,
    heads: usize,
    classes: usize,
    margin: f64,
    seed: u64,
) -> AttentionVectorDataset {
    let dim = layers * heads;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ws: Vec<Vec<f64>> = (0..classes).map(|_| unit_vec(&mut rng, dim)).collect();
    let mut records = Vec::with_capacity(n);
    while records.len() < n {
        let x = gaussian_vec(&mut rng, dim, 1.0);
        let mut scores: Vec<(f64, usize)> = ws.iter().enumerate().map(|(c, w)| (vector::dot(w, &x), c)).collect();
        scores.sort_by(|a, b| b.0.total_cmp(&a.0));
        if scores[0].0 - scores[1].0 < margin {
            continue;
        }
        let label = AttentionLabel::Relation(format!("rel{}", scores[0].1));
        records.push(attention_record(records.len(), x, label));
    }
    AttentionVectorDataset {
        layer_count: layers,
        head_count: heads,
        records,
    }
}

fn attention_record(i: usize, x: Vec<f64>, label: AttentionLabel) -> AttentionRecord {
    AttentionRecord {
        vector: AttentionVector {
            sentence_id: format!("{}", i / 16),
            token_i: i % 16,
            token_j: i % 16 + 1,
            forms: None,
            values: x.iter().map(|&v| v as f32).collect(),
        },
        label,
    }
}

/// Shape of a corpus whose embeddings are canonical tree coordinates plus noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeCorpusSpec {
    pub sentences: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub noise_dims: usize,
    pub noise_std: f64,
    /// Replace each parse by a random relabelling of its nodes, breaking the
    /// link between embeddings and tree distances.
    pub shuffle_parses: bool,
    pub seed: u64,
}

impl TreeCorpusSpec {
    /// Embedding dimension: `max_tokens − 1` tree axes plus the noise axes.
    pub fn dim(&self) -> usize {
        self.max_tokens - 1 + self.noise_dims
    }

    /// The probe that recovers the tree axes exactly.
    pub fn planted_probe(&self) -> crate::probes::ProbeMatrix {
        let k = self.dim();
        let m = self.max_tokens - 1;
        let mut entries = vec![0.0; k * m];
        for i in 0..m {
            entries[i * m + i] = 1.0;
        }
        crate::probes::ProbeMatrix::new(k, m, entries).expect("valid shape")
    }
}

/// Single-layer corpus: token `i` of a sentence is embedded at its canonical
/// coordinates in `R^(max_tokens−1)` followed by Gaussian noise.
pub fn tree_corpus(spec: &TreeCorpusSpec) -> EmbeddingCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let axes = spec.max_tokens - 1;
    let dim = spec.dim();
    let mut sentences = Vec::with_capacity(spec.sentences);
    for s in 0..spec.sentences {
        let n = rng.random_range(spec.min_tokens..=spec.max_tokens);
        let tree = random_tree(n, &mut rng);
        let coords = canonical_pythagorean_embedding(&tree);
        let mut embeddings = Vec::with_capacity(n * dim);
        for t in 0..n {
            let mut v = coords.point(t).to_vec();
            v.resize(axes, 0.0);
            v.extend(gaussian_vec(&mut rng, spec.noise_dims, spec.noise_std));
            embeddings.extend(v.iter().map(|&x| x as f32));
        }
        let parse_tree = if spec.shuffle_parses {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            // node perm[i] takes the role of node i
            let mut parents = vec![None; n];
            for i in 0..n {
                parents[perm[i]] = tree.parent(i).map(|p| perm[p]);
            }
            Tree::from_parents(parents).expect("relabelled tree")
        } else {
            tree
        };
        let relations = (0..n)
            .map(|i| if parse_tree.parent(i).is_none() { "root".to_string() } else { "dep".to_string() })
            .collect();
        sentences.push(Sentence {
            id: format!("t{s}"),
            tokens: (0..n).map(|i| format!("w{i}")).collect(),
            kind: SentenceKind::Individual,
            parse: Some(Parse::new(parse_tree, relations).expect("matching lengths")),
            senses: vec![],
            embeddings,
        });
    }
    EmbeddingCorpus {
        meta: CorpusMeta::new("synthetic-tree", 1, 1, dim),
        sentences,
    }
}

/// Sense clusters living in the first `signal_dims` axes, drowned by
/// isotropic nuisance noise in the remaining axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SenseCorpusSpec {
    pub lemmas: usize,
    pub senses_per_lemma: usize,
    pub occurrences_per_sense: usize,
    pub signal_dims: usize,
    pub nuisance_dims: usize,
    /// Norm of each sense mean at the last layer; layer `l` of `L` uses
    /// `signal_scale · (l + 1) / L`.
    pub signal_scale: f64,
    pub signal_noise: f64,
    pub nuisance_std: f64,
    pub layers: usize,
    /// Seed for the sense means; corpora sharing it share cluster centres.
    pub structure_seed: u64,
    /// Seed for the per-occurrence noise.
    pub sample_seed: u64,
}

impl SenseCorpusSpec {
    pub fn dim(&self) -> usize {
        self.signal_dims + self.nuisance_dims
    }
}

/// One three-token sentence per occurrence, the keyword in the middle.
pub fn sense_corpus(spec: &SenseCorpusSpec) -> EmbeddingCorpus {
    let mut structure = ChaCha8Rng::seed_from_u64(spec.structure_seed);
    let means: Vec<Vec<Vec<f64>>> = (0..spec.lemmas)
        .map(|_| {
            (0..spec.senses_per_lemma)
                .map(|_| unit_vec(&mut structure, spec.signal_dims))
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.sample_seed);
    let dim = spec.dim();
    let mut sentences = Vec::new();
    for (li, lemma_means) in means.iter().enumerate() {
        for (si, mean) in lemma_means.iter().enumerate() {
            for o in 0..spec.occurrences_per_sense {
                let signal_noise = gaussian_vec(&mut rng, spec.signal_dims, spec.signal_noise);
                let nuisance = gaussian_vec(&mut rng, spec.nuisance_dims, spec.nuisance_std);
                let fillers: Vec<Vec<f64>> = (0..2).map(|_| gaussian_vec(&mut rng, dim, 1.0)).collect();
                let mut embeddings = Vec::with_capacity(spec.layers * 3 * dim);
                for layer in 0..spec.layers {
                    let scale = spec.signal_scale * (layer + 1) as f64 / spec.layers as f64;
                    let keyword: Vec<f64> = mean
                        .iter()
                        .zip(&signal_noise)
                        .map(|(m, n)| m * scale + n)
                        .chain(nuisance.iter().copied())
                        .collect();
                    for v in [&fillers[0], &keyword, &fillers[1]] {
                        embeddings.extend(v.iter().map(|&x| x as f32));
                    }
                }
                let lemma = format!("lemma{li}");
                sentences.push(Sentence {
                    id: format!("{lemma}-s{si}-{o}"),
                    tokens: vec!["the".into(), lemma.clone(), "here".into()],
                    kind: SentenceKind::Individual,
                    parse: None,
                    senses: vec![None, Some(SenseLabel::new(lemma, format!("sense{si}"))), None],
                    embeddings,
                });
            }
        }
    }
    EmbeddingCorpus {
        meta: CorpusMeta::new("synthetic-sense", spec.layers, 1, dim),
        sentences,
    }
}

/// Keywords with two senses whose concatenated embeddings are
/// `(1 − α)·e + α·c_opposing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingSpec {
    pub keywords: usize,
    pub occurrences_per_sense: usize,
    pub dim: usize,
    pub layers: usize,
    pub noise: f64,
    pub alpha: f64,
    /// Concatenated embeddings equal the individual ones (a random partner
    /// sentence that does not move the keyword).
    pub control: bool,
    pub seed: u64,
}

pub struct MixingCorpus {
    pub corpus: EmbeddingCorpus,
    pub pairs: Vec<SensePair>,
}

pub fn mixing_corpus(spec: &MixingSpec) -> MixingCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.dim;
    let tokens = |kw: &str| -> Vec<String> { vec!["we".into(), kw.to_string(), "now".into()] };
    let mut sentences = Vec::new();
    let mut pairs = Vec::new();
    // per keyword, per sense: occurrence vectors per layer
    for k in 0..spec.keywords {
        let kw = format!("key{k}");
        let shared = gaussian_vec(&mut rng, dim, 2.0);
        let means: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                let dir = gaussian_vec(&mut rng, dim, 1.0);
                shared.iter().zip(&dir).map(|(a, b)| a + b).collect()
            })
            .collect();
        // occ[s][o][layer] = keyword embedding
        let mut occ: Vec<Vec<Vec<Vec<f64>>>> = vec![Vec::new(), Vec::new()];
        let mut fillers: Vec<Vec<Vec<Vec<f64>>>> = vec![Vec::new(), Vec::new()];
        for s in 0..2 {
            for _ in 0..spec.occurrences_per_sense {
                let per_layer = (0..spec.layers)
                    .map(|l| {
                        let scale = (l + 1) as f64 / spec.layers as f64;
                        means[s]
                            .iter()
                            .map(|m| m * scale + gaussian(&mut rng) * spec.noise)
                            .collect()
                    })
                    .collect();
                occ[s].push(per_layer);
                fillers[s].push((0..2).map(|_| gaussian_vec(&mut rng, dim, 1.0)).collect());
            }
        }
        let round = |v: &[f64]| -> Vec<f64> { v.iter().map(|&x| x as f32 as f64).collect() };
        // centroids exactly as the experiment will see them (f32 storage)
        let centroid = |s: usize, l: usize| -> Vec<f64> {
            let rounded: Vec<Vec<f64>> = occ[s].iter().map(|o| round(&o[l])).collect();
            vector::mean(rounded.iter().map(Vec::as_slice)).expect("non-empty")
        };

        let mut ids = [Vec::new(), Vec::new()];
        for s in 0..2 {
            for o in 0..spec.occurrences_per_sense {
                let id = format!("{kw}-s{s}-{o}");
                let mut embeddings = Vec::new();
                for l in 0..spec.layers {
                    for v in [&fillers[s][o][0], &occ[s][o][l], &fillers[s][o][1]] {
                        embeddings.extend(v.iter().map(|&x| x as f32));
                    }
                }
                sentences.push(Sentence {
                    id: id.clone(),
                    tokens: tokens(&kw),
                    kind: SentenceKind::Individual,
                    parse: None,
                    senses: vec![None, Some(SenseLabel::new(kw.clone(), format!("sense{s}"))), None],
                    embeddings,
                });
                ids[s].push(id);
            }
        }

        for o in 0..spec.occurrences_per_sense {
            let cid = format!("{kw}-concat-{o}");
            let mut embeddings = Vec::new();
            for l in 0..spec.layers {
                let mixed = |s: usize| -> Vec<f64> {
                    let e = &occ[s][o][l];
                    if spec.control {
                        return e.clone();
                    }
                    let opp = centroid(1 - s, l);
                    e.iter().zip(&opp).map(|(x, c)| (1.0 - spec.alpha) * x + spec.alpha * c).collect()
                };
                let conj = vec![0.5f64; dim];
                let row: [Vec<f64>; 7] = [
                    fillers[0][o][0].clone(),
                    mixed(0),
                    fillers[0][o][1].clone(),
                    conj,
                    fillers[1][o][0].clone(),
                    mixed(1),
                    fillers[1][o][1].clone(),
                ];
                for v in &row {
                    embeddings.extend(v.iter().map(|&x| x as f32));
                }
            }
            let mut concat_tokens = tokens(&kw);
            concat_tokens.push("and".into());
            concat_tokens.extend(tokens(&kw));
            sentences.push(Sentence {
                id: cid.clone(),
                tokens: concat_tokens,
                kind: SentenceKind::Concatenated,
                parse: None,
                senses: vec![],
                embeddings,
            });
            pairs.push(SensePair {
                keyword: kw.clone(),
                sentence_a: ids[0][o].clone(),
                token_a: 1,
                sense_a: "sense0".into(),
                sentence_b: ids[1][o].clone(),
                token_b: 1,
                sense_b: "sense1".into(),
                concatenated: cid,
                concat_token_a: 1,
                concat_token_b: 5,
            });
        }
    }
    MixingCorpus {
        corpus: EmbeddingCorpus {
            meta: CorpusMeta::new("synthetic-mixing", spec.layers, 1, dim),
            sentences,
        },
        pairs,
    }
}

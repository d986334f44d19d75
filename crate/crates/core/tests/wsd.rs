mod common;

use common::*;
use embgeom_core::corpus::{CorpusMeta, EmbeddingCorpus, SenseLabel, Sentence, SentenceKind};
use embgeom_core::probes::ProbeMatrix;
use embgeom_core::synthetic::{sense_corpus, SenseCorpusSpec};
use embgeom_core::wsd::*;
use proptest::prelude::*;

fn labelled(items: &[(&str, &str, Vec<f32>)]) -> EmbeddingCorpus {
    let dim = items[0].2.len();
    let sentences = items
        .iter()
        .enumerate()
        .map(|(i, (lemma, sense, v))| Sentence {
            id: format!("s{i}"),
            tokens: vec![lemma.to_string()],
            kind: SentenceKind::Individual,
            parse: None,
            senses: vec![Some(SenseLabel::new(*lemma, *sense))],
            embeddings: v.clone(),
        })
        .collect();
    EmbeddingCorpus::new(CorpusMeta::new("fixture", 1, 1, dim), sentences).unwrap()
}

fn small_spec(sample_seed: u64) -> SenseCorpusSpec {
    SenseCorpusSpec {
        lemmas: 4,
        senses_per_lemma: 3,
        occurrences_per_sense: 6,
        signal_dims: 3,
        nuisance_dims: 3,
        signal_scale: 1.0,
        signal_noise: 0.4,
        nuisance_std: 0.5,
        layers: 2,
        structure_seed: 21,
        sample_seed,
    }
}

#[test]
fn singleton_senses_classify_perfectly() {
    let corpus = labelled(&[
        ("bank", "bank.river", vec![1.0, 0.0, 0.0]),
        ("bank", "bank.money", vec![0.0, 1.0, 0.0]),
        ("bank", "bank.tilt", vec![0.0, 0.0, 1.0]),
        ("Plant", "plant.factory", vec![1.0, 1.0, 0.0]),
        ("plant", "plant.flora", vec![-1.0, 0.5, 0.0]),
    ]);
    let model = fit_centroids(&corpus, 0, None).unwrap();
    let s = evaluate_f1(&model, &corpus).unwrap();
    assert_eq!((s.accuracy, s.f1, s.answered), (1.0, 1.0, 5));
}

#[test]
fn centroid_is_the_mean_of_occurrences() {
    let corpus = labelled(&[
        ("bass", "fish", vec![1.0, 2.0]),
        ("bass", "fish", vec![3.0, -2.0]),
        ("bass", "fish", vec![2.0, 3.0]),
        ("bass", "music", vec![-5.0, 0.5]),
    ]);
    let model = fit_centroids(&corpus, 0, None).unwrap();
    let list = &model.centroids()["bass"];
    assert_eq!(list[0].sense, "fish");
    assert_eq!(list[0].centroid, vec![2.0, 1.0]);
    assert_eq!(list[0].count, 3);
    assert_eq!(list[1].centroid, vec![-5.0, 0.5]);
}

#[test]
fn gaussian_centroids_land_near_true_means() {
    let mut rng = Oracle64(5);
    let sigma = 0.5;
    let means = [[2.0, -1.0, 0.5], [-1.0, 1.0, 3.0]];
    let mut items = Vec::new();
    for (s, m) in means.iter().enumerate() {
        for _ in 0..100 {
            let v: Vec<f32> = m.iter().map(|x| (x + sigma * rng.normal()) as f32).collect();
            items.push(("word", if s == 0 { "a" } else { "b" }, v));
        }
    }
    let model = fit_centroids(&labelled(&items), 0, None).unwrap();
    for (c, m) in model.centroids()["word"].iter().zip(&means) {
        for (x, y) in c.centroid.iter().zip(m) {
            assert!((x - y).abs() < 3.0 * sigma / 10.0, "{x} vs {y}");
        }
    }
}

#[test]
fn ties_go_to_the_first_sense() {
    let corpus = labelled(&[("bat", "zeta", vec![1.0, 0.0]), ("bat", "alpha", vec![-1.0, 0.0])]);
    let model = fit_centroids(&corpus, 0, None).unwrap();
    assert_eq!(model.classify(&[0.0, 3.0], "bat").unwrap().sense(), "alpha");
}

#[test]
fn unseen_lemma_falls_back_to_most_frequent_sense() {
    let train = labelled(&[("bank", "b1", vec![1.0, 0.0]), ("bank", "b2", vec![0.0, 1.0])]);
    let mut extra = SenseInventory::default();
    extra.add("crane", "crane.bird", 3);
    extra.add("crane", "crane.machine", 7);
    let model = fit_centroids(&train, 0, None).unwrap();
    assert_eq!(model.classify(&[0.3, 0.3], "crane").unwrap(), Prediction::Unknown);
    let model = model.with_fallback_inventory(&extra);
    assert_eq!(
        model.classify(&[0.3, 0.3], "crane").unwrap(),
        Prediction::MostFrequent("crane.machine")
    );

    let test = labelled(&[("crane", "crane.machine", vec![0.0, 0.0]), ("heron", "heron.bird", vec![1.0, 1.0])]);
    let s = evaluate_f1(&model, &test).unwrap();
    assert_eq!((s.total, s.answered, s.correct), (2, 1, 1));
    assert_eq!(s.precision, 1.0);
    assert_eq!(s.recall, 0.5);
    assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn most_frequent_baseline_counts_training_senses() {
    let train = labelled(&[
        ("bank", "b1", vec![1.0, 0.0]),
        ("bank", "b2", vec![0.0, 1.0]),
        ("bank", "b2", vec![0.0, 2.0]),
    ]);
    let test = labelled(&[("bank", "b1", vec![1.0, 0.0]), ("bank", "b2", vec![1.0, 0.0])]);
    let model = fit_centroids(&train, 0, None).unwrap();
    let s = evaluate_most_frequent(&model, &test).unwrap();
    assert_eq!(s.correct, 1);
    assert_eq!(evaluate_f1(&model, &test).unwrap().correct, 1);
}

#[test]
fn layers_with_stronger_signal_score_higher() {
    let mut spec = small_spec(1);
    spec.layers = 4;
    spec.signal_noise = 0.2;
    spec.nuisance_std = 1.0;
    let train = sense_corpus(&spec);
    spec.sample_seed = 2;
    let test = sense_corpus(&spec);
    let scores = evaluate_layers(&train, &test, &[0, 3], None).unwrap();
    assert!(scores[1].1.accuracy > scores[0].1.accuracy, "{scores:?}");
}

#[test]
fn probe_dimension_is_checked() {
    let train = sense_corpus(&small_spec(1));
    assert!(fit_centroids(&train, 0, Some(&ProbeMatrix::identity(5))).is_err());
    assert!(fit_centroids(&train, 9, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn orthonormal_probe_preserves_decisions(seed in any::<u64>(), sample in 0u64..1000) {
        let train = sense_corpus(&small_spec(sample));
        let test = sense_corpus(&small_spec(sample + 1));
        let q = random_orthogonal(6, seed);
        let probe = ProbeMatrix::new(6, 6, q).unwrap();
        let plain = fit_centroids(&train, 1, None).unwrap();
        let rotated = fit_centroids(&train, 1, Some(&probe)).unwrap();
        for o in test.sense_occurrences(1).unwrap() {
            let a = plain.distances(&o.vector, &o.lemma).unwrap();
            let b = rotated.distances(&o.vector, &o.lemma).unwrap();
            for ((sa, da), (sb, db)) in a.iter().zip(&b) {
                prop_assert_eq!(sa, sb);
                prop_assert!((da - db).abs() < 1e-9 * (1.0 + da.abs()));
            }
            prop_assert_eq!(
                plain.classify(&o.vector, &o.lemma).unwrap(),
                rotated.classify(&o.vector, &o.lemma).unwrap()
            );
        }
    }
}

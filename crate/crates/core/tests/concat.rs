use embgeom_core::concat::*;
use embgeom_core::corpus::{CorpusMeta, EmbeddingCorpus, SenseLabel, Sentence, SentenceKind};
use embgeom_core::probes::ProbeMatrix;
use embgeom_core::synthetic::{mixing_corpus, MixingSpec};
use proptest::prelude::*;

fn mixing(alpha: f64, control: bool) -> MixingSpec {
    MixingSpec {
        keywords: 6,
        occurrences_per_sense: 8,
        dim: 16,
        layers: 3,
        noise: 0.3,
        alpha,
        control,
        seed: 17,
    }
}

#[test]
fn mixing_lowers_every_instance_ratio() {
    let m = mixing_corpus(&mixing(0.3, false));
    for layer in 0..3 {
        for pair in &m.pairs {
            for r in pair_ratios(pair, &m.corpus, layer, None, CentroidMode::LeaveOneOut).unwrap() {
                assert!(!r.individual.flagged && !r.concatenated.flagged);
                assert!(
                    r.concatenated.value < r.individual.value,
                    "{} layer {layer} {:?}: {:?}",
                    pair.keyword,
                    r.side,
                    r
                );
            }
        }
    }
    let report = run_experiment(&m.pairs, &m.corpus, None, None, CentroidMode::LeaveOneOut).unwrap();
    assert_eq!(report.layers.len(), 3);
    assert!(report.skipped.is_empty());
    for l in &report.layers {
        assert_eq!(l.instances, 2 * m.pairs.len());
        assert!(l.mean_concatenated < l.mean_individual);
        assert!(l.misclassified_concatenated >= l.misclassified_individual);
    }
}

#[test]
fn mean_ratio_falls_as_mixing_grows() {
    let means: Vec<f64> = (1..=9)
        .map(|i| {
            let m = mixing_corpus(&mixing(i as f64 / 10.0, false));
            run_experiment(&m.pairs, &m.corpus, Some(&[2]), None, CentroidMode::LeaveOneOut)
                .unwrap()
                .layers[0]
                .mean_concatenated
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn random_sentence_control_leaves_ratios_unchanged() {
    let m = mixing_corpus(&mixing(0.3, true));
    let report = run_experiment(&m.pairs, &m.corpus, None, None, CentroidMode::LeaveOneOut).unwrap();
    for l in &report.layers {
        assert_eq!(l.mean_individual, l.mean_concatenated);
        assert_eq!(l.misclassified_individual, l.misclassified_concatenated);
    }
}

fn keyword_sentence(id: &str, sense: &str, v: [f32; 2]) -> Sentence {
    Sentence {
        id: id.into(),
        tokens: vec!["x".into(), "bank".into()],
        kind: SentenceKind::Individual,
        parse: None,
        senses: vec![None, Some(SenseLabel::new("bank", sense))],
        embeddings: vec![9.0, 9.0, v[0], v[1]],
    }
}

fn hand_corpus(second_money: bool) -> (EmbeddingCorpus, SensePair) {
    let mut sentences = vec![
        keyword_sentence("a1", "river", [1.0, 0.0]),
        keyword_sentence("a2", "river", [3.0, 2.0]),
        keyword_sentence("a3", "river", [2.0, 4.0]),
        keyword_sentence("b1", "money", [-1.0, 1.0]),
        Sentence {
            id: "c".into(),
            tokens: vec!["x".into(), "bank".into(), "and".into(), "x".into(), "bank".into()],
            kind: SentenceKind::Concatenated,
            parse: None,
            senses: vec![],
            embeddings: vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0],
        },
    ];
    if second_money {
        sentences.push(keyword_sentence("b2", "money", [-3.0, 3.0]));
    }
    let pair = SensePair {
        keyword: "bank".into(),
        sentence_a: "a1".into(),
        token_a: 1,
        sense_a: "river".into(),
        sentence_b: "b1".into(),
        token_b: 1,
        sense_b: "money".into(),
        concatenated: "c".into(),
        concat_token_a: 1,
        concat_token_b: 4,
    };
    (EmbeddingCorpus::new(CorpusMeta::new("fixture", 1, 1, 2), sentences).unwrap(), pair)
}

#[test]
fn centroids_match_hand_averages() {
    let (corpus, pair) = hand_corpus(true);
    let c = matching_opposing_centroids(&pair, &corpus, 0, None, CentroidMode::Inclusive).unwrap();
    assert_eq!(c.a_matching, vec![2.0, 2.0]);
    assert_eq!(c.a_opposing, vec![-2.0, 2.0]);
    // symmetric construction
    assert_eq!(c.a_opposing, c.b_matching);
    assert_eq!(c.a_matching, c.b_opposing);

    let c = matching_opposing_centroids(&pair, &corpus, 0, None, CentroidMode::LeaveOneOut).unwrap();
    assert_eq!(c.a_matching, vec![2.5, 3.0]);
    assert_eq!(c.a_opposing, vec![-2.0, 2.0]);
    assert_eq!(c.b_matching, vec![-3.0, 3.0]);
    assert_eq!(c.b_opposing, vec![2.0, 2.0]);
}

#[test]
fn leave_one_out_needs_another_occurrence() {
    let (corpus, pair) = hand_corpus(false);
    // b1 is the only "money" occurrence, so its own matching centroid is empty
    let report = run_experiment(&[pair], &corpus, None, None, CentroidMode::LeaveOneOut).unwrap();
    assert_eq!(report.skipped.len(), 1);
    assert!(report.layers.is_empty() || report.layers[0].instances == 0);
}

#[test]
fn missing_layers_are_reported() {
    let (corpus, pair) = hand_corpus(true);
    let report = run_experiment(&[pair], &corpus, Some(&[0, 4]), None, CentroidMode::Inclusive).unwrap();
    assert_eq!(report.missing_layers, vec![4]);
    assert_eq!(report.layers.len(), 1);
    assert!(!report.probe_applied);
}

#[test]
fn probe_is_applied_before_centroids() {
    let (corpus, pair) = hand_corpus(true);
    let swap = ProbeMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let c = matching_opposing_centroids(&pair, &corpus, 0, Some(&swap), CentroidMode::Inclusive).unwrap();
    assert_eq!(c.a_matching, vec![2.0, 2.0]);
    assert_eq!(c.a_opposing, vec![2.0, -2.0]);
    let report = run_experiment(&[pair], &corpus, None, Some(&swap), CentroidMode::Inclusive).unwrap();
    assert!(report.probe_applied);
}

#[test]
fn invalid_pairs_are_rejected() {
    let (corpus, mut pair) = hand_corpus(true);
    pair.sense_b = "river".into();
    assert!(pair.validate().is_err());
    let (_, mut pair) = hand_corpus(true);
    pair.concat_token_b = 9;
    assert!(pair_ratios(&pair, &corpus, 0, None, CentroidMode::Inclusive).is_err());
}

proptest! {
    #[test]
    fn ratio_is_scale_invariant(
        e in prop::collection::vec(0.1f64..5.0, 4),
        m in prop::collection::vec(0.1f64..5.0, 4),
        o in prop::collection::vec(0.1f64..5.0, 4),
        a in 1e-3f64..1e3,
        b in 1e-3f64..1e3,
        c in 1e-3f64..1e3,
    ) {
        let scale = |v: &[f64], s: f64| v.iter().map(|x| x * s).collect::<Vec<_>>();
        let r0 = similarity_ratio(&e, &m, &o).unwrap().value;
        let r1 = similarity_ratio(&scale(&e, a), &scale(&m, b), &scale(&o, c)).unwrap().value;
        prop_assert!((r0 - r1).abs() <= 1e-12 * r0.abs().max(1.0));
    }

    #[test]
    fn ratio_below_one_means_misclassified(
        e in prop::collection::vec(-5.0f64..5.0, 3),
        m in prop::collection::vec(-5.0f64..5.0, 3),
        o in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        if let Ok(r) = similarity_ratio(&e, &m, &o) {
            if !r.flagged {
                prop_assert_eq!(r.misclassified(), r.value < 1.0);
            }
        }
    }
}

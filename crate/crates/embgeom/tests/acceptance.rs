//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary
//! (`harness = false`) and exits nonzero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use embgeom::attention_io::{read_attention_dataset, write_attention_dataset};
use embgeom::corpus_io::{read_embedding_corpus, write_embedding_corpus};
use embgeom::probe_io::{decode_probe, encode_probe, MatrixProbeFile, ProbeArtifact};
use embgeom::service::{router, AppState};
use embgeom_core::concat::{pair_ratios, similarity_ratio, CentroidMode};
use embgeom_core::corpus::{CorpusMeta, EmbeddingCorpus, Parse, SenseLabel, Sentence, SentenceKind};
use embgeom_core::probes::{
    evaluate_probe, train_attention_binary, train_attention_multiclass, train_semantic_probe, train_structural_probe,
    structural_loss, ClampSpec, ProbeMatrix, ProbeTrainConfig,
};
use embgeom_core::projection::{comparison_panel, draw_points, pca_project, per_dependency_edge_lengths};
use embgeom_core::synthetic::*;
use embgeom_core::tree::Tree;
use embgeom_core::tree_geometry::{
    branch_distance_samples, canonical_pythagorean_embedding, mean_std, power_p_feasibility, Tolerance,
};
use embgeom_core::wsd::{evaluate_f1, fit_centroids, Prediction, SenseInventory};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn oracle_tree(rng: &mut Oracle64, max_n: usize) -> (Tree, Vec<Option<usize>>) {
    let n = 1 + rng.below(max_n);
    let parents = random_parents(n, rng);
    (Tree::from_parents(parents.clone()).unwrap(), parents)
}

fn pythagorean_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = Oracle64(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (tree, parents) = oracle_tree(&mut rng, 64);
        let cloud = canonical_pythagorean_embedding(&tree);
        let n = tree.len();
        for i in 0..n {
            for j in 0..n {
                let sq: f64 = cloud.point(i).iter().zip(cloud.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                worst = worst.max((sq - lca_distance(&parents, i, j) as f64).abs());
            }
        }
    }
    let t = secs(start.elapsed());
    check(worst < 1e-9 && t < 5.0, format!("max deviation {worst:.2e} over 200 trees, {t:.2} s"))
}

fn feasibility() -> Outcome {
    let mut rng = Oracle64(77);
    let trees: Vec<Tree> = (0..200).map(|_| oracle_tree(&mut rng, 64).0).collect();
    let feasible_p2 = trees
        .iter()
        .filter(|t| {
            power_p_feasibility(&t.distance_matrix().to_f64(), t.len(), 2.0, Tolerance::default())
                .unwrap()
                .feasible
        })
        .count();

    let star = Tree::star(50).unwrap();
    let d = star.distance_matrix().to_f64();
    let n = star.len();
    let report = |p: f64| power_p_feasibility(&d, n, p, Tolerance::default()).unwrap();
    let (r1, r15, r3) = (report(1.0), report(1.5), report(3.0));
    // independent check: the anchored Gram of d^(2/p) via Jacobi
    let oracle_min = |p: f64| {
        let powered: Vec<f64> = d.iter().map(|x| x.powf(2.0 / p)).collect();
        jacobi_eigenvalues(&anchored_gram(&powered, n), n - 1)[0]
    };
    let star_ok = !r1.feasible
        && !r15.feasible
        && r1.min_eigenvalue < -1e-6
        && r15.min_eigenvalue < -1e-6
        && r3.feasible
        && oracle_min(1.0) < -1e-6
        && oracle_min(1.5) < -1e-6
        && oracle_min(3.0) > -1e-9;

    let grid = [1.0, 1.5, 2.0, 2.5, 3.0];
    let mut monotone = 0;
    for t in trees.iter().take(50) {
        let dm = t.distance_matrix().to_f64();
        let f: Vec<bool> = grid
            .iter()
            .map(|&p| power_p_feasibility(&dm, t.len(), p, Tolerance::default()).unwrap().feasible)
            .collect();
        if f.windows(2).all(|w| !w[0] || w[1]) {
            monotone += 1;
        }
    }
    check(
        feasible_p2 == 200 && star_ok && monotone == 50,
        format!(
            "p=2 feasible {feasible_p2}/200; star-50 min eig p=1 {:.3e}, p=1.5 {:.3e}, p=3 feasible {}; monotone {monotone}/50",
            r1.min_eigenvalue, r15.min_eigenvalue, r3.feasible
        ),
    )
}

fn branch_concentration() -> Outcome {
    let (m, d) = (4usize, 1024usize);
    let path = Tree::path(m + 1).unwrap();
    let start = Instant::now();
    let samples = branch_distance_samples(&path, 0, m, d, 0..1000).unwrap();
    let t = secs(start.elapsed());
    let (mean, std) = mean_std(&samples);
    let se = std / (samples.len() as f64).sqrt();
    let oracle = mc_branch_std(m, d, 4000, 99);
    let rel = (std - oracle).abs() / oracle;
    check(
        (mean - m as f64).abs() <= 4.0 * se && rel <= 0.2 && t < 10.0,
        format!("mean {mean:.4} (±4·SE = {:.4}), std {std:.4} vs oracle {oracle:.4} ({:.1}%), {t:.2} s", 4.0 * se, 100.0 * rel),
    )
}

fn attention_probes() -> Outcome {
    let cfg = ProbeTrainConfig::default();
    let ds = planted_binary_attention(10_000, 12, 12, 0.25, 31);
    let fit = train_attention_binary(&ds, &cfg).unwrap();
    let bin = evaluate_probe(&fit.probe, &ds.subset(&fit.test)).unwrap().accuracy;
    let again = train_attention_binary(&ds, &cfg).unwrap();
    let ds5 = planted_multiclass_attention(10_000, 12, 12, 5, 0.25, 32);
    let fit5 = train_attention_multiclass(&ds5, &cfg).unwrap();
    let multi = evaluate_probe(&fit5.probe, &ds5.subset(&fit5.test)).unwrap().accuracy;
    let again5 = train_attention_multiclass(&ds5, &cfg).unwrap();
    let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
    let exact = fit == again
        && fit5 == again5
        && same(fit.probe.weights(), again.probe.weights())
        && same(fit5.probe.weights(), again5.probe.weights());
    check(
        ds.vector_len() == 144 && bin >= 0.99 && multi >= 0.99 && exact,
        format!("binary {bin:.4}, 5-class {multi:.4}, bit-exact reruns {exact}"),
    )
}

fn structural_probe() -> Outcome {
    let spec = |seed, sentences| TreeCorpusSpec {
        sentences,
        min_tokens: 2,
        max_tokens: 10,
        noise_dims: 64,
        noise_std: 0.5,
        shuffle_parses: false,
        seed,
    };
    let cfg = ProbeTrainConfig {
        learning_rate: 0.02,
        epochs: 100,
        batch_size: 8,
        l2_lambda: 0.0,
        lr_decay: 0.98,
        ..Default::default()
    };
    let train = tree_corpus(&spec(1, 300));
    let test = tree_corpus(&spec(2, 100));
    let fit = train_structural_probe(&train, 0, 9, &cfg, None).unwrap();
    let mae = structural_loss(&fit.probe, &test, 0).unwrap();
    check(mae < 0.1, format!("held-out mean |d_tree - ‖BΔh‖²| = {mae:.4}"))
}

fn sense_spec(sample_seed: u64, occurrences_per_sense: usize) -> SenseCorpusSpec {
    SenseCorpusSpec {
        lemmas: 10,
        senses_per_lemma: 3,
        occurrences_per_sense,
        signal_dims: 4,
        nuisance_dims: 60,
        signal_scale: 1.0,
        signal_noise: 0.3,
        nuisance_std: 1.0,
        layers: 1,
        structure_seed: 7,
        sample_seed,
    }
}

fn semantic_probe() -> Outcome {
    let train = sense_corpus(&sense_spec(1, 20));
    let test = sense_corpus(&sense_spec(2, 10));
    let cfg = ProbeTrainConfig {
        learning_rate: 0.1,
        epochs: 50,
        l2_lambda: 0.0,
        ..Default::default()
    };
    let fit = train_semantic_probe(&train, 0, 4, ClampSpec::DEFAULT_HALF_WIDTH, &cfg).unwrap();
    let acc = |p: &ProbeMatrix| evaluate_f1(&fit_centroids(&train, 0, Some(p)).unwrap(), &test).unwrap().accuracy;
    let trained = acc(&fit.probe);
    let random = (0..5).map(|s| acc(&ProbeMatrix::random(64, 4, 100 + s))).sum::<f64>() / 5.0;

    let q = ProbeMatrix::new(64, 64, random_orthogonal(64, 5)).unwrap();
    let plain = fit_centroids(&train, 0, None).unwrap();
    let rotated = fit_centroids(&train, 0, Some(&q)).unwrap();
    let occ = test.sense_occurrences(0).unwrap();
    let changed = occ
        .iter()
        .filter(|o| plain.classify(&o.vector, &o.lemma).unwrap() != rotated.classify(&o.vector, &o.lemma).unwrap())
        .count();
    check(
        trained - random >= 0.10 && changed == 0,
        format!(
            "trained {:.1}% vs random {:.1}% (+{:.1} points); orthonormal probe changed {changed}/{} decisions",
            100.0 * trained,
            100.0 * random,
            100.0 * (trained - random),
            occ.len()
        ),
    )
}

fn wsd() -> Outcome {
    let single = |items: &[(&str, &str, [f32; 3])]| {
        let sentences = items
            .iter()
            .enumerate()
            .map(|(i, (lemma, sense, v))| Sentence {
                id: format!("s{i}"),
                tokens: vec![lemma.to_string()],
                kind: SentenceKind::Individual,
                parse: None,
                senses: vec![Some(SenseLabel::new(*lemma, *sense))],
                embeddings: v.to_vec(),
            })
            .collect();
        EmbeddingCorpus::new(CorpusMeta::new("fixture", 1, 1, 3), sentences).unwrap()
    };
    let corpus = single(&[
        ("bank", "bank.river", [1.0, 0.0, 0.0]),
        ("bank", "bank.money", [0.0, 1.0, 0.0]),
        ("bank", "bank.tilt", [0.0, 0.0, 1.0]),
        ("plant", "plant.factory", [1.0, 1.0, 0.0]),
        ("plant", "plant.flora", [-1.0, 0.5, 0.0]),
    ]);
    let model = fit_centroids(&corpus, 0, None).unwrap();
    let acc = evaluate_f1(&model, &corpus).unwrap().accuracy;

    let mut extra = SenseInventory::default();
    extra.add("crane", "crane.bird", 3);
    extra.add("crane", "crane.machine", 7);
    let with_fallback = model.with_fallback_inventory(&extra);
    let fallback = with_fallback.classify(&[0.2, 0.2, 0.2], "crane").unwrap();

    let train = sense_corpus(&sense_spec(3, 6));
    let test = sense_corpus(&sense_spec(4, 3));
    let q = ProbeMatrix::new(64, 64, random_orthogonal(64, 8)).unwrap();
    let plain = fit_centroids(&train, 0, None).unwrap();
    let rotated = fit_centroids(&train, 0, Some(&q)).unwrap();
    let mut worst = 0.0f64;
    for o in test.sense_occurrences(0).unwrap() {
        let a = plain.distances(&o.vector, &o.lemma).unwrap();
        let b = rotated.distances(&o.vector, &o.lemma).unwrap();
        for ((_, x), (_, y)) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    check(
        acc == 1.0 && fallback == Prediction::MostFrequent("crane.machine") && worst < 1e-9,
        format!("singleton accuracy {acc}; unseen lemma -> {fallback:?}; rotation distance drift {worst:.2e}"),
    )
}

fn concatenation() -> Outcome {
    let spec = |control| MixingSpec {
        keywords: 6,
        occurrences_per_sense: 8,
        dim: 16,
        layers: 3,
        noise: 0.3,
        alpha: 0.3,
        control,
        seed: 17,
    };
    let m = mixing_corpus(&spec(false));
    let mut lowered = 0;
    let mut total = 0;
    for layer in 0..3 {
        for p in &m.pairs {
            for r in pair_ratios(p, &m.corpus, layer, None, CentroidMode::LeaveOneOut).unwrap() {
                total += 1;
                if !r.concatenated.flagged && r.concatenated.value < r.individual.value {
                    lowered += 1;
                }
            }
        }
    }
    let c = mixing_corpus(&spec(true));
    let mut equal = 0;
    let mut control_total = 0;
    for layer in 0..3 {
        for p in &c.pairs {
            for r in pair_ratios(p, &c.corpus, layer, None, CentroidMode::LeaveOneOut).unwrap() {
                control_total += 1;
                if r.concatenated.value == r.individual.value {
                    equal += 1;
                }
            }
        }
    }
    let mut rng = Oracle64(5);
    let mut drift = 0.0f64;
    for _ in 0..500 {
        let v = |rng: &mut Oracle64| (0..8).map(|_| rng.normal()).collect::<Vec<f64>>();
        let (e, a, b) = (v(&mut rng), v(&mut rng), v(&mut rng));
        let base = similarity_ratio(&e, &a, &b).unwrap().value;
        let s = [1e-3, 0.5, 7.0, 1e4][rng.below(4)];
        let sc = |x: &[f64], k: f64| x.iter().map(|y| y * k).collect::<Vec<_>>();
        let scaled = similarity_ratio(&sc(&e, s), &sc(&a, 2.0 * s), &sc(&b, s / 3.0)).unwrap().value;
        drift = drift.max((scaled - base).abs() / base.abs().max(1.0));
    }
    check(
        lowered == total && equal == control_total && drift < 1e-12,
        format!("{lowered}/{total} instances lowered; control equal {equal}/{control_total}; scale drift {drift:.2e}"),
    )
}

fn parse(parents: &[i64], rels: &[&str]) -> Parse {
    Parse::new(
        Tree::from_signed_parents(parents).unwrap(),
        rels.iter().map(|s| s.to_string()).collect(),
    )
    .unwrap()
}

fn tokens(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

fn visualization() -> Outcome {
    let p = parse(&[-1, 0, 0, 1, 1, 2, 5], &["root", "nsubj", "obj", "det", "amod", "case", "nmod"]);
    let n = p.tree.len();
    let emb: Vec<Vec<f64>> = (0..n).map(|i| (0..8).map(|j| ((i * 8 + j) as f64).cos()).collect()).collect();
    let panel = comparison_panel(&tokens(n), &p, &emb, &ProbeMatrix::random(8, 4, 1), 64, 2, 1.0).unwrap();
    let canonical_dev = panel.canonical.solid.iter().fold(0.0f64, |m, e| m.max(e.deviation.abs()));

    let mut rng = Oracle64(41);
    let mut monotone = true;
    for _ in 0..100 {
        let n = 3 + rng.below(10);
        let tree = Tree::from_parents(random_parents(n, &mut rng)).unwrap();
        let pp = Parse::new(tree, vec!["dep".into(); n]).unwrap();
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.normal()).collect()).collect();
        let counts: Vec<usize> = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&t| draw_points(&tokens(n), &pp, &pts, t).unwrap().dotted.len())
            .collect();
        monotone &= counts.windows(2).all(|w| w[1] <= w[0]);
    }

    let s1 = Sentence {
        id: "one".into(),
        tokens: tokens(3),
        kind: SentenceKind::Individual,
        parse: Some(parse(&[1, -1, 1], &["nsubj", "root", "obj"])),
        senses: vec![],
        embeddings: vec![0.0, 0.0, 1.0, 1.0, 3.0, 1.0],
    };
    let s2 = Sentence {
        id: "two".into(),
        tokens: tokens(2),
        kind: SentenceKind::Individual,
        parse: Some(parse(&[-1, 0], &["root", "nsubj"])),
        senses: vec![],
        embeddings: vec![2.0, 0.0, 2.0, 2.0],
    };
    let fixture = EmbeddingCorpus::new(CorpusMeta::new("fixture", 1, 1, 2), vec![s1, s2]).unwrap();
    let table = per_dependency_edge_lengths(&fixture, &ProbeMatrix::identity(2), 0).unwrap();
    // by hand: nsubj (2 + 4) / 2 = 3 over 2 edges, obj 4 over 1
    let table_ok = table.len() == 2
        && (table["nsubj"].mean_squared_length, table["nsubj"].count) == (3.0, 2)
        && (table["obj"].mean_squared_length, table["obj"].count) == (4.0, 1);

    let mut pca_drift = 0.0f64;
    for trial in 0..50u64 {
        let mut rng = Oracle64(trial);
        let spread = [5.0, 2.5, 1.0, 0.3];
        let pts: Vec<Vec<f64>> = (0..12).map(|_| spread.iter().map(|s| s * rng.normal()).collect()).collect();
        let q = random_orthogonal(4, trial + 1000);
        let rot: Vec<Vec<f64>> = pts.iter().map(|x| rotate(&q, x)).collect();
        let a = pca_project(&pts, 2).unwrap();
        let b = pca_project(&rot, 2).unwrap();
        for axis in 0..2 {
            let flip = if a.coords[0][axis] * b.coords[0][axis] < 0.0 { -1.0 } else { 1.0 };
            for (ca, cb) in a.coords.iter().zip(&b.coords) {
                pca_drift = pca_drift.max((ca[axis] - flip * cb[axis]).abs());
            }
        }
    }
    check(
        canonical_dev < 1e-12 && monotone && table_ok && pca_drift < 1e-8,
        format!(
            "canonical max |dev| {canonical_dev:.1e}; dotted monotone {monotone}; edge table {table_ok}; PCA drift {pca_drift:.1e}"
        ),
    )
}

fn ingest_and_service() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = tree_corpus(&TreeCorpusSpec {
        sentences: 20,
        min_tokens: 1,
        max_tokens: 8,
        noise_dims: 4,
        noise_std: 0.3,
        shuffle_parses: false,
        seed: 9,
    });
    for (i, s) in corpus.sentences.iter_mut().enumerate() {
        s.senses = vec![None; s.tokens.len()];
        s.senses[0] = Some(SenseLabel::new("w0", format!("sense{}", i % 2)));
        // exercise awkward bit patterns
        s.embeddings[0] = [-0.0, f32::MIN_POSITIVE / 4.0, f32::MAX, 1e-30][i % 4];
    }
    write_embedding_corpus(&corpus, dir.path()).unwrap();
    let back = read_embedding_corpus(dir.path()).unwrap();
    let bits = |c: &EmbeddingCorpus| -> Vec<u32> {
        c.sentences.iter().flat_map(|s| s.embeddings.iter().map(|x| x.to_bits())).collect()
    };
    let corpus_ok = bits(&corpus) == bits(&back)
        && corpus.sentences.iter().zip(&back.sentences).all(|(a, b)| {
            a.tokens == b.tokens && a.parse == b.parse && a.senses == b.senses && a.id == b.id
        });

    let att = planted_multiclass_attention(300, 2, 3, 4, 0.0, 3);
    let ap = dir.path().join("att.jsonl");
    write_attention_dataset(&att, &ap).unwrap();
    let att_back = read_attention_dataset(&ap).unwrap();
    let att_ok = att_back.records.len() == att.records.len()
        && att.records.iter().zip(&att_back.records).all(|(a, b)| {
            a.label == b.label
                && a.vector.values.iter().map(|x| x.to_bits()).eq(b.vector.values.iter().map(|x| x.to_bits()))
        });

    let probe = ProbeArtifact::Matrix(MatrixProbeFile {
        probe: ProbeMatrix::random(11, 3, 4),
        layer: Some(0),
        clamp: Some(ClampSpec {
            half_width: 0.1,
            baseline_same: 0.123456789012345,
            baseline_diff: -0.0,
        }),
    });
    let probe_ok = decode_probe(&encode_probe(&probe), std::path::Path::new("mem")).unwrap() == probe;

    let state = Arc::new(AppState::new(back, BTreeMap::new()));
    let app = router(state, None);
    let rt = tokio::runtime::Runtime::new().unwrap();
    let uris = ["/v1/meta", "/v1/words/w0?layer=0&limit=1000", "/v1/sentences/t4/tree?probe=identity"];
    let idempotent = rt.block_on(async {
        use http_body_util::BodyExt;
        use tower::ServiceExt;
        let mut all = true;
        for uri in uris {
            let mut bodies = Vec::new();
            for _ in 0..2 {
                let req = axum::http::Request::builder().uri(uri).body(axum::body::Body::empty()).unwrap();
                let resp = app.clone().oneshot(req).await.unwrap();
                all &= resp.status().is_success();
                bodies.push(resp.into_body().collect().await.unwrap().to_bytes());
            }
            all &= bodies[0] == bodies[1];
        }
        all
    });
    check(
        corpus_ok && att_ok && probe_ok && idempotent,
        format!(
            "corpus {corpus_ok}, attention {att_ok}, probe {probe_ok} bit-exact; {} endpoints idempotent {idempotent}; no secondary component involved",
            uris.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("pythagorean-exactness", pythagorean_exactness),
        ("power-p-feasibility", feasibility),
        ("random-branch-concentration", branch_concentration),
        ("attention-probe-recovery", attention_probes),
        ("structural-probe-recovery", structural_probe),
        ("semantic-probe-planted-subspace", semantic_probe),
        ("wsd", wsd),
        ("concatenation-experiment", concatenation),
        ("visualization", visualization),
        ("ingest-and-service", ingest_and_service),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let t = secs(start.elapsed());
        match outcome {
            Ok(d) => println!("PASS {name}: {d} [{t:.2} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{t:.2} s]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

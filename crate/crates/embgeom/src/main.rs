use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use embgeom_core::concat::{run_experiment, CentroidMode};
use embgeom_core::corpus::{filter_relations, EmbeddingCorpus, RelationFilter};
use embgeom_core::probes::{
    compare_probe_subspaces, cosine_baselines, evaluate_probe, sense_pairs, structural_loss, train_attention_binary,
    train_attention_multiclass, train_semantic_probe, train_structural_probe, ClampSpec, ProbeMatrix,
};
use embgeom_core::projection::{comparison_panel, per_dependency_edge_lengths};
use embgeom_core::synthetic;
use embgeom_core::tree_geometry::{
    canonical_pythagorean_embedding, power_p_feasibility, random_branch_embedding, Tolerance,
};
use embgeom_core::wsd::{evaluate_f1, evaluate_most_frequent, fit_centroids};
use embgeom::attention_io::{read_attention_dataset, write_attention_dataset};
use embgeom::config::read_train_config;
use embgeom::conllu::read_conllu;
use embgeom::corpus_io::{read_embedding_corpus, write_embedding_corpus};
use embgeom::pairs_io::{read_pairs, write_pairs};
use embgeom::probe_io::{read_matrix_probe, read_probe, write_probe, MatrixProbeFile, ProbeArtifact};
use embgeom::render::{drawing_json_string, render_svg};
use embgeom::service::{load_probe_dir, AppState};
use embgeom::tree_json::read_trees;
use embgeom::views::{sentence_tree, DEFAULT_DOTTED_THRESHOLD};
use embgeom::wsd_io::{read_wsd_model, write_wsd_model};
use embgeom::{report, service};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "embgeom", version, about = "Geometry of contextual embeddings: probes, WSD, visualization")]
struct Cli {
    /// Print JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, evaluate and compare probes.
    #[command(subcommand)]
    Probe(ProbeCmd),
    /// Nearest-centroid word-sense disambiguation.
    #[command(subcommand)]
    Wsd(WsdCmd),
    /// Sentence-concatenation experiment.
    #[command(subcommand)]
    Concat(ConcatCmd),
    /// Tree drawings and edge-length tables.
    #[command(subcommand)]
    Viz(VizCmd),
    /// Validate and summarise input artifacts.
    #[command(subcommand)]
    Ingest(IngestCmd),
    /// Exact and randomized tree embeddings.
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Write synthetic datasets with planted structure.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Serve the read-only /v1 HTTP API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AttentionKind {
    Binary,
    Multiclass,
}

#[derive(Subcommand)]
enum ProbeCmd {
    TrainAttention {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        kind: AttentionKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Minimum examples per relation (multiclass only).
        #[arg(long, default_value_t = RelationFilter::default().min_examples)]
        min_examples: usize,
        #[arg(long, default_value_t = RelationFilter::default().max_relations)]
        max_relations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    TrainStructural {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Held-out corpus to report the mean absolute distance error on.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    TrainSemantic {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        rank: usize,
        /// Clamp half width; `inf` disables clamping.
        #[arg(long, default_value_t = ClampSpec::DEFAULT_HALF_WIDTH)]
        half_width: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Attention probes are scored on `--data`; matrix probes on `--corpus`.
    Eval {
        #[arg(long)]
        probe: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        layer: Option<usize>,
    },
    /// Singular values of AᵀB and ABᵀ for two matrix probes.
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(Subcommand)]
enum WsdCmd {
    Fit {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        probe: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scores a saved model, or fits one on `--train` at each `--layer`.
    Eval {
        #[arg(long)]
        test: PathBuf,
        #[arg(long, conflicts_with = "train")]
        model: Option<PathBuf>,
        #[arg(long, required_unless_present = "model")]
        train: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        layer: Vec<usize>,
        #[arg(long)]
        probe: Option<PathBuf>,
        /// Also score the most-frequent-sense baseline.
        #[arg(long)]
        baseline: bool,
    },
}

#[derive(Subcommand)]
enum ConcatCmd {
    Run {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        probe: Option<PathBuf>,
        /// Layers to score; all layers by default.
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<usize>>,
        /// Keep each instance in its own sense centroid.
        #[arg(long)]
        inclusive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tab-separated per-layer means for plotting.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DrawArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    sentence_id: String,
    /// Matrix probe; the identity when omitted.
    #[arg(long)]
    probe: Option<PathBuf>,
    /// Defaults to the probe's layer, else the last layer.
    #[arg(long)]
    layer: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DOTTED_THRESHOLD)]
    threshold: f64,
}

#[derive(Subcommand)]
enum VizCmd {
    /// Writes `--out` as SVG and a `.json` sidecar beside it.
    Tree {
        #[command(flatten)]
        draw: DrawArgs,
        #[arg(long)]
        out: PathBuf,
    },
    EdgeLengths {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        probe: Option<PathBuf>,
        #[arg(long)]
        layer: Option<usize>,
    },
    /// Probe view beside canonical, random-branch and random-cloud views.
    Panel {
        #[command(flatten)]
        draw: DrawArgs,
        #[arg(long, default_value_t = 1024)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum IngestCmd {
    /// Corpus directory, attention `.jsonl`, pair manifest or `.conllu` file.
    Validate { path: PathBuf },
    Stats { path: PathBuf },
}

#[derive(Subcommand)]
enum TreeCmd {
    /// Power-p feasibility of each tree metric over a grid of p.
    Feasibility {
        trees: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,2.5,3")]
        p: Vec<f64>,
    },
    /// Canonical (default) or random-branch coordinates for each tree.
    Embed {
        trees: PathBuf,
        #[arg(long)]
        random_dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum SynthCmd {
    Attention {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        layers: usize,
        #[arg(long, default_value_t = 12)]
        heads: usize,
        /// Binary labels when 0, else this many relation classes.
        #[arg(long, default_value_t = 0)]
        classes: usize,
        #[arg(long, default_value_t = 0.25)]
        margin: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Trees {
        #[arg(long, default_value_t = 300)]
        sentences: usize,
        #[arg(long, default_value_t = 64)]
        noise_dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Senses {
        #[arg(long, default_value_t = 20)]
        occurrences: usize,
        #[arg(long, default_value_t = 1)]
        sample_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes a corpus into `--out` and its pair manifest as `pairs.jsonl`.
    Mixing {
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long)]
        control: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long)]
    probes: Option<PathBuf>,
    /// Directory of static UI assets served at `/`.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

struct Out {
    json: bool,
}

impl Out {
    fn emit(&self, value: &Value, table: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(value).expect("json value"));
        } else {
            print!("{}", table());
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let out = Out { json: cli.json };
    match cli.command {
        Command::Probe(c) => probe_cmd(c, &out),
        Command::Wsd(c) => wsd_cmd(c, &out),
        Command::Concat(c) => concat_cmd(c, &out),
        Command::Viz(c) => viz_cmd(c, &out),
        Command::Ingest(c) => ingest_cmd(c, &out),
        Command::Tree(c) => tree_cmd(c, &out),
        Command::Synth(c) => synth_cmd(c),
        Command::Serve(a) => serve_cmd(a),
    }
}

fn load_matrix(path: Option<&Path>, dim: usize) -> anyhow::Result<MatrixProbeFile> {
    let Some(p) = path else {
        return Ok(ProbeMatrix::identity(dim).into());
    };
    let m = read_matrix_probe(p)?;
    if m.probe.input_dim() != dim {
        bail!("{}: probe expects dimension {}, corpus has {dim}", p.display(), m.probe.input_dim());
    }
    Ok(m)
}

fn last_layer(c: &EmbeddingCorpus) -> usize {
    c.meta.layer_count.saturating_sub(1)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn loss_table(losses: &[f64]) -> String {
    let mut s = String::from("epoch  loss\n");
    for (e, l) in losses.iter().enumerate() {
        s.push_str(&format!("{e:>5}  {l:.6}\n"));
    }
    s
}

fn probe_cmd(cmd: ProbeCmd, out: &Out) -> anyhow::Result<()> {
    match cmd {
        ProbeCmd::TrainAttention {
            data,
            kind,
            config,
            min_examples,
            max_relations,
            out: dest,
        } => {
            let cfg = read_train_config(config.as_deref())?;
            let ds = read_attention_dataset(&data)?;
            let (ds, fit) = match kind {
                AttentionKind::Binary => {
                    let fit = train_attention_binary(&ds, &cfg)?;
                    (ds, fit)
                }
                AttentionKind::Multiclass => {
                    let kept = filter_relations(
                        &ds,
                        RelationFilter {
                            min_examples,
                            max_relations,
                        },
                    );
                    if kept.is_empty() {
                        bail!("no relation has at least {min_examples} examples");
                    }
                    let fit = train_attention_multiclass(&kept, &cfg)?;
                    (kept, fit)
                }
            };
            let metrics = evaluate_probe(&fit.probe, &ds.subset(&fit.test))?;
            write_probe(&ProbeArtifact::Linear(fit.probe), &dest)?;
            let mut v = report::probe_metrics_json(&metrics);
            v["train_examples"] = json!(fit.train.len());
            v["test_examples"] = json!(fit.test.len());
            out.emit(&v, || {
                format!(
                    "trained on {} examples, held out {}\n{}",
                    fit.train.len(),
                    fit.test.len(),
                    report::probe_metrics_table(&metrics)
                )
            });
        }
        ProbeCmd::TrainStructural {
            corpus,
            layer,
            rank,
            config,
            test,
            out: dest,
        } => {
            let cfg = read_train_config(config.as_deref())?;
            let c = read_embedding_corpus(&corpus)?;
            let fit = train_structural_probe(&c, layer, rank, &cfg, None)?;
            let held_out = match test {
                Some(t) => Some(structural_loss(&fit.probe, &read_embedding_corpus(&t)?, layer)?),
                None => None,
            };
            write_probe(
                &ProbeArtifact::Matrix(MatrixProbeFile {
                    probe: fit.probe,
                    layer: Some(layer),
                    clamp: None,
                }),
                &dest,
            )?;
            let v = json!({ "epoch_losses": fit.epoch_losses, "held_out_mae": held_out });
            out.emit(&v, || {
                let mut s = loss_table(&fit.epoch_losses);
                if let Some(h) = held_out {
                    s.push_str(&format!("held-out mean |d_tree - d_probe| = {h:.6}\n"));
                }
                s
            });
        }
        ProbeCmd::TrainSemantic {
            corpus,
            layer,
            rank,
            half_width,
            config,
            out: dest,
        } => {
            let cfg = read_train_config(config.as_deref())?;
            let c = read_embedding_corpus(&corpus)?;
            let fit = train_semantic_probe(&c, layer, rank, half_width, &cfg)?;
            let v = json!({
                "epoch_losses": fit.epoch_losses,
                "baseline_same": fit.clamp.baseline_same,
                "baseline_diff": fit.clamp.baseline_diff,
            });
            let table = format!(
                "baselines: same {:.4}, different {:.4}\n{}",
                fit.clamp.baseline_same,
                fit.clamp.baseline_diff,
                loss_table(&fit.epoch_losses)
            );
            write_probe(
                &ProbeArtifact::Matrix(MatrixProbeFile {
                    probe: fit.probe,
                    layer: Some(layer),
                    clamp: Some(fit.clamp),
                }),
                &dest,
            )?;
            out.emit(&v, || table);
        }
        ProbeCmd::Eval {
            probe,
            data,
            corpus,
            layer,
        } => match read_probe(&probe)? {
            ProbeArtifact::Linear(p) => {
                let Some(data) = data else {
                    bail!("attention probes are evaluated with --data");
                };
                let m = evaluate_probe(&p, &read_attention_dataset(&data)?)?;
                out.emit(&report::probe_metrics_json(&m), || report::probe_metrics_table(&m));
            }
            ProbeArtifact::Matrix(m) => {
                let Some(corpus) = corpus else {
                    bail!("matrix probes are evaluated with --corpus");
                };
                let c = read_embedding_corpus(&corpus)?;
                let layer = layer.or(m.layer).unwrap_or_else(|| last_layer(&c));
                let mut v = json!({ "layer": layer });
                let mut table = format!("layer {layer}\n");
                if c.sentences.iter().any(|s| s.parse.is_some()) {
                    let mae = structural_loss(&m.probe, &c, layer)?;
                    v["structural_mae"] = json!(mae);
                    table.push_str(&format!("mean |d_tree - d_probe| = {mae:.6}\n"));
                }
                if let Ok(pairs) = sense_pairs(&c, layer, usize::MAX, 0) {
                    let (same, diff) = cosine_baselines(&pairs, Some(&m.probe));
                    v["cosine_same"] = json!(same);
                    v["cosine_diff"] = json!(diff);
                    table.push_str(&format!("mean cosine: same sense {same:.4}, different {diff:.4}\n"));
                }
                out.emit(&v, || table);
            }
        },
        ProbeCmd::Compare { a, b } => {
            let pa = read_matrix_probe(&a)?.probe;
            let pb = read_matrix_probe(&b)?.probe;
            let cmp = compare_probe_subspaces(&pa, &pb)?;
            out.emit(&report::subspace_json(&cmp), || {
                let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
                format!("AᵀB: {}\nABᵀ: {}\n", fmt(&cmp.inner), fmt(&cmp.outer))
            });
        }
    }
    Ok(())
}

fn wsd_cmd(cmd: WsdCmd, out: &Out) -> anyhow::Result<()> {
    match cmd {
        WsdCmd::Fit {
            corpus,
            layer,
            probe,
            out: dest,
        } => {
            let c = read_embedding_corpus(&corpus)?;
            let p = match probe {
                Some(p) => Some(load_matrix(Some(&p), c.dim())?.probe),
                None => None,
            };
            let model = fit_centroids(&c, layer, p.as_ref())?;
            write_wsd_model(&model, &dest)?;
            let lemmas = model.centroids().len();
            out.emit(&json!({ "layer": layer, "lemmas": lemmas }), || {
                format!("fitted {lemmas} lemmas at layer {layer}\n")
            });
        }
        WsdCmd::Eval {
            test,
            model,
            train,
            layer,
            probe,
            baseline,
        } => {
            let test_corpus = read_embedding_corpus(&test)?;
            let models = match (model, train) {
                (Some(m), _) => {
                    if !layer.is_empty() || probe.is_some() {
                        bail!("--layer and --probe come from the saved model");
                    }
                    vec![read_wsd_model(&m)?]
                }
                (None, Some(t)) => {
                    if layer.is_empty() {
                        bail!("--layer is required with --train");
                    }
                    let tc = read_embedding_corpus(&t)?;
                    let p = match probe {
                        Some(p) => Some(load_matrix(Some(&p), tc.dim())?.probe),
                        None => None,
                    };
                    layer
                        .iter()
                        .map(|&l| fit_centroids(&tc, l, p.as_ref()))
                        .collect::<Result<Vec<_>, _>>()?
                }
                (None, None) => unreachable!("clap requires --model or --train"),
            };
            let mut rows = Vec::new();
            let mut base_rows = Vec::new();
            for m in &models {
                rows.push((m.layer(), evaluate_f1(m, &test_corpus)?));
                if baseline {
                    base_rows.push((m.layer(), evaluate_most_frequent(m, &test_corpus)?));
                }
            }
            let v = json!({
                "centroid": rows.iter().map(|(l, s)| report::wsd_json(*l, s)).collect::<Vec<_>>(),
                "most_frequent": base_rows.iter().map(|(l, s)| report::wsd_json(*l, s)).collect::<Vec<_>>(),
            });
            out.emit(&v, || {
                let mut s = report::wsd_table(&rows);
                if baseline {
                    s.push_str("most-frequent-sense baseline\n");
                    s.push_str(&report::wsd_table(&base_rows));
                }
                s
            });
        }
    }
    Ok(())
}

fn concat_cmd(cmd: ConcatCmd, out: &Out) -> anyhow::Result<()> {
    let ConcatCmd::Run {
        pairs,
        corpus,
        probe,
        layers,
        inclusive,
        out: dest,
        plot,
    } = cmd;
    let c = read_embedding_corpus(&corpus)?;
    let pairs = read_pairs(&pairs)?;
    let p = match probe {
        Some(p) => Some(load_matrix(Some(&p), c.dim())?.probe),
        None => None,
    };
    let mode = if inclusive {
        CentroidMode::Inclusive
    } else {
        CentroidMode::LeaveOneOut
    };
    let r = run_experiment(&pairs, &c, layers.as_deref(), p.as_ref(), mode)?;
    for (i, why) in &r.skipped {
        log::warn!("pair {i} skipped: {why}");
    }
    if !r.missing_layers.is_empty() {
        log::warn!("corpus lacks layers {:?}", r.missing_layers);
    }
    let v = report::concat_json(&r);
    if let Some(d) = dest {
        write_text(&d, &(serde_json::to_string_pretty(&v)? + "\n"))?;
    }
    if let Some(pl) = plot {
        write_text(&pl, &report::concat_plot_tsv(&r))?;
    }
    out.emit(&v, || report::concat_table(&r));
    Ok(())
}

fn resolve_layer(requested: Option<usize>, probe: &MatrixProbeFile, c: &EmbeddingCorpus) -> usize {
    requested.or(probe.layer).unwrap_or_else(|| last_layer(c))
}

fn viz_cmd(cmd: VizCmd, out: &Out) -> anyhow::Result<()> {
    match cmd {
        VizCmd::Tree { draw, out: dest } => {
            let c = read_embedding_corpus(&draw.corpus)?;
            let p = load_matrix(draw.probe.as_deref(), c.dim())?;
            let layer = resolve_layer(draw.layer, &p, &c);
            let d = sentence_tree(&c, &draw.sentence_id, &p.probe, layer, draw.threshold)?;
            write_text(&dest, &render_svg(&d, Some(&draw.sentence_id)))?;
            write_text(&dest.with_extension("json"), &drawing_json_string(&d))?;
            log::info!("wrote {} and its .json sidecar", dest.display());
        }
        VizCmd::EdgeLengths { corpus, probe, layer } => {
            let c = read_embedding_corpus(&corpus)?;
            let p = load_matrix(probe.as_deref(), c.dim())?;
            let layer = resolve_layer(layer, &p, &c);
            let t = per_dependency_edge_lengths(&c, &p.probe, layer)?;
            out.emit(&report::edge_lengths_json(&t), || report::edge_lengths_table(&t));
        }
        VizCmd::Panel {
            draw,
            dim,
            seed,
            out_dir,
        } => {
            let c = read_embedding_corpus(&draw.corpus)?;
            let p = load_matrix(draw.probe.as_deref(), c.dim())?;
            let layer = resolve_layer(draw.layer, &p, &c);
            let s = c
                .sentence(&draw.sentence_id)
                .with_context(|| format!("no sentence {:?}", draw.sentence_id))?;
            let parse = s.parse.as_ref().context("sentence has no parse")?;
            let panel = comparison_panel(
                &s.tokens,
                parse,
                &c.layer_vectors(s, layer),
                &p.probe,
                dim,
                seed,
                draw.threshold,
            )?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let mut summary = serde_json::Map::new();
            for (name, d) in [
                ("probe", &panel.probe),
                ("canonical", &panel.canonical),
                ("random_branch", &panel.random_branch),
                ("random_cloud", &panel.random_cloud),
            ] {
                write_text(&out_dir.join(format!("{name}.svg")), &render_svg(d, Some(name)))?;
                write_text(&out_dir.join(format!("{name}.json")), &drawing_json_string(d))?;
                summary.insert(name.into(), json!(d.mean_abs_deviation()));
            }
            let v = Value::Object(summary);
            out.emit(&v, || {
                let mut s = String::from("view           mean |deviation|\n");
                for (k, x) in v.as_object().unwrap() {
                    s.push_str(&format!("{k:<14} {:.4}\n", x.as_f64().unwrap_or(f64::NAN)));
                }
                s
            });
        }
    }
    Ok(())
}

enum Artifact {
    Corpus(EmbeddingCorpus),
    Attention(embgeom_core::corpus::AttentionVectorDataset),
    Pairs(usize),
    Conllu(embgeom::conllu::ConlluDocument),
}

fn read_artifact(path: &Path) -> anyhow::Result<Artifact> {
    if path.is_dir() {
        return Ok(Artifact::Corpus(read_embedding_corpus(path)?));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("conllu") | Some("conll") => Ok(Artifact::Conllu(read_conllu(path)?)),
        Some("jsonl") => {
            // attention datasets start with a header naming their format
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            if text.lines().next().is_some_and(|l| l.contains(embgeom::attention_io::ATTENTION_FORMAT)) {
                Ok(Artifact::Attention(read_attention_dataset(path)?))
            } else {
                Ok(Artifact::Pairs(read_pairs(path)?.len()))
            }
        }
        _ => bail!("{}: expected a corpus directory, .jsonl or .conllu file", path.display()),
    }
}

fn ingest_cmd(cmd: IngestCmd, out: &Out) -> anyhow::Result<()> {
    match cmd {
        IngestCmd::Validate { path } => {
            let v = match read_artifact(&path)? {
                Artifact::Conllu(doc) if !doc.rejected.is_empty() => {
                    for r in &doc.rejected {
                        eprintln!("line {}: {}", r.line, r.message);
                    }
                    bail!("{} sentence(s) rejected", doc.rejected.len());
                }
                Artifact::Conllu(doc) => json!({ "kind": "conllu", "sentences": doc.sentences.len() }),
                Artifact::Corpus(c) => json!({ "kind": "corpus", "sentences": c.sentences.len() }),
                Artifact::Attention(a) => json!({ "kind": "attention", "records": a.len() }),
                Artifact::Pairs(n) => json!({ "kind": "pairs", "pairs": n }),
            };
            out.emit(&v, || format!("ok: {}\n", v));
        }
        IngestCmd::Stats { path } => {
            let v = match read_artifact(&path)? {
                Artifact::Corpus(c) => corpus_stats(&c),
                Artifact::Attention(a) => json!({
                    "kind": "attention",
                    "layer_count": a.layer_count,
                    "head_count": a.head_count,
                    "vector_len": a.vector_len(),
                    "records": a.len(),
                    "labels": a.class_counts(),
                }),
                Artifact::Conllu(doc) => json!({
                    "kind": "conllu",
                    "sentences": doc.sentences.len(),
                    "rejected": doc.rejected.len(),
                    "tokens": doc.sentences.iter().map(|s| s.forms.len()).sum::<usize>(),
                }),
                Artifact::Pairs(n) => json!({ "kind": "pairs", "pairs": n }),
            };
            out.emit(&v, || {
                let mut s = String::new();
                for (k, x) in v.as_object().unwrap() {
                    s.push_str(&format!("{k:<18} {x}\n"));
                }
                s
            });
        }
    }
    Ok(())
}

fn corpus_stats(c: &EmbeddingCorpus) -> Value {
    let mut relations = std::collections::BTreeMap::<&str, usize>::new();
    for s in &c.sentences {
        if let Some(p) = &s.parse {
            for (_, _, r) in p.dependencies() {
                *relations.entry(r).or_default() += 1;
            }
        }
    }
    json!({
        "kind": "corpus",
        "model": c.meta.model,
        "layer_count": c.meta.layer_count,
        "head_count": c.meta.head_count,
        "dim": c.meta.dim,
        "wordpiece": c.meta.wordpiece,
        "sentences": c.sentences.len(),
        "tokens": c.sentences.iter().map(|s| s.len()).sum::<usize>(),
        "parsed": c.sentences.iter().filter(|s| s.parse.is_some()).count(),
        "sense_labels": c.sentences.iter().map(|s| s.senses.iter().flatten().count()).sum::<usize>(),
        "relations": relations,
    })
}

fn tree_cmd(cmd: TreeCmd, out: &Out) -> anyhow::Result<()> {
    match cmd {
        TreeCmd::Feasibility { trees, p } => {
            let trees = read_trees(&trees)?;
            let mut rows = Vec::new();
            for (i, t) in trees.iter().enumerate() {
                let d = t.distance_matrix().to_f64();
                for &pp in &p {
                    let r = power_p_feasibility(&d, t.len(), pp, Tolerance::default())?;
                    rows.push(json!({
                        "tree": i,
                        "p": pp,
                        "feasible": r.feasible,
                        "min_eigenvalue": r.min_eigenvalue,
                    }));
                }
            }
            let v = Value::Array(rows);
            out.emit(&v, || {
                let mut s = String::from(" tree      p  feasible  min_eigenvalue\n");
                for r in v.as_array().unwrap() {
                    s.push_str(&format!(
                        "{:>5}  {:>5}  {:>8}  {:>14.6e}\n",
                        r["tree"],
                        r["p"],
                        r["feasible"],
                        r["min_eigenvalue"].as_f64().unwrap_or(f64::NAN)
                    ));
                }
                s
            });
        }
        TreeCmd::Embed {
            trees,
            random_dim,
            seed,
        } => {
            let trees = read_trees(&trees)?;
            let clouds = trees
                .iter()
                .map(|t| match random_dim {
                    Some(d) => random_branch_embedding(t, d, seed),
                    None => Ok(canonical_pythagorean_embedding(t)),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let v = json!(clouds.iter().map(|c| c.points()).collect::<Vec<_>>());
            // coordinates are only meaningful as JSON
            println!("{}", serde_json::to_string(&v)?);
        }
    }
    Ok(())
}

fn synth_cmd(cmd: SynthCmd) -> anyhow::Result<()> {
    match cmd {
        SynthCmd::Attention {
            n,
            layers,
            heads,
            classes,
            margin,
            seed,
            out,
        } => {
            let ds = if classes == 0 {
                synthetic::planted_binary_attention(n, layers, heads, margin, seed)
            } else {
                synthetic::planted_multiclass_attention(n, layers, heads, classes, margin, seed)
            };
            write_attention_dataset(&ds, &out)?;
        }
        SynthCmd::Trees {
            sentences,
            noise_dims,
            seed,
            out,
        } => {
            let c = synthetic::tree_corpus(&synthetic::TreeCorpusSpec {
                sentences,
                min_tokens: 2,
                max_tokens: 10,
                noise_dims,
                noise_std: 0.5,
                shuffle_parses: false,
                seed,
            });
            write_embedding_corpus(&c, &out)?;
        }
        SynthCmd::Senses {
            occurrences,
            sample_seed,
            out,
        } => {
            let c = synthetic::sense_corpus(&synthetic::SenseCorpusSpec {
                lemmas: 10,
                senses_per_lemma: 3,
                occurrences_per_sense: occurrences,
                signal_dims: 4,
                nuisance_dims: 60,
                signal_scale: 1.0,
                signal_noise: 0.3,
                nuisance_std: 1.0,
                layers: 2,
                structure_seed: 7,
                sample_seed,
            });
            write_embedding_corpus(&c, &out)?;
        }
        SynthCmd::Mixing {
            alpha,
            control,
            seed,
            out,
        } => {
            let m = synthetic::mixing_corpus(&synthetic::MixingSpec {
                keywords: 5,
                occurrences_per_sense: 4,
                dim: 32,
                layers: 3,
                noise: 0.2,
                alpha,
                control,
                seed,
            });
            write_embedding_corpus(&m.corpus, &out)?;
            write_pairs(&m.pairs, &out.join("pairs.jsonl"))?;
        }
    }
    Ok(())
}

fn serve_cmd(a: ServeArgs) -> anyhow::Result<()> {
    let corpus = read_embedding_corpus(&a.corpus)?;
    let probes = match &a.probes {
        Some(d) => load_probe_dir(d)?,
        None => Default::default(),
    };
    let state = Arc::new(AppState::new(corpus, probes));
    log::info!(
        "loaded {} sentences, {} probes",
        state.corpus.sentences.len(),
        state.probes.len()
    );
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(state, a.port, a.static_dir.as_deref()))
}

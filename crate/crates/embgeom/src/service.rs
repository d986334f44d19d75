//! Read-only HTTP API over a loaded corpus.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use embgeom_core::corpus::EmbeddingCorpus;
use embgeom_core::probes::ProbeMatrix;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::error::{io_err, Result};
use crate::probe_io::{read_probe, ProbeArtifact};
use crate::render::drawing_json_string;
use crate::views::{query_word, sentence_tree, QueryError, WordIndex, DEFAULT_DOTTED_THRESHOLD, DEFAULT_WORD_LIMIT};

pub const IDENTITY_PROBE: &str = "identity";
pub const PROBE_EXTENSION: &str = "probe";

#[derive(Debug, Clone)]
pub struct LoadedProbe {
    pub probe: ProbeMatrix,
    /// Layer the probe was trained on, used when a request names none.
    pub layer: Option<usize>,
}

#[derive(Debug)]
pub struct AppState {
    pub corpus: EmbeddingCorpus,
    pub index: WordIndex,
    pub probes: BTreeMap<String, LoadedProbe>,
    pub dotted_threshold: f64,
}

impl AppState {
    pub fn new(corpus: EmbeddingCorpus, probes: BTreeMap<String, LoadedProbe>) -> Self {
        let mut probes = probes;
        probes.entry(IDENTITY_PROBE.to_string()).or_insert_with(|| LoadedProbe {
            probe: ProbeMatrix::identity(corpus.dim()),
            layer: None,
        });
        AppState {
            index: WordIndex::build(&corpus),
            corpus,
            probes,
            dotted_threshold: DEFAULT_DOTTED_THRESHOLD,
        }
    }

    fn last_layer(&self) -> usize {
        self.corpus.meta.layer_count.saturating_sub(1)
    }
}

/// Every `*.probe` matrix probe in `dir`, keyed by file stem. Linear
/// (attention) probes are skipped since they cannot draw trees.
pub fn load_probe_dir(dir: &Path) -> Result<BTreeMap<String, LoadedProbe>> {
    let mut out = BTreeMap::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == PROBE_EXTENSION))
        .collect();
    paths.sort();
    for p in paths {
        let Some(stem) = p.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        match read_probe(&p)? {
            ProbeArtifact::Matrix(m) => {
                out.insert(
                    stem.to_string(),
                    LoadedProbe {
                        probe: m.probe,
                        layer: m.layer,
                    },
                );
            }
            ProbeArtifact::Linear(_) => log::info!("skipping linear probe {}", p.display()),
        }
    }
    Ok(out)
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/v1/meta", get(meta))
        .route("/v1/words/{word}", get(words))
        .route("/v1/sentences/{id}/tree", get(tree))
        .with_state(state);
    let app = match static_dir {
        Some(d) => api.fallback_service(ServeDir::new(d)),
        None => api,
    };
    app.layer(middleware::from_fn(log_request))
}

pub async fn serve(state: Arc<AppState>, port: u16, static_dir: Option<&Path>) -> anyhow::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let uri = req.uri().clone();
    let start = Instant::now();
    let resp = next.run(req).await;
    log::info!(
        "method={} uri={} status={} elapsed_ms={:.3}",
        method,
        uri,
        resp.status().as_u16(),
        start.elapsed().as_secs_f64() * 1e3
    );
    resp
}

fn json_body(status: StatusCode, body: String) -> Response {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body))
        .expect("static response parts")
}

impl IntoResponse for QueryError {
    fn into_response(self) -> Response {
        let status = match self {
            QueryError::NotFound(_) => StatusCode::NOT_FOUND,
            QueryError::BadRequest(_) => StatusCode::BAD_REQUEST,
            QueryError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        json_body(status, json!({ "error": self.to_string() }).to_string())
    }
}

async fn meta(State(st): State<Arc<AppState>>) -> Response {
    let m = &st.corpus.meta;
    let body = json!({
        "model": m.model,
        "layer_count": m.layer_count,
        "head_count": m.head_count,
        "dim": m.dim,
        "wordpiece": m.wordpiece,
        "sentences": st.corpus.sentences.len(),
        "parsed_sentences": st.corpus.sentences.iter().filter(|s| s.parse.is_some()).count(),
        "vocabulary": st.index.len(),
        "probes": st.probes.iter().map(|(id, p)| json!({
            "id": id,
            "rank": p.probe.output_dim(),
            "layer": p.layer,
        })).collect::<Vec<_>>(),
    });
    json_body(StatusCode::OK, body.to_string())
}

#[derive(Debug, Deserialize)]
struct WordParams {
    layer: Option<usize>,
    limit: Option<usize>,
}

async fn words(
    State(st): State<Arc<AppState>>,
    UrlPath(word): UrlPath<String>,
    Query(q): Query<WordParams>,
) -> std::result::Result<Response, QueryError> {
    let layer = q.layer.unwrap_or_else(|| st.last_layer());
    let r = query_word(&st.corpus, &st.index, &word, layer, q.limit.unwrap_or(DEFAULT_WORD_LIMIT))?;
    Ok(json_body(StatusCode::OK, serde_json::to_string(&r).expect("result serialises")))
}

#[derive(Debug, Deserialize)]
struct TreeParams {
    probe: Option<String>,
    layer: Option<usize>,
}

async fn tree(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<TreeParams>,
) -> std::result::Result<Response, QueryError> {
    let probe_id = q.probe.as_deref().unwrap_or(IDENTITY_PROBE);
    let p = st
        .probes
        .get(probe_id)
        .ok_or_else(|| QueryError::NotFound(format!("probe {probe_id:?}")))?;
    let layer = q.layer.or(p.layer).unwrap_or_else(|| st.last_layer());
    let d = sentence_tree(&st.corpus, &id, &p.probe, layer, st.dotted_threshold)?;
    Ok(json_body(StatusCode::OK, drawing_json_string(&d)))
}

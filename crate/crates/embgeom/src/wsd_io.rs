//! Nearest-centroid WSD models: a JSON index line, a newline, the centroids as
//! little-endian float32 in index order, then the probe (if any) as float64.
//!
//! Centroids are fitted in double precision and stored in single precision,
//! so a written model classifies with float32-rounded centroids.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use embgeom_core::probes::ProbeMatrix;
use embgeom_core::wsd::{CentroidModel, SenseCentroid, SenseInventory};
use serde::{Deserialize, Serialize};

use crate::corpus_io::{f32_bytes, f32_from_bytes, f64_bytes, f64_from_bytes};
use crate::error::{format_err, io_err, Result};

pub const WSD_FORMAT: &str = "embgeom-wsd/1";

#[derive(Debug, Serialize, Deserialize)]
struct SenseIndex {
    sense: String,
    count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct LemmaIndex {
    lemma: String,
    senses: Vec<SenseIndex>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProbeShape {
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    layer: usize,
    input_dim: usize,
    centroid_dim: usize,
    lemmas: Vec<LemmaIndex>,
    inventory: BTreeMap<String, BTreeMap<String, usize>>,
    probe: Option<ProbeShape>,
}

pub fn encode_wsd_model(model: &CentroidModel) -> Vec<u8> {
    let centroid_dim = model.probe().map_or(model.input_dim(), ProbeMatrix::output_dim);
    let mut block = Vec::new();
    let lemmas = model
        .centroids()
        .iter()
        .map(|(lemma, list)| LemmaIndex {
            lemma: lemma.clone(),
            senses: list
                .iter()
                .map(|c| {
                    block.extend(c.centroid.iter().map(|&x| x as f32));
                    SenseIndex {
                        sense: c.sense.clone(),
                        count: c.count,
                    }
                })
                .collect(),
        })
        .collect();
    let inventory = model
        .inventory()
        .lemmas()
        .map(|l| (l.to_string(), model.inventory().senses(l).cloned().unwrap_or_default()))
        .collect();
    let header = Header {
        format: WSD_FORMAT.into(),
        layer: model.layer(),
        input_dim: model.input_dim(),
        centroid_dim,
        lemmas,
        inventory,
        probe: model.probe().map(|p| ProbeShape {
            rows: p.input_dim(),
            cols: p.output_dim(),
        }),
    };
    let mut out = serde_json::to_vec(&header).expect("header serialises");
    out.push(b'\n');
    out.extend(f32_bytes(&block));
    if let Some(p) = model.probe() {
        out.extend(f64_bytes(p.entries()));
    }
    out
}

pub fn decode_wsd_model(bytes: &[u8], path: &Path) -> Result<CentroidModel> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| format_err(path, "missing index line"))?;
    let header: Header =
        serde_json::from_slice(&bytes[..newline]).map_err(|e| format_err(path, format!("index: {e}")))?;
    if header.format != WSD_FORMAT {
        return Err(format_err(path, format!("unsupported format {:?}", header.format)));
    }
    let n_centroids: usize = header.lemmas.iter().map(|l| l.senses.len()).sum();
    let centroid_bytes = n_centroids * header.centroid_dim * 4;
    let probe_bytes = header.probe.as_ref().map_or(0, |p| p.rows * p.cols * 8);
    let payload = &bytes[newline + 1..];
    if payload.len() != centroid_bytes + probe_bytes {
        return Err(format_err(
            path,
            format!(
                "payload holds {} bytes, index implies {}",
                payload.len(),
                centroid_bytes + probe_bytes
            ),
        ));
    }
    let values = f32_from_bytes(&payload[..centroid_bytes]);
    let mut chunks = values.chunks_exact(header.centroid_dim.max(1));
    let mut centroids = BTreeMap::new();
    for l in header.lemmas {
        let list = l
            .senses
            .into_iter()
            .map(|s| SenseCentroid {
                sense: s.sense,
                count: s.count,
                centroid: if header.centroid_dim == 0 {
                    Vec::new()
                } else {
                    chunks.next().expect("length checked").iter().map(|&x| x as f64).collect()
                },
            })
            .collect();
        centroids.insert(l.lemma, list);
    }
    let probe = match header.probe {
        Some(shape) => Some(
            ProbeMatrix::new(shape.rows, shape.cols, f64_from_bytes(&payload[centroid_bytes..]))
                .map_err(|e| format_err(path, e.to_string()))?,
        ),
        None => None,
    };
    let mut inventory = SenseInventory::default();
    for (lemma, senses) in &header.inventory {
        for (sense, &count) in senses {
            inventory.add(lemma, sense, count);
        }
    }
    CentroidModel::from_parts(header.layer, header.input_dim, probe, centroids, inventory)
        .map_err(|e| format_err(path, e.to_string()))
}

pub fn write_wsd_model(model: &CentroidModel, path: &Path) -> Result<()> {
    fs::write(path, encode_wsd_model(model)).map_err(io_err(path))
}

pub fn read_wsd_model(path: &Path) -> Result<CentroidModel> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_wsd_model(&bytes, path)
}

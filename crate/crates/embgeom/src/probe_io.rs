//! Probe files: one JSON header line, a newline, then the parameters as
//! row-major little-endian float64.
//!
//! Matrix probes store `rows × cols` entries. Linear probes store the weight
//! rows followed by the biases.

use std::fs;
use std::path::Path;

use embgeom_core::probes::{ClampSpec, LinearProbe, ProbeMatrix};
use serde::{Deserialize, Serialize};

use crate::corpus_io::{f64_bytes, f64_from_bytes};
use crate::error::{format_err, io_err, Result};

pub const PROBE_FORMAT: &str = "embgeom-probe/1";

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProbeFile {
    pub probe: ProbeMatrix,
    /// Layer the probe was trained on, when known.
    pub layer: Option<usize>,
    /// Clamp window of a semantic probe.
    pub clamp: Option<ClampSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeArtifact {
    Matrix(MatrixProbeFile),
    Linear(LinearProbe),
}

#[derive(Debug, Serialize, Deserialize)]
struct ClampJson {
    /// `null` when clamping is disabled.
    half_width: Option<f64>,
    baseline_same: f64,
    baseline_diff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum HeaderBody {
    Matrix {
        rows: usize,
        cols: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layer: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clamp: Option<ClampJson>,
    },
    Linear {
        classes: Vec<String>,
        dim: usize,
        l2_lambda: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    #[serde(flatten)]
    body: HeaderBody,
}

pub fn encode_probe(artifact: &ProbeArtifact) -> Vec<u8> {
    let (body, payload) = match artifact {
        ProbeArtifact::Matrix(m) => (
            HeaderBody::Matrix {
                rows: m.probe.input_dim(),
                cols: m.probe.output_dim(),
                layer: m.layer,
                clamp: m.clamp.map(|c| ClampJson {
                    half_width: c.half_width.is_finite().then_some(c.half_width),
                    baseline_same: c.baseline_same,
                    baseline_diff: c.baseline_diff,
                }),
            },
            m.probe.entries().to_vec(),
        ),
        ProbeArtifact::Linear(p) => (
            HeaderBody::Linear {
                classes: p.classes().to_vec(),
                dim: p.dim(),
                l2_lambda: p.l2_lambda(),
            },
            p.weights().iter().chain(p.bias()).copied().collect(),
        ),
    };
    let header = Header {
        format: PROBE_FORMAT.into(),
        body,
    };
    let mut out = serde_json::to_vec(&header).expect("header serialises");
    out.push(b'\n');
    out.extend(f64_bytes(&payload));
    out
}

pub fn decode_probe(bytes: &[u8], path: &Path) -> Result<ProbeArtifact> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| format_err(path, "missing header line"))?;
    let header: Header =
        serde_json::from_slice(&bytes[..newline]).map_err(|e| format_err(path, format!("header: {e}")))?;
    if header.format != PROBE_FORMAT {
        return Err(format_err(path, format!("unsupported format {:?}", header.format)));
    }
    let payload = &bytes[newline + 1..];
    let expect_len = |n: usize| -> Result<Vec<f64>> {
        if payload.len() != n * 8 {
            return Err(format_err(
                path,
                format!("payload holds {} bytes, header implies {}", payload.len(), n * 8),
            ));
        }
        Ok(f64_from_bytes(payload))
    };
    match header.body {
        HeaderBody::Matrix { rows, cols, layer, clamp } => {
            let entries = expect_len(rows * cols)?;
            let probe = ProbeMatrix::new(rows, cols, entries).map_err(|e| format_err(path, e.to_string()))?;
            Ok(ProbeArtifact::Matrix(MatrixProbeFile {
                probe,
                layer,
                clamp: clamp.map(|c| ClampSpec {
                    half_width: c.half_width.unwrap_or(f64::INFINITY),
                    baseline_same: c.baseline_same,
                    baseline_diff: c.baseline_diff,
                }),
            }))
        }
        HeaderBody::Linear { classes, dim, l2_lambda } => {
            let binary = classes.len() == 2 && classes[0] == "false" && classes[1] == "true";
            let rows = if binary { 1 } else { classes.len() };
            let mut values = expect_len(rows * dim + rows)?;
            let bias = values.split_off(rows * dim);
            let probe = LinearProbe::from_parts(classes, dim, values, bias, l2_lambda)
                .map_err(|e| format_err(path, e.to_string()))?;
            Ok(ProbeArtifact::Linear(probe))
        }
    }
}

pub fn write_probe(artifact: &ProbeArtifact, path: &Path) -> Result<()> {
    fs::write(path, encode_probe(artifact)).map_err(io_err(path))
}

pub fn read_probe(path: &Path) -> Result<ProbeArtifact> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_probe(&bytes, path)
}

/// Reads a file that must hold a matrix probe.
pub fn read_matrix_probe(path: &Path) -> Result<MatrixProbeFile> {
    match read_probe(path)? {
        ProbeArtifact::Matrix(m) => Ok(m),
        ProbeArtifact::Linear(_) => Err(format_err(path, "expected a matrix probe, found a linear classifier")),
    }
}

pub fn read_linear_probe(path: &Path) -> Result<LinearProbe> {
    match read_probe(path)? {
        ProbeArtifact::Linear(p) => Ok(p),
        ProbeArtifact::Matrix(_) => Err(format_err(path, "expected a linear classifier, found a matrix probe")),
    }
}

impl From<ProbeMatrix> for MatrixProbeFile {
    fn from(probe: ProbeMatrix) -> Self {
        MatrixProbeFile {
            probe,
            layer: None,
            clamp: None,
        }
    }
}

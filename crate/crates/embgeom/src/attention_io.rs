//! Attention datasets as JSON lines.
//!
//! The first line is a header, every following line one ordered token pair:
//!
//! ```text
//! {"format":"embgeom-attention/1","layer_count":12,"head_count":12}
//! {"sentence_id":"s1","i":0,"j":2,"forms":["dogs","loudly"],"values":"<base64 f32 LE>","label":true}
//! {"sentence_id":"s1","i":2,"j":1,"values":"...","label":"advmod"}
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use embgeom_core::corpus::{validate_attention_record, AttentionLabel, AttentionRecord, AttentionVector, AttentionVectorDataset};
use serde::{Deserialize, Serialize};

use crate::corpus_io::{f32_bytes, f32_from_bytes};
use crate::error::{format_err, io_err, IoError, Result};

pub const ATTENTION_FORMAT: &str = "embgeom-attention/1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    layer_count: usize,
    head_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelJson {
    Binary(bool),
    Relation(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordJson {
    sentence_id: String,
    i: usize,
    j: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forms: Option<(String, String)>,
    values: String,
    label: LabelJson,
}

pub fn write_attention_dataset(ds: &AttentionVectorDataset, path: &Path) -> Result<()> {
    ds.validate()?;
    let mut out = Vec::new();
    let header = Header {
        format: ATTENTION_FORMAT.into(),
        layer_count: ds.layer_count,
        head_count: ds.head_count,
    };
    serde_json::to_writer(&mut out, &header).expect("header serialises");
    out.push(b'\n');
    for r in &ds.records {
        let rec = RecordJson {
            sentence_id: r.vector.sentence_id.clone(),
            i: r.vector.token_i,
            j: r.vector.token_j,
            forms: r.vector.forms.clone(),
            values: STANDARD.encode(f32_bytes(&r.vector.values)),
            label: match &r.label {
                AttentionLabel::HasRelation(b) => LabelJson::Binary(*b),
                AttentionLabel::Relation(s) => LabelJson::Relation(s.clone()),
            },
        };
        serde_json::to_writer(&mut out, &rec).expect("record serialises");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&out).map_err(io_err(path))
}

/// Reads a dataset; the first invalid record aborts with its 0-based index.
pub fn read_attention_dataset(path: &Path) -> Result<AttentionVectorDataset> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| format_err(path, "missing header line"))?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| format_err(path, format!("header: {e}")))?;
    if header.format != ATTENTION_FORMAT {
        return Err(format_err(path, format!("unsupported format {:?}", header.format)));
    }
    let expected = header.layer_count * header.head_count;
    let mut records = Vec::new();
    for (index, (_, line)) in lines.enumerate() {
        let bad = |message: String| IoError::Record {
            path: path.to_path_buf(),
            index,
            message,
        };
        let rec: RecordJson = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let bytes = STANDARD.decode(rec.values.as_bytes()).map_err(|e| bad(format!("values: {e}")))?;
        if bytes.len() % 4 != 0 {
            return Err(bad(format!("values hold {} bytes, not a multiple of 4", bytes.len())));
        }
        let record = AttentionRecord {
            vector: AttentionVector {
                sentence_id: rec.sentence_id,
                token_i: rec.i,
                token_j: rec.j,
                forms: rec.forms,
                values: f32_from_bytes(&bytes),
            },
            label: match rec.label {
                LabelJson::Binary(b) => AttentionLabel::HasRelation(b),
                LabelJson::Relation(s) => AttentionLabel::Relation(s),
            },
        };
        validate_attention_record(index, &record, expected).map_err(|e| format_err(path, e.to_string()))?;
        records.push(record);
    }
    Ok(AttentionVectorDataset::new(header.layer_count, header.head_count, records)?)
}

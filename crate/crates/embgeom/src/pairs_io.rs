//! Sentence-pair manifests for the concatenation experiment: one JSON object
//! per line with the fields of [`SensePair`].

use std::fs;
use std::path::Path;

use embgeom_core::concat::SensePair;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, IoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PairJson {
    keyword: String,
    sentence_a: String,
    token_a: usize,
    sense_a: String,
    sentence_b: String,
    token_b: usize,
    sense_b: String,
    concatenated: String,
    concat_token_a: usize,
    concat_token_b: usize,
}

impl From<PairJson> for SensePair {
    fn from(p: PairJson) -> Self {
        SensePair {
            keyword: p.keyword,
            sentence_a: p.sentence_a,
            token_a: p.token_a,
            sense_a: p.sense_a,
            sentence_b: p.sentence_b,
            token_b: p.token_b,
            sense_b: p.sense_b,
            concatenated: p.concatenated,
            concat_token_a: p.concat_token_a,
            concat_token_b: p.concat_token_b,
        }
    }
}

impl From<&SensePair> for PairJson {
    fn from(p: &SensePair) -> Self {
        PairJson {
            keyword: p.keyword.clone(),
            sentence_a: p.sentence_a.clone(),
            token_a: p.token_a,
            sense_a: p.sense_a.clone(),
            sentence_b: p.sentence_b.clone(),
            token_b: p.token_b,
            sense_b: p.sense_b.clone(),
            concatenated: p.concatenated.clone(),
            concat_token_a: p.concat_token_a,
            concat_token_b: p.concat_token_b,
        }
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<SensePair>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(index, line)| {
            let bad = |message: String| IoError::Record {
                path: path.to_path_buf(),
                index,
                message,
            };
            let p: SensePair = serde_json::from_str::<PairJson>(line).map_err(|e| bad(e.to_string()))?.into();
            p.validate().map_err(|e| bad(e.to_string()))?;
            Ok(p)
        })
        .collect()
}

pub fn write_pairs(pairs: &[SensePair], path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(&PairJson::from(p)).expect("pair serialises"));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

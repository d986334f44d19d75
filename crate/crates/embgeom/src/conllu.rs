//! CoNLL-U dependency parses.
//!
//! Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are skipped. A
//! sentence with a malformed line, a missing or repeated root, an
//! out-of-range head or a cycle is rejected as a whole; the rest of the file
//! is still read.

use std::fs;
use std::path::Path;

use embgeom_core::corpus::Parse;
use embgeom_core::tree::Tree;

use crate::error::{io_err, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConlluSentence {
    /// From `# sent_id = ...`, else the 1-based position in the file.
    pub id: String,
    pub text: Option<String>,
    pub forms: Vec<String>,
    pub lemmas: Vec<String>,
    pub parse: Parse,
    /// 1-based line number of the sentence's first line.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub sentence_line: usize,
    /// Line of the offending token, or the sentence start for whole-tree faults.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConlluDocument {
    pub sentences: Vec<ConlluSentence>,
    pub rejected: Vec<Rejection>,
}

pub fn read_conllu(path: &Path) -> Result<ConlluDocument> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let doc = parse_conllu(&text);
    if doc.sentences.is_empty() && doc.rejected.is_empty() {
        log::warn!("{}: no sentences", path.display());
    }
    for r in &doc.rejected {
        log::warn!("{}:{}: {}", path.display(), r.line, r.message);
    }
    Ok(doc)
}

pub fn parse_conllu(text: &str) -> ConlluDocument {
    let mut doc = ConlluDocument::default();
    let mut block: Vec<(usize, &str)> = Vec::new();
    let mut count = 0;
    let lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    for (no, line) in lines.chain(std::iter::once((0, ""))) {
        if !line.trim().is_empty() {
            block.push((no, line));
            continue;
        }
        if block.is_empty() {
            continue;
        }
        count += 1;
        match parse_block(&block, count) {
            Ok(Some(s)) => doc.sentences.push(s),
            Ok(None) => {}
            Err(r) => doc.rejected.push(r),
        }
        block.clear();
    }
    doc
}

fn parse_block(block: &[(usize, &str)], index: usize) -> std::result::Result<Option<ConlluSentence>, Rejection> {
    let start = block[0].0;
    let reject = |line: usize, message: String| Rejection {
        sentence_line: start,
        line,
        message,
    };
    let mut id = None;
    let mut text = None;
    let mut forms = Vec::new();
    let mut lemmas = Vec::new();
    let mut heads: Vec<(usize, usize)> = Vec::new();
    let mut relations = Vec::new();

    for &(no, line) in block {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => id = Some(value.trim().to_string()),
                    "text" => text = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(reject(no, format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let tid: usize = cols[0]
            .parse()
            .map_err(|_| reject(no, format!("bad token id {:?}", cols[0])))?;
        if tid != forms.len() + 1 {
            return Err(reject(no, format!("token id {tid} out of sequence, expected {}", forms.len() + 1)));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| reject(no, format!("bad head {:?}", cols[6])))?;
        forms.push(cols[1].to_string());
        lemmas.push(cols[2].to_string());
        heads.push((head, no));
        relations.push(cols[7].to_string());
    }
    if forms.is_empty() {
        return Ok(None);
    }

    let n = forms.len();
    let mut parents = Vec::with_capacity(n);
    let mut root_line = None;
    for &(head, no) in &heads {
        if head > n {
            return Err(reject(no, format!("head {head} exceeds sentence length {n}")));
        }
        if head == 0 {
            if root_line.is_some() {
                return Err(reject(no, "more than one root".into()));
            }
            root_line = Some(no);
            parents.push(None);
        } else {
            parents.push(Some(head - 1));
        }
    }
    if root_line.is_none() {
        return Err(reject(start, "no token has head 0".into()));
    }
    let tree = Tree::from_parents(parents).map_err(|e| reject(start, e.to_string()))?;
    let parse = Parse::new(tree, relations).map_err(|e| reject(start, e.to_string()))?;
    Ok(Some(ConlluSentence {
        id: id.unwrap_or_else(|| index.to_string()),
        text,
        forms,
        lemmas,
        parse,
        line: start,
    }))
}

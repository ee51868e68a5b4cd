//! Shared plumbing for the line-delimited and tabular file formats.
//!
//! Every file written by the toolkit starts with a metadata header:
//! JSON-lines files carry a leading `{"meta": {...}}` object and tab-separated
//! files a leading `#meta<TAB>{...}` comment line. Readers skip both.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "annocart";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance header echoed into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    /// Input name → SHA-256 hex digest of its bytes.
    pub inputs: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            tool: TOOL_NAME.to_owned(),
            version: TOOL_VERSION.to_owned(),
            command: command.into(),
            config: BTreeMap::new(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn with_config(mut self, config: BTreeMap<String, String>) -> Self {
        self.config = config;
        self
    }

    pub fn with_input(mut self, name: impl Into<String>, bytes: &[u8]) -> Self {
        self.inputs.insert(name.into(), sha256_hex(bytes));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metadata is always serializable")
    }
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: Metadata,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_jsonl_header<W: Write>(w: &mut W, meta: &Metadata) -> io::Result<()> {
    let line = serde_json::to_string(&MetaLine { meta: meta.clone() })
        .expect("metadata is always serializable");
    writeln!(w, "{line}")
}

pub fn write_tsv_header<W: Write>(w: &mut W, meta: &Metadata) -> io::Result<()> {
    writeln!(w, "#meta\t{}", meta.to_json())
}

/// Returns true for a JSON-lines metadata header line.
pub fn is_jsonl_meta(line: &str) -> bool {
    line.trim_start().starts_with("{\"meta\"")
}

/// Iterate the non-blank, non-header lines of a JSON-lines stream as
/// `(1-based line number, line)`.
pub fn jsonl_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    let mut seen_content = false;
    reader
        .lines()
        .enumerate()
        .filter_map(move |(idx, line)| match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(line) => {
                if line.trim().is_empty() {
                    return None;
                }
                if !seen_content && is_jsonl_meta(&line) {
                    seen_content = true;
                    return None;
                }
                seen_content = true;
                Some(Ok((idx + 1, line)))
            }
        })
}

/// Read the metadata header of a JSON-lines or TSV stream, if any.
pub fn read_header(text: &str) -> Option<Metadata> {
    let first = text.lines().find(|l| !l.trim().is_empty())?;
    if let Some(rest) = first.strip_prefix("#meta\t") {
        return serde_json::from_str(rest).ok();
    }
    if is_jsonl_meta(first) {
        return serde_json::from_str::<MetaLine>(first).ok().map(|m| m.meta);
    }
    None
}

/// Data rows paired with their 1-based line numbers.
pub type TsvRows = Vec<(usize, Vec<String>)>;

/// Split a TSV body into a header row and data rows, skipping `#` comments.
pub fn tsv_rows(text: &str) -> Result<(Vec<String>, TsvRows)> {
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        match header {
            None => header = Some(fields),
            Some(ref h) => {
                if fields.len() != h.len() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected {} columns, found {}", h.len(), fields.len()),
                    });
                }
                rows.push((idx + 1, fields));
            }
        }
    }
    let header = header.ok_or_else(|| Error::InvalidInput("table has no header row".into()))?;
    Ok((header, rows))
}

/// Shortest round-trip decimal form, switching to exponent notation for very
/// small or very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Replace characters that would break a TSV cell.
pub fn tsv_cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

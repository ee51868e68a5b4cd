//! Per-epoch gold-label probabilities, the input to data-map statistics.
//!
//! File format (JSON lines, one record per key and epoch):
//!
//! ```text
//! {"item_id":"t1","epoch":1,"gold":"offensive","gold_prob":0.62,"predicted":"offensive"}
//! {"item_id":"t1","annotator_id":"a7","epoch":1,"gold":"not","gold_prob":0.31,"predicted":"offensive"}
//! ```
//!
//! Epochs are 1-based. Records without `annotator_id` belong to a Single-GT
//! log, records with it to a Multi-GT log; one file never mixes the two.
//! Record order is free; the log is keyed and sorted on load.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Mode;
use crate::corpus::LabelId;
use crate::error::{Error, Result};
use crate::format::{self, Metadata};

/// An item (Single-GT) or an item–annotator pair (Multi-GT).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DynamicsKey {
    pub item_id: String,
    pub annotator_id: Option<String>,
}

impl DynamicsKey {
    pub fn item(item_id: impl Into<String>) -> Self {
        Self {
            item_id: item_id.into(),
            annotator_id: None,
        }
    }

    pub fn annotation(item_id: impl Into<String>, annotator_id: impl Into<String>) -> Self {
        Self {
            item_id: item_id.into(),
            annotator_id: Some(annotator_id.into()),
        }
    }
}

impl fmt::Display for DynamicsKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.annotator_id {
            None => write!(f, "{}", self.item_id),
            Some(a) => write!(f, "{}@{}", self.item_id, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub gold_prob: f64,
    pub predicted: LabelId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyTrace {
    pub gold: LabelId,
    /// Epoch number (1-based) → record.
    pub epochs: BTreeMap<usize, EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsLog {
    mode: Mode,
    labels: Vec<String>,
    epochs: usize,
    traces: BTreeMap<DynamicsKey, KeyTrace>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotator_id: Option<String>,
    epoch: usize,
    gold: String,
    gold_prob: f64,
    predicted: String,
}

impl DynamicsLog {
    pub fn new(mode: Mode, labels: Vec<String>, epochs: usize) -> Self {
        Self {
            mode,
            labels,
            epochs,
            traces: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Expected number of epochs per key.
    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn traces(&self) -> &BTreeMap<DynamicsKey, KeyTrace> {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn record(
        &mut self,
        key: DynamicsKey,
        epoch: usize,
        gold: LabelId,
        gold_prob: f64,
        predicted: LabelId,
    ) -> Result<()> {
        if key.annotator_id.is_some() != (self.mode == Mode::Multi) {
            return Err(Error::InvalidInput(format!(
                "key {key} does not match a {} log",
                self.mode
            )));
        }
        if !gold_prob.is_finite() || !(0.0..=1.0).contains(&gold_prob) {
            return Err(Error::InvalidInput(format!(
                "gold_prob {gold_prob} for key {key} is outside [0, 1]"
            )));
        }
        if epoch == 0 || epoch > self.epochs {
            return Err(Error::InvalidInput(format!(
                "epoch {epoch} for key {key} outside 1..={}",
                self.epochs
            )));
        }
        let k = self.labels.len();
        if gold.index() >= k || predicted.index() >= k {
            return Err(Error::InvalidInput(format!("label id out of range for key {key}")));
        }
        let trace = self.traces.entry(key.clone()).or_insert_with(|| KeyTrace {
            gold,
            epochs: BTreeMap::new(),
        });
        if trace.gold != gold {
            return Err(Error::InvalidInput(format!(
                "key {key} has inconsistent gold labels"
            )));
        }
        if trace
            .epochs
            .insert(epoch, EpochRecord { gold_prob, predicted })
            .is_some()
        {
            return Err(Error::InvalidInput(format!(
                "duplicate record for key {key} at epoch {epoch}"
            )));
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, w: &mut W, meta: Option<&Metadata>) -> Result<()> {
        if let Some(meta) = meta {
            format::write_jsonl_header(w, meta)?;
        }
        for (key, trace) in &self.traces {
            for (&epoch, rec) in &trace.epochs {
                let row = Row {
                    item_id: key.item_id.clone(),
                    annotator_id: key.annotator_id.clone(),
                    epoch,
                    gold: self.labels[trace.gold.index()].clone(),
                    gold_prob: rec.gold_prob,
                    predicted: self.labels[rec.predicted.index()].clone(),
                };
                serde_json::to_writer(&mut *w, &row).map_err(std::io::Error::from)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    /// Load a log written by this tool or any external trainer.
    ///
    /// With `labels`, label strings are resolved against that vocabulary
    /// (unknown labels are an error). Without, the vocabulary is the sorted
    /// set of labels seen in the file. The expected epoch count is the largest
    /// epoch number present.
    pub fn read_jsonl<R: BufRead>(reader: R, labels: Option<&[String]>) -> Result<Self> {
        let mut rows = Vec::new();
        for entry in format::jsonl_lines(reader) {
            let (line, text) = entry?;
            let row: Row = serde_json::from_str(&text).map_err(|e| Error::Parse {
                line,
                message: format!("malformed dynamics record: {e}"),
            })?;
            rows.push((line, row));
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("dynamics file has no records".into()));
        }
        let multi = rows[0].1.annotator_id.is_some();
        if let Some((line, _)) = rows.iter().find(|(_, r)| r.annotator_id.is_some() != multi) {
            return Err(Error::Parse {
                line: *line,
                message: "dynamics file mixes item keys and item-annotator keys".into(),
            });
        }
        let labels: Vec<String> = match labels {
            Some(l) => l.to_vec(),
            None => rows
                .iter()
                .flat_map(|(_, r)| [r.gold.clone(), r.predicted.clone()])
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        let epochs = rows.iter().map(|(_, r)| r.epoch).max().unwrap_or(0);
        let mode = if multi { Mode::Multi } else { Mode::Single };
        let mut log = DynamicsLog::new(mode, labels, epochs);
        let resolve = |name: &str, line: usize, labels: &[String]| {
            labels
                .iter()
                .position(|l| l == name)
                .map(|i| LabelId(i as u32))
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("unknown label `{name}`"),
                })
        };
        for (line, row) in rows {
            let gold = resolve(&row.gold, line, &log.labels)?;
            let predicted = resolve(&row.predicted, line, &log.labels)?;
            let key = DynamicsKey {
                item_id: row.item_id,
                annotator_id: row.annotator_id,
            };
            log.record(key, row.epoch, gold, row.gold_prob, predicted)
                .map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?;
        }
        Ok(log)
    }
}

//! Data-map statistics over a dynamics log.
//!
//! For each key: confidence is the mean gold-label probability across epochs,
//! variability its population standard deviation, and correctness the
//! fraction of epochs whose argmax prediction equals the gold label.
//!
//! Data-map files are tab-separated with columns
//! `item_id  annotator_id  gold  confidence  variability  correctness`;
//! `annotator_id` is empty for Single-GT maps.

use std::io::Write;

use crate::corpus::LabelId;
use crate::error::{Error, Result};
use crate::format::{self, Metadata};
use crate::models::{DynamicsKey, DynamicsLog, Mode};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMapPoint {
    pub key: DynamicsKey,
    pub gold: LabelId,
    pub confidence: f64,
    pub variability: f64,
    pub correctness: f64,
}

/// Points sorted by key, with the label vocabulary they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMap {
    pub mode: Mode,
    pub labels: Vec<String>,
    pub epochs: usize,
    pub points: Vec<DataMapPoint>,
}

pub fn confidence(probs: &[f64]) -> Result<f64> {
    let (&first, _) = probs.split_first().ok_or(Error::EmptySeries)?;
    // Offset by the first value so a constant series has an exact mean.
    Ok(first + probs.iter().map(|p| p - first).sum::<f64>() / probs.len() as f64)
}

/// Population standard deviation (divides by the number of epochs).
pub fn variability(probs: &[f64]) -> Result<f64> {
    let mean = confidence(probs)?;
    let var = probs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / probs.len() as f64;
    Ok(var.sqrt())
}

pub fn correctness(predictions: &[LabelId], gold: LabelId) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptySeries);
    }
    let hits = predictions.iter().filter(|&&p| p == gold).count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// One point per key. Every key must have a record for each epoch
/// `1..=log.epochs()`.
pub fn build_map(log: &DynamicsLog) -> Result<DataMap> {
    let expected = log.epochs();
    let mut points = Vec::with_capacity(log.len());
    for (key, trace) in log.traces() {
        let complete = trace.epochs.len() == expected
            && trace.epochs.keys().copied().eq(1..=expected);
        if !complete {
            return Err(Error::IncompleteKey {
                key: key.to_string(),
                found: trace.epochs.len(),
                expected,
            });
        }
        let probs: Vec<f64> = trace.epochs.values().map(|r| r.gold_prob).collect();
        let preds: Vec<LabelId> = trace.epochs.values().map(|r| r.predicted).collect();
        points.push(DataMapPoint {
            key: key.clone(),
            gold: trace.gold,
            confidence: confidence(&probs)?,
            variability: variability(&probs)?,
            correctness: correctness(&preds, trace.gold)?,
        });
    }
    Ok(DataMap {
        mode: log.mode(),
        labels: log.labels().to_vec(),
        epochs: expected,
        points,
    })
}

impl DataMap {
    pub fn write_tsv<W: Write>(&self, w: &mut W, meta: Option<&Metadata>) -> Result<()> {
        if let Some(meta) = meta {
            format::write_tsv_header(w, meta)?;
        }
        writeln!(w, "item_id\tannotator_id\tgold\tconfidence\tvariability\tcorrectness")?;
        for p in &self.points {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                format::tsv_cell(&p.key.item_id),
                format::tsv_cell(p.key.annotator_id.as_deref().unwrap_or("")),
                format::tsv_cell(&self.labels[p.gold.index()]),
                format::num(p.confidence),
                format::num(p.variability),
                format::num(p.correctness)
            )?;
        }
        Ok(())
    }

    /// Parse a data-map table. Labels are resolved in order of first
    /// appearance, so the returned vocabulary covers only observed gold labels.
    /// The epoch count comes from the `epochs` entry of the metadata header
    /// and is 0 when absent.
    pub fn read_tsv(text: &str) -> Result<Self> {
        let (header, rows) = format::tsv_rows(text)?;
        let expected = ["item_id", "annotator_id", "gold", "confidence", "variability", "correctness"];
        if header != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("data map header must be {}", expected.join("\t")),
            });
        }
        let mut labels: Vec<String> = Vec::new();
        let mut points = Vec::with_capacity(rows.len());
        let mut multi = None;
        for (line, f) in rows {
            let num = |s: &str, name: &str| -> Result<f64> {
                s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("bad {name} value `{s}`"),
                })
            };
            let is_multi = !f[1].is_empty();
            if *multi.get_or_insert(is_multi) != is_multi {
                return Err(Error::Parse {
                    line,
                    message: "data map mixes item keys and item-annotator keys".into(),
                });
            }
            let gold = match labels.iter().position(|l| *l == f[2]) {
                Some(i) => i,
                None => {
                    labels.push(f[2].clone());
                    labels.len() - 1
                }
            };
            points.push(DataMapPoint {
                key: DynamicsKey {
                    item_id: f[0].clone(),
                    annotator_id: is_multi.then(|| f[1].clone()),
                },
                gold: LabelId(gold as u32),
                confidence: num(&f[3], "confidence")?,
                variability: num(&f[4], "variability")?,
                correctness: num(&f[5], "correctness")?,
            });
        }
        Ok(Self {
            mode: if multi == Some(true) { Mode::Multi } else { Mode::Single },
            labels,
            epochs: format::read_header(text)
                .and_then(|m| m.config.get("epochs").and_then(|e| e.parse().ok()))
                .unwrap_or(0),
            points,
        })
    }
}

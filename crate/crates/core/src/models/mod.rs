//! Single-GT and Multi-GT text classifiers and their training dynamics.
//!
//! The Single-GT model is a linear softmax classifier over hashed text
//! features trained on each item's majority label. The Multi-GT model adds an
//! additive annotator term `V·e(annotator)` and trains on every raw
//! `(item, annotator, label)` annotation.

mod checkpoint;
mod classifier;
mod dynamics;
mod metrics;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use classifier::{Classifier, Example, Gradient, MultiGtModel, ParamIndex, SingleGtModel};
pub use dynamics::{DynamicsKey, DynamicsLog, EpochRecord, KeyTrace};
pub use metrics::weighted_f1;
pub use train::{evaluate_f1, train, TrainConfig, TrainOutcome};

/// Which target the classifier learns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One example per item, target = majority vote.
    Single,
    /// One example per annotation, conditioned on the annotator.
    Multi,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Multi => "multi",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Mode::Single),
            "multi" => Ok(Mode::Multi),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected single or multi)"
            ))),
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("softmax input"));
    }
    Ok(softmax_unchecked(logits))
}

pub(crate) fn softmax_unchecked(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Index of the largest entry; ties go to the smallest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

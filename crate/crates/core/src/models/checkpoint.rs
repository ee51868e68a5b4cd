//! Model checkpoints as JSON lines.
//!
//! ```text
//! {"meta": {...}}                                   optional header
//! {"model":{"mode":"multi","labels":[..],"dim":4096,"ngram_order":2,"annotator_dim":16,"annotators":[..]}}
//! {"block":"bias","values":[..]}                    K values
//! {"block":"weight","index":j,"values":[..]}        K values for feature j; all-zero rows omitted
//! {"block":"projection","index":k,"values":[..]}    d_a values for class k (multi only)
//! {"block":"embedding","index":s,"values":[..]}     d_a values for slot s; last slot is the fallback
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::classifier::{Classifier, MultiGtModel, SingleGtModel};
use super::Mode;
use crate::error::{Error, Result};
use crate::featurizer::FeatureHasher;
use crate::format::{self, Metadata};

#[derive(Serialize, Deserialize)]
struct Header {
    mode: Mode,
    labels: Vec<String>,
    dim: usize,
    ngram_order: usize,
    #[serde(default)]
    annotator_dim: usize,
    #[serde(default)]
    annotators: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    model: Header,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BlockKind {
    Bias,
    Weight,
    Projection,
    Embedding,
}

#[derive(Serialize, Deserialize)]
struct Block {
    block: BlockKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    values: Vec<f64>,
}

fn write_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_checkpoint<W: Write>(
    model: &Classifier,
    w: &mut W,
    meta: Option<&Metadata>,
) -> Result<()> {
    if let Some(meta) = meta {
        format::write_jsonl_header(w, meta)?;
    }
    let base = model.base();
    let (annotator_dim, annotators) = match model {
        Classifier::Single(_) => (0, Vec::new()),
        Classifier::Multi(m) => (m.annotator_dim(), m.annotators().to_vec()),
    };
    write_line(
        w,
        &HeaderLine {
            model: Header {
                mode: model.mode(),
                labels: base.labels().to_vec(),
                dim: base.dim(),
                ngram_order: base.hasher().ngram_order,
                annotator_dim,
                annotators,
            },
        },
    )?;
    write_line(
        w,
        &Block {
            block: BlockKind::Bias,
            index: None,
            values: base.bias().to_vec(),
        },
    )?;
    let k = base.n_labels();
    for (j, row) in base.weights.chunks(k).enumerate() {
        if row.iter().all(|&v| v == 0.0) {
            continue;
        }
        write_line(
            w,
            &Block {
                block: BlockKind::Weight,
                index: Some(j),
                values: row.to_vec(),
            },
        )?;
    }
    if let Classifier::Multi(m) = model {
        for (c, row) in m.projection().chunks(m.annotator_dim()).enumerate() {
            write_line(
                w,
                &Block {
                    block: BlockKind::Projection,
                    index: Some(c),
                    values: row.to_vec(),
                },
            )?;
        }
        for slot in 0..=m.fallback_slot() {
            write_line(
                w,
                &Block {
                    block: BlockKind::Embedding,
                    index: Some(slot),
                    values: m.embedding(slot).to_vec(),
                },
            )?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(reader: R) -> Result<Classifier> {
    let mut lines = format::jsonl_lines(reader);
    let (line, text) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty checkpoint".into()))??;
    let header: HeaderLine = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line,
        message: format!("bad checkpoint header: {e}"),
    })?;
    let h = header.model;
    if h.labels.len() < 2 {
        return Err(Error::Parse { line, message: "checkpoint needs at least 2 labels".into() });
    }
    let hasher = FeatureHasher::new(h.dim, h.ngram_order)?;
    let base = SingleGtModel::zeros(h.labels, hasher);
    let mut model = match h.mode {
        Mode::Single => Classifier::Single(base),
        Mode::Multi => {
            if h.annotator_dim == 0 {
                return Err(Error::Parse { line, message: "multi checkpoint needs annotator_dim".into() });
            }
            Classifier::Multi(MultiGtModel::from_base(base, h.annotators, h.annotator_dim))
        }
    };
    let k = model.n_labels();
    for entry in lines {
        let (line, text) = entry?;
        let block: Block = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line,
            message: format!("bad checkpoint block: {e}"),
        })?;
        let bad = |msg: &str| Error::Parse { line, message: msg.to_owned() };
        if block.values.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite parameter"));
        }
        match (&mut model, block.block) {
            (m, BlockKind::Bias) => {
                if block.values.len() != k {
                    return Err(bad("bias length mismatch"));
                }
                for (c, v) in block.values.into_iter().enumerate() {
                    match m {
                        Classifier::Single(s) => s.set_bias(c, v),
                        Classifier::Multi(mm) => mm.base_mut().set_bias(c, v),
                    }
                }
            }
            (m, BlockKind::Weight) => {
                let j = block.index.ok_or_else(|| bad("weight block needs index"))?;
                if j >= hasher.dim || block.values.len() != k {
                    return Err(bad("weight block out of range"));
                }
                for (c, v) in block.values.into_iter().enumerate() {
                    match m {
                        Classifier::Single(s) => s.set_weight(c, j, v),
                        Classifier::Multi(mm) => mm.base_mut().set_weight(c, j, v),
                    }
                }
            }
            (Classifier::Multi(m), BlockKind::Projection) => {
                let c = block.index.ok_or_else(|| bad("projection block needs index"))?;
                let d = m.annotator_dim();
                if c >= k || block.values.len() != d {
                    return Err(bad("projection block out of range"));
                }
                m.projection_mut()[c * d..(c + 1) * d].copy_from_slice(&block.values);
            }
            (Classifier::Multi(m), BlockKind::Embedding) => {
                let s = block.index.ok_or_else(|| bad("embedding block needs index"))?;
                if s > m.fallback_slot() || block.values.len() != m.annotator_dim() {
                    return Err(bad("embedding block out of range"));
                }
                m.embedding_mut(s).copy_from_slice(&block.values);
            }
            (Classifier::Single(_), _) => return Err(bad("annotator block in a single checkpoint")),
        }
    }
    Ok(model)
}

use std::collections::BTreeMap;

use rand::Rng;

use super::{softmax_unchecked, Mode};
use crate::corpus::LabelId;
use crate::error::{Error, Result};
use crate::featurizer::{FeatureHasher, SparseVector};

/// Linear softmax classifier: `logits = W·x + b`.
///
/// Weights are stored feature-major (`K` consecutive values per feature) so a
/// sparse dot product touches one contiguous block per active feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleGtModel {
    pub(crate) labels: Vec<String>,
    pub(crate) hasher: FeatureHasher,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl SingleGtModel {
    pub fn zeros(labels: Vec<String>, hasher: FeatureHasher) -> Self {
        let k = labels.len();
        Self {
            weights: vec![0.0; hasher.dim * k],
            bias: vec![0.0; k],
            labels,
            hasher,
        }
    }

    /// `W ~ U(±1/√D)`, `b = 0`.
    pub fn init<R: Rng>(labels: Vec<String>, hasher: FeatureHasher, rng: &mut R) -> Self {
        let mut m = Self::zeros(labels, hasher);
        let bound = 1.0 / (hasher.dim as f64).sqrt();
        for w in &mut m.weights {
            *w = rng.gen_range(-bound..bound);
        }
        m
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.hasher.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn hasher(&self) -> &FeatureHasher {
        &self.hasher
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.weights[feature * self.n_labels() + class]
    }

    pub fn set_weight(&mut self, class: usize, feature: usize, value: f64) {
        let k = self.n_labels();
        self.weights[feature * k + class] = value;
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn set_bias(&mut self, class: usize, value: f64) {
        self.bias[class] = value;
    }

    fn check_dim(&self, x: &SparseVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// `W·x` accumulated in feature order.
    fn project(&self, x: &SparseVector) -> Vec<f64> {
        let k = self.n_labels();
        let mut z = vec![0.0; k];
        for &(j, v) in x.entries() {
            let row = &self.weights[j as usize * k..(j as usize + 1) * k];
            for (zc, w) in z.iter_mut().zip(row) {
                *zc += w * v;
            }
        }
        z
    }

    fn add_bias(&self, z: &mut [f64]) {
        for (zc, b) in z.iter_mut().zip(&self.bias) {
            *zc += b;
        }
    }

    /// `W·x + b`.
    pub fn logits(&self, x: &SparseVector) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut z = self.project(x);
        self.add_bias(&mut z);
        Ok(z)
    }
}

/// Annotator-conditioned classifier: `logits = W·x + V·e(annotator) + b`.
///
/// `embeddings` holds one row per known annotator (sorted by id) followed by a
/// shared fallback row used for annotators not seen in training.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiGtModel {
    pub(crate) base: SingleGtModel,
    pub(crate) annotator_dim: usize,
    pub(crate) projection: Vec<f64>,
    pub(crate) annotators: Vec<String>,
    pub(crate) embeddings: Vec<f64>,
}

impl MultiGtModel {
    /// Zero projection and zero embeddings around an existing base model.
    pub fn from_base(base: SingleGtModel, annotators: Vec<String>, annotator_dim: usize) -> Self {
        let mut annotators = annotators;
        annotators.sort();
        annotators.dedup();
        let k = base.n_labels();
        Self {
            projection: vec![0.0; k * annotator_dim],
            embeddings: vec![0.0; (annotators.len() + 1) * annotator_dim],
            base,
            annotator_dim,
            annotators,
        }
    }

    /// `W, V ~ U(±1/√D)`, `b = 0`, known embeddings `~ U(±1/√d_a)`, fallback 0.
    pub fn init<R: Rng>(
        labels: Vec<String>,
        hasher: FeatureHasher,
        annotators: Vec<String>,
        annotator_dim: usize,
        rng: &mut R,
    ) -> Self {
        let base = SingleGtModel::init(labels, hasher, rng);
        let mut m = Self::from_base(base, annotators, annotator_dim);
        let bound = 1.0 / (hasher.dim as f64).sqrt();
        for v in &mut m.projection {
            *v = rng.gen_range(-bound..bound);
        }
        let bound = 1.0 / (annotator_dim as f64).sqrt();
        let known = m.annotators.len() * annotator_dim;
        for e in &mut m.embeddings[..known] {
            *e = rng.gen_range(-bound..bound);
        }
        m
    }

    pub fn base(&self) -> &SingleGtModel {
        &self.base
    }

    pub fn base_mut(&mut self) -> &mut SingleGtModel {
        &mut self.base
    }

    pub fn annotator_dim(&self) -> usize {
        self.annotator_dim
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn fallback_slot(&self) -> usize {
        self.annotators.len()
    }

    /// Embedding row for an annotator; unknown ids map to the fallback row.
    pub fn slot(&self, annotator_id: &str) -> usize {
        self.annotators
            .binary_search_by(|a| a.as_str().cmp(annotator_id))
            .unwrap_or(self.fallback_slot())
    }

    pub fn embedding(&self, slot: usize) -> &[f64] {
        &self.embeddings[slot * self.annotator_dim..(slot + 1) * self.annotator_dim]
    }

    pub fn embedding_mut(&mut self, slot: usize) -> &mut [f64] {
        let d = self.annotator_dim;
        &mut self.embeddings[slot * d..(slot + 1) * d]
    }

    /// `V` as a row-major `K × d_a` matrix.
    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn projection_mut(&mut self) -> &mut [f64] {
        &mut self.projection
    }

    fn annotator_term(&self, slot: usize) -> Vec<f64> {
        let e = self.embedding(slot);
        self.projection
            .chunks(self.annotator_dim)
            .map(|row| row.iter().zip(e).map(|(v, e)| v * e).sum())
            .collect()
    }

    pub fn logits_for_slot(&self, x: &SparseVector, slot: usize) -> Result<Vec<f64>> {
        self.base.check_dim(x)?;
        let mut z = self.base.project(x);
        for (zc, a) in z.iter_mut().zip(self.annotator_term(slot)) {
            *zc += a;
        }
        self.base.add_bias(&mut z);
        Ok(z)
    }

    pub fn logits(&self, x: &SparseVector, annotator_id: &str) -> Result<Vec<f64>> {
        self.logits_for_slot(x, self.slot(annotator_id))
    }
}

/// One training or evaluation example.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub x: &'a SparseVector,
    /// Embedding row for Multi-GT models; ignored by Single-GT models.
    pub slot: Option<usize>,
    pub target: LabelId,
}

/// Addresses a single scalar parameter of a [`Classifier`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamIndex {
    Weight { class: usize, feature: usize },
    Bias { class: usize },
    Projection { class: usize, dim: usize },
    Embedding { slot: usize, dim: usize },
}

/// Gradient of mean cross-entropy plus `(λ/2)·(‖W‖² + ‖V‖² + ‖E‖²)`.
///
/// The data term is stored sparsely (only features and annotator rows that
/// occur in the batch); the penalty term `λ·θ` is added by
/// [`Gradient::component`] and applied densely by [`Classifier::apply`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub l2_penalty: f64,
    /// Per-example logit gradient `p − t`, before averaging.
    pub logit_grads: Vec<Vec<f64>>,
    pub weights: BTreeMap<u32, Vec<f64>>,
    pub bias: Vec<f64>,
    /// Row-major `K × d_a`, empty for Single-GT models.
    pub projection: Vec<f64>,
    pub embeddings: BTreeMap<usize, Vec<f64>>,
}

impl Gradient {
    /// Full partial derivative for one parameter, penalty included.
    pub fn component(&self, model: &Classifier, idx: ParamIndex) -> f64 {
        let theta = model.param(idx);
        match idx {
            ParamIndex::Weight { class, feature } => {
                let data = self
                    .weights
                    .get(&(feature as u32))
                    .map_or(0.0, |row| row[class]);
                data + self.l2_penalty * theta
            }
            ParamIndex::Bias { class } => self.bias[class],
            ParamIndex::Projection { class, dim } => {
                let d = model.annotator_dim();
                self.projection.get(class * d + dim).copied().unwrap_or(0.0)
                    + self.l2_penalty * theta
            }
            ParamIndex::Embedding { slot, dim } => {
                let data = self.embeddings.get(&slot).map_or(0.0, |row| row[dim]);
                data + self.l2_penalty * theta
            }
        }
    }
}

/// Either model, behind one training and evaluation surface.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Single(SingleGtModel),
    Multi(MultiGtModel),
}

impl Classifier {
    pub fn mode(&self) -> Mode {
        match self {
            Classifier::Single(_) => Mode::Single,
            Classifier::Multi(_) => Mode::Multi,
        }
    }

    pub fn base(&self) -> &SingleGtModel {
        match self {
            Classifier::Single(m) => m,
            Classifier::Multi(m) => &m.base,
        }
    }

    fn base_mut(&mut self) -> &mut SingleGtModel {
        match self {
            Classifier::Single(m) => m,
            Classifier::Multi(m) => &mut m.base,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.base().n_labels()
    }

    pub fn annotator_dim(&self) -> usize {
        match self {
            Classifier::Single(_) => 0,
            Classifier::Multi(m) => m.annotator_dim,
        }
    }

    /// Embedding row for an annotator id (`None` for Single-GT models).
    pub fn slot(&self, annotator_id: &str) -> Option<usize> {
        match self {
            Classifier::Single(_) => None,
            Classifier::Multi(m) => Some(m.slot(annotator_id)),
        }
    }

    pub fn logits(&self, ex: &Example<'_>) -> Result<Vec<f64>> {
        match self {
            Classifier::Single(m) => m.logits(ex.x),
            Classifier::Multi(m) => {
                m.logits_for_slot(ex.x, ex.slot.unwrap_or(m.fallback_slot()))
            }
        }
    }

    pub fn probabilities(&self, ex: &Example<'_>) -> Result<Vec<f64>> {
        let z = self.logits(ex)?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        Ok(softmax_unchecked(&z))
    }

    pub fn param(&self, idx: ParamIndex) -> f64 {
        match (self, idx) {
            (_, ParamIndex::Weight { class, feature }) => self.base().weight(class, feature),
            (_, ParamIndex::Bias { class }) => self.base().bias[class],
            (Classifier::Multi(m), ParamIndex::Projection { class, dim }) => {
                m.projection[class * m.annotator_dim + dim]
            }
            (Classifier::Multi(m), ParamIndex::Embedding { slot, dim }) => m.embedding(slot)[dim],
            (Classifier::Single(_), _) => panic!("Single-GT model has no annotator parameters"),
        }
    }

    pub fn set_param(&mut self, idx: ParamIndex, value: f64) {
        match idx {
            ParamIndex::Weight { class, feature } => self.base_mut().set_weight(class, feature, value),
            ParamIndex::Bias { class } => self.base_mut().set_bias(class, value),
            ParamIndex::Projection { class, dim } => match self {
                Classifier::Multi(m) => m.projection[class * m.annotator_dim + dim] = value,
                Classifier::Single(_) => panic!("Single-GT model has no annotator parameters"),
            },
            ParamIndex::Embedding { slot, dim } => match self {
                Classifier::Multi(m) => m.embedding_mut(slot)[dim] = value,
                Classifier::Single(_) => panic!("Single-GT model has no annotator parameters"),
            },
        }
    }

    fn penalty_norm_sq(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        match self {
            Classifier::Single(m) => sq(&m.weights),
            Classifier::Multi(m) => sq(&m.base.weights) + sq(&m.projection) + sq(&m.embeddings),
        }
    }

    /// Mean cross-entropy of a batch, without the penalty.
    pub fn data_loss(&self, batch: &[Example<'_>]) -> Result<f64> {
        if batch.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for ex in batch {
            let z = self.logits(ex)?;
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += lse - z[ex.target.index()];
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean cross-entropy plus `(λ/2)·‖θ‖²` over all non-bias parameters.
    pub fn loss(&self, batch: &[Example<'_>], l2_penalty: f64) -> Result<f64> {
        Ok(self.data_loss(batch)? + 0.5 * l2_penalty * self.penalty_norm_sq())
    }

    pub fn gradient(&self, batch: &[Example<'_>], l2_penalty: f64) -> Result<Gradient> {
        let k = self.n_labels();
        let d_a = self.annotator_dim();
        let scale = if batch.is_empty() {
            0.0
        } else {
            1.0 / batch.len() as f64
        };
        let mut grad = Gradient {
            l2_penalty,
            logit_grads: Vec::with_capacity(batch.len()),
            weights: BTreeMap::new(),
            bias: vec![0.0; k],
            projection: vec![0.0; k * d_a],
            embeddings: BTreeMap::new(),
        };
        for ex in batch {
            let mut g = self.probabilities(ex)?;
            g[ex.target.index()] -= 1.0;
            for &(j, v) in ex.x.entries() {
                let row = grad.weights.entry(j).or_insert_with(|| vec![0.0; k]);
                for (r, gc) in row.iter_mut().zip(&g) {
                    *r += scale * gc * v;
                }
            }
            for (b, gc) in grad.bias.iter_mut().zip(&g) {
                *b += scale * gc;
            }
            if let Classifier::Multi(m) = self {
                let slot = ex.slot.unwrap_or(m.fallback_slot());
                let e = m.embedding(slot);
                for (c, gc) in g.iter().enumerate() {
                    for (dim, ed) in e.iter().enumerate() {
                        grad.projection[c * d_a + dim] += scale * gc * ed;
                    }
                }
                let row = grad.embeddings.entry(slot).or_insert_with(|| vec![0.0; d_a]);
                for (c, gc) in g.iter().enumerate() {
                    let v_row = &m.projection[c * d_a..(c + 1) * d_a];
                    for (r, v) in row.iter_mut().zip(v_row) {
                        *r += scale * gc * v;
                    }
                }
            }
            grad.logit_grads.push(g);
        }
        Ok(grad)
    }

    /// One gradient-descent step: `θ ← θ − lr·(g + λθ)`, bias unpenalized.
    pub fn apply(&mut self, grad: &Gradient, learning_rate: f64) {
        let decay = 1.0 - learning_rate * grad.l2_penalty;
        let k = self.n_labels();
        {
            let base = self.base_mut();
            if decay != 1.0 {
                for w in &mut base.weights {
                    *w *= decay;
                }
            }
            for (&j, row) in &grad.weights {
                let block = &mut base.weights[j as usize * k..(j as usize + 1) * k];
                for (w, g) in block.iter_mut().zip(row) {
                    *w -= learning_rate * g;
                }
            }
            for (b, g) in base.bias.iter_mut().zip(&grad.bias) {
                *b -= learning_rate * g;
            }
        }
        if let Classifier::Multi(m) = self {
            if decay != 1.0 {
                for v in m.projection.iter_mut().chain(m.embeddings.iter_mut()) {
                    *v *= decay;
                }
            }
            for (v, g) in m.projection.iter_mut().zip(&grad.projection) {
                *v -= learning_rate * g;
            }
            for (&slot, row) in &grad.embeddings {
                for (e, g) in m.embedding_mut(slot).iter_mut().zip(row) {
                    *e -= learning_rate * g;
                }
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        let base = self.base();
        let ok = base.weights.iter().chain(&base.bias).all(|v| v.is_finite());
        match self {
            Classifier::Single(_) => ok,
            Classifier::Multi(m) => {
                ok && m.projection.iter().chain(&m.embeddings).all(|v| v.is_finite())
            }
        }
    }
}

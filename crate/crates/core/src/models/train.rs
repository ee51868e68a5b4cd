use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classifier::{Classifier, Example, MultiGtModel, SingleGtModel};
use super::dynamics::{DynamicsKey, DynamicsLog};
use super::metrics::weighted_f1;
use super::{argmax, Mode};
use crate::corpus::{AggregatedView, AnnotatedCorpus, LabelId};
use crate::error::{Error, Result};
use crate::featurizer::{FeatureHasher, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Annotator embedding width `d_a`.
    pub annotator_dim: usize,
    pub l2_penalty: f64,
    pub hasher: FeatureHasher,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            learning_rate: 0.1,
            batch_size: 32,
            seed: 0,
            annotator_dim: 16,
            l2_penalty: 1e-5,
            hasher: FeatureHasher::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.annotator_dim == 0 {
            return Err(Error::Config("annotator dimension must be at least 1".into()));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(Error::Config("l2 penalty must be non-negative".into()));
        }
        FeatureHasher::new(self.hasher.dim, self.hasher.ngram_order)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Classifier,
    pub dynamics: DynamicsLog,
    /// Mean cross-entropy over the training examples at the end of each epoch.
    pub epoch_losses: Vec<f64>,
}

struct TrainingSet {
    features: Vec<SparseVector>,
    /// (item index, embedding slot, target, key)
    rows: Vec<(usize, Option<usize>, LabelId, DynamicsKey)>,
}

impl TrainingSet {
    fn example(&self, row: usize) -> Example<'_> {
        let (item, slot, target, _) = &self.rows[row];
        Example {
            x: &self.features[*item],
            slot: *slot,
            target: *target,
        }
    }
}

fn build_rows(
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    mode: Mode,
    model: &Classifier,
    hasher: &FeatureHasher,
) -> TrainingSet {
    let features = corpus
        .items()
        .iter()
        .map(|it| hasher.featurize_text(&it.text))
        .collect();
    let rows = match mode {
        Mode::Single => corpus
            .items()
            .iter()
            .enumerate()
            .map(|(i, it)| (i, None, view.get(i).majority, DynamicsKey::item(&it.id)))
            .collect(),
        Mode::Multi => corpus
            .annotations()
            .iter()
            .map(|a| {
                let annotator = &corpus.annotators()[a.annotator];
                (
                    a.item,
                    model.slot(annotator),
                    a.label,
                    DynamicsKey::annotation(&corpus.item(a.item).id, annotator),
                )
            })
            .collect(),
    };
    TrainingSet { features, rows }
}

/// Mini-batch SGD on mean cross-entropy. After every epoch a full pass over
/// the training set records each key's gold-label probability and argmax
/// prediction into the dynamics log.
pub fn train(
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    mode: Mode,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if view.entries().len() != corpus.items().len() {
        return Err(Error::InvalidInput("aggregated view does not match corpus".into()));
    }
    let labels = corpus.labels().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = match mode {
        Mode::Single => Classifier::Single(SingleGtModel::init(labels.clone(), config.hasher, &mut rng)),
        Mode::Multi => Classifier::Multi(MultiGtModel::init(
            labels.clone(),
            config.hasher,
            corpus.annotators().to_vec(),
            config.annotator_dim,
            &mut rng,
        )),
    };
    let set = build_rows(corpus, view, mode, &model, &config.hasher);
    let mut log = DynamicsLog::new(mode, labels, config.epochs);
    let mut order: Vec<usize> = (0..set.rows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Example<'_>> = chunk.iter().map(|&r| set.example(r)).collect();
            let grad = model.gradient(&batch, config.l2_penalty).map_err(|e| Error::Divergence {
                epoch,
                detail: e.to_string(),
            })?;
            model.apply(&grad, config.learning_rate);
        }
        if !model.all_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: "non-finite parameters".into(),
            });
        }
        let mut loss = 0.0;
        for (row, (_, _, target, key)) in set.rows.iter().enumerate() {
            let ex = set.example(row);
            let z = model.logits(&ex)?;
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - z[target.index()];
            let gold_prob = (z[target.index()] - lse).exp().clamp(0.0, 1.0);
            let predicted = LabelId(argmax(&z) as u32);
            log.record(key.clone(), epoch, *target, gold_prob, predicted)?;
        }
        let loss = loss / set.rows.len().max(1) as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("training loss is {loss}"),
            });
        }
        epoch_losses.push(loss);
    }
    Ok(TrainOutcome {
        model,
        dynamics: log,
        epoch_losses,
    })
}

/// Weighted F1. `Mode::Single` scores majority labels (one row per item);
/// `Mode::Multi` scores raw annotations, conditioning Multi-GT models on the
/// annotator.
pub fn evaluate_f1(
    model: &Classifier,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    mode: Mode,
) -> Result<f64> {
    if corpus.labels() != model.base().labels() {
        return Err(Error::InvalidInput(
            "evaluation corpus label vocabulary differs from the model's".into(),
        ));
    }
    let hasher = *model.base().hasher();
    let set = build_rows(corpus, view, mode, model, &hasher);
    if set.rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut gold = Vec::with_capacity(set.rows.len());
    let mut predicted = Vec::with_capacity(set.rows.len());
    for row in 0..set.rows.len() {
        let ex = set.example(row);
        let z = model.logits(&ex)?;
        gold.push(ex.target);
        predicted.push(LabelId(argmax(&z) as u32));
    }
    Ok(weighted_f1(&gold, &predicted, model.n_labels()))
}

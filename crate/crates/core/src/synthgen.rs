//! Synthetic multi-annotator corpora.
//!
//! Items belong to latent topics and draw their tokens from topic pools
//! (with a configurable share drawn from a pool common to all topics).
//! Every annotator follows one archetype, a fixed topic → label rule, and
//! each annotation is that rule's label, flipped to a uniformly random other
//! label with probability `noise_rate`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedCorpus, CorpusBuilder, LabelId};
use crate::error::{Error, Result};
use crate::format::{self, Metadata};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationCount {
    Fixed(usize),
    /// `(count, weight)` pairs; each item draws its count independently.
    Weighted(Vec<(usize, f64)>),
}

impl AnnotationCount {
    fn max(&self) -> usize {
        match self {
            Self::Fixed(m) => *m,
            Self::Weighted(w) => w.iter().map(|&(c, _)| c).max().unwrap_or(0),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Fixed(m) => *m as f64,
            Self::Weighted(w) => {
                let total: f64 = w.iter().map(|&(_, p)| p).sum();
                w.iter().map(|&(c, p)| c as f64 * p).sum::<f64>() / total
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    /// Fraction of annotators following this rule.
    pub share: f64,
    /// Label index for each topic.
    pub rule: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_items: usize,
    /// Ignored when `annotations_per_annotator` is set.
    pub n_annotators: usize,
    pub n_labels: usize,
    pub n_topics: usize,
    pub annotations_per_item: AnnotationCount,
    /// Target mean annotations per annotator; sets the annotator count to
    /// `round(expected annotations / target)`.
    pub annotations_per_annotator: Option<usize>,
    pub archetypes: Vec<Archetype>,
    pub noise_rate: f64,
    /// Distinct tokens in each topic pool.
    pub topic_vocab: usize,
    /// Distinct tokens in the pool shared by all topics.
    pub shared_vocab: usize,
    pub tokens_per_item: usize,
    /// Probability that a token is drawn from the shared pool.
    pub topic_overlap: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_items: 1000,
            n_annotators: 50,
            n_labels: 2,
            n_topics: 4,
            annotations_per_item: AnnotationCount::Fixed(5),
            annotations_per_annotator: None,
            archetypes: vec![Archetype {
                share: 1.0,
                rule: vec![0, 1, 0, 1],
            }],
            noise_rate: 0.0,
            topic_vocab: 50,
            shared_vocab: 200,
            tokens_per_item: 20,
            topic_overlap: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Two archetypes over `n_labels + 1` topics. Topic `t < n_labels` is
    /// uncontested with label `t`; on the last topic the first archetype says
    /// label 0 and the second says label 1.
    pub fn two_archetypes(minority_share: f64) -> Self {
        Self::two_archetypes_with_labels(2, minority_share)
    }

    pub fn two_archetypes_with_labels(n_labels: usize, minority_share: f64) -> Self {
        let k = n_labels as u32;
        let base: Vec<u32> = (0..k).chain([0]).collect();
        let other: Vec<u32> = (0..k).chain([1]).collect();
        Self {
            n_labels,
            n_topics: n_labels + 1,
            archetypes: vec![
                Archetype {
                    share: 1.0 - minority_share,
                    rule: base,
                },
                Archetype {
                    share: minority_share,
                    rule: other,
                },
            ],
            ..Self::default()
        }
    }

    /// Shape preset by name: `mda-like` or `mhs-like`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "mda-like" => Ok(Self {
                n_items: 10_440,
                n_annotators: 819,
                annotations_per_item: AnnotationCount::Fixed(5),
                noise_rate: 0.1,
                ..Self::two_archetypes(0.35)
            }),
            "mhs-like" => Ok(Self {
                n_items: 17_282,
                n_annotators: 7_912,
                annotations_per_item: AnnotationCount::Weighted(vec![
                    (1, 0.25),
                    (2, 0.3),
                    (3, 0.3),
                    (4, 0.15),
                ]),
                noise_rate: 0.1,
                ..Self::two_archetypes_with_labels(3, 0.35)
            }),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected mda-like or mhs-like)"
            ))),
        }
    }

    fn expected_annotations(&self) -> f64 {
        self.n_items as f64 * self.annotations_per_item.mean()
    }

    /// Annotator count after applying `annotations_per_annotator`.
    pub fn resolved_annotators(&self) -> usize {
        match self.annotations_per_annotator {
            Some(t) if t > 0 => ((self.expected_annotations() / t as f64).round() as usize)
                .max(self.annotations_per_item.max()),
            _ => self.n_annotators,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_items == 0 {
            return bad("n_items must be positive".into());
        }
        if self.n_labels < 2 {
            return bad("n_labels must be at least 2".into());
        }
        if self.n_topics == 0 {
            return bad("n_topics must be positive".into());
        }
        match &self.annotations_per_item {
            AnnotationCount::Fixed(0) => return bad("annotations_per_item must be positive".into()),
            AnnotationCount::Weighted(w)
                if w.is_empty()
                    || w.iter().any(|&(c, p)| c == 0 || !(p.is_finite() && p >= 0.0))
                    || w.iter().all(|&(_, p)| p == 0.0) =>
            {
                return bad("annotation count weights must be non-negative with positive counts".into());
            }
            _ => {}
        }
        if self.annotations_per_annotator == Some(0) {
            return bad("annotations_per_annotator must be positive".into());
        }
        let annotators = self.resolved_annotators();
        if self.annotations_per_item.max() > annotators {
            return bad(format!(
                "annotations_per_item ({}) exceeds the number of annotators ({annotators})",
                self.annotations_per_item.max()
            ));
        }
        if self.archetypes.is_empty() {
            return bad("at least one archetype is required".into());
        }
        let total: f64 = self.archetypes.iter().map(|a| a.share).sum();
        if (total - 1.0).abs() > 1e-9 || self.archetypes.iter().any(|a| a.share.is_nan() || a.share < 0.0) {
            return bad(format!("archetype shares must be non-negative and sum to 1, got {total}"));
        }
        for (i, a) in self.archetypes.iter().enumerate() {
            if a.rule.len() != self.n_topics {
                return bad(format!("archetype {i} has {} rules for {} topics", a.rule.len(), self.n_topics));
            }
            if a.rule.iter().any(|&l| l as usize >= self.n_labels) {
                return bad(format!("archetype {i} uses a label outside 0..{}", self.n_labels));
            }
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return bad("noise_rate must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.topic_overlap) {
            return bad("topic_overlap must be in [0, 1]".into());
        }
        if self.tokens_per_item == 0 || self.topic_vocab == 0 {
            return bad("tokens_per_item and topic_vocab must be positive".into());
        }
        if self.topic_overlap > 0.0 && self.shared_vocab == 0 {
            return bad("topic_overlap > 0 needs a shared vocabulary".into());
        }
        Ok(())
    }
}

pub fn label_name(l: u32) -> String {
    format!("L{l}")
}

pub fn item_id(i: usize) -> String {
    format!("item{i:06}")
}

pub fn annotator_id(a: usize) -> String {
    format!("ann{a:05}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthAnnotation {
    pub item_id: String,
    pub annotator_id: String,
    /// The annotator's archetype label for the item's topic.
    pub clean_label: String,
    pub label: String,
    pub flipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub config: SynthConfig,
    pub item_topics: BTreeMap<String, usize>,
    pub annotator_archetypes: BTreeMap<String, usize>,
    pub annotations: Vec<TruthAnnotation>,
}

impl TruthRecord {
    /// Annotation labels rebuilt from topics, archetype rules and flip flags.
    pub fn regenerate_labels(&self) -> Result<Vec<String>> {
        self.annotations
            .iter()
            .map(|a| {
                if a.flipped {
                    return Ok(a.label.clone());
                }
                let topic = *self.item_topics.get(&a.item_id).ok_or_else(|| {
                    Error::InvalidInput(format!("no topic for item `{}`", a.item_id))
                })?;
                let arch = *self.annotator_archetypes.get(&a.annotator_id).ok_or_else(|| {
                    Error::InvalidInput(format!("no archetype for annotator `{}`", a.annotator_id))
                })?;
                Ok(label_name(self.config.archetypes[arch].rule[topic]))
            })
            .collect()
    }

    pub fn flip_count(&self) -> usize {
        self.annotations.iter().filter(|a| a.flipped).count()
    }

    /// JSON lines: a `config` line, then one line per item, annotator and
    /// annotation.
    pub fn write_jsonl<W: Write>(&self, w: &mut W, meta: Option<&Metadata>) -> Result<()> {
        if let Some(meta) = meta {
            format::write_jsonl_header(w, meta)?;
        }
        let mut line = |v: serde_json::Value| -> Result<()> {
            serde_json::to_writer(&mut *w, &v).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(serde_json::json!({ "config": self.config }))?;
        for (id, t) in &self.item_topics {
            line(serde_json::json!({ "item_id": id, "topic": t }))?;
        }
        for (id, a) in &self.annotator_archetypes {
            line(serde_json::json!({ "annotator_id": id, "archetype": a }))?;
        }
        for a in &self.annotations {
            line(serde_json::json!({ "annotation": a }))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Line {
            Config { config: SynthConfig },
            Item { item_id: String, topic: usize },
            Annotator { annotator_id: String, archetype: usize },
            Annotation { annotation: TruthAnnotation },
        }
        let mut config = None;
        let mut item_topics = BTreeMap::new();
        let mut annotator_archetypes = BTreeMap::new();
        let mut annotations = Vec::new();
        for entry in format::jsonl_lines(reader) {
            let (line, text) = entry?;
            let parsed: Line = serde_json::from_str(&text).map_err(|e| Error::Parse {
                line,
                message: format!("bad truth record line: {e}"),
            })?;
            match parsed {
                Line::Config { config: c } => config = Some(c),
                Line::Item { item_id, topic } => {
                    item_topics.insert(item_id, topic);
                }
                Line::Annotator { annotator_id, archetype } => {
                    annotator_archetypes.insert(annotator_id, archetype);
                }
                Line::Annotation { annotation } => annotations.push(annotation),
            }
        }
        Ok(Self {
            config: config.ok_or_else(|| Error::InvalidInput("truth record has no config line".into()))?,
            item_topics,
            annotator_archetypes,
            annotations,
        })
    }
}

/// Counts proportional to `shares` summing to `n` (largest remainder).
fn apportion(n: usize, shares: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = shares.iter().map(|s| s * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Hands out annotators so per-annotator counts stay balanced: a shuffled
/// deck is dealt in order and reshuffled when exhausted.
struct Dealer {
    deck: Vec<usize>,
    pos: usize,
}

impl Dealer {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut deck: Vec<usize> = (0..n).collect();
        deck.shuffle(rng);
        Self { deck, pos: 0 }
    }

    fn deal(&mut self, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        while chosen.len() < m {
            if self.pos == self.deck.len() {
                self.deck.shuffle(rng);
                self.pos = 0;
            }
            let a = self.deck[self.pos];
            if chosen.contains(&a) {
                // Swap a later, unused annotator into place.
                let j = (self.pos + 1..self.deck.len()).find(|&j| !chosen.contains(&self.deck[j]));
                match j {
                    Some(j) => self.deck.swap(self.pos, j),
                    None => {
                        self.deck.shuffle(rng);
                        self.pos = 0;
                        continue;
                    }
                }
            }
            chosen.push(self.deck[self.pos]);
            self.pos += 1;
        }
        chosen.sort_unstable();
        chosen
    }
}

fn other_label(label: u32, k: usize, rng: &mut ChaCha8Rng) -> u32 {
    let r = rng.gen_range(0..k as u32 - 1);
    if r >= label {
        r + 1
    } else {
        r
    }
}

pub fn generate(config: &SynthConfig) -> Result<(AnnotatedCorpus, TruthRecord)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_annotators = config.resolved_annotators();

    let shares: Vec<f64> = config.archetypes.iter().map(|a| a.share).collect();
    let mut archetype_of: Vec<usize> = apportion(n_annotators, &shares)
        .into_iter()
        .enumerate()
        .flat_map(|(a, c)| std::iter::repeat_n(a, c))
        .collect();
    archetype_of.shuffle(&mut rng);

    let count_dist = match &config.annotations_per_item {
        AnnotationCount::Fixed(_) => None,
        AnnotationCount::Weighted(w) => Some((
            w.iter().map(|&(c, _)| c).collect::<Vec<_>>(),
            WeightedIndex::new(w.iter().map(|&(_, p)| p)).map_err(|e| Error::Config(e.to_string()))?,
        )),
    };

    let labels: Vec<String> = (0..config.n_labels as u32).map(label_name).collect();
    let mut builder = CorpusBuilder::with_labels(labels)?;
    let mut dealer = Dealer::new(n_annotators, &mut rng);
    let mut item_topics = BTreeMap::new();
    let mut annotations = Vec::new();

    for i in 0..config.n_items {
        let topic = rng.gen_range(0..config.n_topics);
        let tokens: Vec<String> = (0..config.tokens_per_item)
            .map(|_| {
                if rng.gen_bool(config.topic_overlap) {
                    format!("s{}", rng.gen_range(0..config.shared_vocab))
                } else {
                    format!("t{topic}w{}", rng.gen_range(0..config.topic_vocab))
                }
            })
            .collect();
        let text = tokens.join(" ");
        let m = match (&config.annotations_per_item, &count_dist) {
            (AnnotationCount::Fixed(m), _) => *m,
            (_, Some((counts, dist))) => counts[dist.sample(&mut rng)],
            _ => unreachable!(),
        };
        let id = item_id(i);
        for (n, a) in dealer.deal(m, &mut rng).into_iter().enumerate() {
            let clean = config.archetypes[archetype_of[a]].rule[topic];
            let flipped = rng.gen_bool(config.noise_rate);
            let label = if flipped {
                other_label(clean, config.n_labels, &mut rng)
            } else {
                clean
            };
            let ann = annotator_id(a);
            builder.push(&id, (n == 0).then_some(text.as_str()), &ann, &label_name(label))?;
            annotations.push(TruthAnnotation {
                item_id: id.clone(),
                annotator_id: ann,
                clean_label: label_name(clean),
                label: label_name(label),
                flipped,
            });
        }
        item_topics.insert(id, topic);
    }

    let corpus = builder.build()?;
    let annotator_archetypes = archetype_of
        .iter()
        .enumerate()
        .map(|(a, &arch)| (annotator_id(a), arch))
        .collect();
    Ok((
        corpus,
        TruthRecord {
            config: config.clone(),
            item_topics,
            annotator_archetypes,
            annotations,
        },
    ))
}

/// One flipped annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flip {
    pub item_id: String,
    pub annotator_id: String,
    pub from: String,
    pub to: String,
}

fn rebuild(
    corpus: &AnnotatedCorpus,
    mut relabel: impl FnMut(usize, LabelId) -> LabelId,
) -> Result<(AnnotatedCorpus, Vec<Flip>)> {
    let mut builder = CorpusBuilder::with_labels(corpus.labels().to_vec())?;
    let mut flips = Vec::new();
    let mut seen = vec![false; corpus.items().len()];
    for (idx, a) in corpus.annotations().iter().enumerate() {
        let item = corpus.item(a.item);
        let annotator = &corpus.annotators()[a.annotator];
        let label = relabel(idx, a.label);
        if label != a.label {
            flips.push(Flip {
                item_id: item.id.clone(),
                annotator_id: annotator.clone(),
                from: corpus.label_name(a.label).to_owned(),
                to: corpus.label_name(label).to_owned(),
            });
        }
        let text = (!seen[a.item]).then_some(item.text.as_str());
        seen[a.item] = true;
        builder.push(&item.id, text, annotator, corpus.label_name(label))?;
    }
    Ok((builder.build()?, flips))
}

/// Flip each annotation independently with probability `rate` to a uniformly
/// random other label.
pub fn inject_label_noise(
    corpus: &AnnotatedCorpus,
    rate: f64,
    seed: u64,
) -> Result<(AnnotatedCorpus, Vec<Flip>)> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!("noise rate {rate} outside [0, 1]")));
    }
    let k = corpus.n_labels();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rebuild(corpus, |_, l| {
        if rng.gen_bool(rate) {
            LabelId(other_label(l.0, k, &mut rng))
        } else {
            l
        }
    })
}

/// Pick each unanimous item with probability `item_rate` and flip
/// `per_item` of its annotations (all of them if it has fewer) to one shared
/// random other label.
pub fn inject_item_noise(
    corpus: &AnnotatedCorpus,
    item_rate: f64,
    per_item: usize,
    seed: u64,
) -> Result<(AnnotatedCorpus, Vec<Flip>)> {
    if !(0.0..=1.0).contains(&item_rate) {
        return Err(Error::Config(format!("item noise rate {item_rate} outside [0, 1]")));
    }
    let k = corpus.n_labels();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets: BTreeMap<usize, LabelId> = BTreeMap::new();
    for item in 0..corpus.items().len() {
        let anns = corpus.item_annotations(item);
        let first = corpus.annotations()[anns[0]].label;
        if anns.iter().any(|&a| corpus.annotations()[a].label != first) || !rng.gen_bool(item_rate) {
            continue;
        }
        let mut picked: Vec<usize> = anns.to_vec();
        picked.shuffle(&mut rng);
        picked.truncate(per_item);
        let from = corpus.annotations()[picked[0]].label;
        let to = LabelId(other_label(from.0, k, &mut rng));
        for p in picked {
            targets.insert(p, to);
        }
    }
    rebuild(corpus, |idx, l| targets.get(&idx).copied().unwrap_or(l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::aggregate;
    use proptest::prelude::*;

    #[test]
    fn single_archetype_without_noise_is_unanimous() {
        let config = SynthConfig {
            n_items: 200,
            ..SynthConfig::default()
        };
        let (corpus, truth) = generate(&config).unwrap();
        let view = aggregate(&corpus);
        assert!(view.entries().iter().all(|e| e.agreement == 1.0));
        assert_eq!(truth.flip_count(), 0);
        assert_eq!(corpus.annotations().len(), 1000);
    }

    /// With two 50/50 archetypes that disagree on a topic and 4 annotators
    /// per item, the number of annotators from the second archetype is
    /// hypergeometric, close to Binomial(4, 1/2): agreement is 1 with
    /// probability 2/16, 0.75 with probability 8/16 and 0.5 with 6/16.
    #[test]
    fn split_archetypes_agreement_distribution() {
        let config = SynthConfig {
            n_items: 4000,
            n_annotators: 400,
            annotations_per_item: AnnotationCount::Fixed(4),
            ..SynthConfig::two_archetypes(0.5)
        };
        let (corpus, truth) = generate(&config).unwrap();
        let view = aggregate(&corpus);
        let mut hist: BTreeMap<u64, usize> = BTreeMap::new();
        let mut n = 0;
        for (i, item) in corpus.items().iter().enumerate() {
            if truth.item_topics[&item.id] < 2 {
                assert_eq!(view.get(i).agreement, 1.0);
                continue;
            }
            n += 1;
            *hist.entry((view.get(i).agreement * 100.0).round() as u64).or_default() += 1;
        }
        let n = n as f64;
        for (level, p) in [(100, 2.0 / 16.0), (75, 8.0 / 16.0), (50, 6.0 / 16.0)] {
            let got = hist.get(&level).copied().unwrap_or(0) as f64 / n;
            let sd = (p * (1.0 - p) / n).sqrt();
            // The balanced dealer makes draws slightly more even than binomial.
            assert!((got - p).abs() < 4.0 * sd + 0.03, "level {level}: {got} vs {p}");
        }
        assert_eq!(hist.keys().copied().collect::<Vec<_>>(), vec![50, 75, 100]);
    }

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig {
            n_items: 100,
            noise_rate: 0.2,
            ..SynthConfig::two_archetypes(0.3)
        };
        let (a, ta) = generate(&config).unwrap();
        let (b, tb) = generate(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let other = SynthConfig { seed: 1, ..config };
        assert_ne!(generate(&other).unwrap().0, a);
    }

    #[test]
    fn truth_regenerates_labels() {
        let config = SynthConfig {
            n_items: 300,
            noise_rate: 0.15,
            ..SynthConfig::two_archetypes(0.4)
        };
        let (corpus, truth) = generate(&config).unwrap();
        let regenerated = truth.regenerate_labels().unwrap();
        let mut from_corpus: BTreeMap<(String, String), String> = BTreeMap::new();
        for a in corpus.annotations() {
            from_corpus.insert(
                (corpus.item(a.item).id.clone(), corpus.annotators()[a.annotator].clone()),
                corpus.label_name(a.label).to_owned(),
            );
        }
        for (t, label) in truth.annotations.iter().zip(&regenerated) {
            assert_eq!(&from_corpus[&(t.item_id.clone(), t.annotator_id.clone())], label);
            assert_eq!(t.flipped, t.clean_label != t.label);
        }
        let mut buf = Vec::new();
        truth.write_jsonl(&mut buf, Some(&Metadata::new("synth"))).unwrap();
        assert_eq!(TruthRecord::read_jsonl(buf.as_slice()).unwrap(), truth);
    }

    #[test]
    fn mda_shape_arithmetic() {
        let config = SynthConfig::preset("mda-like").unwrap();
        let (corpus, _) = generate(&config).unwrap();
        let stats = corpus.stats();
        assert_eq!(stats.unique_texts, 10_440);
        assert_eq!(corpus.annotations().len(), 52_200);
        assert!(corpus.items().iter().enumerate().all(|(i, _)| corpus.item_annotations(i).len() == 5));
        assert!(stats.annotators <= 819);
    }

    #[test]
    fn mhs_shape_is_sparse() {
        let config = SynthConfig::preset("mhs-like").unwrap();
        let (corpus, _) = generate(&config).unwrap();
        let s = corpus.stats();
        assert!((s.per_text.mean - 2.35).abs() < 0.05, "{}", s.per_text.mean);
        assert!(s.per_annotator.mean < 20.0);
        assert_eq!(corpus.n_labels(), 3);
    }

    #[test]
    fn annotations_per_annotator_target() {
        let config = SynthConfig {
            n_items: 1000,
            annotations_per_annotator: Some(100),
            ..SynthConfig::default()
        };
        assert_eq!(config.resolved_annotators(), 50);
        let (corpus, _) = generate(&config).unwrap();
        let mut per: BTreeMap<usize, usize> = BTreeMap::new();
        for a in corpus.annotations() {
            *per.entry(a.annotator).or_default() += 1;
        }
        assert!(per.values().all(|&c| (99..=101).contains(&c)), "{per:?}");
    }

    #[test]
    fn infeasible_configs() {
        let too_many = SynthConfig {
            n_annotators: 3,
            ..SynthConfig::default()
        };
        assert!(matches!(generate(&too_many), Err(Error::Config(_))));
        let mut shares = SynthConfig::two_archetypes(0.3);
        shares.archetypes[0].share = 0.5;
        assert!(shares.validate().is_err());
        let noise = SynthConfig { noise_rate: 1.5, ..SynthConfig::default() };
        assert!(noise.validate().is_err());
        assert!(SynthConfig::preset("nope").is_err());
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[0.65, 0.35]), vec![7, 3]);
        assert_eq!(apportion(3, &[1.0 / 3.0; 3]), vec![1, 1, 1]);
        assert_eq!(apportion(7, &[0.5, 0.5]).iter().sum::<usize>(), 7);
    }

    fn base_corpus() -> AnnotatedCorpus {
        let config = SynthConfig {
            n_items: 2000,
            ..SynthConfig::default()
        };
        generate(&config).unwrap().0
    }

    #[test]
    fn noise_rate_zero_and_one() {
        let c = base_corpus();
        let (same, flips) = inject_label_noise(&c, 0.0, 3).unwrap();
        assert_eq!(same, c);
        assert!(flips.is_empty());
        let (all, flips) = inject_label_noise(&c, 1.0, 3).unwrap();
        assert_eq!(flips.len(), c.annotations().len());
        for (a, b) in c.annotations().iter().zip(all.annotations()) {
            assert_ne!(a.label, b.label);
        }
    }

    #[test]
    fn noise_count_within_three_sigma() {
        let c = base_corpus();
        assert_eq!(c.annotations().len(), 10_000);
        let (_, flips) = inject_label_noise(&c, 0.1, 11).unwrap();
        assert!((flips.len() as f64 - 1000.0).abs() <= 90.0, "{}", flips.len());
    }

    #[test]
    fn item_noise_concentrates_flips() {
        let c = base_corpus();
        let (noisy, flips) = inject_item_noise(&c, 0.2, 3, 5).unwrap();
        let mut per_item: BTreeMap<&str, usize> = BTreeMap::new();
        for f in &flips {
            *per_item.entry(f.item_id.as_str()).or_default() += 1;
        }
        assert!(per_item.values().all(|&n| n == 3));
        let view = aggregate(&noisy);
        for (item, _) in per_item {
            let i = noisy.item_idx(item).unwrap();
            assert_eq!(view.get(i).agreement, 0.6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn flips_change_labels(rate in 0.0f64..=1.0, seed in any::<u64>()) {
            let config = SynthConfig { n_items: 50, ..SynthConfig::default() };
            let (c, _) = generate(&config).unwrap();
            let (noisy, flips) = inject_label_noise(&c, rate, seed).unwrap();
            let changed = c.annotations().iter().zip(noisy.annotations())
                .filter(|(a, b)| a.label != b.label).count();
            prop_assert_eq!(changed, flips.len());
            prop_assert!(flips.iter().all(|f| f.from != f.to));
        }
    }
}

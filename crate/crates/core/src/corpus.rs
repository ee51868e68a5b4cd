//! Raw multi-annotator corpora: parsing, validation, majority vote and
//! agreement level.
//!
//! The ingestion format is JSON lines, one annotation per line:
//!
//! ```text
//! {"item_id": "t1", "text": "START PUNCHING BACK !!!", "annotator_id": "a7", "label": "offensive"}
//! {"item_id": "t1", "annotator_id": "a9", "label": "not offensive"}
//! ```
//!
//! `text` is required on the first record of each item and optional after.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{self, Metadata};

/// Index into a corpus label vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelId(pub u32);

impl LabelId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub id: String,
    pub text: String,
}

/// One `(item, annotator, label)` triple, stored by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub item: usize,
    pub annotator: usize,
    pub label: LabelId,
}

/// Immutable store of items, annotators and their raw annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedCorpus {
    items: Vec<Item>,
    item_index: BTreeMap<String, usize>,
    annotators: Vec<String>,
    annotator_index: BTreeMap<String, usize>,
    annotations: Vec<Annotation>,
    labels: Vec<String>,
    by_item: Vec<Vec<usize>>,
}

impl AnnotatedCorpus {
    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, idx: usize) -> &Item {
        &self.items[idx]
    }

    pub fn item_idx(&self, item_id: &str) -> Option<usize> {
        self.item_index.get(item_id).copied()
    }

    /// Annotator ids, sorted.
    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn annotator_idx(&self, annotator_id: &str) -> Option<usize> {
        self.annotator_index.get(annotator_id).copied()
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// Indices into [`annotations`](Self::annotations) for one item.
    pub fn item_annotations(&self, item: usize) -> &[usize] {
        &self.by_item[item]
    }

    /// Label vocabulary, sorted lexicographically.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label_name(&self, label: LabelId) -> &str {
        &self.labels[label.index()]
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(name))
            .ok()
            .map(|i| LabelId(i as u32))
    }

    pub fn stats(&self) -> CorpusStats {
        let per_text: Vec<f64> = self.by_item.iter().map(|a| a.len() as f64).collect();
        let mut counts = vec![0usize; self.annotators.len()];
        for a in &self.annotations {
            counts[a.annotator] += 1;
        }
        let per_annotator: Vec<f64> = counts.into_iter().map(|c| c as f64).collect();
        CorpusStats {
            unique_texts: self.items.len(),
            labels: self.labels.len(),
            annotators: self.annotators.len(),
            annotations: self.annotations.len(),
            per_text: MeanStd::of(&per_text),
            per_annotator: MeanStd::of(&per_annotator),
        }
    }

    /// Serialize in the ingestion format, text on each item's first record.
    pub fn write_jsonl<W: Write>(&self, w: &mut W, meta: Option<&Metadata>) -> Result<()> {
        if let Some(meta) = meta {
            format::write_jsonl_header(w, meta)?;
        }
        let mut emitted = vec![false; self.items.len()];
        for a in &self.annotations {
            let item = &self.items[a.item];
            let text = if emitted[a.item] {
                None
            } else {
                emitted[a.item] = true;
                Some(item.text.as_str())
            };
            let rec = RecordOut {
                item_id: &item.id,
                text,
                annotator_id: &self.annotators[a.annotator],
                label: &self.labels[a.label.index()],
            };
            serde_json::to_writer(&mut *w, &rec).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Build a sub-corpus over a subset of items, keeping this corpus's label
    /// vocabulary so label ids stay comparable.
    pub fn subset(&self, items: &[usize]) -> Result<AnnotatedCorpus> {
        let mut builder = CorpusBuilder::with_labels(self.labels.clone())?;
        let mut keep = vec![false; self.items.len()];
        for &i in items {
            keep[i] = true;
        }
        for a in &self.annotations {
            if !keep[a.item] {
                continue;
            }
            let item = &self.items[a.item];
            builder.push(
                &item.id,
                Some(&item.text),
                &self.annotators[a.annotator],
                &self.labels[a.label.index()],
            )?;
        }
        builder.build()
    }
}

#[derive(Serialize)]
struct RecordOut<'a> {
    item_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
    annotator_id: &'a str,
    label: &'a str,
}

#[derive(Deserialize)]
struct RecordIn {
    item_id: String,
    #[serde(default)]
    text: Option<String>,
    annotator_id: String,
    label: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Dataset statistics in the shape of a corpus description table.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub unique_texts: usize,
    pub labels: usize,
    pub annotators: usize,
    pub annotations: usize,
    pub per_text: MeanStd,
    pub per_annotator: MeanStd,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# unique texts\t{}", self.unique_texts)?;
        writeln!(f, "# labels\t{}", self.labels)?;
        writeln!(f, "# annotators\t{}", self.annotators)?;
        writeln!(f, "# annotations\t{}", self.annotations)?;
        writeln!(
            f,
            "# annotations per text\t{:.1}±{:.1}",
            self.per_text.mean, self.per_text.std
        )?;
        write!(
            f,
            "# annotations per annotator\t{:.1}±{:.1}",
            self.per_annotator.mean, self.per_annotator.std
        )
    }
}

/// Incremental corpus construction with validation.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    items: Vec<Item>,
    item_index: HashMap<String, usize>,
    annotators: BTreeSet<String>,
    pairs: HashMap<(usize, String), usize>,
    raw: Vec<(usize, String, String)>,
    fixed_labels: Option<Vec<String>>,
    records: usize,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Use a fixed label vocabulary instead of deriving it from the data.
    pub fn with_labels(mut labels: Vec<String>) -> Result<Self> {
        labels.sort();
        labels.dedup();
        if labels.len() < 2 {
            return Err(Error::InvalidInput(
                "label vocabulary must contain at least 2 labels".into(),
            ));
        }
        Ok(Self {
            fixed_labels: Some(labels),
            ..Self::default()
        })
    }

    pub fn push(
        &mut self,
        item_id: &str,
        text: Option<&str>,
        annotator_id: &str,
        label: &str,
    ) -> Result<()> {
        self.push_at(self.records + 1, item_id, text, annotator_id, label)
    }

    fn push_at(
        &mut self,
        line: usize,
        item_id: &str,
        text: Option<&str>,
        annotator_id: &str,
        label: &str,
    ) -> Result<()> {
        self.records += 1;
        let item = match self.item_index.get(item_id) {
            Some(&idx) => {
                if let Some(t) = text {
                    if t != self.items[idx].text {
                        return Err(Error::Parse {
                            line,
                            message: format!("item `{item_id}` has conflicting text"),
                        });
                    }
                }
                idx
            }
            None => {
                let text = text.ok_or_else(|| Error::Parse {
                    line,
                    message: format!("item `{item_id}` has no text on its first record"),
                })?;
                let idx = self.items.len();
                self.items.push(Item {
                    id: item_id.to_owned(),
                    text: text.to_owned(),
                });
                self.item_index.insert(item_id.to_owned(), idx);
                idx
            }
        };
        if let Some(labels) = &self.fixed_labels {
            if labels.binary_search_by(|l| l.as_str().cmp(label)).is_err() {
                return Err(Error::Parse {
                    line,
                    message: format!("label `{label}` is not in the vocabulary"),
                });
            }
        }
        let key = (item, annotator_id.to_owned());
        if let Some(&first_line) = self.pairs.get(&key) {
            return Err(Error::DuplicatePair {
                line,
                first_line,
                item_id: item_id.to_owned(),
                annotator_id: annotator_id.to_owned(),
            });
        }
        self.pairs.insert(key, line);
        self.annotators.insert(annotator_id.to_owned());
        self.raw
            .push((item, annotator_id.to_owned(), label.to_owned()));
        Ok(())
    }

    pub fn build(self) -> Result<AnnotatedCorpus> {
        if self.raw.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let labels = match self.fixed_labels {
            Some(l) => l,
            None => {
                let set: BTreeSet<&str> = self.raw.iter().map(|(_, _, l)| l.as_str()).collect();
                let labels: Vec<String> = set.into_iter().map(str::to_owned).collect();
                if labels.len() < 2 {
                    return Err(Error::InvalidInput(format!(
                        "corpus must use at least 2 distinct labels, found {}",
                        labels.len()
                    )));
                }
                labels
            }
        };
        let annotators: Vec<String> = self.annotators.into_iter().collect();
        let annotator_index: BTreeMap<String, usize> = annotators
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let label_of = |name: &str| {
            LabelId(labels.binary_search_by(|l| l.as_str().cmp(name)).unwrap() as u32)
        };
        let mut by_item = vec![Vec::new(); self.items.len()];
        let annotations: Vec<Annotation> = self
            .raw
            .iter()
            .enumerate()
            .map(|(i, (item, annotator, label))| {
                by_item[*item].push(i);
                Annotation {
                    item: *item,
                    annotator: annotator_index[annotator],
                    label: label_of(label),
                }
            })
            .collect();
        let item_index = self
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.id.clone(), i))
            .collect();
        Ok(AnnotatedCorpus {
            items: self.items,
            item_index,
            annotators,
            annotator_index,
            annotations,
            labels,
            by_item,
        })
    }
}

/// Parse a corpus from the JSON-lines ingestion format.
///
/// Errors carry the 1-based line number of the offending record.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<AnnotatedCorpus> {
    let mut builder = CorpusBuilder::new();
    for entry in format::jsonl_lines(reader) {
        let (line, text) = entry?;
        let rec: RecordIn = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line,
            message: format!("malformed record: {e}"),
        })?;
        builder.push_at(
            line,
            &rec.item_id,
            rec.text.as_deref(),
            &rec.annotator_id,
            &rec.label,
        )?;
    }
    builder.build()
}

/// Most frequent label; ties go to the smallest label id.
///
/// # Panics
/// Panics on an empty slice.
pub fn majority_vote(labels: &[LabelId]) -> LabelId {
    majority_with_tie(labels).0
}

/// Majority label plus whether the top count was shared.
fn majority_with_tie(labels: &[LabelId]) -> (LabelId, bool) {
    assert!(!labels.is_empty(), "majority_vote of an empty multiset");
    let mut counts: BTreeMap<LabelId, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap();
    let mut winners = counts.iter().filter(|(_, &c)| c == best).map(|(&l, _)| l);
    let first = winners.next().unwrap();
    (first, winners.next().is_some())
}

/// Fraction of labels equal to the majority vote, in `(0, 1]`.
pub fn agreement_level(labels: &[LabelId]) -> f64 {
    let majority = majority_vote(labels);
    let agree = labels.iter().filter(|&&l| l == majority).count();
    agree as f64 / labels.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemAggregate {
    pub majority: LabelId,
    pub agreement: f64,
    pub n_annotations: usize,
    /// The top count was shared by more than one label.
    pub tied: bool,
}

/// Per-item majority vote and agreement level, indexed like the corpus items.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedView {
    entries: Vec<ItemAggregate>,
}

impl AggregatedView {
    pub fn entries(&self) -> &[ItemAggregate] {
        &self.entries
    }

    pub fn get(&self, item: usize) -> &ItemAggregate {
        &self.entries[item]
    }

    pub fn write_jsonl<W: Write>(
        &self,
        corpus: &AnnotatedCorpus,
        w: &mut W,
        meta: Option<&Metadata>,
    ) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            item_id: &'a str,
            majority: &'a str,
            agreement: f64,
            n_annotations: usize,
            tied: bool,
        }
        if let Some(meta) = meta {
            format::write_jsonl_header(w, meta)?;
        }
        for (item, e) in corpus.items().iter().zip(&self.entries) {
            let row = Row {
                item_id: &item.id,
                majority: corpus.label_name(e.majority),
                agreement: e.agreement,
                n_annotations: e.n_annotations,
                tied: e.tied,
            };
            serde_json::to_writer(&mut *w, &row).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn aggregate(corpus: &AnnotatedCorpus) -> AggregatedView {
    let entries = (0..corpus.items().len())
        .map(|item| {
            let labels: Vec<LabelId> = corpus
                .item_annotations(item)
                .iter()
                .map(|&a| corpus.annotations()[a].label)
                .collect();
            let (majority, tied) = majority_with_tie(&labels);
            let agree = labels.iter().filter(|&&l| l == majority).count();
            ItemAggregate {
                majority,
                agreement: agree as f64 / labels.len() as f64,
                n_annotations: labels.len(),
                tied,
            }
        })
        .collect();
    AggregatedView { entries }
}

/// Item-level train/test partition.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: AnnotatedCorpus,
    pub test: AnnotatedCorpus,
    /// Annotators that occur only in the test side.
    pub test_only_annotators: Vec<String>,
}

/// Deterministically split a corpus by item; every annotation of an item lands
/// on the same side.
pub fn split_corpus(
    corpus: &AnnotatedCorpus,
    train_fraction: f64,
    seed: u64,
) -> Result<CorpusSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = corpus.items().len();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidInput(format!(
            "split of {n} items at fraction {train_fraction} leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let (train_items, test_items) = order.split_at(n_train);
    let mut train_items = train_items.to_vec();
    let mut test_items = test_items.to_vec();
    train_items.sort_unstable();
    test_items.sort_unstable();
    let train = corpus.subset(&train_items)?;
    let test = corpus.subset(&test_items)?;
    let test_only_annotators = test
        .annotators()
        .iter()
        .filter(|a| train.annotator_idx(a).is_none())
        .cloned()
        .collect();
    Ok(CorpusSplit {
        train,
        test,
        test_only_annotators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(item: &str, text: Option<&str>, annotator: &str, label: &str) -> String {
        let mut v = serde_json::json!({"item_id": item, "annotator_id": annotator, "label": label});
        if let Some(t) = text {
            v["text"] = t.into();
        }
        v.to_string()
    }

    fn parse_str(s: &str) -> Result<AnnotatedCorpus> {
        parse_corpus(s.as_bytes())
    }

    fn ids(v: &[u32]) -> Vec<LabelId> {
        v.iter().copied().map(LabelId).collect()
    }

    #[test]
    fn parses_small_corpus() {
        let input = [
            rec("i1", Some("hello"), "a1", "off"),
            rec("i1", None, "a2", "not"),
            rec("i2", Some("world"), "a1", "not"),
        ]
        .join("\n");
        let c = parse_str(&input).unwrap();
        assert_eq!(c.n_labels(), 2);
        assert_eq!(c.labels(), ["not", "off"]);
        assert_eq!(c.annotations().len(), 3);
        assert_eq!(c.items().len(), 2);
        assert_eq!(c.annotators(), ["a1", "a2"]);
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let input = [
            rec("i1", Some("x"), "a1", "off"),
            rec("i2", Some("y"), "a1", "off"),
            rec("i1", None, "a1", "not"),
        ]
        .join("\n");
        match parse_str(&input) {
            Err(Error::DuplicatePair {
                line,
                first_line,
                item_id,
                annotator_id,
            }) => {
                assert_eq!((line, first_line), (3, 1));
                assert_eq!(item_id, "i1");
                assert_eq!(annotator_id, "a1");
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn missing_text_and_empty_input() {
        let input = rec("i1", None, "a1", "off");
        assert!(matches!(parse_str(&input), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_str(""), Err(Error::EmptyCorpus)));
        assert!(matches!(parse_str("\n\n"), Err(Error::EmptyCorpus)));
        assert!(matches!(
            parse_str("{not json"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn majority_vote_rules() {
        assert_eq!(majority_vote(&ids(&[0, 0, 1])), LabelId(0));
        assert_eq!(majority_vote(&ids(&[1, 0])), LabelId(0));
        assert_eq!(majority_vote(&ids(&[1])), LabelId(1));
        assert_eq!(majority_vote(&ids(&[2, 1, 2, 1])), LabelId(1));
    }

    #[test]
    fn agreement_level_examples() {
        assert_eq!(agreement_level(&ids(&[0, 0, 0, 0, 1])), 0.8);
        assert_eq!(agreement_level(&ids(&[1, 1, 1])), 1.0);
        assert_eq!(agreement_level(&ids(&[0, 1])), 0.5);
    }

    #[test]
    fn aggregate_examples() {
        let input = [
            rec("i1", Some("x"), "a1", "A"),
            rec("i1", None, "a2", "A"),
            rec("i1", None, "a3", "B"),
            rec("i2", Some("y"), "a1", "B"),
            rec("i3", Some("z"), "a1", "A"),
            rec("i3", None, "a2", "B"),
        ]
        .join("\n");
        let c = parse_str(&input).unwrap();
        let v = aggregate(&c);
        assert_eq!(v.get(0).majority, LabelId(0));
        assert!((v.get(0).agreement - 2.0 / 3.0).abs() < 1e-15);
        assert!(!v.get(0).tied);
        assert_eq!(v.get(1).agreement, 1.0);
        assert_eq!(v.get(1).n_annotations, 1);
        assert!(v.get(2).tied);
        assert_eq!(v.get(2).majority, LabelId(0));
    }

    #[test]
    fn five_annotation_agreement_values() {
        // Every 2-label composition of 5 annotations.
        let mut seen = BTreeSet::new();
        for mask in 0u32..32 {
            let labels: Vec<LabelId> = (0..5).map(|b| LabelId((mask >> b) & 1)).collect();
            seen.insert((agreement_level(&labels) * 10.0).round() as u32);
        }
        // With five votes and two labels a tie is impossible, so 0.4 never occurs.
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![6, 8, 10]);
    }

    fn ten_item_corpus() -> AnnotatedCorpus {
        let mut b = CorpusBuilder::new();
        for i in 0..10 {
            let item = format!("i{i}");
            b.push(&item, Some("t"), "a1", if i % 2 == 0 { "x" } else { "y" })
                .unwrap();
            b.push(&item, None, "a2", "x").unwrap();
        }
        b.push("i9", None, "late", "y").unwrap();
        b.build().unwrap()
    }

    #[test]
    fn split_counts_and_determinism() {
        let c = ten_item_corpus();
        let s1 = split_corpus(&c, 0.8, 7).unwrap();
        let s2 = split_corpus(&c, 0.8, 7).unwrap();
        assert_eq!(s1.train.items().len(), 8);
        assert_eq!(s1.test.items().len(), 2);
        assert_eq!(s1.train, s2.train);
        assert_eq!(s1.test, s2.test);
        assert_eq!(s1.train.labels(), c.labels());
        assert_eq!(
            s1.train.annotations().len() + s1.test.annotations().len(),
            c.annotations().len()
        );
        assert!(split_corpus(&c, 1.0, 7).is_err());
        assert!(split_corpus(&c, 0.01, 7).is_err());
    }

    #[test]
    fn split_records_test_only_annotators() {
        let c = ten_item_corpus();
        let found = (0..50u64).any(|seed| {
            let s = split_corpus(&c, 0.8, seed).unwrap();
            s.test_only_annotators == ["late"]
        });
        assert!(found);
    }

    #[test]
    fn stats_block() {
        let c = ten_item_corpus();
        let s = c.stats();
        assert_eq!(s.unique_texts, 10);
        assert_eq!(s.annotations, 21);
        assert!((s.per_text.mean - 2.1).abs() < 1e-12);
        let text = s.to_string();
        assert!(text.contains("# annotations per annotator"));
    }

    proptest! {
        #[test]
        fn majority_vote_permutation_invariant(
            mut labels in prop::collection::vec(0u32..4, 1..12),
            seed in any::<u64>(),
        ) {
            let before = majority_vote(&ids(&labels));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            labels.shuffle(&mut rng);
            prop_assert_eq!(before, majority_vote(&ids(&labels)));
            let a = agreement_level(&ids(&labels));
            prop_assert!(a >= 1.0 / labels.len() as f64 && a <= 1.0);
        }

        #[test]
        fn corpus_round_trip(
            rows in prop::collection::vec((0usize..6, 0usize..5, 0usize..3), 1..40),
        ) {
            let mut b = CorpusBuilder::new();
            let mut seen = BTreeSet::new();
            let mut texts = BTreeSet::new();
            for (item, annotator, label) in rows {
                if !seen.insert((item, annotator)) {
                    continue;
                }
                let text = format!("text \"{item}\"\t<url>");
                let first = texts.insert(item);
                b.push(&format!("i{item}"), first.then_some(text.as_str()), &format!("a{annotator}"), ["p", "q", "r"][label]).unwrap();
            }
            b.push("extra", Some("e"), "a0", "p").unwrap();
            b.push("extra", None, "a1", "q").unwrap();
            let corpus = b.build().unwrap();
            let mut buf = Vec::new();
            corpus.write_jsonl(&mut buf, Some(&Metadata::new("test"))).unwrap();
            let back = parse_corpus(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &corpus);
            let view = aggregate(&corpus);
            let total: usize = view.entries().iter().map(|e| e.n_annotations).sum();
            prop_assert_eq!(total, corpus.annotations().len());
        }
    }
}

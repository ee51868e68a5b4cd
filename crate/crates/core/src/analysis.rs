//! Analyses over data maps: confidence vs. agreement correlation,
//! majority/minority confidence grouping, the low-confidence subset,
//! suspect-annotation flags and perspective counting.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cartography::DataMap;
use crate::corpus::{AggregatedView, AnnotatedCorpus, LabelId};
use crate::error::{Error, Result};
use crate::models::Mode;
use crate::stats::{self, DistributionSummary, TestResult};

pub const DEFAULT_PERMUTATIONS: usize = 9_999;
/// Agreement buckets use distinct observed values up to this many.
pub const MAX_VALUE_BUCKETS: usize = 8;
pub const EQUAL_WIDTH_BUCKETS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Single-GT confidence cut for "hard" items.
    pub t_low: f64,
    /// Multi-GT confidence above which a minority annotation counts as learned.
    pub t_high: f64,
    /// Multi-GT confidence below which a minority annotation counts as rejected.
    pub t_min: f64,
    /// Multi-GT confidence above which a label counts as learned for an item.
    pub t_perspective: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            t_low: 0.5,
            t_high: 0.9,
            t_min: 0.1,
            t_perspective: 0.5,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_low", self.t_low),
            ("t_high", self.t_high),
            ("t_min", self.t_min),
            ("t_perspective", self.t_perspective),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("threshold {name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Drop items whose majority vote was a tie.
    pub exclude_ties: bool,
    pub permutations: usize,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            exclude_ties: false,
            permutations: DEFAULT_PERMUTATIONS,
            seed: 0,
        }
    }
}

/// A data-map point resolved against the corpus.
#[derive(Debug, Clone, Copy)]
struct Resolved {
    item: usize,
    annotator: Option<usize>,
    /// Annotation label (multi) or the point's gold label (single).
    label: LabelId,
    confidence: f64,
}

fn resolve(
    map: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    opts: &AnalysisOptions,
) -> Result<Vec<Resolved>> {
    let mut out = Vec::with_capacity(map.points.len());
    for p in &map.points {
        let item = corpus.item_idx(&p.key.item_id).ok_or_else(|| {
            Error::KeyMismatch(format!("item `{}` is not in the corpus", p.key.item_id))
        })?;
        let gold_name = &map.labels[p.gold.index()];
        let gold = corpus.label_id(gold_name).ok_or_else(|| {
            Error::KeyMismatch(format!("label `{gold_name}` for key {} is not in the corpus", p.key))
        })?;
        let annotator = match &p.key.annotator_id {
            None => None,
            Some(a) => {
                let idx = corpus.annotator_idx(a).ok_or_else(|| {
                    Error::KeyMismatch(format!("annotator `{a}` is not in the corpus"))
                })?;
                let ann = corpus
                    .item_annotations(item)
                    .iter()
                    .map(|&i| corpus.annotations()[i])
                    .find(|ann| ann.annotator == idx)
                    .ok_or_else(|| {
                        Error::KeyMismatch(format!("no annotation in the corpus for key {}", p.key))
                    })?;
                if ann.label != gold {
                    return Err(Error::KeyMismatch(format!(
                        "key {} has gold `{gold_name}` but the corpus annotation is `{}`",
                        p.key,
                        corpus.label_name(ann.label)
                    )));
                }
                Some(idx)
            }
        };
        if opts.exclude_ties && view.get(item).tied {
            continue;
        }
        out.push(Resolved {
            item,
            annotator,
            label: gold,
            confidence: p.confidence,
        });
    }
    Ok(out)
}

fn require_mode(map: &DataMap, mode: Mode, what: &str) -> Result<()> {
    if map.mode != mode {
        return Err(Error::InvalidInput(format!("{what} needs a {mode} data map, got {}", map.mode)));
    }
    Ok(())
}

/// Single-GT confidence per item index.
fn single_confidence(
    single: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    opts: &AnalysisOptions,
) -> Result<BTreeMap<usize, f64>> {
    require_mode(single, Mode::Single, "Single-GT input")?;
    Ok(resolve(single, corpus, view, opts)?
        .into_iter()
        .map(|r| (r.item, r.confidence))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub mode: Mode,
    pub n_pairs: usize,
    pub r: f64,
    pub p_value: f64,
}

/// Pearson r between each key's confidence and its item's agreement level,
/// with a permutation p-value. Multi-GT maps contribute one pair per
/// annotation.
pub fn correlate_confidence_agreement(
    map: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    opts: &AnalysisOptions,
) -> Result<Correlation> {
    let points = resolve(map, corpus, view, opts)?;
    let conf: Vec<f64> = points.iter().map(|p| p.confidence).collect();
    let agreement: Vec<f64> = points.iter().map(|p| view.get(p.item).agreement).collect();
    let test = stats::pearson_permutation_test(&conf, &agreement, opts.permutations, opts.seed)?;
    Ok(Correlation {
        mode: map.mode,
        n_pairs: points.len(),
        r: test.statistic,
        p_value: test.p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceGroup {
    pub label: String,
    pub values: Vec<f64>,
    pub summary: Option<DistributionSummary>,
}

impl ConfidenceGroup {
    fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        let summary = stats::summarize(&values).ok();
        Self {
            label: label.into(),
            values,
            summary,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn median(&self) -> Option<f64> {
        self.summary.map(|s| s.median)
    }
}

/// Annotations equal to their item's majority vote against the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupComparison {
    pub agree: ConfidenceGroup,
    pub disagree: ConfidenceGroup,
    /// Mann-Whitney test of `agree` against `disagree`; absent when a group is empty.
    pub test: Option<TestResult>,
    /// Why the test was omitted, if it was.
    pub note: Option<String>,
}

impl GroupComparison {
    fn from_values(agree: Vec<f64>, disagree: Vec<f64>) -> Result<Self> {
        let note = match (agree.is_empty(), disagree.is_empty()) {
            (true, true) => Some("no annotations to compare".to_owned()),
            (false, true) => Some("minority group is empty".to_owned()),
            (true, false) => Some("majority group is empty".to_owned()),
            (false, false) => None,
        };
        let test = if note.is_none() {
            Some(stats::mann_whitney_u(&agree, &disagree)?)
        } else {
            None
        };
        Ok(Self {
            agree: ConfidenceGroup::new("agree", agree),
            disagree: ConfidenceGroup::new("disagree", disagree),
            test,
            note,
        })
    }
}

fn split_by_majority<'a>(
    points: impl Iterator<Item = &'a Resolved>,
    view: &AggregatedView,
) -> (Vec<f64>, Vec<f64>) {
    let mut agree = Vec::new();
    let mut disagree = Vec::new();
    for p in points {
        if p.label == view.get(p.item).majority {
            agree.push(p.confidence);
        } else {
            disagree.push(p.confidence);
        }
    }
    (agree, disagree)
}

/// Multi-GT confidences grouped by whether each annotation matches its
/// item's majority vote.
pub fn group_by_minority(
    multi: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    opts: &AnalysisOptions,
) -> Result<GroupComparison> {
    require_mode(multi, Mode::Multi, "minority grouping")?;
    let points = resolve(multi, corpus, view, opts)?;
    let (agree, disagree) = split_by_majority(points.iter(), view);
    GroupComparison::from_values(agree, disagree)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversalReport {
    pub t_low: f64,
    /// Items whose Single-GT confidence is below `t_low`.
    pub subset_items: usize,
    pub comparison: GroupComparison,
}

/// Minority grouping restricted to items the Single-GT model learns with
/// confidence below `t_low`.
pub fn reversal_subset(
    single: &DataMap,
    multi: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    t_low: f64,
    opts: &AnalysisOptions,
) -> Result<ReversalReport> {
    require_mode(multi, Mode::Multi, "reversal subset")?;
    let single_conf = single_confidence(single, corpus, view, opts)?;
    let hard: BTreeSet<usize> = single_conf
        .iter()
        .filter(|(_, &c)| c < t_low)
        .map(|(&i, _)| i)
        .collect();
    let points = resolve(multi, corpus, view, opts)?;
    let (agree, disagree) = split_by_majority(points.iter().filter(|p| hard.contains(&p.item)), view);
    let mut comparison = GroupComparison::from_values(agree, disagree)?;
    if hard.is_empty() {
        comparison.note = Some(format!("no item has Single-GT confidence below {t_low}"));
    }
    Ok(ReversalReport {
        t_low,
        subset_items: hard.len(),
        comparison,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementBucket {
    pub group: ConfidenceGroup,
    pub lower: f64,
    pub upper: f64,
    /// Mann-Whitney test against the next bucket up, when both are non-empty.
    pub test_vs_next: Option<TestResult>,
}

/// Confidences bucketed by item agreement level: one bucket per distinct
/// level when there are at most [`MAX_VALUE_BUCKETS`], otherwise
/// [`EQUAL_WIDTH_BUCKETS`] equal-width bins over the observed range.
pub fn agreement_buckets(
    map: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    opts: &AnalysisOptions,
) -> Result<Vec<AgreementBucket>> {
    let points = resolve(map, corpus, view, opts)?;
    let levels: Vec<f64> = points.iter().map(|p| view.get(p.item).agreement).collect();
    let mut distinct = levels.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut buckets: Vec<(f64, f64, String, Vec<f64>)> = if distinct.len() <= MAX_VALUE_BUCKETS {
        distinct
            .iter()
            .map(|&v| (v, v, format!("{v:.3}"), Vec::new()))
            .collect()
    } else {
        let lo = distinct[0];
        let hi = distinct[distinct.len() - 1];
        let width = (hi - lo) / EQUAL_WIDTH_BUCKETS as f64;
        (0..EQUAL_WIDTH_BUCKETS)
            .map(|b| {
                let a = lo + width * b as f64;
                let z = if b + 1 == EQUAL_WIDTH_BUCKETS { hi } else { lo + width * (b + 1) as f64 };
                (a, z, format!("[{a:.3}, {z:.3}{}", if b + 1 == EQUAL_WIDTH_BUCKETS { "]" } else { ")" }), Vec::new())
            })
            .collect()
    };
    let n_buckets = buckets.len();
    for (p, level) in points.iter().zip(&levels) {
        let idx = if distinct.len() <= MAX_VALUE_BUCKETS {
            distinct.binary_search_by(|v| v.total_cmp(level)).unwrap()
        } else {
            let (lo, hi) = (buckets[0].0, buckets[n_buckets - 1].1);
            let frac = (level - lo) / (hi - lo);
            ((frac * EQUAL_WIDTH_BUCKETS as f64) as usize).min(EQUAL_WIDTH_BUCKETS - 1)
        };
        buckets[idx].3.push(p.confidence);
    }
    let mut out: Vec<AgreementBucket> = buckets
        .into_iter()
        .map(|(lower, upper, label, values)| AgreementBucket {
            group: ConfidenceGroup::new(label, values),
            lower,
            upper,
            test_vs_next: None,
        })
        .collect();
    for i in 0..out.len().saturating_sub(1) {
        if !out[i].group.is_empty() && !out[i + 1].group.is_empty() {
            out[i].test_vs_next = Some(stats::mann_whitney_u(&out[i].group.values, &out[i + 1].group.values)?);
        }
    }
    Ok(out)
}

/// One flagged minority annotation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagEntry {
    pub item_id: String,
    pub text: String,
    pub annotator_id: String,
    pub majority_label: String,
    pub minority_label: String,
    pub single_conf: f64,
    pub multi_conf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagReport {
    pub thresholds: Thresholds,
    /// Low Single-GT confidence on the majority, high Multi-GT confidence on a
    /// minority annotation: the aggregated label may be wrong.
    pub suspect_majority: Vec<FlagEntry>,
    /// High Single-GT confidence on the majority, very low Multi-GT confidence
    /// on a minority annotation: the minority annotation may be noise.
    pub suspect_minority: Vec<FlagEntry>,
}

fn flag_minorities(
    single: &DataMap,
    multi: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    opts: &AnalysisOptions,
    keep: impl Fn(f64, f64) -> bool,
) -> Result<Vec<FlagEntry>> {
    require_mode(multi, Mode::Multi, "flagging")?;
    let single_conf = single_confidence(single, corpus, view, opts)?;
    let mut entries = Vec::new();
    for p in resolve(multi, corpus, view, opts)? {
        let agg = view.get(p.item);
        if p.label == agg.majority {
            continue;
        }
        let &s = single_conf.get(&p.item).ok_or_else(|| {
            Error::KeyMismatch(format!(
                "item `{}` has Multi-GT dynamics but no Single-GT dynamics",
                corpus.item(p.item).id
            ))
        })?;
        if keep(s, p.confidence) {
            let item = corpus.item(p.item);
            entries.push(FlagEntry {
                item_id: item.id.clone(),
                text: item.text.clone(),
                annotator_id: corpus.annotators()[p.annotator.expect("multi map")].clone(),
                majority_label: corpus.label_name(agg.majority).to_owned(),
                minority_label: corpus.label_name(p.label).to_owned(),
                single_conf: s,
                multi_conf: p.confidence,
            });
        }
    }
    Ok(entries)
}

/// Minority annotations with Multi-GT confidence above `t_high` on items
/// whose Single-GT confidence is below `t_low`.
pub fn flag_suspect_majority(
    single: &DataMap,
    multi: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    t_low: f64,
    t_high: f64,
    opts: &AnalysisOptions,
) -> Result<Vec<FlagEntry>> {
    flag_minorities(single, multi, corpus, view, opts, |s, m| s < t_low && m > t_high)
}

/// Minority annotations with Multi-GT confidence below `t_min` on items
/// whose Single-GT confidence is above `t_low`.
pub fn flag_suspect_minority(
    single: &DataMap,
    multi: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    t_low: f64,
    t_min: f64,
    opts: &AnalysisOptions,
) -> Result<Vec<FlagEntry>> {
    flag_minorities(single, multi, corpus, view, opts, |s, m| s > t_low && m < t_min)
}

pub fn flag_report(
    single: &DataMap,
    multi: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    thresholds: &Thresholds,
    opts: &AnalysisOptions,
) -> Result<FlagReport> {
    thresholds.validate()?;
    Ok(FlagReport {
        thresholds: *thresholds,
        suspect_majority: flag_suspect_majority(
            single, multi, corpus, view, thresholds.t_low, thresholds.t_high, opts,
        )?,
        suspect_minority: flag_suspect_minority(
            single, multi, corpus, view, thresholds.t_low, thresholds.t_min, opts,
        )?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerspectiveHistogram {
    pub threshold: f64,
    /// Number of distinct labels learned above the threshold → item count.
    /// Every count from 0 to K is present.
    pub buckets: BTreeMap<usize, usize>,
}

impl PerspectiveHistogram {
    pub fn total(&self) -> usize {
        self.buckets.values().sum()
    }

    /// Share of disagreement items with at least two labels learned.
    pub fn multi_label_fraction(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let multi: usize = self.buckets.range(2..).map(|(_, c)| c).sum();
        multi as f64 / total as f64
    }
}

/// For each item with agreement below 1, the number of distinct annotation
/// labels having at least one annotation with Multi-GT confidence above `t`.
pub fn perspective_histogram(
    multi: &DataMap,
    corpus: &AnnotatedCorpus,
    view: &AggregatedView,
    t: f64,
    opts: &AnalysisOptions,
) -> Result<PerspectiveHistogram> {
    require_mode(multi, Mode::Multi, "perspective histogram")?;
    let mut learned: BTreeMap<usize, BTreeSet<LabelId>> = BTreeMap::new();
    for p in resolve(multi, corpus, view, opts)? {
        if view.get(p.item).agreement >= 1.0 {
            continue;
        }
        let set = learned.entry(p.item).or_default();
        if p.confidence > t {
            set.insert(p.label);
        }
    }
    let mut buckets: BTreeMap<usize, usize> = (0..=corpus.n_labels()).map(|k| (k, 0)).collect();
    for labels in learned.values() {
        *buckets.entry(labels.len()).or_default() += 1;
    }
    Ok(PerspectiveHistogram {
        threshold: t,
        buckets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartography::DataMapPoint;
    use crate::corpus::{aggregate, CorpusBuilder};
    use crate::models::DynamicsKey;

    /// i1: A,A,B   i2: A,A,A   i3: B,A,B
    fn corpus() -> AnnotatedCorpus {
        let mut b = CorpusBuilder::new();
        for (item, labels) in [("i1", "AAB"), ("i2", "AAA"), ("i3", "BAB")] {
            for (n, l) in labels.chars().enumerate() {
                let text = (n == 0).then(|| format!("text of {item}"));
                b.push(item, text.as_deref(), &format!("a{n}"), &l.to_string()).unwrap();
            }
        }
        b.build().unwrap()
    }

    fn labels() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    fn point(item: &str, annotator: Option<&str>, gold: u32, confidence: f64) -> DataMapPoint {
        DataMapPoint {
            key: DynamicsKey {
                item_id: item.into(),
                annotator_id: annotator.map(Into::into),
            },
            gold: LabelId(gold),
            confidence,
            variability: 0.0,
            correctness: 0.0,
        }
    }

    fn single_map(conf: [f64; 3]) -> DataMap {
        DataMap {
            mode: Mode::Single,
            labels: labels(),
            epochs: 5,
            points: vec![
                point("i1", None, 0, conf[0]),
                point("i2", None, 0, conf[1]),
                point("i3", None, 1, conf[2]),
            ],
        }
    }

    /// Confidences listed per annotation in corpus order.
    fn multi_map(conf: [[f64; 3]; 3]) -> DataMap {
        let c = corpus();
        let mut points = Vec::new();
        for a in c.annotations() {
            let item = &c.item(a.item).id;
            let row = c.item_idx(item).unwrap();
            points.push(point(item, Some(&c.annotators()[a.annotator]), a.label.0, conf[row][a.annotator]));
        }
        DataMap {
            mode: Mode::Multi,
            labels: labels(),
            epochs: 5,
            points,
        }
    }

    #[test]
    fn correlation_by_construction() {
        let c = corpus();
        let v = aggregate(&c);
        let conf: Vec<f64> = (0..3).map(|i| v.get(i).agreement).collect();
        let m = single_map([conf[0], conf[1], conf[2]]);
        let opts = AnalysisOptions { permutations: 99, ..Default::default() };
        let r = correlate_confidence_agreement(&m, &c, &v, &opts).unwrap();
        assert!((r.r - 1.0).abs() < 1e-12);
        assert_eq!(r.n_pairs, 3);

        let mm = multi_map([[0.9, 0.8, 0.2], [0.9, 0.9, 0.9], [0.5, 0.1, 0.6]]);
        let r = correlate_confidence_agreement(&mm, &c, &v, &opts).unwrap();
        assert_eq!(r.n_pairs, 9);
        assert_eq!(r.mode, Mode::Multi);
    }

    #[test]
    fn constant_agreement_is_an_error() {
        let c = corpus();
        let v = aggregate(&c);
        let mut m = single_map([0.1, 0.2, 0.3]);
        m.points.remove(1);
        m.points.push(point("i3", None, 1, 0.9));
        m.points.truncate(2);
        // Only i1 and i3 remain, both at agreement 2/3.
        let err = correlate_confidence_agreement(&m, &c, &v, &AnalysisOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn minority_grouping_partitions() {
        let c = corpus();
        let v = aggregate(&c);
        let mm = multi_map([[0.9, 0.8, 0.2], [0.9, 0.9, 0.9], [0.5, 0.1, 0.6]]);
        let g = group_by_minority(&mm, &c, &v, &AnalysisOptions::default()).unwrap();
        assert_eq!(g.agree.len() + g.disagree.len(), 9);
        assert_eq!(g.disagree.len(), 2);
        let mut d = g.disagree.values.clone();
        d.sort_by(f64::total_cmp);
        assert_eq!(d, vec![0.1, 0.2]);
        assert!(g.test.is_some());
    }

    #[test]
    fn unanimous_corpus_flags_empty_group() {
        let mut b = CorpusBuilder::new();
        b.push("x", Some("t"), "a", "P").unwrap();
        b.push("x", None, "b", "P").unwrap();
        b.push("y", Some("u"), "a", "Q").unwrap();
        let c = b.build().unwrap();
        let v = aggregate(&c);
        let map = DataMap {
            mode: Mode::Multi,
            labels: vec!["P".into(), "Q".into()],
            epochs: 1,
            points: vec![
                point("x", Some("a"), 0, 0.9),
                point("x", Some("b"), 0, 0.8),
                point("y", Some("a"), 1, 0.7),
            ],
        };
        let g = group_by_minority(&map, &c, &v, &AnalysisOptions::default()).unwrap();
        assert!(g.disagree.is_empty());
        assert!(g.test.is_none());
        assert_eq!(g.note.as_deref(), Some("minority group is empty"));
        let h = perspective_histogram(&map, &c, &v, 0.5, &AnalysisOptions::default()).unwrap();
        assert_eq!(h.total(), 0);
    }

    #[test]
    fn reversal_subset_restricts_items() {
        let c = corpus();
        let v = aggregate(&c);
        let single = single_map([0.3, 0.95, 0.8]);
        let mm = multi_map([[0.2, 0.3, 0.95], [0.9, 0.9, 0.9], [0.5, 0.1, 0.6]]);
        let r = reversal_subset(&single, &mm, &c, &v, 0.5, &AnalysisOptions::default()).unwrap();
        assert_eq!(r.subset_items, 1);
        assert_eq!(r.comparison.agree.values, vec![0.2, 0.3]);
        assert_eq!(r.comparison.disagree.values, vec![0.95]);

        let easy = single_map([0.6, 0.95, 0.8]);
        let r = reversal_subset(&easy, &mm, &c, &v, 0.5, &AnalysisOptions::default()).unwrap();
        assert_eq!(r.subset_items, 0);
        assert!(r.comparison.agree.is_empty() && r.comparison.disagree.is_empty());
        assert!(r.comparison.note.is_some());
    }

    #[test]
    fn suspect_majority_threshold_boundary() {
        let c = corpus();
        let v = aggregate(&c);
        let opts = AnalysisOptions::default();
        let single = single_map([0.3, 0.95, 0.8]);
        let flagged = multi_map([[0.2, 0.3, 0.95], [0.9, 0.9, 0.9], [0.5, 0.1, 0.6]]);
        let e = flag_suspect_majority(&single, &flagged, &c, &v, 0.5, 0.9, &opts).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].item_id.as_str(), e[0].annotator_id.as_str()), ("i1", "a2"));
        assert_eq!((e[0].majority_label.as_str(), e[0].minority_label.as_str()), ("A", "B"));
        assert_eq!(e[0].text, "text of i1");

        let not_flagged = multi_map([[0.2, 0.3, 0.85], [0.9, 0.9, 0.9], [0.5, 0.1, 0.6]]);
        let e = flag_suspect_majority(&single, &not_flagged, &c, &v, 0.5, 0.9, &opts).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn suspect_minority_threshold_boundary() {
        let c = corpus();
        let v = aggregate(&c);
        let opts = AnalysisOptions::default();
        let single = single_map([0.8, 0.95, 0.4]);
        let m = multi_map([[0.9, 0.9, 0.05], [0.9, 0.9, 0.9], [0.5, 0.01, 0.6]]);
        let e = flag_suspect_minority(&single, &m, &c, &v, 0.5, 0.1, &opts).unwrap();
        // i3's minority is rejected too, but its Single-GT confidence is 0.4.
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].item_id, "i1");
        let m = multi_map([[0.9, 0.9, 0.15], [0.9, 0.9, 0.9], [0.5, 0.01, 0.6]]);
        assert!(flag_suspect_minority(&single, &m, &c, &v, 0.5, 0.1, &opts).unwrap().is_empty());
    }

    #[test]
    fn flags_are_monotone_in_thresholds() {
        let c = corpus();
        let v = aggregate(&c);
        let opts = AnalysisOptions::default();
        let single = single_map([0.3, 0.95, 0.45]);
        let m = multi_map([[0.2, 0.3, 0.93], [0.9, 0.9, 0.9], [0.5, 0.97, 0.6]]);
        let mut last = usize::MAX;
        for t_high in [0.0, 0.5, 0.92, 0.95, 0.99] {
            let n = flag_suspect_majority(&single, &m, &c, &v, 0.5, t_high, &opts).unwrap().len();
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn perspective_counting() {
        let c = corpus();
        let v = aggregate(&c);
        // i1: A@0.9, A@0.7, B@0.6 → 2 labels; i3: B@0.4, A@0.2, B@0.5 → 0 labels.
        let m = multi_map([[0.9, 0.7, 0.6], [0.9, 0.9, 0.9], [0.4, 0.2, 0.5]]);
        let h = perspective_histogram(&m, &c, &v, 0.5, &AnalysisOptions::default()).unwrap();
        assert_eq!(h.buckets, BTreeMap::from([(0, 1), (1, 0), (2, 1)]));
        assert_eq!(h.total(), 2);
        assert_eq!(h.multi_label_fraction(), 0.5);
    }

    #[test]
    fn agreement_bucket_partition() {
        let c = corpus();
        let v = aggregate(&c);
        let m = multi_map([[0.9, 0.7, 0.6], [0.9, 0.9, 0.9], [0.4, 0.2, 0.5]]);
        let b = agreement_buckets(&m, &c, &v, &AnalysisOptions::default()).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.iter().map(|x| x.group.len()).sum::<usize>(), 9);
        assert!(b[0].test_vs_next.is_some());
        assert!(b[1].test_vs_next.is_none());
    }

    #[test]
    fn key_mismatch_is_reported() {
        let c = corpus();
        let v = aggregate(&c);
        let mut m = single_map([0.1, 0.2, 0.3]);
        m.points.push(point("ghost", None, 0, 0.5));
        assert!(matches!(
            correlate_confidence_agreement(&m, &c, &v, &AnalysisOptions::default()),
            Err(Error::KeyMismatch(_))
        ));
        let mut mm = multi_map([[0.9, 0.7, 0.6], [0.9, 0.9, 0.9], [0.4, 0.2, 0.5]]);
        mm.points[0].gold = LabelId(1);
        assert!(matches!(
            group_by_minority(&mm, &c, &v, &AnalysisOptions::default()),
            Err(Error::KeyMismatch(_))
        ));
    }

    #[test]
    fn ties_can_be_excluded() {
        let mut b = CorpusBuilder::new();
        b.push("t", Some("tie"), "a", "A").unwrap();
        b.push("t", None, "b", "B").unwrap();
        b.push("u", Some("clear"), "a", "A").unwrap();
        let c = b.build().unwrap();
        let v = aggregate(&c);
        let map = DataMap {
            mode: Mode::Multi,
            labels: labels(),
            epochs: 1,
            points: vec![
                point("t", Some("a"), 0, 0.6),
                point("t", Some("b"), 1, 0.6),
                point("u", Some("a"), 0, 0.9),
            ],
        };
        let all = group_by_minority(&map, &c, &v, &AnalysisOptions::default()).unwrap();
        assert_eq!(all.agree.len() + all.disagree.len(), 3);
        let opts = AnalysisOptions { exclude_ties: true, ..Default::default() };
        let some = group_by_minority(&map, &c, &v, &opts).unwrap();
        assert_eq!(some.agree.len() + some.disagree.len(), 1);
    }
}

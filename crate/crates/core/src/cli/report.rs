//! Tabular report files for `analyze` and `flag`.

use std::fmt::Write as _;
use std::io::Write;

use crate::analysis::{
    self, AgreementBucket, AnalysisOptions, ConfidenceGroup, Correlation, FlagEntry, FlagReport,
    GroupComparison, PerspectiveHistogram, ReversalReport,
};
use crate::cartography::DataMap;
use crate::corpus::{aggregate, AnnotatedCorpus};
use crate::error::{Error, Result};
use crate::format::{self, num, Metadata};
use crate::models::Mode;
use crate::stats::{significance_band, TestResult};

const SUMMARY_COLUMNS: &str = "n\tmin\tq1\tmedian\tq3\tmax\tmean";

pub(super) struct AnalysisReport {
    correlations: Vec<(Mode, std::result::Result<Correlation, String>)>,
    buckets: Vec<(Mode, Vec<AgreementBucket>)>,
    minority: GroupComparison,
    reversal: ReversalReport,
    perspectives: PerspectiveHistogram,
}

fn summary_cells(g: &ConfidenceGroup) -> String {
    match g.summary {
        Some(s) => format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.n,
            num(s.min),
            num(s.q1),
            num(s.median),
            num(s.q3),
            num(s.max),
            num(s.mean)
        ),
        None => "0\tNA\tNA\tNA\tNA\tNA\tNA".to_owned(),
    }
}

fn test_cells(t: Option<&TestResult>) -> String {
    match t {
        Some(t) => format!("{}\t{}\t{}\t{}", num(t.statistic), num(t.p_value), significance_band(t.p_value), t.method),
        None => "NA\tNA\tNA\tNA".to_owned(),
    }
}

impl AnalysisReport {
    pub(super) fn compute(
        single: &DataMap,
        multi: &DataMap,
        corpus: &AnnotatedCorpus,
        opts: &AnalysisOptions,
        t_low: f64,
        t_perspective: f64,
    ) -> Result<Self> {
        let view = aggregate(corpus);
        let mut correlations = Vec::new();
        let mut buckets = Vec::new();
        for map in [single, multi] {
            let c = match analysis::correlate_confidence_agreement(map, corpus, &view, opts) {
                Ok(c) => Ok(c),
                Err(Error::UndefinedCorrelation(why)) => Err(why),
                Err(Error::EmptySeries) => Err("no data-map points".to_owned()),
                Err(e) => return Err(e),
            };
            correlations.push((map.mode, c));
            buckets.push((map.mode, analysis::agreement_buckets(map, corpus, &view, opts)?));
        }
        Ok(Self {
            correlations,
            buckets,
            minority: analysis::group_by_minority(multi, corpus, &view, opts)?,
            reversal: analysis::reversal_subset(single, multi, corpus, &view, t_low, opts)?,
            perspectives: analysis::perspective_histogram(multi, corpus, &view, t_perspective, opts)?,
        })
    }

    pub(super) fn write_correlations<W: Write>(&self, w: &mut W, meta: &Metadata) -> Result<()> {
        format::write_tsv_header(w, meta)?;
        writeln!(w, "mode\tn_pairs\tr\tp_value\tband\tnote")?;
        for (mode, c) in &self.correlations {
            match c {
                Ok(c) => writeln!(
                    w,
                    "{mode}\t{}\t{}\t{}\t{}\t",
                    c.n_pairs,
                    num(c.r),
                    num(c.p_value),
                    significance_band(c.p_value)
                )?,
                Err(why) => writeln!(w, "{mode}\tNA\tNA\tNA\tNA\t{}", format::tsv_cell(why))?,
            }
        }
        Ok(())
    }

    pub(super) fn write_agreement_groups<W: Write>(&self, w: &mut W, meta: &Metadata) -> Result<()> {
        format::write_tsv_header(w, meta)?;
        writeln!(
            w,
            "mode\tbucket\tlower\tupper\t{SUMMARY_COLUMNS}\tu_vs_next\tp_vs_next\tband_vs_next\tmethod_vs_next"
        )?;
        for (mode, buckets) in &self.buckets {
            for b in buckets {
                writeln!(
                    w,
                    "{mode}\t{}\t{}\t{}\t{}\t{}",
                    b.group.label,
                    num(b.lower),
                    num(b.upper),
                    summary_cells(&b.group),
                    test_cells(b.test_vs_next.as_ref())
                )?;
            }
        }
        Ok(())
    }

    pub(super) fn write_minority_groups<W: Write>(&self, w: &mut W, meta: &Metadata) -> Result<()> {
        format::write_tsv_header(w, meta)?;
        writeln!(w, "subset\tgroup\t{SUMMARY_COLUMNS}\tu\tp_value\tband\tmethod\tnote")?;
        let subset = format!("single_conf<{}", self.reversal.t_low);
        for (name, cmp) in [("all", &self.minority), (subset.as_str(), &self.reversal.comparison)] {
            let note = cmp.note.as_deref().map(format::tsv_cell).unwrap_or_default();
            for g in [&cmp.agree, &cmp.disagree] {
                let empty = if g.is_empty() { "empty" } else { "" };
                let note = [empty, note.as_str()]
                    .iter()
                    .filter(|s| !s.is_empty())
                    .copied()
                    .collect::<Vec<_>>()
                    .join("; ");
                writeln!(
                    w,
                    "{name}\t{}\t{}\t{}\t{note}",
                    g.label,
                    summary_cells(g),
                    test_cells(cmp.test.as_ref())
                )?;
            }
        }
        Ok(())
    }

    pub(super) fn write_perspectives<W: Write>(&self, w: &mut W, meta: &Metadata) -> Result<()> {
        format::write_tsv_header(w, meta)?;
        writeln!(w, "labels_learned\titems\tfraction")?;
        let total = self.perspectives.total();
        for (&k, &n) in &self.perspectives.buckets {
            let frac = if total == 0 { 0.0 } else { n as f64 / total as f64 };
            writeln!(w, "{k}\t{n}\t{}", num(frac))?;
        }
        Ok(())
    }

    pub(super) fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "confidence vs agreement");
        for (mode, c) in &self.correlations {
            let _ = match c {
                Ok(c) => writeln!(
                    s,
                    "  {mode}\tr = {:.3}\tp = {:.2e} {}\t(n = {})",
                    c.r,
                    c.p_value,
                    significance_band(c.p_value),
                    c.n_pairs
                ),
                Err(why) => writeln!(s, "  {mode}\tundefined: {why}"),
            };
        }
        let cmp = |s: &mut String, title: &str, c: &GroupComparison| {
            let med = |g: &ConfidenceGroup| g.median().map_or("NA".to_owned(), |m| format!("{m:.3}"));
            let _ = writeln!(
                s,
                "{title}\n  agree\tmedian {}\t(n = {})\n  disagree\tmedian {}\t(n = {})",
                med(&c.agree),
                c.agree.len(),
                med(&c.disagree),
                c.disagree.len()
            );
            let _ = match (&c.test, &c.note) {
                (Some(t), _) => writeln!(s, "  Mann-Whitney p = {:.2e} {}", t.p_value, significance_band(t.p_value)),
                (None, Some(n)) => writeln!(s, "  {n}"),
                (None, None) => Ok(()),
            };
        };
        cmp(&mut s, "Multi-GT confidence by majority agreement", &self.minority);
        cmp(
            &mut s,
            &format!(
                "same, items with Single-GT confidence < {} ({} items)",
                self.reversal.t_low, self.reversal.subset_items
            ),
            &self.reversal.comparison,
        );
        let _ = writeln!(
            s,
            "labels learned above {} on disagreement items",
            self.perspectives.threshold
        );
        for (k, n) in &self.perspectives.buckets {
            let _ = writeln!(s, "  {k}\t{n}");
        }
        s
    }
}

pub(super) fn write_flags<W: Write>(w: &mut W, entries: &[FlagEntry], meta: &Metadata) -> Result<()> {
    format::write_tsv_header(w, meta)?;
    writeln!(w, "item_id\tannotator_id\tmajority_label\tminority_label\tsingle_conf\tmulti_conf\ttext")?;
    for e in entries {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            format::tsv_cell(&e.item_id),
            format::tsv_cell(&e.annotator_id),
            format::tsv_cell(&e.majority_label),
            format::tsv_cell(&e.minority_label),
            num(e.single_conf),
            num(e.multi_conf),
            format::tsv_cell(&e.text)
        )?;
    }
    Ok(())
}

pub(super) fn write_flag_listing<W: Write>(w: &mut W, report: &FlagReport, meta: &Metadata) -> Result<()> {
    writeln!(w, "# {}", meta.to_json())?;
    let t = &report.thresholds;
    let sections = [
        (
            format!(
                "Suspect majority labels: Single-GT confidence < {}, minority Multi-GT confidence > {}",
                t.t_low, t.t_high
            ),
            &report.suspect_majority,
        ),
        (
            format!(
                "Suspect minority annotations: Single-GT confidence > {}, minority Multi-GT confidence < {}",
                t.t_low, t.t_min
            ),
            &report.suspect_minority,
        ),
    ];
    for (title, entries) in sections {
        writeln!(w, "\n{title}\n{} entries", entries.len())?;
        for e in entries.iter() {
            writeln!(
                w,
                "\n[{}] annotator {}\n  text:     {}\n  majority: {}  (Single-GT {:.3})\n  minority: {}  (Multi-GT {:.3})",
                e.item_id,
                e.annotator_id,
                e.text.replace('\n', " "),
                e.majority_label,
                e.single_conf,
                e.minority_label,
                e.multi_conf
            )?;
        }
    }
    Ok(())
}

//! C ABI over the annocart library.
//!
//! Objects cross the boundary as opaque handles created by `*_parse`,
//! `*_build` or `annocart_train` and released by the matching `*_free`.
//! Every fallible function returns an [`AnnocartStatus`]; on failure the
//! message is available from [`annocart_last_error`] on the same thread.
//! Strings returned by the library are owned by the caller and must be
//! released with [`annocart_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use annocart::analysis::{self, AnalysisOptions};
use annocart::cartography::{build_map, DataMap};
use annocart::corpus::{aggregate, parse_corpus, AnnotatedCorpus};
use annocart::featurizer::FeatureHasher;
use annocart::models::{self, DynamicsLog, Mode, TrainConfig};
use annocart::stats::{self, TestMethod};
use annocart::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnocartStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    Config = 5,
    Training = 6,
    Statistics = 7,
    Io = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnocartMode {
    Single = 0,
    Multi = 1,
}

impl From<AnnocartMode> for Mode {
    fn from(m: AnnocartMode) -> Self {
        match m {
            AnnocartMode::Single => Mode::Single,
            AnnocartMode::Multi => Mode::Multi,
        }
    }
}

/// Training hyperparameters; start from [`annocart_train_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AnnocartTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub annotator_dim: usize,
    pub l2_penalty: f64,
    pub dim: usize,
    pub ngram_order: usize,
}

/// One data-map point; `gold` indexes the label vocabulary of its dynamics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AnnocartPoint {
    pub confidence: f64,
    pub variability: f64,
    pub correctness: f64,
    pub gold: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AnnocartTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    /// True when the p-value comes from exact enumeration.
    pub exact: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AnnocartSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AnnocartCorrelation {
    pub n_pairs: usize,
    pub r: f64,
    pub p_value: f64,
}

/// Opaque validated corpus.
pub struct AnnocartCorpus(AnnotatedCorpus);

/// Opaque per-epoch training dynamics.
pub struct AnnocartDynamics(DynamicsLog);

/// Opaque data map.
pub struct AnnocartDataMap(DataMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AnnocartStatus {
    match e {
        Error::Parse { .. } | Error::DuplicatePair { .. } | Error::EmptyCorpus => AnnocartStatus::Parse,
        Error::Config(_) => AnnocartStatus::Config,
        Error::Divergence { .. } => AnnocartStatus::Training,
        Error::EmptySeries
        | Error::LengthMismatch(..)
        | Error::UndefinedCorrelation(_)
        | Error::SizeLimit { .. } => AnnocartStatus::Statistics,
        Error::Io(_) => AnnocartStatus::Io,
        _ => AnnocartStatus::InvalidInput,
    }
}

struct Failure(AnnocartStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AnnocartStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> AnnocartStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AnnocartStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".to_owned());
            AnnocartStatus::Panic
        }
    }
}

unsafe fn as_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(AnnocartStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn as_slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(AnnocartStatus::InvalidInput, "string contains a NUL byte".to_owned()))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or NULL if the last call
/// succeeded. Release with [`annocart_string_free`].
#[no_mangle]
pub extern "C" fn annocart_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().clone().map_or(ptr::null_mut(), CString::into_raw))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn annocart_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn annocart_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ------------------------------------------------------------------ corpus

/// Parse and validate a corpus in the JSON-lines ingestion format.
///
/// # Safety
/// `jsonl` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn annocart_corpus_parse(jsonl: *const c_char, out: *mut *mut AnnocartCorpus) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        *out = ptr::null_mut();
        let text = as_str(jsonl, "jsonl")?;
        *out = boxed(AnnocartCorpus(parse_corpus(text.as_bytes())?));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be NULL or a handle from [`annocart_corpus_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn annocart_corpus_free(corpus: *mut AnnocartCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Item, annotator, annotation and label counts. Any output may be NULL.
///
/// # Safety
/// `corpus` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_corpus_counts(
    corpus: *const AnnocartCorpus,
    items: *mut usize,
    annotators: *mut usize,
    annotations: *mut usize,
    labels: *mut usize,
) -> AnnocartStatus {
    guard(|| {
        let c = &as_ref(corpus, "corpus")?.0;
        for (p, v) in [
            (items, c.items().len()),
            (annotators, c.annotators().len()),
            (annotations, c.annotations().len()),
            (labels, c.n_labels()),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Name of label `index`. Release with [`annocart_string_free`].
///
/// # Safety
/// `corpus` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_corpus_label(
    corpus: *const AnnocartCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        let labels = as_ref(corpus, "corpus")?.0.labels();
        let name = labels
            .get(index)
            .ok_or_else(|| Failure(AnnocartStatus::OutOfRange, format!("label index {index} out of range")))?;
        *out = to_c_string(name.clone())?;
        Ok(())
    })
}

// ---------------------------------------------------------------- training

#[no_mangle]
pub extern "C" fn annocart_train_config_default() -> AnnocartTrainConfig {
    let c = TrainConfig::default();
    AnnocartTrainConfig {
        epochs: c.epochs,
        learning_rate: c.learning_rate,
        batch_size: c.batch_size,
        seed: c.seed,
        annotator_dim: c.annotator_dim,
        l2_penalty: c.l2_penalty,
        dim: c.hasher.dim,
        ngram_order: c.hasher.ngram_order,
    }
}

/// Train on the whole corpus and return the recorded dynamics.
/// `config` may be NULL for defaults.
///
/// # Safety
/// `corpus` must be a live handle, `config` NULL or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_train(
    corpus: *const AnnocartCorpus,
    mode: AnnocartMode,
    config: *const AnnocartTrainConfig,
    out: *mut *mut AnnocartDynamics,
) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        *out = ptr::null_mut();
        let corpus = &as_ref(corpus, "corpus")?.0;
        let c = config.as_ref().copied().unwrap_or_else(|| annocart_train_config_default());
        let config = TrainConfig {
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            seed: c.seed,
            annotator_dim: c.annotator_dim,
            l2_penalty: c.l2_penalty,
            hasher: FeatureHasher::new(c.dim, c.ngram_order)?,
        };
        let outcome = models::train(corpus, &aggregate(corpus), mode.into(), &config)?;
        *out = boxed(AnnocartDynamics(outcome.dynamics));
        Ok(())
    })
}

/// Parse a dynamics file in the JSON-lines format written by `annocart train`.
///
/// # Safety
/// `jsonl` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_dynamics_parse(
    jsonl: *const c_char,
    out: *mut *mut AnnocartDynamics,
) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        *out = ptr::null_mut();
        let text = as_str(jsonl, "jsonl")?;
        *out = boxed(AnnocartDynamics(DynamicsLog::read_jsonl(text.as_bytes(), None)?));
        Ok(())
    })
}

/// Serialize dynamics as JSON lines, without a metadata header.
///
/// # Safety
/// `dynamics` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_dynamics_to_jsonl(
    dynamics: *const AnnocartDynamics,
    out: *mut *mut c_char,
) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        let mut buf = Vec::new();
        as_ref(dynamics, "dynamics")?.0.write_jsonl(&mut buf, None)?;
        *out = to_c_string(String::from_utf8(buf).expect("serializer emits UTF-8"))?;
        Ok(())
    })
}

/// # Safety
/// `dynamics` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn annocart_dynamics_free(dynamics: *mut AnnocartDynamics) {
    if !dynamics.is_null() {
        drop(Box::from_raw(dynamics));
    }
}

// ----------------------------------------------------------------- datamap

/// Reduce dynamics to confidence, variability and correctness per key.
///
/// # Safety
/// `dynamics` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_datamap_build(
    dynamics: *const AnnocartDynamics,
    out: *mut *mut AnnocartDataMap,
) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        *out = ptr::null_mut();
        *out = boxed(AnnocartDataMap(build_map(&as_ref(dynamics, "dynamics")?.0)?));
        Ok(())
    })
}

/// # Safety
/// `map` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn annocart_datamap_free(map: *mut AnnocartDataMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Number of points, or 0 for a NULL handle.
///
/// # Safety
/// `map` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn annocart_datamap_len(map: *const AnnocartDataMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.points.len())
}

/// Point `index` in key order, with optional copies of its item and
/// annotator ids. `item_id` and `annotator_id` may be NULL.
///
/// # Safety
/// `map` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_datamap_point(
    map: *const AnnocartDataMap,
    index: usize,
    point: *mut AnnocartPoint,
    item_id: *mut *mut c_char,
    annotator_id: *mut *mut c_char,
) -> AnnocartStatus {
    guard(|| {
        let point = as_out(point, "point")?;
        let m = &as_ref(map, "map")?.0;
        let p = m
            .points
            .get(index)
            .ok_or_else(|| Failure(AnnocartStatus::OutOfRange, format!("point index {index} out of range")))?;
        *point = AnnocartPoint {
            confidence: p.confidence,
            variability: p.variability,
            correctness: p.correctness,
            gold: p.gold.0,
        };
        if let Some(out) = item_id.as_mut() {
            *out = to_c_string(p.key.item_id.clone())?;
        }
        if let Some(out) = annotator_id.as_mut() {
            *out = to_c_string(p.key.annotator_id.clone().unwrap_or_default())?;
        }
        Ok(())
    })
}

/// Serialize the map in the TSV data-map format, without a metadata header.
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_datamap_to_tsv(map: *const AnnocartDataMap, out: *mut *mut c_char) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        let mut buf = Vec::new();
        as_ref(map, "map")?.0.write_tsv(&mut buf, None)?;
        *out = to_c_string(String::from_utf8(buf).expect("serializer emits UTF-8"))?;
        Ok(())
    })
}

/// Pearson correlation between data-map confidence and agreement level,
/// with a permutation p-value.
///
/// # Safety
/// `map` and `corpus` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_correlate_confidence_agreement(
    map: *const AnnocartDataMap,
    corpus: *const AnnocartCorpus,
    permutations: usize,
    seed: u64,
    exclude_ties: bool,
    out: *mut AnnocartCorrelation,
) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        let map = &as_ref(map, "map")?.0;
        let corpus = &as_ref(corpus, "corpus")?.0;
        let opts = AnalysisOptions {
            exclude_ties,
            permutations,
            seed,
        };
        let c = analysis::correlate_confidence_agreement(map, corpus, &aggregate(corpus), &opts)?;
        *out = AnnocartCorrelation {
            n_pairs: c.n_pairs,
            r: c.r,
            p_value: c.p_value,
        };
        Ok(())
    })
}

// ------------------------------------------------------------------- stats

/// # Safety
/// `xs` and `ys` must each point to `n` readable values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_pearson(xs: *const f64, ys: *const f64, n: usize, out: *mut f64) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        *out = stats::pearson(as_slice(xs, n, "xs")?, as_slice(ys, n, "ys")?)?;
        Ok(())
    })
}

/// Two-sided permutation p-value for the Pearson correlation.
///
/// # Safety
/// `xs` and `ys` must each point to `n` readable values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_pearson_pvalue(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    permutations: usize,
    seed: u64,
    out: *mut f64,
) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        *out = stats::pearson_pvalue(as_slice(xs, n, "xs")?, as_slice(ys, n, "ys")?, permutations, seed)?;
        Ok(())
    })
}

/// Two-sided Mann-Whitney U test; exact for small samples.
///
/// # Safety
/// `xs` must point to `n1` values, `ys` to `n2`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_mann_whitney(
    xs: *const f64,
    n1: usize,
    ys: *const f64,
    n2: usize,
    out: *mut AnnocartTestResult,
) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        let t = stats::mann_whitney_u(as_slice(xs, n1, "xs")?, as_slice(ys, n2, "ys")?)?;
        *out = AnnocartTestResult {
            statistic: t.statistic,
            p_value: t.p_value,
            n1: t.n1,
            n2: t.n2,
            exact: t.method == TestMethod::Exact,
        };
        Ok(())
    })
}

/// Five-number summary (type 7 quantiles) and mean.
///
/// # Safety
/// `values` must point to `n` readable values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn annocart_summarize(values: *const f64, n: usize, out: *mut AnnocartSummary) -> AnnocartStatus {
    guard(|| {
        let out = as_out(out, "out")?;
        let s = stats::summarize(as_slice(values, n, "values")?)?;
        *out = AnnocartSummary {
            n: s.n,
            min: s.min,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            max: s.max,
            mean: s.mean,
        };
        Ok(())
    })
}

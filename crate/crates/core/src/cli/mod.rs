//! Command-line front end: `validate`, `synth`, `train`, `analyze`, `flag`
//! and `plot`.
//!
//! Every subcommand accepts `--config FILE`, a file of `key = value` lines.
//! Command-line flags override file values, and the fully resolved settings
//! are echoed into the metadata header of every output file.

mod plot;
mod report;
mod settings;

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, AnalysisOptions, Thresholds};
use crate::cartography::{build_map, DataMap};
use crate::corpus::{aggregate, parse_corpus, split_corpus, AnnotatedCorpus};
use crate::error::Error;
use crate::featurizer::FeatureHasher;
use crate::format::Metadata;
use crate::models::{evaluate_f1, train, write_checkpoint, DynamicsLog, Mode, TrainConfig};
use crate::synthgen::{self, SynthConfig};

use settings::Settings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_TRAINING: i32 = 4;
pub const EXIT_ANALYSIS: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Stage {
    Validation,
    Training,
    Analysis,
}

fn fail(stage: Stage) -> impl Fn(Error) -> CliError {
    move |e| {
        let code = match (&e, stage) {
            (Error::Io(_), _) => EXIT_IO,
            (Error::Config(_), _) => EXIT_USAGE,
            (_, Stage::Validation) => EXIT_VALIDATION,
            (_, Stage::Training) => EXIT_TRAINING,
            (_, Stage::Analysis) => EXIT_ANALYSIS,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError {
            code: EXIT_IO,
            message: format!("cannot create {}: {e}", dir.display()),
        })?;
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> crate::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).map_err(fail(Stage::Analysis))?;
    std::io::Write::flush(&mut w).map_err(|e| fail(Stage::Analysis)(e.into()))
}

#[derive(Parser, Debug)]
#[command(name = "annocart", version, about = "Annotator-aware dataset cartography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a corpus file and print its statistics.
    Validate(ValidateArgs),
    /// Generate a synthetic corpus and its truth record.
    Synth(SynthArgs),
    /// Train a Single-GT or Multi-GT model and record training dynamics.
    Train(TrainArgs),
    /// Run the confidence/agreement analyses over two dynamics files.
    Analyze(AnalyzeArgs),
    /// List suspect majority and minority annotations.
    Flag(FlagArgs),
    /// Render a data map as an SVG scatter plot.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// File of `key = value` settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    corpus: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output corpus file.
    #[arg(long)]
    out: PathBuf,
    /// Output truth-record file.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Shape preset: mda-like or mhs-like.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n_items: Option<usize>,
    #[arg(long)]
    n_annotators: Option<usize>,
    #[arg(long)]
    n_labels: Option<usize>,
    #[arg(long)]
    annotations_per_item: Option<usize>,
    #[arg(long)]
    annotations_per_annotator: Option<usize>,
    /// Share of annotators following the second archetype.
    #[arg(long)]
    minority_share: Option<f64>,
    #[arg(long)]
    noise_rate: Option<f64>,
    #[arg(long)]
    topic_vocab: Option<usize>,
    #[arg(long)]
    shared_vocab: Option<usize>,
    #[arg(long)]
    tokens_per_item: Option<usize>,
    #[arg(long)]
    topic_overlap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TrainArgs {
    corpus: PathBuf,
    /// single or multi.
    #[arg(long)]
    mode: Option<String>,
    /// Directory for `<mode>_model.jsonl`, `<mode>_dynamics.jsonl` and `<mode>_datamap.tsv`.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    annotator_dim: Option<usize>,
    #[arg(long)]
    l2_penalty: Option<f64>,
    /// Hashed feature dimension.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    ngram_order: Option<usize>,
    /// Fraction of items used for training; 1 trains on everything.
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PairArgs {
    /// Corpus the dynamics were recorded on.
    #[arg(long)]
    corpus: PathBuf,
    /// Single-GT dynamics file.
    #[arg(long)]
    single: PathBuf,
    /// Multi-GT dynamics file.
    #[arg(long)]
    multi: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Drop items whose majority vote was a tie.
    #[arg(long)]
    exclude_ties: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single-GT confidence cut for the low-confidence subset.
    #[arg(long)]
    t_low: Option<f64>,
    /// Confidence above which a label counts as learned.
    #[arg(long)]
    t_perspective: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct FlagArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// `t_low,t_high,t_min`.
    #[arg(long)]
    thresholds: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Data map file written by `train`.
    datamap: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the plotted point table; defaults to the SVG path with `.tsv`.
    #[arg(long)]
    points: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

/// Parse arguments, run the subcommand and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Flag(a) => cmd_flag(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn load_corpus(path: &Path) -> Result<(AnnotatedCorpus, Vec<u8>), CliError> {
    let bytes = read_file(path)?;
    let corpus = parse_corpus(bytes.as_slice()).map_err(|e| {
        let mut err = fail(Stage::Validation)(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })?;
    Ok((corpus, bytes))
}

fn cmd_validate(a: ValidateArgs) -> Result<(), CliError> {
    Settings::load(a.common.config.as_deref(), &[])?.finish()?;
    let (corpus, _) = load_corpus(&a.corpus)?;
    println!("{}", corpus.stats());
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), CliError> {
    let mut s = Settings::load(
        a.common.config.as_deref(),
        &[
            "preset",
            "n_items",
            "n_annotators",
            "n_labels",
            "annotations_per_item",
            "annotations_per_annotator",
            "minority_share",
            "noise_rate",
            "topic_vocab",
            "shared_vocab",
            "tokens_per_item",
            "topic_overlap",
            "seed",
        ],
    )?;
    let preset = s.get_opt::<String>("preset", a.preset)?;
    let mut config = match &preset {
        Some(name) => SynthConfig::preset(name).map_err(fail(Stage::Validation))?,
        None => SynthConfig::two_archetypes(0.35),
    };
    let minority = s.get_opt::<f64>("minority_share", a.minority_share)?;
    let n_labels = s.get("n_labels", a.n_labels, config.n_labels)?;
    if minority.is_some() || n_labels != config.n_labels {
        let share = minority.unwrap_or_else(|| config.archetypes.get(1).map_or(0.0, |x| x.share));
        let shaped = SynthConfig::two_archetypes_with_labels(n_labels, share);
        config.n_labels = shaped.n_labels;
        config.n_topics = shaped.n_topics;
        config.archetypes = shaped.archetypes;
    }
    config.n_items = s.get("n_items", a.n_items, config.n_items)?;
    config.n_annotators = s.get("n_annotators", a.n_annotators, config.n_annotators)?;
    if let Some(m) = s.get_opt::<usize>("annotations_per_item", a.annotations_per_item)? {
        config.annotations_per_item = synthgen::AnnotationCount::Fixed(m);
    }
    config.annotations_per_annotator =
        s.get_opt("annotations_per_annotator", a.annotations_per_annotator)?.or(config.annotations_per_annotator);
    config.noise_rate = s.get("noise_rate", a.noise_rate, config.noise_rate)?;
    config.topic_vocab = s.get("topic_vocab", a.topic_vocab, config.topic_vocab)?;
    config.shared_vocab = s.get("shared_vocab", a.shared_vocab, config.shared_vocab)?;
    config.tokens_per_item = s.get("tokens_per_item", a.tokens_per_item, config.tokens_per_item)?;
    config.topic_overlap = s.get("topic_overlap", a.topic_overlap, config.topic_overlap)?;
    config.seed = s.get("seed", a.seed, config.seed)?;
    let resolved = s.finish()?;

    let (corpus, truth) = synthgen::generate(&config).map_err(fail(Stage::Validation))?;
    let meta = Metadata::new("synth").with_config(resolved);
    write_with(&a.out, |w| corpus.write_jsonl(w, Some(&meta)))?;
    if let Some(path) = &a.truth {
        write_with(path, |w| truth.write_jsonl(w, Some(&meta)))?;
    }
    println!("{}", corpus.stats());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let mut s = Settings::load(
        a.common.config.as_deref(),
        &[
            "mode",
            "epochs",
            "learning_rate",
            "batch_size",
            "seed",
            "annotator_dim",
            "l2_penalty",
            "dim",
            "ngram_order",
            "train_fraction",
            "split_seed",
        ],
    )?;
    let d = TrainConfig::default();
    let mode: Mode = s
        .get_opt::<String>("mode", a.mode)?
        .ok_or_else(|| CliError::usage("--mode single|multi is required"))?
        .parse()
        .map_err(fail(Stage::Training))?;
    let dim = s.get("dim", a.dim, d.hasher.dim)?;
    let ngram_order = s.get("ngram_order", a.ngram_order, d.hasher.ngram_order)?;
    let config = TrainConfig {
        epochs: s.get("epochs", a.epochs, d.epochs)?,
        learning_rate: s.get("learning_rate", a.learning_rate, d.learning_rate)?,
        batch_size: s.get("batch_size", a.batch_size, d.batch_size)?,
        seed: s.get("seed", a.seed, d.seed)?,
        annotator_dim: s.get("annotator_dim", a.annotator_dim, d.annotator_dim)?,
        l2_penalty: s.get("l2_penalty", a.l2_penalty, d.l2_penalty)?,
        hasher: FeatureHasher::new(dim, ngram_order).map_err(fail(Stage::Training))?,
    };
    let train_fraction = s.get("train_fraction", a.train_fraction, 0.8)?;
    let split_seed = s.get("split_seed", a.split_seed, 0u64)?;
    s.set("mode", mode.to_string());
    let resolved = s.finish()?;
    config.validate().map_err(fail(Stage::Training))?;
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(CliError::usage(format!("train_fraction must lie in (0, 1], got {train_fraction}")));
    }

    let (corpus, bytes) = load_corpus(&a.corpus)?;
    let (train_set, test_set) = if train_fraction < 1.0 {
        let split = split_corpus(&corpus, train_fraction, split_seed).map_err(fail(Stage::Validation))?;
        (split.train, Some(split.test))
    } else {
        (corpus, None)
    };
    let view = aggregate(&train_set);
    let outcome = train(&train_set, &view, mode, &config).map_err(fail(Stage::Training))?;
    let map = build_map(&outcome.dynamics).map_err(fail(Stage::Training))?;

    let meta = Metadata::new("train").with_config(resolved).with_input("corpus", &bytes);
    let out = |name: &str| a.out_dir.join(format!("{mode}_{name}"));
    write_with(&out("model.jsonl"), |w| write_checkpoint(&outcome.model, w, Some(&meta)))?;
    write_with(&out("dynamics.jsonl"), |w| outcome.dynamics.write_jsonl(w, Some(&meta)))?;
    write_with(&out("datamap.tsv"), |w| map.write_tsv(w, Some(&meta)))?;

    let losses: Vec<String> = outcome.epoch_losses.iter().map(|l| format!("{l:.4}")).collect();
    println!("mode\t{mode}");
    println!("epoch losses\t{}", losses.join(" "));
    match test_set {
        Some(test) => {
            let f1 = evaluate_f1(&outcome.model, &test, &aggregate(&test), mode).map_err(fail(Stage::Training))?;
            println!("held-out weighted F1\t{f1:.4}\t({} items)", test.items().len());
        }
        None => {
            let f1 = evaluate_f1(&outcome.model, &train_set, &view, mode).map_err(fail(Stage::Training))?;
            println!("training weighted F1\t{f1:.4}\t(no held-out split)");
        }
    }
    Ok(())
}

struct PairInputs {
    corpus: AnnotatedCorpus,
    single: DataMap,
    multi: DataMap,
    meta_inputs: Vec<(&'static str, Vec<u8>)>,
}

fn load_pair(p: &PairArgs) -> Result<PairInputs, CliError> {
    let (corpus, corpus_bytes) = load_corpus(&p.corpus)?;
    let mut meta_inputs = vec![("corpus", corpus_bytes)];
    let mut load = |path: &Path, role: &'static str, mode: Mode| -> Result<DataMap, CliError> {
        let bytes = read_file(path)?;
        let log = DynamicsLog::read_jsonl(bytes.as_slice(), Some(corpus.labels())).map_err(|e| {
            let mut err = fail(Stage::Validation)(e);
            err.message = format!("{}: {}", path.display(), err.message);
            err
        })?;
        if !log.is_empty() && log.mode() != mode {
            return Err(CliError {
                code: EXIT_VALIDATION,
                message: format!("{} holds {} dynamics, expected {mode}", path.display(), log.mode()),
            });
        }
        meta_inputs.push((role, bytes));
        build_map(&log).map_err(fail(Stage::Analysis))
    };
    let single = load(&p.single, "single_dynamics", Mode::Single)?;
    let multi = load(&p.multi, "multi_dynamics", Mode::Multi)?;
    Ok(PairInputs {
        corpus,
        single,
        multi,
        meta_inputs,
    })
}

fn pair_metadata(command: &str, resolved: std::collections::BTreeMap<String, String>, inputs: &PairInputs) -> Metadata {
    inputs
        .meta_inputs
        .iter()
        .fold(Metadata::new(command).with_config(resolved), |m, (role, bytes)| m.with_input(*role, bytes))
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let mut s = Settings::load(
        a.common.config.as_deref(),
        &["permutations", "seed", "t_low", "t_perspective", "exclude_ties"],
    )?;
    let defaults = Thresholds::default();
    let opts = AnalysisOptions {
        exclude_ties: s.get_flag("exclude_ties", a.pair.exclude_ties)?,
        permutations: s.get("permutations", a.permutations, analysis::DEFAULT_PERMUTATIONS)?,
        seed: s.get("seed", a.seed, 0u64)?,
    };
    let t_low = s.get("t_low", a.t_low, defaults.t_low)?;
    let t_perspective = s.get("t_perspective", a.t_perspective, defaults.t_perspective)?;
    let resolved = s.finish()?;
    for (name, t) in [("t_low", t_low), ("t_perspective", t_perspective)] {
        if !(0.0..=1.0).contains(&t) {
            return Err(CliError::usage(format!("{name} must lie in [0, 1], got {t}")));
        }
    }

    let inputs = load_pair(&a.pair)?;
    let meta = pair_metadata("analyze", resolved, &inputs);
    let report = report::AnalysisReport::compute(&inputs.single, &inputs.multi, &inputs.corpus, &opts, t_low, t_perspective)
        .map_err(fail(Stage::Analysis))?;
    let dir = &a.pair.out_dir;
    write_with(&dir.join("correlation.tsv"), |w| report.write_correlations(w, &meta))?;
    write_with(&dir.join("agreement_groups.tsv"), |w| report.write_agreement_groups(w, &meta))?;
    write_with(&dir.join("minority_groups.tsv"), |w| report.write_minority_groups(w, &meta))?;
    write_with(&dir.join("perspectives.tsv"), |w| report.write_perspectives(w, &meta))?;
    print!("{}", report.summary());
    Ok(())
}

fn parse_thresholds(s: &str) -> Result<Thresholds, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
    match nums.as_deref() {
        Some(&[t_low, t_high, t_min]) => {
            let t = Thresholds {
                t_low,
                t_high,
                t_min,
                ..Thresholds::default()
            };
            t.validate().map_err(|e| CliError::usage(e.to_string()))?;
            Ok(t)
        }
        _ => Err(CliError::usage(format!(
            "--thresholds expects t_low,t_high,t_min, got `{s}`"
        ))),
    }
}

fn cmd_flag(a: FlagArgs) -> Result<(), CliError> {
    let mut s = Settings::load(a.common.config.as_deref(), &["thresholds", "exclude_ties"])?;
    let d = Thresholds::default();
    let default = format!("{},{},{}", d.t_low, d.t_high, d.t_min);
    let raw = s.get("thresholds", a.thresholds, default)?;
    let opts = AnalysisOptions {
        exclude_ties: s.get_flag("exclude_ties", a.pair.exclude_ties)?,
        ..AnalysisOptions::default()
    };
    let resolved = s.finish()?;
    let thresholds = parse_thresholds(&raw)?;

    let inputs = load_pair(&a.pair)?;
    let meta = pair_metadata("flag", resolved, &inputs);
    let view = aggregate(&inputs.corpus);
    let flags = analysis::flag_report(&inputs.single, &inputs.multi, &inputs.corpus, &view, &thresholds, &opts)
        .map_err(fail(Stage::Analysis))?;
    let dir = &a.pair.out_dir;
    write_with(&dir.join("suspect_majority.tsv"), |w| report::write_flags(w, &flags.suspect_majority, &meta))?;
    write_with(&dir.join("suspect_minority.tsv"), |w| report::write_flags(w, &flags.suspect_minority, &meta))?;
    write_with(&dir.join("flags.txt"), |w| report::write_flag_listing(w, &flags, &meta))?;
    println!("suspect majority\t{}", flags.suspect_majority.len());
    println!("suspect minority\t{}", flags.suspect_minority.len());
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<(), CliError> {
    let resolved = Settings::load(a.common.config.as_deref(), &[])?.finish()?;
    let bytes = read_file(&a.datamap)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError {
        code: EXIT_VALIDATION,
        message: format!("{} is not UTF-8", a.datamap.display()),
    })?;
    let map = DataMap::read_tsv(&text).map_err(fail(Stage::Validation))?;
    if map.points.is_empty() {
        return Err(CliError {
            code: EXIT_VALIDATION,
            message: format!("{} holds no data-map points", a.datamap.display()),
        });
    }
    let meta = Metadata::new("plot").with_config(resolved).with_input("datamap", &bytes);
    let points_path = a.points.clone().unwrap_or_else(|| a.out.with_extension("tsv"));
    let scatter = plot::Scatter::new(&map);
    write_with(&a.out, |w| scatter.write_svg(w, &meta))?;
    write_with(&points_path, |w| scatter.write_points(w, &meta))?;
    println!("points\t{}", map.points.len());
    match scatter.epochs() {
        Some(e) => println!("epochs\t{e}"),
        None => println!("epochs\tunknown"),
    }
    Ok(())
}

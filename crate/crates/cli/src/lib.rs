//! The `gridloc` command line: corpus synthesis, frame preparation, training,
//! architecture search, classification and evaluation.
//!
//! Data goes to files or standard output; logs go to standard error.

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gridloc_core::datasetgen::{
    evaluate, load_layout, make_corpus, reference_profile, CorpusItem, CorpusManifest, Source, Split, MANIFEST_FILE,
};
use gridloc_core::decision::{
    classify_recording, parse_verdicts_csv, prepare_frames, write_verdicts_csv, ClassifyOptions, ModelSet, VerdictRecord,
};
use gridloc_core::model::{
    nas_search, save_model, train, DataGroupId, LabeledFrames, RawNetConfig, SearchSpace, TrainOptions,
};
use gridloc_core::signal::{decode_wav, read_frame_archive, write_frame_archive, WORKING_RATE};
use gridloc_core::spectral::detect_nominal;
use gridloc_core::{FrameBatch, FrameSpec, Grid, RecType};

pub use config::{RunConfig, UsageError};

#[derive(Debug, Parser)]
#[command(name = "gridloc", version, about = "Grid-of-origin classification from ENF hum")]
pub struct Cli {
    /// Run configuration file (`key = value` lines); flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the resolved run configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with a manifest.
    Synth(SynthArgs),
    /// Frame a corpus into per-group archives.
    Prepare(PrepareArgs),
    /// Train one data group's classifier.
    Train(TrainArgs),
    /// Random architecture search for one data group.
    Tune(TuneArgs),
    /// Classify recordings and write verdicts as CSV.
    Classify(ClassifyArgs),
    /// Score verdicts against a corpus manifest.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TypeChoice {
    Audio,
    Power,
    Both,
}

impl TypeChoice {
    fn types(self) -> Vec<RecType> {
        match self {
            TypeChoice::Audio => vec![RecType::Audio],
            TypeChoice::Power => vec![RecType::Power],
            TypeChoice::Both => vec![RecType::Audio, RecType::Power],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Number of grids, taken from A, C, I, B, D, E, F, G, H in that order.
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u8).range(1..=9))]
    pub grids: u8,
    /// Recordings per grid and recording type.
    #[arg(long, default_value_t = 20)]
    pub per_grid: usize,
    /// Share of each grid's recordings placed in the test split.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Share placed in the practice (validation) split.
    #[arg(long, default_value_t = 0.0)]
    pub practice_fraction: f64,
    /// Hum-free noise recordings added to the test split, per recording type.
    #[arg(long, default_value_t = 0)]
    pub noise: usize,
    #[arg(long, default_value_t = 64.0)]
    pub duration: f64,
    #[arg(long, value_enum, default_value_t = TypeChoice::Audio)]
    pub rec_type: TypeChoice,
}

#[derive(Debug, Clone, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Frame the raw signal without the bandpass.
    #[arg(long)]
    pub no_filter: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: PathBuf,
    /// Data group, e.g. `audio60`.
    #[arg(long)]
    pub group: DataGroupId,
    /// Model directory; receives `<group>.egnw`, its config and a training log.
    #[arg(long)]
    pub out: PathBuf,
    /// Network configuration file, replacing the group default.
    #[arg(long, value_name = "FILE")]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Use the small network.
    #[arg(long)]
    pub reduced: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub group: DataGroupId,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of sampled configurations.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Search a scaled-down space around the small network.
    #[arg(long)]
    pub reduced: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// WAV files to classify.
    #[arg(conflicts_with = "corpus")]
    pub inputs: Vec<PathBuf>,
    /// Classify one split of a corpus directory instead.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Directory holding `<group>.egnw` checkpoints.
    #[arg(long)]
    pub models: PathBuf,
    /// Verdict CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Recording type for inputs that carry none, or to override it.
    #[arg(long)]
    pub rec_type: Option<RecType>,
    #[arg(long)]
    pub no_filter: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub verdicts: PathBuf,
    /// Corpus whose `manifest.csv` (or layout) holds the ground truth.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Also write `confusion.csv` and `accuracy.csv` here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Flags that override run configuration keys.
fn overrides(cli: &Cli) -> Vec<(&'static str, String)> {
    let mut o = Vec::new();
    if let Some(s) = cli.seed {
        o.push(("seed", s.to_string()));
    }
    let mut opt = |k: &'static str, v: Option<String>| {
        if let Some(v) = v {
            o.push((k, v));
        }
    };
    match &cli.command {
        Some(Command::Prepare(a)) => opt("filter", a.no_filter.then(|| "false".into())),
        Some(Command::Train(a)) => {
            opt("epochs", a.epochs.map(|v| v.to_string()));
            opt("batch_size", a.batch_size.map(|v| v.to_string()));
            opt("patience", a.patience.map(|v| v.to_string()));
            opt("reduced", a.reduced.then(|| "true".into()));
        }
        Some(Command::Tune(a)) => {
            opt("budget", a.budget.map(|v| v.to_string()));
            opt("max_epochs", a.max_epochs.map(|v| v.to_string()));
            opt("batch_size", a.batch_size.map(|v| v.to_string()));
            opt("reduced", a.reduced.then(|| "true".into()));
        }
        Some(Command::Classify(a)) => {
            opt("alpha1", a.alpha1.map(|v| v.to_string()));
            opt("alpha2", a.alpha2.map(|v| v.to_string()));
            opt("filter", a.no_filter.then(|| "false".into()));
        }
        _ => {}
    }
    o
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, UsageError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for (k, v) in overrides(cli) {
        cfg.set(k, &v).map_err(UsageError::Invalid)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    if cli.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    match cli.command {
        Some(Command::Synth(a)) => cmd_synth(&a, &cfg).map(drop),
        Some(Command::Prepare(a)) => cmd_prepare(&a, &cfg).map(drop),
        Some(Command::Train(a)) => cmd_train(&a, &cfg),
        Some(Command::Tune(a)) => cmd_tune(&a, &cfg),
        Some(Command::Classify(a)) => {
            let verdicts = cmd_classify(&a, &cfg)?;
            let csv = write_verdicts_csv(&verdicts);
            match &a.out {
                Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display())),
                None => std::io::stdout().write_all(csv.as_bytes()).context("writing verdicts"),
            }
        }
        Some(Command::Evaluate(a)) => {
            let report = cmd_evaluate(&a)?;
            std::io::stdout().write_all(report.as_bytes()).context("writing report")
        }
        None => Err(UsageError::Invalid("no subcommand given (see --help)".into()).into()),
    }
}

/// Grid order used by `synth --grids k`: the 60 Hz grids first.
pub const SYNTH_GRID_ORDER: [Grid; 9] =
    [Grid::A, Grid::C, Grid::I, Grid::B, Grid::D, Grid::E, Grid::F, Grid::G, Grid::H];

fn split_counts(n: usize, test_fraction: f64, practice_fraction: f64) -> Result<[(Split, usize); 3]> {
    let ok = |f: f64| (0.0..=1.0).contains(&f);
    if !ok(test_fraction) || !ok(practice_fraction) || test_fraction + practice_fraction > 1.0 {
        return Err(UsageError::Invalid("split fractions must lie in [0, 1] and sum to at most 1".into()).into());
    }
    let test = (n as f64 * test_fraction).round() as usize;
    let practice = ((n as f64 * practice_fraction).round() as usize).min(n - test);
    Ok([(Split::Train, n - test - practice), (Split::Practice, practice), (Split::Test, test)])
}

pub fn cmd_synth(a: &SynthArgs, cfg: &RunConfig) -> Result<CorpusManifest> {
    let mut items = Vec::new();
    for rec_type in a.rec_type.types() {
        for &grid in &SYNTH_GRID_ORDER[..a.grids as usize] {
            let base = reference_profile(grid).expect("every grid letter has a profile");
            let profile = if rec_type == RecType::Power { base.power() } else { base.audio() };
            for (split, count) in split_counts(a.per_grid, a.test_fraction, a.practice_fraction)? {
                if count > 0 {
                    items.push(CorpusItem {
                        split,
                        rec_type,
                        grid,
                        source: Source::Enf(profile.clone()),
                        count,
                        duration_s: a.duration,
                    });
                }
            }
        }
        if a.noise > 0 {
            items.push(CorpusItem {
                split: Split::Test,
                rec_type,
                grid: Grid::N,
                source: Source::Noise,
                count: a.noise,
                duration_s: a.duration,
            });
        }
    }
    log::info!("seed {}: the corpus is a pure function of the seed and these arguments", cfg.seed);
    let manifest = make_corpus(&items, &a.out, cfg.seed)?;
    log::info!("wrote {} recordings to {}", manifest.len(), a.out.display());
    Ok(manifest)
}

/// Archive of one split, group and grid inside a prepared directory.
pub fn archive_path(root: &Path, split: Split, group: DataGroupId, grid: Grid) -> PathBuf {
    root.join(split.as_str()).join(group.name()).join(format!("{grid}.egnf"))
}

/// Records the preparation settings next to the archives.
pub const PREP_FILE: &str = "prepare.cfg";
/// Frame counts by split, group and grid.
pub const SUMMARY_FILE: &str = "summary.csv";

/// Row of the preparation summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrepCount {
    pub recordings: usize,
    pub frames: usize,
}

pub type PrepSummary = BTreeMap<(Split, DataGroupId, Grid), PrepCount>;

fn summary_csv(summary: &PrepSummary, filter: bool) -> String {
    let mut s = String::from("split,group,rec_type,nominal,grid,recordings,frames,filter\n");
    for ((split, group, grid), c) in summary {
        s.push_str(&format!(
            "{split},{group},{},{},{grid},{},{},{filter}\n",
            group.rec_type, group.nominal, c.recordings, c.frames
        ));
    }
    s
}

/// Frames every recording into archives keyed by split, data group and grid.
///
/// Train and practice recordings are routed by their known nominal; test
/// recordings by the detected one. Train and practice recordings of N have no
/// class and are skipped.
pub fn cmd_prepare(a: &PrepareArgs, cfg: &RunConfig) -> Result<PrepSummary> {
    let manifest = load_layout(&a.corpus)?;
    let spec = FrameSpec::default();
    let mut summary: PrepSummary = BTreeMap::new();
    let mut batches: BTreeMap<(Split, DataGroupId, Grid), FrameBatch> = BTreeMap::new();
    let splits: Vec<Split> = Split::ALL.into_iter().filter(|s| manifest.in_split(*s).next().is_some()).collect();
    for &split in &splits {
        for group in DataGroupId::ALL {
            for &grid in group.classes() {
                summary.insert((split, group, grid), PrepCount { recordings: 0, frames: 0 });
            }
        }
    }

    for entry in &manifest.entries {
        let split = entry.split().expect("layout paths start with a split");
        let path = a.corpus.join(&entry.path);
        let rec = decode_wav(&path)?.with_source(entry.path.clone()).with_type(entry.rec_type);
        let working = rec.at_rate(WORKING_RATE);
        if working.len() < spec.frame_len {
            log::warn!("{}: {:.1} s is too short for one frame, skipped", entry.path, working.duration_secs());
            continue;
        }
        let nominal = match entry.nominal {
            Some(n) => n,
            None if split != Split::Test => {
                log::warn!("{}: no class for grid {} outside the test split, skipped", entry.path, entry.grid);
                continue;
            }
            None => detect_nominal(&working).with_context(|| entry.path.clone())?.nominal,
        };
        let group = DataGroupId::new(entry.rec_type, nominal)?;
        let batch = prepare_frames(&working, nominal, cfg.filter, &spec).with_context(|| entry.path.clone())?;
        let key = (split, group, entry.grid);
        let count = summary.entry(key).or_insert(PrepCount { recordings: 0, frames: 0 });
        count.recordings += 1;
        count.frames += batch.num_frames();
        batches.entry(key).or_insert_with(|| FrameBatch::empty(spec.frame_len, spec.hop())).frames.extend(&batch.frames);
    }

    for ((split, group, grid), batch) in &batches {
        let path = archive_path(&a.out, *split, *group, *grid);
        fs::create_dir_all(path.parent().expect("archive paths have a parent"))
            .with_context(|| format!("creating {}", path.display()))?;
        write_frame_archive(&path, batch)?;
    }
    for &split in &splits {
        for group in DataGroupId::ALL {
            if !batches.keys().any(|(s, g, _)| *s == split && *g == group) {
                log::info!("{split}/{group}: no recordings, archive left empty");
            }
        }
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    fs::write(a.out.join(SUMMARY_FILE), summary_csv(&summary, cfg.filter))?;
    fs::write(a.out.join(PREP_FILE), format!("filter = {}\nframe_len = {}\nhop = {}\n", cfg.filter, spec.frame_len, spec.hop()))?;
    Ok(summary)
}

/// Loads one split of a group's archives as labeled frames. Missing archives
/// count as empty.
pub fn load_group_frames(root: &Path, split: Split, group: DataGroupId) -> Result<LabeledFrames> {
    let mut data = LabeledFrames::new(FrameSpec::default().frame_len);
    for (label, &grid) in group.classes().iter().enumerate() {
        let path = archive_path(root, split, group, grid);
        if path.exists() {
            let batch = read_frame_archive(&path)?;
            if batch.frame_len != data.frame_len {
                bail!("{}: frames of {} samples, expected {}", path.display(), batch.frame_len, data.frame_len);
            }
            data.extend_batch(&batch, label);
        }
    }
    Ok(data)
}

/// Network config for a group: the `--model-config` file, else the run
/// configuration's reference for the group, else the group defaults.
fn base_config(group: DataGroupId, cfg: &RunConfig, file: Option<&Path>) -> Result<RawNetConfig> {
    if let Some(path) = file.or(cfg.model_configs.get(&group).map(PathBuf::as_path)) {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(RawNetConfig::from_text(&text).with_context(|| path.display().to_string())?);
    }
    if cfg.reduced {
        let (lr, beta1, beta2) = group.default_optimizer();
        Ok(RawNetConfig { lr, beta1, beta2, ..RawNetConfig::reduced(group.num_classes()) })
    } else {
        Ok(group.default_config())
    }
}

fn copy_prep_file(data: &Path, out: &Path, group: DataGroupId) -> Result<()> {
    let src = data.join(PREP_FILE);
    if src.exists() {
        fs::copy(&src, out.join(format!("{group}.prep")))?;
    }
    Ok(())
}

pub fn cmd_train(a: &TrainArgs, cfg: &RunConfig) -> Result<()> {
    let group = a.group;
    let data = load_group_frames(&a.data, Split::Train, group)?;
    let val = load_group_frames(&a.data, Split::Practice, group)?;
    let val = (!val.is_empty()).then_some(val);
    let config = base_config(group, cfg, a.model_config.as_deref())?;
    let opts = TrainOptions { seed: cfg.seed, epochs: cfg.epochs, batch_size: cfg.batch_size, patience: cfg.patience };
    log::info!(
        "training {group} on {} frames{}",
        data.len(),
        val.as_ref().map(|v| format!(", validating on {}", v.len())).unwrap_or_default()
    );
    let (net, mut report) = train(group, &data, val.as_ref(), &config, &opts)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let ckpt = a.out.join(ModelSet::checkpoint_name(group));
    save_model(&net, &ckpt)?;
    report.checkpoint = Some(ckpt.clone());
    fs::write(a.out.join(format!("{group}.train.csv")), report.to_csv())?;
    copy_prep_file(&a.data, &a.out, group)?;
    if let Some(best) = report.best() {
        log::info!(
            "{group}: best epoch {} (train accuracy {:.3}), {:.1} s, saved {}",
            best.epoch,
            best.train_accuracy,
            report.wall_time_secs,
            ckpt.display()
        );
    }
    Ok(())
}

/// Every fifth frame of `data`, and the rest.
fn holdout(data: &LabeledFrames) -> (LabeledFrames, LabeledFrames) {
    let mut keep = LabeledFrames::new(data.frame_len);
    let mut held = LabeledFrames::new(data.frame_len);
    for i in 0..data.len() {
        let target = if i % 5 == 4 { &mut held } else { &mut keep };
        target.push(data.frame(i), data.labels[i]);
    }
    (keep, held)
}

pub fn cmd_tune(a: &TuneArgs, cfg: &RunConfig) -> Result<()> {
    let group = a.group;
    let mut data = load_group_frames(&a.data, Split::Train, group)?;
    let mut val = load_group_frames(&a.data, Split::Practice, group)?;
    if val.is_empty() {
        log::warn!("no practice split for {group}: holding out every fifth training frame");
        (data, val) = holdout(&data);
    }
    let base = base_config(group, cfg, None)?;
    let mut space = SearchSpace { max_epochs: cfg.max_epochs, ..SearchSpace::default() };
    if cfg.reduced {
        space.filters = (4, 16);
        space.gru_units = (16, 64);
        space.dense_units = (16, 128);
    }
    let opts = TrainOptions { seed: cfg.seed, epochs: cfg.max_epochs, batch_size: cfg.batch_size, patience: cfg.patience };
    let result = nas_search(group, &space, &base, cfg.budget, cfg.seed, &data, &val, &opts)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    fs::write(a.out.join(format!("{group}.trials.csv")), result.to_csv())?;
    fs::write(a.out.join(format!("{group}.best.cfg")), result.best.to_text())?;
    log::info!("{group}: best of {} trials is trial {}", result.trials.len(), result.best_trial);
    Ok(())
}

fn prep_filter(models: &Path, group: DataGroupId) -> Option<bool> {
    let text = fs::read_to_string(models.join(format!("{group}.prep"))).ok()?;
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == "filter")
        .and_then(|(_, v)| v.trim().parse().ok())
}

/// Verdicts sorted by source id.
pub fn cmd_classify(a: &ClassifyArgs, cfg: &RunConfig) -> Result<Vec<VerdictRecord>> {
    let models = ModelSet::load_dir(&a.models)?;
    if models.is_empty() {
        bail!("no checkpoints in {}", a.models.display());
    }
    for group in models.groups() {
        if let Some(trained) = prep_filter(&a.models, group) {
            if trained != cfg.filter {
                log::warn!("{group} was trained with filter = {trained}, classifying with filter = {}", cfg.filter);
            }
        }
    }
    let opts = ClassifyOptions { thresholds: cfg.thresholds(), rec_type: a.rec_type, filter: cfg.filter, ..ClassifyOptions::default() };

    let mut jobs: Vec<(String, PathBuf, RecType)> = Vec::new();
    match &a.corpus {
        Some(root) => {
            for e in load_layout(root)?.in_split(a.split) {
                jobs.push((e.path.clone(), root.join(&e.path), e.rec_type));
            }
        }
        None => {
            if a.inputs.is_empty() {
                return Err(UsageError::Invalid("give WAV files or --corpus".into()).into());
            }
            for p in &a.inputs {
                jobs.push((p.display().to_string(), p.clone(), RecType::Unknown));
            }
        }
    }
    let mut out = Vec::with_capacity(jobs.len());
    for (source_id, path, rec_type) in jobs {
        let rec = decode_wav(&path)?.with_source(source_id.clone()).with_type(rec_type);
        let verdict = classify_recording(&rec, &models, &opts).with_context(|| source_id.clone())?;
        log::info!("{source_id}: {} ({})", verdict.final_grid, verdict.group);
        out.push(verdict.record());
    }
    out.sort_by(|x, y| x.source_id.cmp(&y.source_id));
    Ok(out)
}

fn load_truth(corpus: &Path) -> Result<CorpusManifest> {
    let path = corpus.join(MANIFEST_FILE);
    if path.exists() {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(CorpusManifest::from_csv(&text)?)
    } else {
        Ok(load_layout(corpus)?)
    }
}

/// Report: a threshold header line, the confusion matrix, then accuracy
/// overall and per recording type.
pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<String> {
    let text = fs::read_to_string(&a.verdicts).with_context(|| format!("reading {}", a.verdicts.display()))?;
    let verdicts = parse_verdicts_csv(&text).with_context(|| a.verdicts.display().to_string())?;
    let ev = evaluate(&verdicts, &load_truth(&a.corpus)?)?;
    let header = match verdicts.first().map(|v| v.thresholds) {
        Some(t) if verdicts.iter().all(|v| v.thresholds == t) => format!("# alpha1={} alpha2={}\n", t.alpha1, t.alpha2),
        Some(_) => "# alpha1=mixed alpha2=mixed\n".to_string(),
        None => "# no verdicts\n".to_string(),
    };
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("confusion.csv"), ev.confusion_csv())?;
        fs::write(dir.join("accuracy.csv"), ev.accuracy_csv())?;
    }
    Ok(format!("{header}{}\n{}", ev.confusion_csv(), ev.accuracy_csv()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_counts_round() {
        let c = split_counts(20, 0.2, 0.0).unwrap();
        assert_eq!(c.map(|x| x.1), [16, 0, 4]);
        let c = split_counts(10, 0.25, 0.25).unwrap();
        assert_eq!(c.map(|x| x.1), [4, 3, 3]);
        assert!(split_counts(10, 0.8, 0.5).is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        fs::write(&file, "alpha1 = 0.6\nalpha2 = 0.9\nseed = 4\n").unwrap();
        let cli = Cli::try_parse_from([
            "gridloc",
            "--config",
            file.to_str().unwrap(),
            "classify",
            "--models",
            "m",
            "--alpha2",
            "0.8",
            "x.wav",
        ])
        .unwrap();
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!((cfg.alpha1, cfg.alpha2, cfg.seed, cfg.epochs), (0.6, 0.8, 4, 100));
    }

    #[test]
    fn holdout_takes_every_fifth() {
        let mut d = LabeledFrames::new(2);
        for i in 0..10 {
            d.push(&[i as f32, 0.0], i % 2);
        }
        let (keep, held) = holdout(&d);
        assert_eq!((keep.len(), held.len()), (8, 2));
        assert_eq!(held.frame(1), &[9.0, 0.0]);
    }

    #[test]
    fn base_config_carries_group_optimizer() {
        let group: DataGroupId = "audio50".parse().unwrap();
        let reduced = RunConfig { reduced: true, ..RunConfig::default() };
        for cfg in [RunConfig::default(), reduced] {
            let c = base_config(group, &cfg, None).unwrap();
            assert_eq!((c.lr, c.beta1, c.beta2, c.num_classes), (6.5e-4, 0.96, 0.998, 6));
        }
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("net.cfg");
        let custom = RawNetConfig { lr: 1e-3, ..RawNetConfig::reduced(6) };
        fs::write(&file, custom.to_text()).unwrap();
        assert_eq!(base_config(group, &RunConfig::default(), Some(&file)).unwrap(), custom);
    }
}

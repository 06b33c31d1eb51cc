//! Command-line front end. Each subcommand resolves its settings (flags over
//! `--config` file over defaults), writes `resolved-config.json` next to its
//! outputs, and can be replayed from that file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierKind, Hyperparameters};
use crate::corpus::{self, Corpus, Schema};
use crate::eval::{self, SynthConfig};
use crate::features::{featurize_analyzed, Analyzer, FeatureSpace};
use crate::lexicon::{load_lexicon, Category, Lexicon};
use crate::pipeline::{self, ModelManifest, PipelineConfig};
use crate::resources;
use crate::weighting::WeightScope;

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_K: usize = 10;
pub const DEFAULT_OUT: &str = "ideation-out";
pub const RESOLVED_CONFIG: &str = "resolved-config.json";

#[derive(Debug, Parser)]
#[command(
    name = "ideation",
    version,
    about = "Suicidal-ideation post classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize a JSONL corpus into the canonical schema.
    Ingest(Settings),
    /// Write the feature space and per-post feature vectors.
    Featurize(Settings),
    /// Fit a model on a labeled corpus.
    Train(Settings),
    /// Score every post of a corpus with a trained model.
    Predict(Settings),
    /// Stratified k-fold cross-validation.
    CrossValidate(Settings),
    /// Cross-validated search over RBF-SVM C and gamma.
    GridSearch(Settings),
    /// Generate a synthetic labeled corpus.
    Synth(Settings),
}

impl Command {
    fn split(self) -> (&'static str, Settings) {
        match self {
            Command::Ingest(s) => ("ingest", s),
            Command::Featurize(s) => ("featurize", s),
            Command::Train(s) => ("train", s),
            Command::Predict(s) => ("predict", s),
            Command::CrossValidate(s) => ("cross-validate", s),
            Command::GridSearch(s) => ("grid-search", s),
            Command::Synth(s) => ("synth", s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

/// Every setting a subcommand can take. Unset fields fall back to the
/// `--config` file and then to defaults; the resolved file has all of them.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// JSON settings file; flags take precedence over it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Lexicon file for one category, as CATEGORY=PATH; repeatable.
    #[arg(long = "lexicon", value_name = "CATEGORY=PATH")]
    pub lexicons: Vec<String>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Source key for a canonical field, as CANONICAL=SOURCE; repeatable.
    #[arg(long = "field", value_name = "CANONICAL=SOURCE")]
    pub fields: Vec<String>,
    #[arg(long, value_parser = parse_kind)]
    #[serde(with = "kind_name", skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierKind>,
    /// Full classifier hyperparameters; settable from a config file only.
    #[arg(skip)]
    pub hyperparameters: Option<Hyperparameters>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub weighting: Option<Switch>,
    #[arg(long, value_parser = parse_scope)]
    pub weight_scope: Option<WeightScope>,
    /// Minority-to-majority ratio for oversampling; 0 disables it.
    #[arg(long)]
    pub oversample_ratio: Option<f64>,
    #[arg(long)]
    pub min_ngram_count: Option<usize>,
    /// C values for grid-search, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Vec<f64>,
    /// Gamma values for grid-search, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Vec<f64>,
    #[arg(long)]
    pub minority: Option<usize>,
    #[arg(long)]
    pub majority: Option<usize>,
    #[arg(long)]
    pub signal: Option<f64>,
}

fn parse_kind(s: &str) -> Result<ClassifierKind, String> {
    s.parse()
}

fn parse_scope(s: &str) -> Result<WeightScope, String> {
    s.parse()
}

mod kind_name {
    use super::ClassifierKind;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(k: &Option<ClassifierKind>, s: S) -> Result<S::Ok, S::Error> {
        match k {
            Some(k) => s.serialize_str(k.cli_name()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<ClassifierKind>, D::Error> {
        let name: Option<String> = Option::deserialize(d)?;
        name.map(|n| n.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn first<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn first_vec<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

impl Settings {
    fn overlay(self, file: Settings) -> Settings {
        Settings {
            config: None,
            corpus: first(self.corpus, file.corpus),
            lexicons: first_vec(self.lexicons, file.lexicons),
            vocab: first(self.vocab, file.vocab),
            model: first(self.model, file.model),
            out: first(self.out, file.out),
            fields: first_vec(self.fields, file.fields),
            classifier: first(self.classifier, file.classifier),
            hyperparameters: first(self.hyperparameters, file.hyperparameters),
            c: first(self.c, file.c),
            gamma: first(self.gamma, file.gamma),
            k: first(self.k, file.k),
            seed: first(self.seed, file.seed),
            weighting: first(self.weighting, file.weighting),
            weight_scope: first(self.weight_scope, file.weight_scope),
            oversample_ratio: first(self.oversample_ratio, file.oversample_ratio),
            min_ngram_count: first(self.min_ngram_count, file.min_ngram_count),
            c_grid: first_vec(self.c_grid, file.c_grid),
            gamma_grid: first_vec(self.gamma_grid, file.gamma_grid),
            minority: first(self.minority, file.minority),
            majority: first(self.majority, file.majority),
            signal: first(self.signal, file.signal),
        }
    }
}

/// Failure of a CLI run, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing files or invalid settings: exit status 2.
    Usage(String),
    /// The pipeline itself failed: exit status 1.
    Pipeline(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Pipeline(_) => 1,
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json_line(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Pipeline(e) => ("pipeline", format!("{e:#}")),
        };
        serde_json::json!({ "error": kind, "message": message.replace('\n', " ") }).to_string()
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Pipeline(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Settings after defaults are applied and inputs validated.
struct Resolved {
    command: &'static str,
    settings: Settings,
    out: PathBuf,
    seed: u64,
    k: usize,
    pipeline: PipelineConfig,
}

fn require_file(path: &Option<PathBuf>, flag: &str, command: &str) -> Result<PathBuf, CliError> {
    let path = path
        .clone()
        .ok_or_else(|| usage(format!("{command} requires --{flag}")))?;
    if !path.is_file() {
        return Err(usage(format!("--{flag} {}: no such file", path.display())));
    }
    Ok(path)
}

fn split_pair<'a>(s: &'a str, flag: &str) -> Result<(&'a str, &'a str), CliError> {
    s.split_once('=')
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| usage(format!("--{flag} expects KEY=VALUE, got {s:?}")))
}

fn resolve(command: &'static str, flags: Settings) -> Result<Resolved, CliError> {
    let file = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("--config {}: {e}", path.display())))?
        }
        None => Settings::default(),
    };
    let mut s = flags.overlay(file);

    let kind = s
        .classifier
        .or(s.hyperparameters.map(|h| h.kind()))
        .unwrap_or(ClassifierKind::RbfSvm);
    let mut hyper = match s.hyperparameters {
        Some(h) if h.kind() == kind => h,
        _ => Hyperparameters::default_for(kind),
    };
    match &mut hyper {
        Hyperparameters::RbfSvm(p) => {
            if let Some(c) = s.c {
                p.c = c;
            }
            if let Some(g) = s.gamma {
                p.gamma = g;
            }
        }
        Hyperparameters::LinearSvm { c, .. } => {
            if let Some(v) = s.c {
                *c = v;
            }
            if s.gamma.is_some() {
                return Err(usage("--gamma applies only to svm-rbf"));
            }
        }
        _ => {
            if s.c.is_some() || s.gamma.is_some() {
                return Err(usage(format!("--c and --gamma do not apply to {kind}")));
            }
        }
    }
    let ratio = s.oversample_ratio.unwrap_or(0.0);
    let pipeline = PipelineConfig {
        min_ngram_count: s
            .min_ngram_count
            .unwrap_or(crate::features::DEFAULT_MIN_NGRAM_COUNT),
        weighting: s.weighting.unwrap_or(Switch::On) == Switch::On,
        weight_scope: s.weight_scope.unwrap_or_default(),
        oversample_ratio: (ratio != 0.0).then_some(ratio),
        hyperparameters: hyper,
    };
    pipeline.validate().map_err(|e| usage(e.to_string()))?;

    let seed = s.seed.unwrap_or(DEFAULT_SEED);
    let k = s.k.unwrap_or(DEFAULT_K);
    if k < 2 {
        return Err(usage(format!("--k must be at least 2, got {k}")));
    }
    let out = s.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    for spec in &s.lexicons {
        let (cat, path) = split_pair(spec, "lexicon")?;
        cat.parse::<Category>()
            .map_err(|e| usage(format!("--lexicon: {e}")))?;
        if !Path::new(path).is_file() {
            return Err(usage(format!("--lexicon {cat}: no such file {path}")));
        }
    }
    if s.vocab.is_some() {
        require_file(&s.vocab, "vocab", command)?;
    }
    for spec in &s.fields {
        let (canonical, source) = split_pair(spec, "field")?;
        Schema::default()
            .bind(canonical, source)
            .map_err(|e| usage(format!("--field: {e}")))?;
    }
    match command {
        "synth" => {}
        "predict" => {
            require_file(&s.corpus, "corpus", command)?;
            require_file(&s.model, "model", command)?;
        }
        _ => {
            require_file(&s.corpus, "corpus", command)?;
        }
    }
    if command == "synth" {
        let signal = s.signal.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&signal) {
            return Err(usage(format!("--signal must be in [0, 1], got {signal}")));
        }
        let (min, maj) = (s.minority.unwrap_or(100), s.majority.unwrap_or(400));
        if min == 0 || maj == 0 {
            return Err(usage("--minority and --majority must be at least 1"));
        }
        s.signal = Some(signal);
        s.minority = Some(min);
        s.majority = Some(maj);
    }
    if command == "grid-search" {
        if s.c_grid.is_empty() {
            s.c_grid = eval::default_c_grid();
        }
        if s.gamma_grid.is_empty() {
            s.gamma_grid = eval::default_gamma_grid();
        }
        if let Some(bad) = s
            .c_grid
            .iter()
            .chain(&s.gamma_grid)
            .find(|v| !(v.is_finite() && **v > 0.0))
        {
            return Err(usage(format!("grid values must be > 0, got {bad}")));
        }
    }

    // write back everything so the resolved file replays exactly
    s.classifier = Some(kind);
    s.hyperparameters = Some(hyper);
    s.c = None;
    s.gamma = None;
    s.seed = Some(seed);
    s.k = Some(k);
    s.out = Some(out.clone());
    s.weighting = Some(if pipeline.weighting {
        Switch::On
    } else {
        Switch::Off
    });
    s.weight_scope = Some(pipeline.weight_scope);
    s.oversample_ratio = Some(ratio);
    s.min_ngram_count = Some(pipeline.min_ngram_count);
    Ok(Resolved {
        command,
        settings: s,
        out,
        seed,
        k,
        pipeline,
    })
}

impl Resolved {
    fn schema(&self) -> Schema {
        let mut schema = Schema::default();
        for spec in &self.settings.fields {
            let (canonical, source) = spec.split_once('=').expect("validated");
            schema.bind(canonical, source).expect("validated");
        }
        schema
    }

    fn corpus(&self) -> anyhow::Result<Corpus> {
        let path = self.settings.corpus.as_ref().expect("validated");
        let report = corpus::ingest(path, &self.schema())
            .with_context(|| format!("reading corpus {}", path.display()))?;
        Ok(report.corpus)
    }

    fn analyzer(&self) -> anyhow::Result<Analyzer> {
        let mut lexicons: Vec<Lexicon> = Category::ALL
            .iter()
            .map(|&c| resources::builtin_lexicon(c))
            .collect();
        for spec in &self.settings.lexicons {
            let (cat, path) = spec.split_once('=').expect("validated");
            let category: Category = cat.parse().map_err(anyhow::Error::msg)?;
            let loaded =
                load_lexicon(path, category).with_context(|| format!("loading lexicon {path}"))?;
            let slot = Category::ALL
                .iter()
                .position(|&c| c == category)
                .expect("listed category");
            lexicons[slot] = loaded.lexicon;
        }
        let vocabulary = match &self.settings.vocab {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                resources::parse_vocabulary(&text)
            }
            None => resources::builtin_vocabulary(),
        };
        Ok(Analyzer::new(lexicons, vocabulary)?)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> anyhow::Result<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit status, reporting errors on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let msg = first.trim_start_matches("error: ").to_string();
            eprintln!("{}", usage(msg).to_json_line());
            return 2;
        }
    };
    let (command, settings) = cli.command.split();
    match execute(command, settings) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}

fn execute(command: &'static str, settings: Settings) -> Result<String, CliError> {
    let r = resolve(command, settings)?;
    fs::create_dir_all(&r.out).with_context(|| format!("creating {}", r.out.display()))?;
    let resolved = serde_json::to_string_pretty(&r.settings).context("serializing settings")?;
    r.write(RESOLVED_CONFIG, resolved + "\n")?;
    let summary = match r.command {
        "ingest" => ingest(&r)?,
        "featurize" => featurize(&r)?,
        "train" => train(&r)?,
        "predict" => predict(&r)?,
        "cross-validate" => cross_validate(&r)?,
        "grid-search" => grid_search(&r)?,
        "synth" => synth(&r)?,
        other => unreachable!("unknown command {other}"),
    };
    Ok(summary)
}

fn write_corpus(r: &Resolved, corpus: &Corpus) -> anyhow::Result<PathBuf> {
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf)?;
    r.write("corpus.jsonl", buf)
}

fn ingest(r: &Resolved) -> anyhow::Result<String> {
    let path = r.settings.corpus.as_ref().expect("validated");
    let report = corpus::ingest(path, &r.schema())
        .with_context(|| format!("reading corpus {}", path.display()))?;
    let out = write_corpus(r, &report.corpus)?;
    let counts = report.corpus.counts();
    let summary = serde_json::json!({
        "records": report.records,
        "kept": report.corpus.len(),
        "dropped_blank": report.dropped_blank,
        "suicidal": counts.suicidal,
        "non_suicidal": counts.non_suicidal,
        "unlabeled": report.corpus.len() - counts.total(),
        "errors": report.errors,
    });
    r.write(
        "ingest-report.json",
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(format!(
        "kept {} of {} records ({} errors) -> {}",
        report.corpus.len(),
        report.records,
        report.errors.len(),
        out.display()
    ))
}

#[derive(Serialize)]
struct FeatureRow<'a> {
    id: &'a str,
    label: Option<&'static str>,
    features: &'a [(usize, f64)],
}

fn featurize(r: &Resolved) -> anyhow::Result<String> {
    let corpus = r.corpus()?;
    let analyzer = r.analyzer()?;
    let analyses = pipeline::analyze_corpus(&analyzer, &corpus);
    let (space, weighting, vectors) = if r.pipeline.weighting {
        let set = pipeline::build_training_set(&corpus, &analyses, &r.pipeline)
            .context("weighting needs a fully labeled corpus; pass --weighting off otherwise")?;
        let vectors = set
            .samples
            .into_iter()
            .map(|s| s.vector)
            .collect::<Vec<_>>();
        (set.space, set.weighting, vectors)
    } else {
        let space = FeatureSpace::from_token_sequences(
            analyses.iter().map(|a| &a.tokens),
            r.pipeline.min_ngram_count,
        )?;
        let history = corpus.author_history();
        let vectors = corpus
            .posts()
            .iter()
            .zip(&analyses)
            .map(|(p, a)| featurize_analyzed(p, a, &space, history.of(&p.author_id)))
            .collect();
        (space, None, vectors)
    };
    r.write(
        "feature-space.json",
        serde_json::to_string_pretty(&space)? + "\n",
    )?;
    if let Some(ctx) = &weighting {
        r.write("weighting.json", serde_json::to_string_pretty(ctx)? + "\n")?;
    }
    let mut lines = String::new();
    for (post, v) in corpus.posts().iter().zip(&vectors) {
        let row = FeatureRow {
            id: &post.id,
            label: post.label.map(|l| l.as_str()),
            features: v.entries(),
        };
        lines.push_str(&serde_json::to_string(&row)?);
        lines.push('\n');
    }
    r.write("features.jsonl", lines)?;
    Ok(format!(
        "{} posts, {} features",
        corpus.len(),
        space.dimension()
    ))
}

fn train(r: &Resolved) -> anyhow::Result<String> {
    let corpus = r.corpus()?;
    let analyzer = r.analyzer()?;
    let manifest = pipeline::fit(&corpus, &analyzer, &r.pipeline, r.seed)?;
    let path = r.write("model.json", manifest.to_json()? + "\n")?;
    let mut summary = format!(
        "{} model on {} posts, {} features -> {}",
        r.pipeline.kind(),
        corpus.len(),
        manifest.feature_space.dimension(),
        path.display()
    );
    if !manifest.model.meta.converged {
        let _ = write!(
            summary,
            " (solver stopped before meeting the KKT tolerance)"
        );
    }
    Ok(summary)
}

fn predict(r: &Resolved) -> anyhow::Result<String> {
    let model_path = r.settings.model.as_ref().expect("validated");
    let text = fs::read_to_string(model_path)
        .with_context(|| format!("reading {}", model_path.display()))?;
    let manifest = ModelManifest::from_json(&text)
        .with_context(|| format!("loading {}", model_path.display()))?;
    let corpus = r.corpus()?;
    let predictions = manifest.predict_corpus(&corpus)?;
    let mut out = String::new();
    for (post, p) in corpus.posts().iter().zip(&predictions) {
        let _ = writeln!(out, "{}\t{}\t{}", post.id, p.label.as_str(), p.score);
    }
    let path = r.write("predictions.tsv", out)?;
    Ok(format!(
        "{} predictions -> {}",
        predictions.len(),
        path.display()
    ))
}

fn cross_validate(r: &Resolved) -> anyhow::Result<String> {
    let corpus = r.corpus()?;
    let analyzer = r.analyzer()?;
    let report = eval::cross_validate(&corpus, &analyzer, &r.pipeline, r.k, r.seed)?;
    r.write("report.json", serde_json::to_string_pretty(&report)? + "\n")?;
    let table = report.to_table();
    r.write("report.txt", &table)?;
    Ok(table.lines().take(2).collect::<Vec<_>>().join("\n"))
}

fn grid_search(r: &Resolved) -> anyhow::Result<String> {
    let corpus = r.corpus()?;
    let analyzer = r.analyzer()?;
    let base = PipelineConfig {
        hyperparameters: match r.pipeline.hyperparameters {
            h @ Hyperparameters::RbfSvm(_) => h,
            _ => Hyperparameters::default_for(ClassifierKind::RbfSvm),
        },
        ..r.pipeline
    };
    let grid = eval::grid_search(
        &corpus,
        &analyzer,
        &base,
        &r.settings.c_grid,
        &r.settings.gamma_grid,
        r.k,
        r.seed,
    )?;
    r.write("grid.json", serde_json::to_string_pretty(&grid)? + "\n")?;
    r.write("grid.tsv", grid.to_tsv())?;
    Ok(format!(
        "best C={} gamma={} F-measure={:.4} over {} cells",
        grid.best_c,
        grid.best_gamma,
        grid.best.f_measure,
        grid.cells.len()
    ))
}

fn synth(r: &Resolved) -> anyhow::Result<String> {
    let s = &r.settings;
    let config = SynthConfig::new(
        s.minority.expect("resolved"),
        s.majority.expect("resolved"),
        s.signal.expect("resolved"),
        r.seed,
    );
    let corpus = eval::synth_corpus(&config)?;
    let path = write_corpus(r, &corpus)?;
    Ok(format!("{} posts -> {}", corpus.len(), path.display()))
}

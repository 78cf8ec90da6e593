use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use indexmap::IndexMap;
use intent_core::classify::{fit_scheme, CodesArtifact, FittedScheme, SchemeId, TrainSplit};
use intent_core::corpus::{
    aggregate_annotations, attach_labels, dedup, lexicon_filter, load_annotations, load_corpus, load_labeled,
    write_corpus, write_labeled, IntentLabel, LabeledMessage, Lexicon, Message,
};
use intent_core::embeddings::{read_word2vec_binary, write_word2vec_binary, EmbeddingTable};
use intent_core::eval::{comparison_report, cross_validate, write_predictions_csv, BuiltinScheme};
use intent_core::seed;
use intent_core::synth::{self, SynthConfig};
use intent_core::textproc::{load_stopwords, parse_stopwords};
use intent_core::topics::{category_topics, lexicon_category_counts, parse_lexicons, seeded_sample, topics_json, topics_text};
use log::{info, warn};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::manifest::Manifest;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const ARTIFACT_FILE: &str = "artifact.json";

/// Bad flags or settings; reported like a clap usage error.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn require(path: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.ok_or_else(|| usage(format!("missing {flag} (or its entry in the config file)")))
}

fn check_threshold(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(usage(format!("{name} {value} outside (0, 1]")))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn read_labeled(path: &Path) -> Result<Vec<LabeledMessage>> {
    let loaded = load_labeled(path)?;
    if loaded.malformed > 0 {
        warn!("{}: skipped {} malformed lines", path.display(), loaded.malformed);
    }
    Ok(loaded.items)
}

fn finish(manifest: &Manifest, cfg: &PipelineConfig) -> Result<()> {
    let path = manifest.write(&cfg.out_dir)?;
    info!("manifest written to {}", path.display());
    Ok(())
}

pub fn filter(mut cfg: PipelineConfig, input: Option<PathBuf>, output: Option<PathBuf>, lexicon: Option<String>) -> Result<()> {
    let input = require(input.or(cfg.paths.corpus.take()), "--input")?;
    if let Some(list) = lexicon {
        cfg.lexicon = list.split(',').map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect();
    }
    let lexicon = Lexicon::new(&cfg.lexicon).map_err(|e| usage(e.to_string()))?;
    cfg.paths.corpus = Some(input.clone());
    let output = output.unwrap_or_else(|| cfg.out_dir.join("filtered.jsonl"));

    let loaded = load_corpus(&input)?;
    let kept = lexicon_filter(&loaded.items, &lexicon);
    let mut w = create(&output)?;
    write_corpus(&mut w, &kept)?;
    w.flush()?;
    println!(
        "kept={} dropped={} malformed={}",
        kept.len(),
        loaded.items.len() - kept.len(),
        loaded.malformed
    );

    let mut manifest = Manifest::new("filter", cfg.seed, &cfg)?;
    manifest.input("corpus", &input)?;
    manifest.output(&output);
    finish(&manifest, &cfg)
}

pub fn dedup_cmd(mut cfg: PipelineConfig, input: Option<PathBuf>, output: Option<PathBuf>, threshold: Option<f64>) -> Result<()> {
    let input = require(input.or(cfg.paths.corpus.take()), "--input")?;
    cfg.dedup_threshold = threshold.unwrap_or(cfg.dedup_threshold);
    check_threshold("dedup threshold", cfg.dedup_threshold)?;
    cfg.paths.corpus = Some(input.clone());
    let output = output.unwrap_or_else(|| cfg.out_dir.join("deduplicated.jsonl"));

    let loaded = load_corpus(&input)?;
    let kept = dedup(&loaded.items, cfg.dedup_threshold)?;
    let mut w = create(&output)?;
    write_corpus(&mut w, &kept)?;
    w.flush()?;
    println!(
        "retained={} removed={} malformed={}",
        kept.len(),
        loaded.items.len() - kept.len(),
        loaded.malformed
    );

    let mut manifest = Manifest::new("dedup", cfg.seed, &cfg)?;
    manifest.input("corpus", &input)?;
    manifest.output(&output);
    finish(&manifest, &cfg)
}

pub fn aggregate(
    mut cfg: PipelineConfig,
    annotations: Option<PathBuf>,
    messages: Option<PathBuf>,
    output: Option<PathBuf>,
    threshold: Option<f64>,
) -> Result<()> {
    let annotations = require(annotations.or(cfg.paths.annotations.take()), "--annotations")?;
    let messages = require(messages.or(cfg.paths.corpus.take()), "--messages")?;
    cfg.confidence_threshold = threshold.unwrap_or(cfg.confidence_threshold);
    check_threshold("confidence threshold", cfg.confidence_threshold)?;
    cfg.paths.annotations = Some(annotations.clone());
    cfg.paths.corpus = Some(messages.clone());
    let output = output.unwrap_or_else(|| cfg.out_dir.join("labeled.jsonl"));

    let agg = aggregate_annotations(&load_annotations(&annotations)?, cfg.confidence_threshold)?;
    let corpus = load_corpus(&messages)?;
    let labeled = attach_labels(&corpus.items, &agg.labels);
    if labeled.len() < agg.labels.len() {
        warn!("{} labeled messages missing from {}", agg.labels.len() - labeled.len(), messages.display());
    }
    let mut w = create(&output)?;
    write_labeled(&mut w, &labeled)?;
    w.flush()?;
    let mut counts = String::new();
    for l in IntentLabel::ALL {
        let _ = write!(counts, " {}={}", l, labeled.iter().filter(|m| m.label == l).count());
    }
    println!(
        "labeled={}{} under_annotated={} rejected={}",
        labeled.len(),
        counts,
        agg.under_annotated.len(),
        agg.rejected.len()
    );

    let mut manifest = Manifest::new("aggregate", cfg.seed, &cfg)?;
    manifest.input("annotations", &annotations)?;
    manifest.input("messages", &messages)?;
    manifest.output(&output);
    finish(&manifest, &cfg)
}

pub struct TrainEvalArgs {
    pub labeled: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub schemes: Option<Vec<SchemeId>>,
    pub k: Option<usize>,
    pub fit_full: bool,
}

pub fn train_eval(mut cfg: PipelineConfig, args: TrainEvalArgs) -> Result<()> {
    let labeled_path = require(args.labeled.or(cfg.paths.labeled.take()), "--labeled")?;
    cfg.paths.labeled = Some(labeled_path.clone());
    if let Some(e) = args.embeddings {
        cfg.paths.embeddings = Some(e);
    }
    if let Some(s) = args.schemes {
        cfg.schemes = s;
    }
    cfg.k_folds = args.k.unwrap_or(cfg.k_folds);
    if cfg.k_folds < 2 {
        return Err(usage("k must be at least 2"));
    }
    if cfg.paths.embeddings.is_none() {
        let mut needing: Vec<&str> = cfg.schemes.iter().filter(|s| s.needs_word2vec()).map(|s| s.as_str()).collect();
        if args.fit_full {
            needing.push(SchemeId::ProposedW2vCnnCodesLogit.as_str());
            needing.dedup();
        }
        if !needing.is_empty() {
            return Err(usage(format!("--embeddings is required by {}", needing.join(", "))));
        }
    }

    let mut manifest = Manifest::new("train-eval", cfg.seed, &cfg)?;
    manifest.input("labeled", &labeled_path)?;
    let corpus = read_labeled(&labeled_path)?;
    let table: Option<EmbeddingTable> = match &cfg.paths.embeddings {
        Some(p) => {
            manifest.input("embeddings", p)?;
            Some(read_word2vec_binary(p)?)
        }
        None => None,
    };
    info!("{} labeled messages, {} schemes, k={}", corpus.len(), cfg.schemes.len(), cfg.k_folds);

    let mut reports = Vec::new();
    for &scheme in &cfg.schemes {
        let runner = BuiltinScheme {
            scheme,
            config: &cfg.scheme,
            table: table.as_ref(),
        };
        match cross_validate(&runner, &corpus, cfg.k_folds, cfg.seed) {
            Ok(report) => {
                let path = cfg.out_dir.join("predictions").join(format!("{scheme}.csv"));
                let mut w = create(&path)?;
                write_predictions_csv(&mut w, &report.predictions)?;
                w.flush()?;
                manifest.output(&path);
                reports.push(report);
            }
            Err(e) => {
                let e = anyhow!(e);
                warn!("{scheme} failed: {e:#}");
                manifest.fail(scheme.as_str(), &e);
            }
        }
    }

    if !reports.is_empty() {
        let comparison = comparison_report(&reports)?;
        let json_path = cfg.out_dir.join("report.json");
        let text_path = cfg.out_dir.join("report.txt");
        write_json(&json_path, &comparison.json)?;
        write_text(&text_path, &comparison.text)?;
        manifest.output(&json_path);
        manifest.output(&text_path);
        print!("{}", comparison.text);
    }

    if args.fit_full {
        let scheme = SchemeId::ProposedW2vCnnCodesLogit;
        let texts: Vec<String> = corpus.iter().map(|m| m.message.text.clone()).collect();
        let labels: Vec<IntentLabel> = corpus.iter().map(|m| m.label).collect();
        let train = TrainSplit {
            texts: &texts,
            labels: &labels,
        };
        let fitted = fit_scheme(scheme, &train, &cfg.scheme, table.as_ref(), seed::derive(cfg.seed, &["full"], &[]));
        match fitted {
            Ok(FittedScheme::CnnCodes(artifact)) => {
                let path = cfg.out_dir.join("model").join(ARTIFACT_FILE);
                let mut w = create(&path)?;
                serde_json::to_writer(&mut w, &artifact)?;
                w.flush()?;
                manifest.output(&path);
                info!("full-data model written to {}", path.display());
            }
            Ok(_) => unreachable!("PROPOSED always has a logistic head"),
            Err(e) => manifest.fail("fit-full", &anyhow!(e)),
        }
    }

    finish(&manifest, &cfg)?;
    if !manifest.failures.is_empty() {
        let names: Vec<&str> = manifest.failures.iter().map(|f| f.item.as_str()).collect();
        bail!("failed: {}", names.join(", "));
    }
    Ok(())
}

fn model_file(dir: &Path) -> PathBuf {
    if dir.is_file() {
        dir.to_owned()
    } else {
        dir.join(ARTIFACT_FILE)
    }
}

pub fn predict(mut cfg: PipelineConfig, model: Option<PathBuf>, input: Option<PathBuf>, output: Option<PathBuf>) -> Result<()> {
    let model_dir = require(model.or(cfg.paths.model.take()), "--model")?;
    let input = require(input.or(cfg.paths.corpus.take()), "--input")?;
    cfg.paths.model = Some(model_dir.clone());
    cfg.paths.corpus = Some(input.clone());
    let artifact_path = model_file(&model_dir);
    let artifact: CodesArtifact = serde_json::from_reader(BufReader::new(
        File::open(&artifact_path).with_context(|| format!("opening {}", artifact_path.display()))?,
    ))
    .with_context(|| format!("parsing {}", artifact_path.display()))?;
    let csv_path = output.unwrap_or_else(|| cfg.out_dir.join("predictions.csv"));
    let jsonl_path = csv_path.with_extension("jsonl");

    let mut csv = csv::Writer::from_writer(create(&csv_path)?);
    let mut header = vec!["message_id".to_owned(), "predicted_label".to_owned()];
    header.extend(IntentLabel::ALL.iter().map(|l| format!("p_{}", l.as_str().to_lowercase())));
    csv.write_record(&header)?;
    let mut jsonl = create(&jsonl_path)?;

    let reader = BufReader::new(File::open(&input).with_context(|| format!("opening {}", input.display()))?);
    let mut counts = [0usize; IntentLabel::COUNT];
    let mut malformed = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(message) = serde_json::from_str::<Message>(&line) else {
            malformed += 1;
            continue;
        };
        let prediction = artifact
            .predict(std::slice::from_ref(&message.text))?
            .pop()
            .expect("one prediction per text");
        counts[prediction.label.index()] += 1;
        let mut row = vec![message.id.clone(), prediction.label.to_string()];
        row.extend(prediction.probabilities.iter().map(|p| format!("{p:.6}")));
        csv.write_record(&row)?;
        let confidence = prediction.probabilities[prediction.label.index()];
        write_labeled(
            &mut jsonl,
            &[LabeledMessage {
                message,
                label: prediction.label,
                confidence,
            }],
        )?;
    }
    csv.flush()?;
    jsonl.flush()?;
    if malformed > 0 {
        warn!("{}: skipped {malformed} malformed lines", input.display());
    }

    let total: usize = counts.iter().sum();
    let mut distribution = IndexMap::new();
    let mut text = format!("{:<14} {:>8} {:>8}\n", "category", "count", "percent");
    for l in IntentLabel::ALL {
        let n = counts[l.index()];
        let pct = if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
        let _ = writeln!(text, "{:<14} {:>8} {:>7.2}%", l.as_str(), n, pct);
        distribution.insert(l.as_str(), serde_json::json!({"count": n, "percent": pct}));
    }
    let _ = writeln!(text, "{:<14} {:>8}", "total", total);
    print!("{text}");
    let dist_path = cfg.out_dir.join("distribution.json");
    write_json(&dist_path, &distribution)?;

    let mut manifest = Manifest::new("predict", cfg.seed, &cfg)?;
    manifest.input("model", &artifact_path)?;
    manifest.input("messages", &input)?;
    for p in [&csv_path, &jsonl_path, &dist_path] {
        manifest.output(p);
    }
    finish(&manifest, &cfg)
}

pub struct TopicsArgs {
    pub input: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub topics: Option<usize>,
    pub iterations: Option<usize>,
    pub top_n: Option<usize>,
    pub include_none: bool,
}

pub fn topics(mut cfg: PipelineConfig, args: TopicsArgs) -> Result<()> {
    let input = require(args.input.or(cfg.paths.labeled.take()), "--input")?;
    cfg.paths.labeled = Some(input.clone());
    if let Some(s) = args.stopwords {
        cfg.paths.stopwords = Some(s);
    }
    cfg.lda.topics = args.topics.unwrap_or(cfg.lda.topics);
    cfg.lda.iterations = args.iterations.unwrap_or(cfg.lda.iterations);
    cfg.lda.top_n = args.top_n.unwrap_or(cfg.lda.top_n);
    cfg.lda.include_none |= args.include_none;
    if cfg.lda.topics < 1 || cfg.lda.iterations < 1 || cfg.lda.top_n < 1 {
        return Err(usage("topics, iterations and top-n must be at least 1"));
    }

    let mut manifest = Manifest::new("topics", cfg.seed, &cfg)?;
    manifest.input("predictions", &input)?;
    let stopwords = match &cfg.paths.stopwords {
        Some(p) => {
            manifest.input("stopwords", p)?;
            load_stopwords(p)?
        }
        None => parse_stopwords(DEFAULT_STOPWORDS),
    };
    let messages = read_labeled(&input)?;
    let result = category_topics(&messages, &stopwords, &cfg.lda.options(), cfg.seed)?;
    let json_path = cfg.out_dir.join("topics.json");
    let text_path = cfg.out_dir.join("topics.txt");
    write_json(&json_path, &topics_json(&result))?;
    let text = topics_text(&result);
    write_text(&text_path, &text)?;
    print!("{text}");
    manifest.output(&json_path);
    manifest.output(&text_path);
    finish(&manifest, &cfg)
}

pub fn lexicon_counts(
    mut cfg: PipelineConfig,
    input: Option<PathBuf>,
    lexicons: Option<PathBuf>,
    sample_size: Option<usize>,
) -> Result<()> {
    let input = require(input.or(cfg.paths.labeled.take()), "--input")?;
    let lexicons_path = require(lexicons.or(cfg.paths.lexicons.take()), "--lexicons")?;
    cfg.paths.labeled = Some(input.clone());
    cfg.paths.lexicons = Some(lexicons_path.clone());
    cfg.sample_size = sample_size.unwrap_or(cfg.sample_size);
    if cfg.sample_size == 0 {
        return Err(usage("sample size must be positive"));
    }

    let lexicons = parse_lexicons(
        &fs::read_to_string(&lexicons_path).with_context(|| format!("reading {}", lexicons_path.display()))?,
    )?;
    let messages = read_labeled(&input)?;
    let mut results = IndexMap::new();
    for label in IntentLabel::ALL {
        let texts: Vec<&str> = messages.iter().filter(|m| m.label == label).map(|m| m.message.text.as_str()).collect();
        if texts.is_empty() {
            warn!("{label}: no messages, skipping");
            continue;
        }
        let sample = seeded_sample(&texts, cfg.sample_size, seed::derive(cfg.seed, &["lexicon-sample"], &[label.index() as u64]));
        results.insert(label.as_str(), lexicon_category_counts(&sample, &lexicons)?);
    }

    let mut text = format!("{:<14}", "category");
    for name in lexicons.keys() {
        let _ = write!(text, " {name:>12}");
    }
    let _ = writeln!(text, " {:>9}", "messages");
    for (label, r) in &results {
        let _ = write!(text, "{label:<14}");
        for rate in r.rates.values() {
            let _ = write!(text, " {rate:>12.4}");
        }
        let _ = writeln!(text, " {:>9}", r.messages_counted);
    }
    print!("{text}");
    let json_path = cfg.out_dir.join("lexicon_counts.json");
    let text_path = cfg.out_dir.join("lexicon_counts.txt");
    write_json(&json_path, &results)?;
    write_text(&text_path, &text)?;

    let mut manifest = Manifest::new("lexicon-counts", cfg.seed, &cfg)?;
    manifest.input("predictions", &input)?;
    manifest.input("lexicons", &lexicons_path)?;
    manifest.output(&json_path);
    manifest.output(&text_path);
    finish(&manifest, &cfg)
}

pub fn synth_cmd(cfg: PipelineConfig, messages: usize, dimension: usize) -> Result<()> {
    if messages < 4 || dimension == 0 {
        return Err(usage("need at least 4 messages and a positive dimension"));
    }
    let config = SynthConfig {
        messages,
        dimension,
        seed: cfg.seed,
        ..SynthConfig::default()
    };
    let corpus = synth::generate(&config);
    let corpus_path = cfg.out_dir.join("synthetic.jsonl");
    let vectors_path = cfg.out_dir.join("synthetic.bin");
    let mut w = create(&corpus_path)?;
    write_labeled(&mut w, &corpus.messages)?;
    w.flush()?;
    write_word2vec_binary(&corpus.embeddings, &vectors_path)?;
    println!(
        "messages={} vocabulary={} dimension={}",
        corpus.messages.len(),
        corpus.embeddings.len(),
        dimension
    );

    let echo = serde_json::json!({
        "messages": messages,
        "dimension": dimension,
        "seed": cfg.seed,
        "class_shares": config.class_shares,
        "words_per_group": config.words_per_group,
        "noise_words": config.noise_words,
    });
    let mut manifest = Manifest::new("synth", cfg.seed, &echo)?;
    manifest.output(&corpus_path);
    manifest.output(&vectors_path);
    finish(&manifest, &cfg)
}

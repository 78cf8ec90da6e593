//! Stratified k-fold cross-validation, classification metrics and the
//! cross-scheme comparison report.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classify::{run_scheme, Prediction, SchemeConfig, SchemeId, TestSplit, TrainSplit};
use crate::embeddings::EmbeddingTable;
use crate::corpus::{IntentLabel, LabeledMessage};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }
}

/// Shuffle each class with the seeded generator, then deal its members to
/// folds round-robin. The dealing position carries over from one class to the
/// next so that small classes do not all land in the first folds.
pub fn stratified_kfold(labels: &[IntentLabel], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("k = {k}, need at least 2 folds")));
    }
    if k > labels.len() {
        return Err(Error::Config(format!("k = {k} exceeds the {} messages", labels.len())));
    }
    let mut rng = seed::rng(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for class in IntentLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub micro_f: f64,
    pub macro_f: f64,
    pub per_class: IndexMap<IntentLabel, ClassMetrics>,
    /// `confusion[true][predicted]` in class order.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class precision/recall/F1 (0/0 := 0), pooled micro-F, macro-F over the
/// classes with nonzero support, and accuracy.
pub fn compute_metrics(truth: &[IntentLabel], predicted: &[IntentLabel], classes: &[IntentLabel]) -> Result<MetricReport> {
    if truth.len() != predicted.len() {
        return Err(Error::Invalid("label sequences differ in length".into()));
    }
    if truth.is_empty() {
        return Err(Error::Empty("label sequence"));
    }
    let position = |l: &IntentLabel| {
        classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::UnknownLabel(l.to_string()))
    };
    let c = classes.len();
    let mut confusion = vec![vec![0usize; c]; c];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[position(t)?][position(p)?] += 1;
    }
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    let mut per_class = IndexMap::new();
    let mut macro_sum = 0.0;
    let mut present = 0;
    for (i, &label) in classes.iter().enumerate() {
        let tp = confusion[i][i];
        let support: usize = confusion[i].iter().sum();
        let predicted_i: usize = confusion.iter().map(|row| row[i]).sum();
        let precision = ratio(tp, predicted_i);
        let recall = ratio(tp, support);
        let f = f1(precision, recall);
        tp_all += tp;
        fp_all += predicted_i - tp;
        fn_all += support - tp;
        if support > 0 {
            macro_sum += f;
            present += 1;
        }
        per_class.insert(
            label,
            ClassMetrics {
                precision,
                recall,
                f1: f,
                support,
            },
        );
    }
    let micro_p = ratio(tp_all, tp_all + fp_all);
    let micro_r = ratio(tp_all, tp_all + fn_all);
    Ok(MetricReport {
        accuracy: ratio(tp_all, truth.len()),
        micro_f: f1(micro_p, micro_r),
        macro_f: if present == 0 { 0.0 } else { macro_sum / present as f64 },
        per_class,
        confusion,
    })
}

/// Anything that can be trained on one split and predict another.
pub trait SchemeRunner {
    fn name(&self) -> String;
    fn run(&self, train: &TrainSplit<'_>, test: &TestSplit<'_>, seed: u64) -> Result<Vec<Prediction>>;
}

/// One of the built-in schemes with its configuration and optional table.
#[derive(Debug, Clone, Copy)]
pub struct BuiltinScheme<'a> {
    pub scheme: SchemeId,
    pub config: &'a SchemeConfig,
    pub table: Option<&'a EmbeddingTable>,
}

impl SchemeRunner for BuiltinScheme<'_> {
    fn name(&self) -> String {
        self.scheme.to_string()
    }

    fn run(&self, train: &TrainSplit<'_>, test: &TestSplit<'_>, seed: u64) -> Result<Vec<Prediction>> {
        run_scheme(self.scheme, train, test, self.config, self.table, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub message_id: String,
    pub fold: usize,
    pub true_label: IntentLabel,
    pub predicted_label: IntentLabel,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub scheme: String,
    pub k: usize,
    pub seed: u64,
    pub aggregate: MetricReport,
    pub folds: Vec<MetricReport>,
    #[serde(skip)]
    pub predictions: Vec<PredictionRow>,
}

/// Refit the whole scheme inside each fold and score the pooled out-of-fold
/// predictions. Predictions come back in corpus order.
pub fn cross_validate(runner: &dyn SchemeRunner, corpus: &[LabeledMessage], k: usize, seed: u64) -> Result<CvReport> {
    let labels: Vec<IntentLabel> = corpus.iter().map(|m| m.label).collect();
    let folds = stratified_kfold(&labels, k, seed::derive(seed, &["cv", "folds"], &[]))?;
    let mut pooled: Vec<Option<Prediction>> = vec![None; corpus.len()];
    let mut fold_reports = Vec::with_capacity(k);
    for f in 0..k {
        let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..corpus.len()).partition(|&i| folds.fold_of[i] == f);
        let train_texts: Vec<String> = train_idx.iter().map(|&i| corpus[i].message.text.clone()).collect();
        let train_labels: Vec<IntentLabel> = train_idx.iter().map(|&i| labels[i]).collect();
        let test_texts: Vec<String> = test_idx.iter().map(|&i| corpus[i].message.text.clone()).collect();
        let preds = runner.run(
            &TrainSplit {
                texts: &train_texts,
                labels: &train_labels,
            },
            &TestSplit { texts: &test_texts },
            seed::derive(seed, &["cv", "fold"], &[f as u64]),
        )?;
        if preds.len() != test_idx.len() {
            return Err(Error::Invalid(format!(
                "{} returned {} predictions for {} messages",
                runner.name(),
                preds.len(),
                test_idx.len()
            )));
        }
        let truth: Vec<IntentLabel> = test_idx.iter().map(|&i| labels[i]).collect();
        let guessed: Vec<IntentLabel> = preds.iter().map(|p| p.label).collect();
        fold_reports.push(compute_metrics(&truth, &guessed, &IntentLabel::ALL)?);
        log::info!("{} fold {}/{}: accuracy {:.4}", runner.name(), f + 1, k, fold_reports[f].accuracy);
        for (&i, p) in test_idx.iter().zip(preds) {
            pooled[i] = Some(p);
        }
    }
    let predictions: Vec<PredictionRow> = pooled
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let p = p.expect("every message is in exactly one fold");
            PredictionRow {
                message_id: corpus[i].message.id.clone(),
                fold: folds.fold_of[i],
                true_label: labels[i],
                predicted_label: p.label,
                probabilities: p.probabilities,
            }
        })
        .collect();
    let guessed: Vec<IntentLabel> = predictions.iter().map(|p| p.predicted_label).collect();
    Ok(CvReport {
        scheme: runner.name(),
        k,
        seed,
        aggregate: compute_metrics(&labels, &guessed, &IntentLabel::ALL)?,
        folds: fold_reports,
        predictions,
    })
}

/// `message_id,true_label,predicted_label,p_accusational,p_validational,p_sensational,p_none`
pub fn write_predictions_csv<W: Write>(writer: W, rows: &[PredictionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "message_id",
        "true_label",
        "predicted_label",
        "p_accusational",
        "p_validational",
        "p_sensational",
        "p_none",
    ])?;
    for r in rows {
        let mut rec = vec![
            r.message_id.clone(),
            r.true_label.to_string(),
            r.predicted_label.to_string(),
        ];
        rec.extend(r.probabilities.iter().map(|p| format!("{p:.6}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub json: serde_json::Value,
    pub text: String,
}

/// Rank schemes by pooled micro-F (descending, ties by scheme name) and render
/// them as JSON and as an aligned text table.
pub fn comparison_report(reports: &[CvReport]) -> Result<Comparison> {
    if reports.is_empty() {
        return Err(Error::Empty("scheme report list"));
    }
    let mut ranked: Vec<&CvReport> = reports.iter().collect();
    ranked.sort_by(|a, b| {
        b.aggregate
            .micro_f
            .partial_cmp(&a.aggregate.micro_f)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.scheme.cmp(&b.scheme))
    });

    let json = serde_json::json!({
        "schemes": ranked.iter().map(|r| serde_json::to_value(r)).collect::<std::result::Result<Vec<_>, _>>()?,
    });

    let name_width = ranked.iter().map(|r| r.scheme.len()).max().unwrap_or(6).max(6);
    let mut text = String::new();
    let _ = write!(text, "{:<name_width$}  {:>8}  {:>8}  {:>8}", "scheme", "accuracy", "micro-F", "macro-F");
    for l in IntentLabel::ALL {
        let _ = write!(text, "  {:>12}", format!("F1 {}", &l.as_str()[..l.as_str().len().min(9)]));
    }
    text.push('\n');
    for r in &ranked {
        let a = &r.aggregate;
        let _ = write!(
            text,
            "{:<name_width$}  {:>8.4}  {:>8.4}  {:>8.4}",
            r.scheme, a.accuracy, a.micro_f, a.macro_f
        );
        for l in IntentLabel::ALL {
            let f = a.per_class.get(&l).map_or(0.0, |m| m.f1);
            let _ = write!(text, "  {:>12.4}", f);
        }
        text.push('\n');
    }
    Ok(Comparison { json, text })
}

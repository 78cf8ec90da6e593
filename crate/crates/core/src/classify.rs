//! Multinomial logistic regression and the six classification schemes.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::IntentLabel;
use crate::embeddings::{build_embedding_matrix, EmbeddingTable};
use crate::error::{Error, Result};
use crate::features::{cnn_code_features, fit_tfidf, tfidf_transform, w2v_avg_features, TfidfModel, DEFAULT_MAX_TERMS};
use crate::nnet::{self, softmax, CnnConfig, CnnModel, DropoutSource};
use crate::seed;
use crate::textproc::{self, fit_vocabulary, lovins_stem, Vocabulary, DEFAULT_MIN_FREQUENCY};

pub const DEFAULT_LOGISTIC_L2: f64 = 1e-4;
const MAX_ITERATIONS: usize = 1000;
const GRADIENT_TOLERANCE: f64 = 1e-6;
const LBFGS_MEMORY: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// `dimension x classes`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub class_labels: Vec<IntentLabel>,
    pub l2: f64,
}

impl LogisticModel {
    pub fn dimension(&self) -> usize {
        self.weights.len() / self.class_labels.len()
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        let c = self.class_labels.len();
        let mut z = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for k in 0..c {
                    z[k] += xi * self.weights[i * c + k];
                }
            }
        }
        Ok(z)
    }
}

/// Label with the highest probability (lowest class index on ties) and the
/// full probability vector.
pub fn predict(model: &LogisticModel, x: &[f64]) -> Result<(IntentLabel, Vec<f64>)> {
    let probs = softmax(&model.logits(x)?);
    Ok((model.class_labels[argmax(&probs)], probs))
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

struct Objective<'a> {
    features: &'a [Vec<f64>],
    targets: Vec<usize>,
    dim: usize,
    classes: usize,
    l2: f64,
}

impl Objective<'_> {
    /// Mean cross-entropy plus `l2 * |W|^2`, and its gradient.
    fn evaluate(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let (d, c) = (self.dim, self.classes);
        let (w, b) = theta.split_at(d * c);
        let mut grad = vec![0.0; theta.len()];
        let n = self.features.len() as f64;
        let mut loss = 0.0;
        let mut z = vec![0.0; c];
        for (x, &y) in self.features.iter().zip(&self.targets) {
            z.copy_from_slice(b);
            for (i, &xi) in x.iter().enumerate() {
                if xi != 0.0 {
                    for k in 0..c {
                        z[k] += xi * w[i * c + k];
                    }
                }
            }
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
            loss += max + sum.ln() - z[y];
            let mut r: Vec<f64> = z.iter().map(|v| (v - max).exp() / sum / n).collect();
            r[y] -= 1.0 / n;
            for (i, &xi) in x.iter().enumerate() {
                if xi != 0.0 {
                    for k in 0..c {
                        grad[i * c + k] += xi * r[k];
                    }
                }
            }
            for k in 0..c {
                grad[d * c + k] += r[k];
            }
        }
        loss /= n;
        for (g, &wi) in grad[..d * c].iter_mut().zip(w) {
            *g += 2.0 * self.l2 * wi;
        }
        loss += self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        (loss, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub model: LogisticModel,
    /// Objective value at the start and after every accepted step.
    pub loss_history: Vec<f64>,
}

/// Fit by L-BFGS with Armijo backtracking, starting from zero weights, until the
/// gradient infinity-norm drops below 1e-6 or 1000 iterations. Deterministic.
pub fn train_logistic(features: &[Vec<f64>], labels: &[IntentLabel], l2: f64) -> Result<LogisticFit> {
    if features.len() != labels.len() {
        return Err(Error::Invalid("features and labels differ in length".into()));
    }
    if features.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if !(l2 >= 0.0) {
        return Err(Error::Config("l2 must be nonnegative".into()));
    }
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::SingleClass);
    }
    let classes = IntentLabel::COUNT;
    let objective = Objective {
        features,
        targets: labels.iter().map(|l| l.index()).collect(),
        dim,
        classes,
        l2,
    };

    let mut theta = vec![0.0; dim * classes + classes];
    let (mut loss, mut grad) = objective.evaluate(&theta);
    let mut history = vec![loss];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    for iteration in 0..MAX_ITERATIONS {
        if inf_norm(&grad) < GRADIENT_TOLERANCE {
            break;
        }
        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut direction: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &direction);
        if slope >= 0.0 {
            memory.clear();
            direction = grad.iter().map(|v| -v).collect();
            slope = -dot(&grad, &grad);
        }

        let mut step = if iteration == 0 { 1.0 / inf_norm(&grad).max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let candidate: Vec<f64> = theta.iter().zip(&direction).map(|(t, d)| t + step * d).collect();
            let (l, g) = objective.evaluate(&candidate);
            if l.is_finite() && l <= loss + 1e-4 * step * slope {
                accepted = Some((candidate, l, g));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_loss, next_grad)) = accepted else {
            break;
        };
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if memory.len() == LBFGS_MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let improvement = loss - next_loss;
        theta = next;
        loss = next_loss;
        grad = next_grad;
        history.push(loss);
        if improvement <= f64::EPSILON * loss.abs().max(1.0) {
            break;
        }
    }
    let bias = theta.split_off(dim * classes);
    Ok(LogisticFit {
        model: LogisticModel {
            weights: theta,
            bias,
            class_labels: IntentLabel::ALL.to_vec(),
            l2,
        },
        loss_history: history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchemeId {
    #[serde(rename = "B1_BOW_LOGIT", alias = "B1")]
    B1BowLogit,
    #[serde(rename = "B2_W2VAVG_LOGIT", alias = "B2")]
    B2W2vAvgLogit,
    #[serde(rename = "B3_RANDCNN_SOFTMAX", alias = "B3")]
    B3RandCnnSoftmax,
    #[serde(rename = "B4_W2VCNN_SOFTMAX", alias = "B4")]
    B4W2vCnnSoftmax,
    #[serde(rename = "B5_RANDCNNCODES_LOGIT", alias = "B5")]
    B5RandCnnCodesLogit,
    #[serde(rename = "PROPOSED_W2VCNNCODES_LOGIT", alias = "PROPOSED")]
    ProposedW2vCnnCodesLogit,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::B1BowLogit,
        SchemeId::B2W2vAvgLogit,
        SchemeId::B3RandCnnSoftmax,
        SchemeId::B4W2vCnnSoftmax,
        SchemeId::B5RandCnnCodesLogit,
        SchemeId::ProposedW2vCnnCodesLogit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::B1BowLogit => "B1_BOW_LOGIT",
            SchemeId::B2W2vAvgLogit => "B2_W2VAVG_LOGIT",
            SchemeId::B3RandCnnSoftmax => "B3_RANDCNN_SOFTMAX",
            SchemeId::B4W2vCnnSoftmax => "B4_W2VCNN_SOFTMAX",
            SchemeId::B5RandCnnCodesLogit => "B5_RANDCNNCODES_LOGIT",
            SchemeId::ProposedW2vCnnCodesLogit => "PROPOSED_W2VCNNCODES_LOGIT",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            SchemeId::B1BowLogit => "B1",
            SchemeId::B2W2vAvgLogit => "B2",
            SchemeId::B3RandCnnSoftmax => "B3",
            SchemeId::B4W2vCnnSoftmax => "B4",
            SchemeId::B5RandCnnCodesLogit => "B5",
            SchemeId::ProposedW2vCnnCodesLogit => "PROPOSED",
        }
    }

    pub fn plan(self) -> SchemePlan {
        use EmbeddingInit::*;
        use Representation::*;
        let (representation, init, head) = match self {
            SchemeId::B1BowLogit => (StemmedTfidf, None, Head::Logistic),
            SchemeId::B2W2vAvgLogit => (AverageWord2vec, None, Head::Logistic),
            SchemeId::B3RandCnnSoftmax => (Cnn, Some(Random), Head::CnnSoftmax),
            SchemeId::B4W2vCnnSoftmax => (Cnn, Some(Word2vec), Head::CnnSoftmax),
            SchemeId::B5RandCnnCodesLogit => (Cnn, Some(Random), Head::Logistic),
            SchemeId::ProposedW2vCnnCodesLogit => (Cnn, Some(Word2vec), Head::Logistic),
        };
        SchemePlan {
            representation,
            embedding_init: init,
            head,
        }
    }

    pub fn needs_word2vec(self) -> bool {
        self == SchemeId::B2W2vAvgLogit || self.plan().embedding_init == Some(EmbeddingInit::Word2vec)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == upper || id.short_name() == upper)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    StemmedTfidf,
    AverageWord2vec,
    Cnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingInit {
    Random,
    Word2vec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// The CNN's own softmax layer, trained end to end.
    CnnSoftmax,
    /// Logistic regression on frozen features.
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemePlan {
    pub representation: Representation,
    pub embedding_init: Option<EmbeddingInit>,
    pub head: Head,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub cnn: CnnConfig,
    pub max_terms: usize,
    pub min_frequency: usize,
    pub logistic_l2: f64,
    /// Embedding width for randomly initialized CNNs when no word2vec table is loaded.
    pub embedding_dim: usize,
    /// Fixed input length; defaults to the longest training message.
    pub max_len: Option<usize>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            cnn: CnnConfig::default(),
            max_terms: DEFAULT_MAX_TERMS,
            min_frequency: DEFAULT_MIN_FREQUENCY,
            logistic_l2: DEFAULT_LOGISTIC_L2,
            embedding_dim: 300,
            max_len: None,
        }
    }
}

/// Training half of a split: texts with their labels.
#[derive(Debug, Clone, Copy)]
pub struct TrainSplit<'a> {
    pub texts: &'a [String],
    pub labels: &'a [IntentLabel],
}

/// Evaluation half of a split. Carries texts only, so nothing fitted from it
/// can see a label.
#[derive(Debug, Clone, Copy)]
pub struct TestSplit<'a> {
    pub texts: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: IntentLabel,
    pub probabilities: Vec<f64>,
}

/// A scheme fitted on a training split.
#[derive(Debug, Clone)]
pub enum FittedScheme<'t> {
    Tfidf {
        tfidf: TfidfModel,
        logistic: LogisticModel,
    },
    AverageVector {
        table: &'t EmbeddingTable,
        logistic: LogisticModel,
    },
    CnnSoftmax {
        vocabulary: Vocabulary,
        cnn: CnnModel,
    },
    CnnCodes(CodesArtifact),
}

/// Everything needed to classify new messages with CNN codes + logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodesArtifact {
    pub scheme: SchemeId,
    pub vocabulary: Vocabulary,
    pub cnn: CnnModel,
    pub logistic: LogisticModel,
}

impl CodesArtifact {
    pub fn predict(&self, texts: &[String]) -> Result<Vec<Prediction>> {
        if self.cnn.vocab_size() != self.vocabulary.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cnn.vocab_size(),
                got: self.vocabulary.len(),
            });
        }
        texts
            .iter()
            .map(|t| {
                let encoded = self.vocabulary.encode(&textproc::analyze(t), self.cnn.max_len);
                let codes = cnn_code_features(&self.cnn, &encoded)?;
                let (label, probabilities) = predict(&self.logistic, &codes.values)?;
                Ok(Prediction { label, probabilities })
            })
            .collect()
    }
}

fn stems(text: &str) -> Vec<String> {
    textproc::analyze(text).iter().map(|t| lovins_stem(t)).collect()
}

fn train_cnn(
    scheme: SchemeId,
    train: &TrainSplit<'_>,
    config: &SchemeConfig,
    table: Option<&EmbeddingTable>,
    seed: u64,
) -> Result<(Vocabulary, CnnModel)> {
    let tokens: Vec<Vec<String>> = train.texts.iter().map(|t| textproc::analyze(t)).collect();
    let vocabulary = fit_vocabulary(&tokens, config.min_frequency)?;
    let longest = tokens.iter().map(Vec::len).max().unwrap_or(0);
    let max_len = config.max_len.unwrap_or(longest).max(config.cnn.max_width());
    let init_table = match scheme.plan().embedding_init {
        Some(EmbeddingInit::Word2vec) => Some(table.ok_or_else(|| Error::MissingEmbeddings {
            scheme: scheme.to_string(),
        })?),
        _ => None,
    };
    let dimension = table.map_or(config.embedding_dim, EmbeddingTable::dimension);
    let embedding = build_embedding_matrix(&vocabulary, init_table, dimension, seed::derive(seed, &["embedding"], &[]))?;
    let examples: Vec<(Vec<usize>, usize)> = tokens
        .iter()
        .zip(train.labels)
        .map(|(t, l)| (vocabulary.encode(t, max_len), l.index()))
        .collect();
    let cnn_config = CnnConfig {
        seed: seed::derive(seed, &["cnn"], &[]),
        ..config.cnn.clone()
    };
    let trained = nnet::train(&cnn_config, embedding, max_len, IntentLabel::COUNT, &examples)?;
    log::debug!(
        "{scheme}: cnn trained, loss {:.4} -> {:.4}",
        trained.loss_history.first().unwrap_or(&f64::NAN),
        trained.loss_history.last().unwrap_or(&f64::NAN)
    );
    Ok((vocabulary, trained.model))
}

/// Fit every stage of `scheme` on the training split only.
pub fn fit_scheme<'t>(
    scheme: SchemeId,
    train: &TrainSplit<'_>,
    config: &SchemeConfig,
    table: Option<&'t EmbeddingTable>,
    seed: u64,
) -> Result<FittedScheme<'t>> {
    if train.texts.len() != train.labels.len() {
        return Err(Error::Invalid("training texts and labels differ in length".into()));
    }
    if scheme.needs_word2vec() && table.is_none() {
        return Err(Error::MissingEmbeddings {
            scheme: scheme.to_string(),
        });
    }
    match scheme.plan().representation {
        Representation::StemmedTfidf => {
            let docs: Vec<Vec<String>> = train.texts.iter().map(|t| stems(t)).collect();
            let tfidf = fit_tfidf(&docs, config.max_terms)?;
            let features: Vec<Vec<f64>> = docs.iter().map(|d| tfidf_transform(&tfidf, d).values).collect();
            let logistic = train_logistic(&features, train.labels, config.logistic_l2)?.model;
            Ok(FittedScheme::Tfidf { tfidf, logistic })
        }
        Representation::AverageWord2vec => {
            let table = table.expect("checked above");
            let features: Vec<Vec<f64>> = train
                .texts
                .iter()
                .map(|t| w2v_avg_features(&textproc::analyze(t), table).values)
                .collect();
            let logistic = train_logistic(&features, train.labels, config.logistic_l2)?.model;
            Ok(FittedScheme::AverageVector { table, logistic })
        }
        Representation::Cnn => {
            let (vocabulary, cnn) = train_cnn(scheme, train, config, table, seed)?;
            match scheme.plan().head {
                Head::CnnSoftmax => Ok(FittedScheme::CnnSoftmax { vocabulary, cnn }),
                Head::Logistic => {
                    let features = train
                        .texts
                        .iter()
                        .map(|t| {
                            let encoded = vocabulary.encode(&textproc::analyze(t), cnn.max_len);
                            Ok(cnn_code_features(&cnn, &encoded)?.values)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let logistic = train_logistic(&features, train.labels, config.logistic_l2)?.model;
                    Ok(FittedScheme::CnnCodes(CodesArtifact {
                        scheme,
                        vocabulary,
                        cnn,
                        logistic,
                    }))
                }
            }
        }
    }
}

impl FittedScheme<'_> {
    pub fn predict(&self, test: &TestSplit<'_>) -> Result<Vec<Prediction>> {
        let logistic_predict = |logistic: &LogisticModel, x: Vec<f64>| {
            let (label, probabilities) = predict(logistic, &x)?;
            Ok(Prediction { label, probabilities })
        };
        match self {
            FittedScheme::Tfidf { tfidf, logistic } => test
                .texts
                .iter()
                .map(|t| logistic_predict(logistic, tfidf_transform(tfidf, &stems(t)).values))
                .collect(),
            FittedScheme::AverageVector { table, logistic } => test
                .texts
                .iter()
                .map(|t| logistic_predict(logistic, w2v_avg_features(&textproc::analyze(t), table).values))
                .collect(),
            FittedScheme::CnnSoftmax { vocabulary, cnn } => test
                .texts
                .iter()
                .map(|t| {
                    let encoded = vocabulary.encode(&textproc::analyze(t), cnn.max_len);
                    let out = nnet::forward(cnn, &encoded, &mut DropoutSource::Off)?;
                    let probabilities = softmax(&out.logits);
                    Ok(Prediction {
                        label: IntentLabel::ALL[argmax(&probabilities)],
                        probabilities,
                    })
                })
                .collect(),
            FittedScheme::CnnCodes(artifact) => artifact.predict(test.texts),
        }
    }
}

/// Fit `scheme` on `train` and predict `test`.
pub fn run_scheme(
    scheme: SchemeId,
    train: &TrainSplit<'_>,
    test: &TestSplit<'_>,
    config: &SchemeConfig,
    table: Option<&EmbeddingTable>,
    seed: u64,
) -> Result<Vec<Prediction>> {
    fit_scheme(scheme, train, config, table, seed)?.predict(test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use IntentLabel::{Accusational, Sensational, Validational};

    fn separable() -> (Vec<Vec<f64>>, Vec<IntentLabel>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let t = i as f64 / 10.0;
            x.push(vec![1.0 + t, 0.5 - t]);
            y.push(Accusational);
            x.push(vec![-1.0 - t, 0.2 + t]);
            y.push(Sensational);
        }
        (x, y)
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        let (x, y) = separable();
        let fit = train_logistic(&x, &y, 0.0).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(predict(&fit.model, xi).unwrap().0, *yi);
        }
    }

    #[test]
    fn loss_never_increases() {
        let (x, y) = separable();
        for l2 in [0.0, 1e-4, 1.0] {
            let fit = train_logistic(&x, &y, l2).unwrap();
            assert!(fit.loss_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn regularization_shrinks_towards_priors() {
        // 3:1 class imbalance, overlapping features
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64 - 3.0, (i % 3) as f64]).collect();
        let y: Vec<IntentLabel> = (0..40).map(|i| if i % 4 == 0 { Validational } else { Accusational }).collect();
        let norms: Vec<f64> = [0.01, 1.0, 100.0]
            .iter()
            .map(|&l2| {
                let m = train_logistic(&x, &y, l2).unwrap().model;
                m.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
            })
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2]);
        let heavy = train_logistic(&x, &y, 100.0).unwrap().model;
        let (_, p) = predict(&heavy, &x[1]).unwrap();
        assert!((p[Accusational.index()] - 0.75).abs() < 0.02);
        assert!((p[Validational.index()] - 0.25).abs() < 0.02);
    }

    #[test]
    fn duplicated_training_set_gives_same_model() {
        let (x, y) = separable();
        let a = train_logistic(&x, &y, 0.1).unwrap().model;
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<IntentLabel> = y.iter().chain(&y).cloned().collect();
        let b = train_logistic(&x2, &y2, 0.1).unwrap().model;
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa - wb).abs() < 1e-5);
        }
        for xi in &x {
            assert_eq!(predict(&a, xi).unwrap().0, predict(&b, xi).unwrap().0);
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(train_logistic(&[vec![1.0], vec![2.0]], &[IntentLabel::None, IntentLabel::None], 0.0), Err(Error::SingleClass)));
        assert!(train_logistic(&[vec![1.0], vec![2.0, 3.0]], &[IntentLabel::None, Sensational], 0.0).is_err());
        assert!(train_logistic(&[], &[], 0.0).is_err());
    }

    #[test]
    fn predict_contracts() {
        let zero = LogisticModel {
            weights: vec![0.0; 8],
            bias: vec![0.0; 4],
            class_labels: IntentLabel::ALL.to_vec(),
            l2: 0.0,
        };
        let (label, p) = predict(&zero, &[1.0, -2.0]).unwrap();
        assert_eq!(label, Accusational);
        assert!(p.iter().all(|&q| (q - 0.25).abs() < 1e-15));
        assert!(predict(&zero, &[1.0]).is_err());

        let (x, y) = separable();
        let m = train_logistic(&x, &y, 1e-3).unwrap().model;
        let scaled = LogisticModel {
            weights: m.weights.iter().map(|w| w * 3.7).collect(),
            bias: m.bias.iter().map(|b| b * 3.7).collect(),
            ..m.clone()
        };
        let shifted = LogisticModel {
            bias: m.bias.iter().map(|b| b + 5.0).collect(),
            ..m.clone()
        };
        for xi in &x {
            let (l, p) = predict(&m, xi).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(predict(&scaled, xi).unwrap().0, l);
            assert_eq!(predict(&shifted, xi).unwrap().0, l);
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.as_str().parse::<SchemeId>().unwrap(), id);
            assert_eq!(id.short_name().parse::<SchemeId>().unwrap(), id);
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{}\"", id.as_str()));
        }
        assert!("B7".parse::<SchemeId>().is_err());
    }

    #[test]
    fn b3_b4_differ_only_in_embedding_init() {
        let b3 = SchemeId::B3RandCnnSoftmax.plan();
        let b4 = SchemeId::B4W2vCnnSoftmax.plan();
        assert_eq!(b3.representation, b4.representation);
        assert_eq!(b3.head, b4.head);
        assert_eq!(b3.embedding_init, Some(EmbeddingInit::Random));
        assert_eq!(b4.embedding_init, Some(EmbeddingInit::Word2vec));
    }

    #[test]
    fn b5_and_proposed_are_two_step() {
        let b5 = SchemeId::B5RandCnnCodesLogit.plan();
        let p = SchemeId::ProposedW2vCnnCodesLogit.plan();
        for plan in [b5, p] {
            assert_eq!(plan.representation, Representation::Cnn);
            assert_eq!(plan.head, Head::Logistic);
        }
        assert_eq!(b5.embedding_init, Some(EmbeddingInit::Random));
        assert_eq!(p.embedding_init, Some(EmbeddingInit::Word2vec));
    }

    #[test]
    fn word2vec_schemes_require_a_table() {
        let texts = vec!["a lie".to_string(), "hoax story".to_string()];
        let labels = vec![Accusational, Sensational];
        let train = TrainSplit { texts: &texts, labels: &labels };
        let test = TestSplit { texts: &texts };
        for id in [SchemeId::B2W2vAvgLogit, SchemeId::B4W2vCnnSoftmax, SchemeId::ProposedW2vCnnCodesLogit] {
            match run_scheme(id, &train, &test, &SchemeConfig::default(), None, 1) {
                Err(Error::MissingEmbeddings { scheme }) => assert_eq!(scheme, id.as_str()),
                other => panic!("expected missing embeddings, got {other:?}"),
            }
        }
    }
}

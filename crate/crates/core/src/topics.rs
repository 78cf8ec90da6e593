//! Collapsed Gibbs LDA over predicted intent categories, and a lexicon
//! category counter for psycholinguistic-style comparisons.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::corpus::{IntentLabel, LabeledMessage};
use crate::error::{Error, Result};
use crate::seed;
use crate::textproc::{self, lovins_stem, remove_stopwords, StopWords};

pub const DEFAULT_TOPICS: usize = 5;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_TOP_WORDS: usize = 20;
pub const MIN_PARTITION_DOCS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means `5 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            topics: DEFAULT_TOPICS,
            alpha: None,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
        }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(5.0 / self.topics as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Sorted word types; word ids index into this list.
    pub vocabulary: Vec<String>,
    pub documents: Vec<Vec<usize>>,
    pub assignments: Vec<Vec<usize>>,
    /// `topics x vocabulary`, row-major.
    pub topic_word: Vec<u32>,
    pub topic_totals: Vec<u32>,
    /// `documents x topics`, row-major.
    pub doc_topic: Vec<u32>,
    /// Collapsed joint log-likelihood log p(w, z) after each sweep.
    pub log_likelihood: Vec<f64>,
}

impl LdaModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// p(w | k) with the topic-word prior.
    pub fn word_probability(&self, topic: usize, word: usize) -> f64 {
        let v = self.vocab_size() as f64;
        (self.topic_word[topic * self.vocab_size() + word] as f64 + self.beta)
            / (self.topic_totals[topic] as f64 + v * self.beta)
    }

    /// Recount from the assignments and compare with the stored matrices.
    pub fn counts_consistent(&self) -> bool {
        let (k, v) = (self.topics, self.vocab_size());
        let mut tw = vec![0u32; k * v];
        let mut dt = vec![0u32; self.documents.len() * k];
        for (d, (doc, z)) in self.documents.iter().zip(&self.assignments).enumerate() {
            if doc.len() != z.len() {
                return false;
            }
            for (&w, &t) in doc.iter().zip(z) {
                tw[t * v + w] += 1;
                dt[d * k + t] += 1;
            }
        }
        let totals: Vec<u32> = (0..k).map(|t| tw[t * v..(t + 1) * v].iter().sum()).collect();
        tw == self.topic_word && dt == self.doc_topic && totals == self.topic_totals
    }

    fn joint_log_likelihood(&self) -> f64 {
        let (k, v) = (self.topics, self.vocab_size());
        let (a, b) = (self.alpha, self.beta);
        let vb = v as f64 * b;
        let ka = k as f64 * a;
        // zero counts contribute nothing once each term is taken relative to its prior
        let mut ll = 0.0;
        for t in 0..k {
            for w in 0..v {
                let n = self.topic_word[t * v + w];
                if n > 0 {
                    ll += ln_gamma(n as f64 + b) - ln_gamma(b);
                }
            }
            ll -= ln_gamma(self.topic_totals[t] as f64 + vb) - ln_gamma(vb);
        }
        for (d, doc) in self.documents.iter().enumerate() {
            for t in 0..k {
                let n = self.doc_topic[d * k + t];
                if n > 0 {
                    ll += ln_gamma(n as f64 + a) - ln_gamma(a);
                }
            }
            ll -= ln_gamma(doc.len() as f64 + ka) - ln_gamma(ka);
        }
        ll
    }
}

/// Collapsed Gibbs sampling. Each token's topic is resampled with probability
/// proportional to `(n_dk + alpha) (n_kw + beta) / (n_k + V beta)`, counts
/// excluding the token itself.
pub fn lda_fit<S: AsRef<str>>(documents: &[Vec<S>], params: &LdaParams, seed: u64) -> Result<LdaModel> {
    if params.topics < 1 {
        return Err(Error::Config("LDA needs at least one topic".into()));
    }
    if params.iterations < 1 {
        return Err(Error::Config("LDA needs at least one iteration".into()));
    }
    if !(params.beta > 0.0 && params.alpha() > 0.0) {
        return Err(Error::Config("LDA priors must be positive".into()));
    }
    let vocabulary: Vec<String> = documents
        .iter()
        .flatten()
        .map(|w| w.as_ref().to_owned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vocabulary.is_empty() {
        return Err(Error::Empty("LDA vocabulary"));
    }
    let ids: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let docs: Vec<Vec<usize>> = documents
        .iter()
        .map(|d| d.iter().map(|w| ids[w.as_ref()]).collect())
        .collect();

    let (k, v) = (params.topics, vocabulary.len());
    let mut rng = seed::rng(seed);
    let mut model = LdaModel {
        topics: k,
        alpha: params.alpha(),
        beta: params.beta,
        vocabulary,
        assignments: Vec::with_capacity(docs.len()),
        topic_word: vec![0; k * v],
        topic_totals: vec![0; k],
        doc_topic: vec![0; docs.len() * k],
        documents: docs,
        log_likelihood: Vec::with_capacity(params.iterations),
    };
    for (d, doc) in model.documents.iter().enumerate() {
        let z: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k)).collect();
        for (&w, &t) in doc.iter().zip(&z) {
            model.topic_word[t * v + w] += 1;
            model.topic_totals[t] += 1;
            model.doc_topic[d * k + t] += 1;
        }
        model.assignments.push(z);
    }

    let vb = v as f64 * model.beta;
    let mut weights = vec![0.0; k];
    for _ in 0..params.iterations {
        for d in 0..model.documents.len() {
            for i in 0..model.documents[d].len() {
                let w = model.documents[d][i];
                let old = model.assignments[d][i];
                model.topic_word[old * v + w] -= 1;
                model.topic_totals[old] -= 1;
                model.doc_topic[d * k + old] -= 1;

                let mut total = 0.0;
                for (t, wt) in weights.iter_mut().enumerate() {
                    *wt = (model.doc_topic[d * k + t] as f64 + model.alpha)
                        * (model.topic_word[t * v + w] as f64 + model.beta)
                        / (model.topic_totals[t] as f64 + vb);
                    total += *wt;
                }
                let mut u = rng.random::<f64>() * total;
                let mut new = k - 1;
                for (t, &wt) in weights.iter().enumerate() {
                    if u < wt {
                        new = t;
                        break;
                    }
                    u -= wt;
                }

                model.assignments[d][i] = new;
                model.topic_word[new * v + w] += 1;
                model.topic_totals[new] += 1;
                model.doc_topic[d * k + new] += 1;
            }
        }
        let ll = model.joint_log_likelihood();
        model.log_likelihood.push(ll);
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    /// Per topic, `(word, p(word | topic))` in descending probability.
    pub topics: Vec<Vec<(String, f64)>>,
}

/// Top `n` words of every topic by p(w|k), ties broken lexicographically.
pub fn top_words(model: &LdaModel, n: usize) -> TopicSummary {
    let topics = (0..model.topics)
        .map(|t| {
            let mut ranked: Vec<(String, f64)> = model
                .vocabulary
                .iter()
                .enumerate()
                .map(|(w, word)| (word.clone(), model.word_probability(t, w)))
                .collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(n);
            ranked
        })
        .collect();
    TopicSummary { topics }
}

/// Cleaning, stop-word removal and stemming applied before topic modeling.
pub fn topic_tokens(text: &str, stopwords: &StopWords) -> Vec<String> {
    remove_stopwords(&textproc::analyze(text), stopwords)
        .iter()
        .map(|t| lovins_stem(t))
        .collect()
}

#[derive(Debug, Clone)]
pub struct CategoryTopicsOptions {
    pub params: LdaParams,
    pub top_n: usize,
    pub include_none: bool,
    pub min_documents: usize,
}

impl Default for CategoryTopicsOptions {
    fn default() -> Self {
        CategoryTopicsOptions {
            params: LdaParams::default(),
            top_n: DEFAULT_TOP_WORDS,
            include_none: false,
            min_documents: MIN_PARTITION_DOCS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTopics {
    pub summaries: IndexMap<IntentLabel, TopicSummary>,
    pub skipped: Vec<IntentLabel>,
}

/// Fit one LDA model per predicted label. Documents are sorted by message id
/// first so the result does not depend on input order.
pub fn category_topics(
    messages: &[LabeledMessage],
    stopwords: &StopWords,
    options: &CategoryTopicsOptions,
    seed: u64,
) -> Result<CategoryTopics> {
    let mut out = CategoryTopics {
        summaries: IndexMap::new(),
        skipped: Vec::new(),
    };
    for label in IntentLabel::ALL {
        if label == IntentLabel::None && !options.include_none {
            continue;
        }
        let mut part: Vec<&LabeledMessage> = messages.iter().filter(|m| m.label == label).collect();
        part.sort_by(|a, b| a.message.id.cmp(&b.message.id));
        let docs: Vec<Vec<String>> = part.iter().map(|m| topic_tokens(&m.message.text, stopwords)).collect();
        if docs.len() < options.min_documents || docs.iter().all(Vec::is_empty) {
            warn!("{label}: {} documents, skipping topic model", docs.len());
            out.skipped.push(label);
            continue;
        }
        let model = lda_fit(&docs, &options.params, seed::derive(seed, &["lda"], &[label.index() as u64]))?;
        out.summaries.insert(label, top_words(&model, options.top_n));
    }
    Ok(out)
}

/// `{label: {topic_i: [[word, prob], ...]}}`
pub fn topics_json(result: &CategoryTopics) -> serde_json::Value {
    let mut root = serde_json::Map::new();
    for (label, summary) in &result.summaries {
        let mut topics = serde_json::Map::new();
        for (i, words) in summary.topics.iter().enumerate() {
            topics.insert(format!("topic_{i}"), serde_json::json!(words));
        }
        root.insert(label.to_string(), serde_json::Value::Object(topics));
    }
    serde_json::Value::Object(root)
}

/// Plain-text rendering: one block per label, topics side by side.
pub fn topics_text(result: &CategoryTopics) -> String {
    let mut s = String::new();
    for (label, summary) in &result.summaries {
        let _ = writeln!(s, "== {label} ==");
        let width = summary
            .topics
            .iter()
            .flatten()
            .map(|(w, _)| w.len())
            .max()
            .unwrap_or(5)
            .max(8);
        for i in 0..summary.topics.len() {
            let _ = write!(s, "{:<width$}  ", format!("topic_{i}"));
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        let rows = summary.topics.iter().map(Vec::len).max().unwrap_or(0);
        for r in 0..rows {
            for topic in &summary.topics {
                let word = topic.get(r).map_or("", |(w, _)| w.as_str());
                let _ = write!(s, "{word:<width$}  ");
            }
            s.truncate(s.trim_end().len());
            s.push('\n');
        }
        s.push('\n');
    }
    for label in &result.skipped {
        let _ = writeln!(s, "({label}: too few documents)");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconRates {
    /// Mean over messages of (matching tokens / total tokens), per category.
    pub rates: IndexMap<String, f64>,
    pub messages_counted: usize,
    pub messages_skipped: usize,
}

/// Messages without tokens are excluded from the means.
pub fn lexicon_category_counts<S: AsRef<str>>(texts: &[S], lexicons: &IndexMap<String, HashSet<String>>) -> Result<LexiconRates> {
    if lexicons.is_empty() {
        return Err(Error::Config("need at least one lexicon category".into()));
    }
    let mut sums = vec![0.0; lexicons.len()];
    let (mut counted, mut skipped) = (0, 0);
    for text in texts {
        let tokens = textproc::analyze(text.as_ref());
        if tokens.is_empty() {
            skipped += 1;
            continue;
        }
        counted += 1;
        for (sum, words) in sums.iter_mut().zip(lexicons.values()) {
            let hits = tokens.iter().filter(|t| words.contains(t.as_str())).count();
            *sum += hits as f64 / tokens.len() as f64;
        }
    }
    let rates = lexicons
        .keys()
        .zip(sums)
        .map(|(name, s)| (name.clone(), if counted == 0 { 0.0 } else { s / counted as f64 }))
        .collect();
    Ok(LexiconRates {
        rates,
        messages_counted: counted,
        messages_skipped: skipped,
    })
}

/// Parse `{name: [word, ...]}`; words are lowercased.
pub fn parse_lexicons(json: &str) -> Result<IndexMap<String, HashSet<String>>> {
    let raw: IndexMap<String, Vec<String>> = serde_json::from_str(json)?;
    Ok(raw
        .into_iter()
        .map(|(k, words)| (k, words.into_iter().map(|w| w.to_lowercase()).collect()))
        .collect())
}

/// Seeded sample of at most `n` items, returned in their original order.
pub fn seeded_sample<T: Clone>(items: &[T], n: usize, seed: u64) -> Vec<T> {
    if n >= items.len() {
        return items.to_vec();
    }
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut seed::rng(seed));
    idx.truncate(n);
    idx.sort_unstable();
    idx.into_iter().map(|i| items[i].clone()).collect()
}

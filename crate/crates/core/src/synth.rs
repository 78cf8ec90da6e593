//! Seeded generator for a synthetic labeled corpus and a matching word2vec
//! table, used for smoke runs and scheme comparisons when no real data is at
//! hand.
//!
//! Every message carries one adjacent cue pair `(a, b)`: `a` from one of two
//! lead groups, `b` from one of two tail groups. The pair of groups decides
//! the class:
//!
//! | lead \ tail | T1           | T2           |
//! |-------------|--------------|--------------|
//! | L1          | Accusational | Validational |
//! | L2          | Sensational  | None         |
//!
//! Each message also contains shared noise words and a few distractor cue
//! words placed so that they never form a second lead-tail pair. Cue words of
//! a group share a direction in the generated embedding space; noise words are
//! isotropic.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{IntentLabel, LabeledMessage, Message};
use crate::embeddings::EmbeddingTable;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub messages: usize,
    /// Class mixture in `IntentLabel::ALL` order.
    pub class_shares: [f64; 4],
    pub words_per_group: usize,
    pub noise_words: usize,
    pub noise_per_message: (usize, usize),
    pub max_distractors: usize,
    pub dimension: usize,
    /// Spread of cue words around their group direction, relative to the
    /// group direction's norm.
    pub cue_spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            messages: 1200,
            class_shares: [0.46, 0.14, 0.30, 0.10],
            words_per_group: 40,
            noise_words: 400,
            noise_per_message: (5, 12),
            max_distractors: 3,
            dimension: 50,
            cue_spread: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub messages: Vec<LabeledMessage>,
    pub embeddings: EmbeddingTable,
}

const LEAD: [usize; 2] = [0, 1];
const TAIL: [usize; 2] = [2, 3];

fn class_groups(label: IntentLabel) -> (usize, usize) {
    match label {
        IntentLabel::Accusational => (LEAD[0], TAIL[0]),
        IntentLabel::Validational => (LEAD[0], TAIL[1]),
        IntentLabel::Sensational => (LEAD[1], TAIL[0]),
        IntentLabel::None => (LEAD[1], TAIL[1]),
    }
}

fn cue_word(group: usize, i: usize) -> String {
    let prefix = ["lx", "ly", "tx", "ty"][group];
    format!("{prefix}{i:03}")
}

fn noise_word(i: usize) -> String {
    format!("nz{i:04}")
}

/// Zipf-like index in `0..n`: weight 1 / (rank + 2).
fn zipf(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

fn cumulative_zipf(n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|r| {
            acc += 1.0 / (r as f64 + 2.0);
            acc
        })
        .collect()
}

fn is_lead(word: &str) -> bool {
    word.starts_with('l')
}

fn is_tail(word: &str) -> bool {
    word.starts_with('t')
}

fn lead_tail_pairs(tokens: &[String]) -> usize {
    tokens.windows(2).filter(|w| is_lead(&w[0]) && is_tail(&w[1])).count()
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut rng = seed::rng(seed::derive(config.seed, &["synth", "corpus"], &[]));
    let cue_cdf = cumulative_zipf(config.words_per_group);
    let noise_cdf = cumulative_zipf(config.noise_words);
    let share_total: f64 = config.class_shares.iter().sum();

    // exact class counts from the mixture, remainder to the largest classes
    let mut counts: Vec<usize> = config
        .class_shares
        .iter()
        .map(|s| (s / share_total * config.messages as f64).floor() as usize)
        .collect();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| config.class_shares[b].total_cmp(&config.class_shares[a]));
    let mut missing = config.messages - counts.iter().sum::<usize>();
    for &c in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[c] += 1;
        missing -= 1;
    }
    let mut labels: Vec<IntentLabel> = counts
        .iter()
        .zip(IntentLabel::ALL)
        .flat_map(|(&n, l)| std::iter::repeat(l).take(n))
        .collect();
    labels.shuffle(&mut rng);

    let mut messages = Vec::with_capacity(config.messages);
    for (i, label) in labels.into_iter().enumerate() {
        let (lead, tail) = class_groups(label);
        let (lo, hi) = config.noise_per_message;
        let tokens = loop {
            let mut tokens: Vec<String> = (0..rng.random_range(lo..=hi))
                .map(|_| noise_word(zipf(&mut rng, &noise_cdf)))
                .collect();
            for _ in 0..rng.random_range(0..=config.max_distractors) {
                let group = rng.random_range(0..4);
                let pos = rng.random_range(0..=tokens.len());
                tokens.insert(pos, cue_word(group, zipf(&mut rng, &cue_cdf)));
            }
            // the planted pair adds exactly one lead-tail window, so any
            // other count means the distractors formed a pair of their own
            let at = rng.random_range(0..=tokens.len());
            tokens.insert(at, cue_word(tail, zipf(&mut rng, &cue_cdf)));
            tokens.insert(at, cue_word(lead, zipf(&mut rng, &cue_cdf)));
            if lead_tail_pairs(&tokens) == 1 {
                break tokens;
            }
        };
        messages.push(LabeledMessage {
            message: Message {
                id: format!("syn{:05}", i),
                text: tokens.join(" "),
                created_at: None,
                ordinal: i,
            },
            label,
            confidence: 1.0,
        });
    }

    SynthCorpus {
        messages,
        embeddings: embeddings(config),
    }
}

fn embeddings(config: &SynthConfig) -> EmbeddingTable {
    let mut rng = seed::rng(seed::derive(config.seed, &["synth", "embeddings"], &[]));
    let d = config.dimension;
    let unit = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid normal");
    let draw = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> { (0..d).map(|_| unit.sample(rng) * scale).collect() };
    let centers: Vec<Vec<f64>> = (0..4).map(|_| draw(&mut rng, 1.0)).collect();
    let mut table = EmbeddingTable::new(d);
    for (g, center) in centers.iter().enumerate() {
        for i in 0..config.words_per_group {
            let jitter = draw(&mut rng, config.cue_spread);
            let v: Vec<f32> = center.iter().zip(&jitter).map(|(c, j)| (c + j) as f32).collect();
            table.push(cue_word(g, i), &v).expect("dimension matches");
        }
    }
    for i in 0..config.noise_words {
        let v: Vec<f32> = draw(&mut rng, 1.0).into_iter().map(|x| x as f32).collect();
        table.push(noise_word(i), &v).expect("dimension matches");
    }
    table
}

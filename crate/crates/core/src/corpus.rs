//! Message ingestion, myth-lexicon filtering, near-duplicate removal and
//! aggregation of crowd annotations into final intent labels.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc;

/// The nine myth terms used to build the filtered subset.
pub const DEFAULT_LEXICON: [&str; 9] = [
    "lie",
    "lying",
    "lied",
    "liar",
    "hoax",
    "fake",
    "false",
    "fabricated",
    "made up",
];

pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.8;
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.67;
pub const MIN_ANNOTATIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    /// Line index in the source file.
    #[serde(skip)]
    pub ordinal: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IntentLabel {
    Accusational,
    Validational,
    Sensational,
    None,
}

impl IntentLabel {
    /// Canonical class order; also the argmax tie-break order.
    pub const ALL: [IntentLabel; 4] = [
        IntentLabel::Accusational,
        IntentLabel::Validational,
        IntentLabel::Sensational,
        IntentLabel::None,
    ];

    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntentLabel::Accusational => "Accusational",
            IntentLabel::Validational => "Validational",
            IntentLabel::Sensational => "Sensational",
            IntentLabel::None => "None",
        }
    }
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub message_id: String,
    pub annotator_id: String,
    pub label: IntentLabel,
    pub trust: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMessage {
    pub message: Message,
    pub label: IntentLabel,
    pub confidence: f64,
}

/// Wire form of a labeled message: `{id, text, label, confidence}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub id: String,
    pub text: String,
    pub label: IntentLabel,
    #[serde(default = "one")]
    pub confidence: f64,
}

fn one() -> f64 {
    1.0
}

impl From<&LabeledMessage> for LabeledRecord {
    fn from(m: &LabeledMessage) -> Self {
        LabeledRecord {
            id: m.message.id.clone(),
            text: m.message.text.clone(),
            label: m.label,
            confidence: m.confidence,
        }
    }
}

/// Messages read from a JSONL stream plus the number of lines that were skipped.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub items: Vec<T>,
    pub malformed: usize,
}

impl<T> Default for Loaded<T> {
    fn default() -> Self {
        Loaded {
            items: Vec::new(),
            malformed: 0,
        }
    }
}

#[derive(Deserialize)]
struct RawMessage {
    id: String,
    text: String,
    #[serde(default)]
    created_at: Option<String>,
}

/// Read one JSON object per line. Blank lines are ignored; malformed lines,
/// empty ids and repeated ids are skipped and counted.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Loaded<Message>> {
    let mut out = Loaded::default();
    let mut seen = HashSet::new();
    for (ordinal, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawMessage>(&line) {
            Ok(raw) if !raw.id.is_empty() && seen.insert(raw.id.clone()) => {
                out.items.push(Message {
                    id: raw.id,
                    text: raw.text,
                    created_at: raw.created_at,
                    ordinal,
                });
            }
            Ok(raw) => {
                warn!("line {}: empty or duplicate id `{}`", ordinal + 1, raw.id);
                out.malformed += 1;
            }
            Err(e) => {
                warn!("line {}: {}", ordinal + 1, e);
                out.malformed += 1;
            }
        }
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Loaded<Message>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file))
}

pub fn write_corpus<W: Write>(mut writer: W, messages: &[Message]) -> Result<()> {
    for m in messages {
        serde_json::to_writer(&mut writer, m)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_labeled<R: BufRead>(reader: R) -> Result<Loaded<LabeledMessage>> {
    let mut out = Loaded::default();
    let mut seen = HashSet::new();
    for (ordinal, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LabeledRecord>(&line) {
            Ok(r) if !r.id.is_empty() && seen.insert(r.id.clone()) => {
                out.items.push(LabeledMessage {
                    message: Message {
                        id: r.id,
                        text: r.text,
                        created_at: None,
                        ordinal,
                    },
                    label: r.label,
                    confidence: r.confidence,
                });
            }
            Ok(r) => {
                warn!("line {}: empty or duplicate id `{}`", ordinal + 1, r.id);
                out.malformed += 1;
            }
            Err(e) => {
                warn!("line {}: {}", ordinal + 1, e);
                out.malformed += 1;
            }
        }
    }
    Ok(out)
}

pub fn load_labeled(path: impl AsRef<Path>) -> Result<Loaded<LabeledMessage>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_labeled(BufReader::new(file))
}

pub fn write_labeled<W: Write>(mut writer: W, messages: &[LabeledMessage]) -> Result<()> {
    for m in messages {
        serde_json::to_writer(&mut writer, &LabeledRecord::from(m))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Set of lexicon entries, each a sequence of one or more lowercase tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries: Vec<Vec<String>> = terms
            .into_iter()
            .map(|t| textproc::analyze(t.as_ref()))
            .filter(|e| !e.is_empty())
            .collect();
        entries.sort();
        entries.dedup();
        if entries.is_empty() {
            return Err(Error::Config("lexicon must contain at least one term".into()));
        }
        Ok(Lexicon { entries })
    }

    pub fn matches(&self, text: &str) -> bool {
        let tokens = textproc::analyze(text);
        self.entries
            .iter()
            .any(|entry| tokens.windows(entry.len()).any(|w| w == entry.as_slice()))
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::new(DEFAULT_LEXICON).expect("default lexicon is nonempty")
    }
}

pub fn lexicon_filter(messages: &[Message], lexicon: &Lexicon) -> Vec<Message> {
    messages
        .iter()
        .filter(|m| lexicon.matches(&m.text))
        .cloned()
        .collect()
}

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &[char], b: &[char]) -> usize {
    if a.len() < b.len() {
        return edit_distance(b, a);
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn similarity_chars(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / longest as f64
}

/// `1 - distance / max(|a|, |b|)`, with two empty strings fully similar.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    similarity_chars(&a, &b)
}

/// Greedy near-duplicate removal in ordinal order. A message survives iff its
/// lowercased text is less than `threshold` similar to every earlier survivor.
pub fn dedup(messages: &[Message], threshold: f64) -> Result<Vec<Message>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!("dedup threshold {threshold} outside (0, 1]")));
    }
    let mut order: Vec<&Message> = messages.iter().collect();
    order.sort_by_key(|m| m.ordinal);

    let mut kept: Vec<(&Message, Vec<char>)> = Vec::new();
    for m in order {
        let chars: Vec<char> = m.text.to_lowercase().chars().collect();
        let duplicate = kept.iter().any(|(_, other)| {
            let (short, long) = if chars.len() <= other.len() {
                (chars.len(), other.len())
            } else {
                (other.len(), chars.len())
            };
            // similarity <= short / long, so such pairs can never reach the threshold
            if long > 0 && (short as f64) < threshold * long as f64 {
                return false;
            }
            similarity_chars(&chars, other) >= threshold
        });
        if !duplicate {
            kept.push((m, chars));
        }
    }
    Ok(kept.into_iter().map(|(m, _)| m.clone()).collect())
}

pub fn read_annotations<R: Read>(reader: R) -> Result<Vec<Annotation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let a: Annotation = row?;
        out.push(a);
    }
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(BufReader::new(file))
}

/// Trust-weighted label decided for one message.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedLabel {
    pub message_id: String,
    pub label: IntentLabel,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Aggregation {
    /// Accepted labels, sorted by message id.
    pub labels: Vec<AggregatedLabel>,
    /// Messages with fewer than three annotations.
    pub under_annotated: Vec<String>,
    /// Messages whose best label tied or did not clear the threshold.
    pub rejected: Vec<String>,
}

/// Per message, the confidence of label L is the trust of annotators choosing L
/// over the total trust on that message. The argmax is accepted only if its
/// confidence strictly exceeds `confidence_threshold` and is not tied.
pub fn aggregate_annotations(annotations: &[Annotation], confidence_threshold: f64) -> Result<Aggregation> {
    let mut by_message: BTreeMap<&str, Vec<&Annotation>> = BTreeMap::new();
    let mut pairs = HashSet::new();
    for a in annotations {
        if !(a.trust > 0.0 && a.trust <= 1.0) {
            return Err(Error::Invalid(format!(
                "annotation {}/{} has trust {} outside (0, 1]",
                a.message_id, a.annotator_id, a.trust
            )));
        }
        if !pairs.insert((a.message_id.as_str(), a.annotator_id.as_str())) {
            return Err(Error::Invalid(format!(
                "annotator {} labeled message {} more than once",
                a.annotator_id, a.message_id
            )));
        }
        by_message.entry(&a.message_id).or_default().push(a);
    }

    let mut out = Aggregation::default();
    for (id, group) in by_message {
        if group.len() < MIN_ANNOTATIONS {
            warn!("message {id}: {} annotations, need {MIN_ANNOTATIONS}", group.len());
            out.under_annotated.push(id.to_owned());
            continue;
        }
        let mut weight = [0.0f64; IntentLabel::COUNT];
        for a in &group {
            weight[a.label.index()] += a.trust;
        }
        let total: f64 = weight.iter().sum();
        let best = weight.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..IntentLabel::COUNT).filter(|&i| weight[i] == best).collect();
        let confidence = best / total;
        if winners.len() == 1 && confidence > confidence_threshold {
            out.labels.push(AggregatedLabel {
                message_id: id.to_owned(),
                label: IntentLabel::ALL[winners[0]],
                confidence,
            });
        } else {
            out.rejected.push(id.to_owned());
        }
    }
    Ok(out)
}

/// Join aggregated labels onto their messages, in message order. Labels whose
/// message is missing are dropped.
pub fn attach_labels(messages: &[Message], labels: &[AggregatedLabel]) -> Vec<LabeledMessage> {
    let lookup: BTreeMap<&str, &AggregatedLabel> =
        labels.iter().map(|l| (l.message_id.as_str(), l)).collect();
    messages
        .iter()
        .filter_map(|m| {
            lookup.get(m.id.as_str()).map(|l| LabeledMessage {
                message: m.clone(),
                label: l.label,
                confidence: l.confidence,
            })
        })
        .collect()
}

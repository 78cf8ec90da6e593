//! The three message representations compared by the schemes: tf-idf over
//! stems, averaged word2vec vectors and CNN codes.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::embeddings::{average_vector, EmbeddingTable};
use crate::error::{Error, Result};
use crate::nnet::{extract_cnn_codes, CnnModel};

pub const DEFAULT_MAX_TERMS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeatureScheme {
    BowTfidf,
    W2vAvg,
    CnnCodes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub scheme: FeatureScheme,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TfidfRepr")]
pub struct TfidfModel {
    pub terms: Vec<String>,
    pub document_frequency: Vec<usize>,
    pub corpus_size: usize,
    #[serde(skip_serializing)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct TfidfRepr {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    corpus_size: usize,
}

impl From<TfidfRepr> for TfidfModel {
    fn from(r: TfidfRepr) -> Self {
        let mut m = TfidfModel {
            terms: r.terms,
            document_frequency: r.document_frequency,
            corpus_size: r.corpus_size,
            index: HashMap::new(),
        };
        m.reindex();
        m
    }
}

impl TfidfModel {
    fn reindex(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn dimension(&self) -> usize {
        self.terms.len()
    }

    pub fn idf(&self, term: usize) -> f64 {
        (self.corpus_size as f64 / self.document_frequency[term] as f64).ln()
    }
}

/// Keep the `max_terms` most frequent stems (total occurrences, ties
/// lexicographic) and record their document frequencies.
pub fn fit_tfidf<S: AsRef<str>>(documents: &[Vec<S>], max_terms: usize) -> Result<TfidfModel> {
    if documents.is_empty() {
        return Err(Error::Empty("tf-idf corpus"));
    }
    if max_terms == 0 {
        return Err(Error::Config("max_terms must be at least 1".into()));
    }
    let mut freq: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for doc in documents {
        let mut seen = HashSet::new();
        for t in doc {
            let entry = freq.entry(t.as_ref()).or_default();
            entry.0 += 1;
            if seen.insert(t.as_ref()) {
                entry.1 += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, (usize, usize))> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_terms);
    let mut model = TfidfModel {
        terms: ranked.iter().map(|(t, _)| t.to_string()).collect(),
        document_frequency: ranked.iter().map(|(_, (_, df))| *df).collect(),
        corpus_size: documents.len(),
        index: HashMap::new(),
    };
    model.reindex();
    Ok(model)
}

/// Raw term count times `ln(N / df)`, unnormalized; unselected terms ignored.
pub fn tfidf_transform<S: AsRef<str>>(model: &TfidfModel, document: &[S]) -> FeatureVector {
    let mut values = vec![0.0; model.dimension()];
    for t in document {
        if let Some(&i) = model.index.get(t.as_ref()) {
            values[i] += 1.0;
        }
    }
    for (i, v) in values.iter_mut().enumerate() {
        *v *= model.idf(i);
    }
    FeatureVector {
        scheme: FeatureScheme::BowTfidf,
        values,
    }
}

pub fn w2v_avg_features<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> FeatureVector {
    FeatureVector {
        scheme: FeatureScheme::W2vAvg,
        values: average_vector(tokens, table),
    }
}

pub fn cnn_code_features(model: &CnnModel, encoded: &[usize]) -> Result<FeatureVector> {
    Ok(FeatureVector {
        scheme: FeatureScheme::CnnCodes,
        values: extract_cnn_codes(model, encoded)?,
    })
}

/// CSV with one row per message: id followed by the feature components.
pub fn write_feature_csv<W: Write>(writer: W, ids: &[String], rows: &[FeatureVector]) -> Result<()> {
    let dim = rows.first().map_or(0, FeatureVector::dimension);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["message_id".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for (id, row) in ids.iter().zip(rows) {
        if row.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.dimension(),
            });
        }
        let mut record = vec![id.clone()];
        record.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

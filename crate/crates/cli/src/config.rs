//! Pipeline configuration: built-in defaults, then an optional TOML file,
//! then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use intent_core::classify::{SchemeConfig, SchemeId};
use intent_core::corpus::{DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_DEDUP_THRESHOLD, DEFAULT_LEXICON};
use intent_core::eval::DEFAULT_FOLDS;
use intent_core::topics::{CategoryTopicsOptions, LdaParams, DEFAULT_TOP_WORDS, MIN_PARTITION_DOCS};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SAMPLE_SIZE: usize = 2000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSettings {
    pub topics: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub top_n: usize,
    pub include_none: bool,
    pub min_documents: usize,
}

impl Default for LdaSettings {
    fn default() -> Self {
        let p = LdaParams::default();
        LdaSettings {
            topics: p.topics,
            alpha: p.alpha,
            beta: p.beta,
            iterations: p.iterations,
            top_n: DEFAULT_TOP_WORDS,
            include_none: false,
            min_documents: MIN_PARTITION_DOCS,
        }
    }
}

impl LdaSettings {
    pub fn options(&self) -> CategoryTopicsOptions {
        CategoryTopicsOptions {
            params: LdaParams {
                topics: self.topics,
                alpha: self.alpha,
                beta: self.beta,
                iterations: self.iterations,
            },
            top_n: self.top_n,
            include_none: self.include_none,
            min_documents: self.min_documents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub k_folds: usize,
    pub schemes: Vec<SchemeId>,
    pub dedup_threshold: f64,
    pub confidence_threshold: f64,
    pub lexicon: Vec<String>,
    pub sample_size: usize,
    pub paths: Paths,
    pub scheme: SchemeConfig,
    pub lda: LdaSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out_dir: PathBuf::from("."),
            k_folds: DEFAULT_FOLDS,
            schemes: SchemeId::ALL.to_vec(),
            dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            lexicon: DEFAULT_LEXICON.iter().map(|s| s.to_string()).collect(),
            sample_size: DEFAULT_SAMPLE_SIZE,
            paths: Paths::default(),
            scheme: SchemeConfig::default(),
            lda: LdaSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Parse a comma-separated scheme list such as `B1,PROPOSED`.
pub fn parse_schemes(list: &str) -> Result<Vec<SchemeId>> {
    let schemes = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<SchemeId>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    anyhow::ensure!(!schemes.is_empty(), "no schemes selected");
    Ok(schemes)
}

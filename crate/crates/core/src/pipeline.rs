//! End-to-end build: parse, preprocess, phrases, vocabulary, TF-IDF,
//! CluWords, NMF, assignment, pertinence and statistics.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::correlation::{corpus_stats, EntityKind, EntityMap, EntityPertinence};
use crate::corpus::{
    build_vocabulary, parse_corpus, preprocess_corpus, CorpusFormat, PatentRecord, ProcessedDocument, Stoplist,
    Vocabulary,
};
use crate::error::{Error, Result};
use crate::factorization::{nmf_fit, NmfParams};
use crate::representation::{
    apply_phrases, build_cluwords, compute_tfidf, fit_phrases, load_embeddings, semantic_neighbors, DocTermMatrix,
    EmbeddingTable, PhraseModel,
};
use crate::store::{ModelStore, Snapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub embeddings: PathBuf,
    /// Extra stopwords merged into the bundled SMART list.
    pub stoplist: Option<PathBuf>,
    pub topics: usize,
    pub top_words: usize,
    pub min_len: usize,
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub phrase_min_count: usize,
    pub phrase_threshold: f64,
    pub neighbors: usize,
    pub alpha: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::new(),
            embeddings: PathBuf::new(),
            stoplist: None,
            topics: 30,
            top_words: 30,
            min_len: 3,
            min_df: 2,
            max_df_ratio: 0.95,
            phrase_min_count: 5,
            phrase_threshold: 0.5,
            neighbors: 100,
            alpha: 0.4,
            max_iter: 500,
            tol: 1e-6,
            seed: 42,
            out: PathBuf::new(),
        }
    }
}

impl PipelineConfig {
    pub fn nmf_params(&self) -> NmfParams {
        NmfParams {
            k: self.topics,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if self.topics == 0 {
            return fail("topics must be >= 1".into());
        }
        if self.top_words == 0 {
            return fail("top_words must be >= 1".into());
        }
        if self.min_len == 0 || self.min_df == 0 || self.phrase_min_count == 0 || self.neighbors == 0 {
            return fail("min_len, min_df, phrase_min_count and neighbors must be >= 1".into());
        }
        if !(self.max_df_ratio > 0.0 && self.max_df_ratio <= 1.0) {
            return fail(format!("max_df_ratio must be in (0, 1], got {}", self.max_df_ratio));
        }
        if !(-1.0..=1.0).contains(&self.phrase_threshold) {
            return fail(format!("phrase_threshold must be in [-1, 1], got {}", self.phrase_threshold));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return fail("max_iter must be >= 1 and tol > 0".into());
        }
        Ok(())
    }

    pub fn load_stoplist(&self) -> Result<Stoplist> {
        let mut stop = Stoplist::smart();
        if let Some(path) = &self.stoplist {
            stop.extend(Stoplist::load(path)?);
        }
        Ok(stop)
    }
}

/// Intermediate products of the text representation stages.
#[derive(Debug, Clone)]
pub struct Representation {
    pub documents: Vec<ProcessedDocument>,
    pub phrases: PhraseModel,
    pub vocabulary: Arc<Vocabulary>,
    pub tfidf: DocTermMatrix,
    pub cluwords: DocTermMatrix,
}

pub fn represent(
    records: &[PatentRecord],
    stoplist: &Stoplist,
    embeddings: &EmbeddingTable,
    config: &PipelineConfig,
) -> Result<Representation> {
    let tokens = preprocess_corpus(records, stoplist, config.min_len).map_err(|e| e.in_stage("preprocess"))?;
    let phrases = fit_phrases(&tokens, config.phrase_min_count, config.phrase_threshold)
        .map_err(|e| e.in_stage("phrases"))?;
    let documents: Vec<ProcessedDocument> = tokens.iter().map(|d| apply_phrases(d, &phrases)).collect();
    let vocabulary = Arc::new(
        build_vocabulary(&documents, config.min_df, config.max_df_ratio).map_err(|e| e.in_stage("vocabulary"))?,
    );
    let tfidf = compute_tfidf(&documents, vocabulary.clone()).map_err(|e| e.in_stage("tfidf"))?;
    let neighbors = semantic_neighbors(embeddings, &vocabulary, config.neighbors, config.alpha)
        .map_err(|e| e.in_stage("cluwords"))?;
    let cluwords = build_cluwords(&tfidf, &neighbors).map_err(|e| e.in_stage("cluwords"))?;
    Ok(Representation {
        documents,
        phrases,
        vocabulary,
        tfidf,
        cluwords,
    })
}

/// Runs every stage in memory without touching the output directory.
pub fn run(config: &PipelineConfig) -> Result<Snapshot> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let records = parse_corpus(&config.input, CorpusFormat::JsonLines).map_err(|e| e.in_stage("parse"))?;
    if records.is_empty() {
        return Err(Error::EmptyCorpus.in_stage("parse"));
    }
    let stoplist = config.load_stoplist().map_err(|e| e.in_stage("stoplist"))?;
    let embeddings = load_embeddings(&config.embeddings).map_err(|e| e.in_stage("embeddings"))?;
    run_with(records, &stoplist, &embeddings, config)
}

pub fn run_with(
    records: Vec<PatentRecord>,
    stoplist: &Stoplist,
    embeddings: &EmbeddingTable,
    config: &PipelineConfig,
) -> Result<Snapshot> {
    let repr = represent(&records, stoplist, embeddings, config)?;
    let model = nmf_fit(&repr.cluwords, config.nmf_params()).map_err(|e| e.in_stage("nmf"))?;
    let assignments = model.assign_topics();

    let mut pertinence = BTreeMap::new();
    for kind in EntityKind::ALL {
        let map = EntityMap::from_corpus(kind, &records);
        let pert = EntityPertinence::compute(&model.h, model.row_ids(), &map).map_err(|e| e.in_stage("correlation"))?;
        pertinence.insert(kind, pert);
    }
    let stats = corpus_stats(&records, &assignments);
    Ok(Snapshot {
        config: config.clone(),
        corpus: records,
        model,
        assignments,
        pertinence,
        stats,
    })
}

/// Runs the pipeline and persists the result under `config.out`. Nothing is
/// left behind on failure.
pub fn build(config: &PipelineConfig) -> Result<(ModelStore, Snapshot)> {
    let snapshot = run(config)?;
    let store = ModelStore::create(&config.out, &snapshot).map_err(|e| e.in_stage("persist"))?;
    Ok((store, snapshot))
}

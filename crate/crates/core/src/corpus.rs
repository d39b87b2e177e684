//! Patent import, text normalization and vocabulary construction.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SMART_STOPLIST: &str = include_str!("../data/smart.txt");

/// One imported patent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatentRecord {
    pub id: String,
    pub title: String,
    pub description: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    /// Molecule name.
    pub drug: String,
    pub company: String,
    pub url: String,
    #[serde(default)]
    pub strength: String,
    #[serde(default)]
    pub trade_name: String,
    #[serde(default)]
    pub inventors: Vec<String>,
    #[serde(default)]
    pub filed_year: Option<i32>,
    #[serde(default)]
    pub granted_year: Option<i32>,
}

impl PatentRecord {
    /// Text fed to the model: title followed by description.
    pub fn modeling_text(&self) -> String {
        format!("{} {}", self.title, self.description)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    #[default]
    JsonLines,
}

pub fn parse_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<PatentRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::JsonLines => parse_jsonl(&text, path),
    }
}

/// Parses JSON Lines content. `origin` is only used in error messages.
pub fn parse_jsonl(text: &str, origin: &Path) -> Result<Vec<PatentRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: PatentRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if record.id.trim().is_empty() {
            return Err(Error::EmptyId(line_no));
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        records.push(record);
    }
    Ok(records)
}

/// Set of lowercase words removed during preprocessing.
#[derive(Debug, Clone, Default)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled SMART list.
    pub fn smart() -> Self {
        Self::from_lines(SMART_STOPLIST)
    }

    /// One word per line; blank lines and `#` comments ignored.
    pub fn from_lines(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty() && !w.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stoplist { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_lines(&text))
    }

    pub fn extend(&mut self, other: Stoplist) {
        self.words.extend(other.words);
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stoplist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stoplist {
            words: iter.into_iter().map(|s| s.into().to_lowercase()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessedDocument {
    pub patent_id: String,
    pub tokens: Vec<String>,
}

impl ProcessedDocument {
    pub fn new(patent_id: impl Into<String>, tokens: Vec<String>) -> Self {
        ProcessedDocument {
            patent_id: patent_id.into(),
            tokens,
        }
    }
}

/// Lowercases, splits on non-alphanumeric runs and drops stopwords, short
/// tokens and purely numeric tokens.
pub fn preprocess(text: &str, stoplist: &Stoplist, min_len: usize) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|tok| !tok.is_empty())
        .filter(|tok| tok.chars().count() >= min_len)
        .filter(|tok| !tok.chars().all(|c| c.is_numeric()))
        .filter(|tok| !stoplist.contains(tok))
        .map(str::to_owned)
        .collect()
}

pub fn preprocess_corpus(
    records: &[PatentRecord],
    stoplist: &Stoplist,
    min_len: usize,
) -> Result<Vec<ProcessedDocument>> {
    if min_len == 0 {
        return Err(Error::InvalidParameter("min_len must be >= 1".into()));
    }
    use rayon::prelude::*;
    Ok(records
        .par_iter()
        .map(|r| ProcessedDocument::new(r.id.clone(), preprocess(&r.modeling_text(), stoplist, min_len)))
        .collect())
}

/// Term dictionary with deterministic (lexicographic) column ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_frequency: Vec<usize>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Builds from `(term, df)` pairs; terms are sorted and must be distinct.
    pub fn from_terms(mut entries: Vec<(String, usize)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate vocabulary term".into()));
        }
        let (terms, doc_frequency) = entries.into_iter().unzip();
        let mut vocab = Vocabulary {
            terms,
            doc_frequency,
            index: BTreeMap::new(),
        };
        vocab.rebuild_index();
        Ok(vocab)
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_frequency(&self, term: &str) -> Option<usize> {
        self.id(term).map(|i| self.doc_frequency[i])
    }

    pub fn doc_frequency_by_id(&self, id: usize) -> usize {
        self.doc_frequency[id]
    }
}

pub fn build_vocabulary(
    docs: &[ProcessedDocument],
    min_df: usize,
    max_df_ratio: f64,
) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(Error::InvalidParameter("min_df must be >= 1".into()));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "max_df_ratio must be in (0, 1], got {max_df_ratio}"
        )));
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let max_df = (max_df_ratio * docs.len() as f64).ceil() as usize;

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let retained: Vec<(String, usize)> = df
        .into_iter()
        .filter(|&(_, d)| d >= min_df && d <= max_df)
        .map(|(t, d)| (t.to_owned(), d))
        .collect();
    if retained.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Vocabulary::from_terms(retained)
}

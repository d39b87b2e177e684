use std::collections::{BTreeSet, HashMap};

use crate::corpus::ProcessedDocument;
use crate::error::{Error, Result};

/// Accepted adjacent word pairs, joined into single tokens by [`apply_phrases`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseModel {
    pub min_count: usize,
    pub threshold: f64,
    accepted: BTreeSet<(String, String)>,
}

impl PhraseModel {
    pub fn with_pairs<I, A, B>(min_count: usize, threshold: f64, pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        PhraseModel {
            min_count,
            threshold,
            accepted: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    pub fn accepted(&self) -> &BTreeSet<(String, String)> {
        &self.accepted
    }

    pub fn accepts(&self, a: &str, b: &str) -> bool {
        // BTreeSet<(String, String)> can't be probed with borrowed halves.
        self.accepted.contains(&(a.to_owned(), b.to_owned()))
    }
}

/// Normalized PMI with a single corpus-size denominator:
/// `ln(c_ab * N / (c_a * c_b)) / -ln(c_ab / N)`.
pub fn npmi(pair_count: usize, count_a: usize, count_b: usize, total: usize) -> f64 {
    let n = total as f64;
    let p_ab = pair_count as f64 / n;
    let p_a = count_a as f64 / n;
    let p_b = count_b as f64 / n;
    (p_ab / (p_a * p_b)).ln() / -p_ab.ln()
}

pub fn fit_phrases(docs: &[ProcessedDocument], min_count: usize, threshold: f64) -> Result<PhraseModel> {
    if min_count == 0 {
        return Err(Error::InvalidParameter("phrase min_count must be >= 1".into()));
    }
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "phrase threshold must be in [-1, 1], got {threshold}"
        )));
    }
    let mut unigrams: HashMap<&str, usize> = HashMap::new();
    let mut pairs: HashMap<(&str, &str), usize> = HashMap::new();
    let mut total = 0usize;
    for doc in docs {
        total += doc.tokens.len();
        for tok in &doc.tokens {
            *unigrams.entry(tok).or_insert(0) += 1;
        }
        for w in doc.tokens.windows(2) {
            *pairs.entry((&w[0], &w[1])).or_insert(0) += 1;
        }
    }
    if total < 2 {
        return Err(Error::InvalidParameter(format!(
            "phrase fitting needs at least 2 tokens, corpus has {total}"
        )));
    }
    let accepted = pairs
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .filter(|&((a, b), c)| npmi(c, unigrams[a], unigrams[b], total) >= threshold)
        .map(|((a, b), _)| (a.to_owned(), b.to_owned()))
        .collect();
    Ok(PhraseModel {
        min_count,
        threshold,
        accepted,
    })
}

/// Single greedy left-to-right pass; a token consumed by a join cannot start
/// another one.
pub fn apply_phrases(doc: &ProcessedDocument, model: &PhraseModel) -> ProcessedDocument {
    let toks = &doc.tokens;
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        if i + 1 < toks.len() && model.accepts(&toks[i], &toks[i + 1]) {
            out.push(format!("{}_{}", toks[i], toks[i + 1]));
            i += 2;
        } else {
            out.push(toks[i].clone());
            i += 1;
        }
    }
    ProcessedDocument::new(doc.patent_id.clone(), out)
}

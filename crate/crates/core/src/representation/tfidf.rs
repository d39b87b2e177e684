use std::collections::BTreeMap;
use std::sync::Arc;

use super::DocTermMatrix;
use crate::corpus::{ProcessedDocument, Vocabulary};
use crate::error::{Error, Result};

/// Raw term counts times `ln(N / df)`. Rows are not length-normalized, and
/// tokens outside the vocabulary are skipped.
pub fn compute_tfidf(docs: &[ProcessedDocument], vocab: Arc<Vocabulary>) -> Result<DocTermMatrix> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = docs.len() as f64;
    let idf: Vec<f64> = (0..vocab.len())
        .map(|t| (n / vocab.doc_frequency_by_id(t) as f64).ln())
        .collect();

    let rows = docs
        .iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for tok in &doc.tokens {
                if let Some(t) = vocab.id(tok) {
                    *counts.entry(t).or_insert(0) += 1;
                }
            }
            counts
                .into_iter()
                .map(|(t, tf)| (t, tf as f64 * idf[t].max(0.0)))
                .collect()
        })
        .collect();
    let row_ids = docs.iter().map(|d| d.patent_id.clone()).collect();
    DocTermMatrix::from_rows(rows, row_ids, vocab)
}

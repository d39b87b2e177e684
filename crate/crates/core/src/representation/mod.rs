//! Document-term input matrix construction: TF-IDF, bigram phrases and the
//! embedding-neighborhood (CluWords) weighting.

mod cluwords;
mod embeddings;
mod phrases;
mod tfidf;

use std::sync::Arc;

use ndarray::Array2;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub use cluwords::{build_cluwords, semantic_neighbors, Neighborhoods};
pub use embeddings::{load_embeddings, parse_embeddings, EmbeddingTable};
pub use phrases::{apply_phrases, fit_phrases, npmi, PhraseModel};
pub use tfidf::compute_tfidf;

/// Sparse non-negative documents x terms matrix in compressed row form.
#[derive(Debug, Clone)]
pub struct DocTermMatrix {
    n_terms: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    row_ids: Vec<String>,
    vocabulary: Arc<Vocabulary>,
}

impl DocTermMatrix {
    /// Each row is a list of `(term, weight)`; order within a row is free but
    /// terms must be distinct. Zero weights are dropped.
    pub fn from_rows(
        rows: Vec<Vec<(usize, f64)>>,
        row_ids: Vec<String>,
        vocabulary: Arc<Vocabulary>,
    ) -> Result<Self> {
        if rows.len() != row_ids.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows but {} row ids",
                rows.len(),
                row_ids.len()
            )));
        }
        let n_terms = vocabulary.len();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            for (i, &(c, v)) in row.iter().enumerate() {
                if c >= n_terms {
                    return Err(Error::OutOfRange {
                        what: "term column",
                        index: c,
                        len: n_terms,
                    });
                }
                if i > 0 && row[i - 1].0 == c {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate entry ({r}, {c})"
                    )));
                }
                if v < 0.0 || v.is_nan() {
                    return Err(Error::NegativeEntry {
                        row: r,
                        col: c,
                        value: v,
                    });
                }
                if v > 0.0 {
                    cols.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(DocTermMatrix {
            n_terms,
            row_ptr,
            cols,
            values,
            row_ids,
            vocabulary,
        })
    }

    /// Dense construction, mainly for small hand-made inputs.
    pub fn from_dense(dense: &Array2<f64>, row_ids: Vec<String>, vocabulary: Arc<Vocabulary>) -> Result<Self> {
        if dense.ncols() != vocabulary.len() {
            return Err(Error::VocabularyMismatch(format!(
                "{} columns vs {} terms",
                dense.ncols(),
                vocabulary.len()
            )));
        }
        let rows = dense
            .rows()
            .into_iter()
            .map(|row| row.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        Self::from_rows(rows, row_ids, vocabulary)
    }

    pub fn n_docs(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, doc: usize) -> (&[usize], &[f64]) {
        let (start, end) = (self.row_ptr[doc], self.row_ptr[doc + 1]);
        (&self.cols[start..end], &self.values[start..end])
    }

    pub fn get(&self, doc: usize, term: usize) -> f64 {
        let (cols, vals) = self.row(doc);
        cols.binary_search(&term).map(|i| vals[i]).unwrap_or(0.0)
    }

    /// Stored `(doc, term, weight)` triples in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_docs()).flat_map(move |d| {
            let (cols, vals) = self.row(d);
            cols.iter().zip(vals).map(move |(&c, &v)| (d, c, v))
        })
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_docs(), self.n_terms));
        for (d, t, v) in self.triples() {
            out[[d, t]] = v;
        }
        out
    }
}

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::{DocTermMatrix, EmbeddingTable};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Per-term semantic neighborhood over a vocabulary. Every list starts with
/// the term itself at similarity 1.
#[derive(Debug, Clone)]
pub struct Neighborhoods {
    vocabulary: Arc<Vocabulary>,
    lists: Vec<Vec<(usize, f64)>>,
}

impl Neighborhoods {
    /// Every term is only its own neighbor.
    pub fn identity(vocabulary: Arc<Vocabulary>) -> Self {
        let lists = (0..vocabulary.len()).map(|t| vec![(t, 1.0)]).collect();
        Neighborhoods { vocabulary, lists }
    }

    /// Builds from explicit `neighbor -> similarity` lists keyed by term. The
    /// self entry is added when missing.
    pub fn from_lists(vocabulary: Arc<Vocabulary>, lists: &[(&str, Vec<(&str, f64)>)]) -> Result<Self> {
        let mut out = Self::identity(vocabulary.clone());
        for (term, neighbors) in lists {
            let id = lookup(&vocabulary, term)?;
            let mut list = vec![(id, 1.0)];
            for (other, sim) in neighbors {
                let oid = lookup(&vocabulary, other)?;
                if oid != id {
                    if !(*sim >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "negative similarity {sim} for ({term}, {other})"
                        )));
                    }
                    list.push((oid, *sim));
                }
            }
            out.lists[id] = list;
        }
        Ok(out)
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    pub fn by_id(&self, term: usize) -> &[(usize, f64)] {
        &self.lists[term]
    }

    pub fn get(&self, term: &str) -> Option<Vec<(&str, f64)>> {
        let id = self.vocabulary.id(term)?;
        Some(
            self.lists[id]
                .iter()
                .map(|&(t, s)| (self.vocabulary.term(t).unwrap(), s))
                .collect(),
        )
    }
}

fn lookup(vocab: &Vocabulary, term: &str) -> Result<usize> {
    vocab
        .id(term)
        .ok_or_else(|| Error::VocabularyMismatch(format!("term {term:?} not in vocabulary")))
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 0.0).then(|| v.iter().map(|x| x / norm).collect())
}

/// The `k` nearest vocabulary terms by cosine similarity (the term itself
/// counts as the first), filtered to similarity >= `alpha`. Terms without a
/// usable embedding get the singleton neighborhood.
pub fn semantic_neighbors(
    table: &EmbeddingTable,
    vocab: &Arc<Vocabulary>,
    k: usize,
    alpha: f64,
) -> Result<Neighborhoods> {
    if k == 0 {
        return Err(Error::InvalidParameter("neighbor count must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0, 1], got {alpha}")));
    }
    let embedded: Vec<(usize, Vec<f64>)> = vocab
        .terms()
        .iter()
        .enumerate()
        .filter_map(|(id, t)| table.get(t).and_then(unit).map(|u| (id, u)))
        .collect();
    let position: BTreeMap<usize, usize> = embedded.iter().enumerate().map(|(p, (id, _))| (*id, p)).collect();

    let lists = (0..vocab.len())
        .into_par_iter()
        .map(|id| {
            let mut list = vec![(id, 1.0)];
            let Some(&p) = position.get(&id) else {
                return list;
            };
            let me = &embedded[p].1;
            let mut candidates: Vec<(usize, f64)> = embedded
                .iter()
                .filter(|(other, _)| *other != id)
                .map(|(other, v)| {
                    let dot: f64 = me.iter().zip(v).map(|(a, b)| a * b).sum();
                    (*other, dot.clamp(-1.0, 1.0))
                })
                .filter(|&(_, s)| s >= alpha)
                .collect();
            let by_rank = |a: &(usize, f64), b: &(usize, f64)| {
                b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
            };
            let keep = k - 1;
            if candidates.len() > keep && keep > 0 {
                candidates.select_nth_unstable_by(keep - 1, by_rank);
            }
            candidates.truncate(keep);
            candidates.sort_by(by_rank);
            list.extend(candidates);
            list
        })
        .collect();
    Ok(Neighborhoods {
        vocabulary: vocab.clone(),
        lists,
    })
}

/// `weight(d, c) = sum over t in neighborhood(c) of sim(c, t) * tfidf(d, t)`.
pub fn build_cluwords(tfidf: &DocTermMatrix, neighbors: &Neighborhoods) -> Result<DocTermMatrix> {
    let vocab = tfidf.vocabulary();
    if !Arc::ptr_eq(vocab, neighbors.vocabulary()) && vocab.terms() != neighbors.vocabulary().terms() {
        return Err(Error::VocabularyMismatch(
            "neighborhoods were built over a different vocabulary".into(),
        ));
    }
    // term t -> cluwords c whose neighborhood contains t
    let mut reverse: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vocab.len()];
    for (c, list) in neighbors.lists.iter().enumerate() {
        for &(t, sim) in list {
            reverse[t].push((c, sim));
        }
    }
    let rows = (0..tfidf.n_docs())
        .into_par_iter()
        .map(|d| {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            let (cols, vals) = tfidf.row(d);
            for (&t, &v) in cols.iter().zip(vals) {
                for &(c, sim) in &reverse[t] {
                    *acc.entry(c).or_insert(0.0) += sim * v;
                }
            }
            acc.into_iter().collect()
        })
        .collect();
    DocTermMatrix::from_rows(rows, tfidf.row_ids().to_vec(), vocab.clone())
}

//! NMF topic model: multiplicative-update factorization `A ~ H W`, top words,
//! per-document topic shares and dominant-topic assignment.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::representation::DocTermMatrix;

/// Denominator guard in the update rules.
pub const EPSILON: f64 = 1e-12;

/// Above this many cells the objective is evaluated without materializing `HW`.
const DENSE_OBJECTIVE_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct NmfParams {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NmfParams {
    fn default() -> Self {
        NmfParams {
            k: 30,
            max_iter: 500,
            tol: 1e-6,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TopicModel {
    /// Documents x topics.
    pub h: Array2<f64>,
    /// Topics x words.
    pub w: Array2<f64>,
    titles: Vec<String>,
    /// `||A - HW||_F` after each iteration.
    pub objective_trace: Vec<f64>,
    pub seed: u64,
    pub iterations_run: usize,
    row_ids: Vec<String>,
    vocabulary: Arc<Vocabulary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicDistribution {
    pub patent_id: String,
    pub shares: Vec<f64>,
    /// Set when the document has no topic mass; `shares` is then all zero.
    pub zero_row: bool,
    pub dominant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignments {
    /// Dominant topic per document row.
    pub topics: Vec<usize>,
    /// Patents per topic; sums to the number of documents.
    pub counts: Vec<usize>,
    /// Patents with an all-zero H row (assigned to topic 0).
    pub zero_rows: Vec<String>,
    #[serde(skip)]
    by_patent: BTreeMap<String, usize>,
}

impl Assignments {
    pub fn topic_of(&self, patent_id: &str) -> Option<usize> {
        self.by_patent.get(patent_id).map(|&row| self.topics[row])
    }

    pub fn patents_in(&self, topic: usize) -> impl Iterator<Item = &str> + '_ {
        self.by_patent
            .iter()
            .filter(move |(_, &row)| self.topics[row] == topic)
            .map(|(id, _)| id.as_str())
    }
}

pub fn default_titles(k: usize) -> Vec<String> {
    (0..k).map(|t| format!("Topic {t}")).collect()
}

/// Index of the first maximum.
pub(crate) fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn nmf_fit(a: &DocTermMatrix, params: NmfParams) -> Result<TopicModel> {
    let NmfParams { k, max_iter, tol, seed } = params;
    let (n, m) = (a.n_docs(), a.n_terms());
    if k == 0 || k > n.min(m) {
        return Err(Error::InvalidParameter(format!(
            "topic count {k} must be in 1..={} for a {n}x{m} matrix",
            n.min(m)
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    if let Some((row, col, value)) = a.triples().find(|&(_, _, v)| v < 0.0) {
        return Err(Error::NegativeEntry { row, col, value });
    }
    let total = a.sum();
    if total == 0.0 {
        return Err(Error::ZeroMatrix);
    }

    let scale = (total / (n * m) as f64 / k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // gen() is in [0, 1); 1 - u is in (0, 1].
    let mut h = Array2::from_shape_simple_fn((n, k), || (1.0 - rng.gen::<f64>()) * scale);
    let mut w = Array2::from_shape_simple_fn((k, m), || (1.0 - rng.gen::<f64>()) * scale);

    let dense_a = (n * m <= DENSE_OBJECTIVE_LIMIT).then(|| a.to_dense());
    let objective = |h: &Array2<f64>, w: &Array2<f64>| match &dense_a {
        Some(dense) => frobenius_dense(dense, h, w),
        None => frobenius_sparse(a, h, w),
    };

    let mut previous = objective(&h, &w);
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        // H <- H * (A W^T) / (H W W^T + eps)
        let awt = sparse_times_dense_t(a, &w);
        let hwwt = h.dot(&w.dot(&w.t()));
        h.zip_mut_with(&(awt / (hwwt + EPSILON)), |x, r| *x *= r);

        // W <- W * (H^T A) / (H^T H W + eps)
        let hta = sparse_t_times_dense(a, &h);
        let hthw = h.t().dot(&h).dot(&w);
        w.zip_mut_with(&(hta / (hthw + EPSILON)), |x, r| *x *= r);

        debug_assert!(h.iter().chain(w.iter()).all(|&x| x >= 0.0));

        let current = objective(&h, &w);
        trace.push(current);
        let improvement = if previous > 0.0 { (previous - current) / previous } else { 0.0 };
        previous = current;
        if current == 0.0 || improvement < tol {
            break;
        }
    }

    Ok(TopicModel {
        h,
        w,
        titles: default_titles(k),
        iterations_run: trace.len(),
        objective_trace: trace,
        seed,
        row_ids: a.row_ids().to_vec(),
        vocabulary: a.vocabulary().clone(),
    })
}

/// `A W^T`, n x k.
fn sparse_times_dense_t(a: &DocTermMatrix, w: &Array2<f64>) -> Array2<f64> {
    let k = w.nrows();
    let wt = w.t().to_owned();
    let mut out = Array2::zeros((a.n_docs(), k));
    for d in 0..a.n_docs() {
        let (cols, vals) = a.row(d);
        let mut row = out.row_mut(d);
        for (&t, &v) in cols.iter().zip(vals) {
            row.scaled_add(v, &wt.row(t));
        }
    }
    out
}

/// `H^T A`, k x m.
fn sparse_t_times_dense(a: &DocTermMatrix, h: &Array2<f64>) -> Array2<f64> {
    let k = h.ncols();
    let mut out_t = Array2::<f64>::zeros((a.n_terms(), k));
    for d in 0..a.n_docs() {
        let (cols, vals) = a.row(d);
        let hrow = h.row(d);
        for (&t, &v) in cols.iter().zip(vals) {
            out_t.row_mut(t).scaled_add(v, &hrow);
        }
    }
    out_t.reversed_axes()
}

fn frobenius_dense(a: &Array2<f64>, h: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let approx = h.dot(w);
    a.iter().zip(approx.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Residual over stored entries plus `||HW||^2` restricted to the implicit zeros.
fn frobenius_sparse(a: &DocTermMatrix, h: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let full = (h.t().dot(h) * w.dot(&w.t())).sum();
    let mut on_support = 0.0;
    let mut residual = 0.0;
    for d in 0..a.n_docs() {
        let (cols, vals) = a.row(d);
        let hrow = h.row(d);
        for (&t, &v) in cols.iter().zip(vals) {
            let approx = hrow.dot(&w.column(t));
            on_support += approx * approx;
            residual += (v - approx) * (v - approx);
        }
    }
    (residual + (full - on_support).max(0.0)).sqrt()
}

impl TopicModel {
    /// Reassembles a persisted model.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        h: Array2<f64>,
        w: Array2<f64>,
        titles: Vec<String>,
        objective_trace: Vec<f64>,
        seed: u64,
        iterations_run: usize,
        row_ids: Vec<String>,
        vocabulary: Arc<Vocabulary>,
    ) -> Result<Self> {
        let k = h.ncols();
        if w.nrows() != k || titles.len() != k || h.nrows() != row_ids.len() || w.ncols() != vocabulary.len() {
            return Err(Error::InvalidParameter(format!(
                "inconsistent model shapes: H {:?}, W {:?}, {} titles, {} rows, {} terms",
                h.dim(),
                w.dim(),
                titles.len(),
                row_ids.len(),
                vocabulary.len()
            )));
        }
        Ok(TopicModel {
            h,
            w,
            titles,
            objective_trace,
            seed,
            iterations_run,
            row_ids,
            vocabulary,
        })
    }

    pub fn k(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_docs(&self) -> usize {
        self.h.nrows()
    }

    pub fn titles(&self) -> &[String] {
        &self.titles
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    pub fn row_of(&self, patent_id: &str) -> Option<usize> {
        self.row_ids.iter().position(|id| id == patent_id)
    }

    fn check_topic(&self, topic: usize) -> Result<()> {
        if topic >= self.k() {
            return Err(Error::OutOfRange {
                what: "topic",
                index: topic,
                len: self.k(),
            });
        }
        Ok(())
    }

    /// Largest `W[topic, .]` weights, descending, ties lexicographic. `n` is
    /// capped at the vocabulary size.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
        self.check_topic(topic)?;
        if n == 0 {
            return Err(Error::InvalidParameter("top word count must be >= 1".into()));
        }
        Ok(ranked_terms(&self.vocabulary, self.w.row(topic).iter().copied(), n))
    }

    pub fn topic_distribution(&self, row: usize) -> Result<TopicDistribution> {
        if row >= self.n_docs() {
            return Err(Error::OutOfRange {
                what: "document row",
                index: row,
                len: self.n_docs(),
            });
        }
        let h_row = self.h.row(row);
        let sum: f64 = h_row.sum();
        let patent_id = self.row_ids[row].clone();
        if sum <= 0.0 {
            return Ok(TopicDistribution {
                patent_id,
                shares: vec![0.0; self.k()],
                zero_row: true,
                dominant: 0,
            });
        }
        let shares: Vec<f64> = h_row.iter().map(|v| v / sum).collect();
        Ok(TopicDistribution {
            patent_id,
            dominant: argmax(ArrayView1::from(&shares[..])),
            shares,
            zero_row: false,
        })
    }

    pub fn assign_topics(&self) -> Assignments {
        let mut counts = vec![0; self.k()];
        let mut zero_rows = Vec::new();
        let topics: Vec<usize> = self
            .h
            .rows()
            .into_iter()
            .enumerate()
            .map(|(r, row)| {
                if row.sum() <= 0.0 {
                    zero_rows.push(self.row_ids[r].clone());
                }
                let t = argmax(row);
                counts[t] += 1;
                t
            })
            .collect();
        let by_patent = self.row_ids.iter().enumerate().map(|(r, id)| (id.clone(), r)).collect();
        Assignments {
            topics,
            counts,
            zero_rows,
            by_patent,
        }
    }

    pub fn set_topic_title(&mut self, topic: usize, title: &str) -> Result<()> {
        self.check_topic(topic)?;
        let title = title.trim();
        if title.is_empty() {
            return Err(Error::EmptyTitle);
        }
        self.titles[topic] = title.to_owned();
        Ok(())
    }
}

/// Top `n` terms by weight, descending, ties broken by term.
pub(crate) fn ranked_terms(
    vocab: &Vocabulary,
    weights: impl Iterator<Item = f64>,
    n: usize,
) -> Vec<(String, f64)> {
    let mut ranked: Vec<(&str, f64)> = weights
        .enumerate()
        .map(|(t, w)| (vocab.term(t).expect("weight index within vocabulary"), w))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(b.0)));
    ranked.into_iter().take(n).map(|(t, w)| (t.to_owned(), w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn vocab(terms: &[&str]) -> Arc<Vocabulary> {
        Arc::new(Vocabulary::from_terms(terms.iter().map(|t| (t.to_string(), 1)).collect()).unwrap())
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("P{}", i + 1)).collect()
    }

    fn model_with(h: Array2<f64>, w: Array2<f64>, terms: &[&str]) -> TopicModel {
        let k = h.ncols();
        let n = h.nrows();
        TopicModel::from_parts(h, w, default_titles(k), vec![], 0, 0, ids(n), vocab(terms)).unwrap()
    }

    fn rank_one() -> DocTermMatrix {
        DocTermMatrix::from_dense(&array![[3.0, 4.0, 5.0], [6.0, 8.0, 10.0]], ids(2), vocab(&["a", "b", "c"]))
            .unwrap()
    }

    fn relative_error(a: &DocTermMatrix, m: &TopicModel) -> f64 {
        let dense = a.to_dense();
        let diff = &dense - &m.h.dot(&m.w);
        (diff.mapv(|x| x * x).sum() / dense.mapv(|x| x * x).sum()).sqrt()
    }

    #[test]
    fn exact_rank_one_recovery() {
        let a = rank_one();
        let m = nmf_fit(&a, NmfParams { k: 1, max_iter: 500, tol: 1e-10, seed: 7 }).unwrap();
        assert!(relative_error(&a, &m) < 1e-6);
        assert!(m.iterations_run <= 500);
    }

    #[test]
    fn objective_is_monotone() {
        let a = rank_one();
        let m = nmf_fit(&a, NmfParams { k: 2, max_iter: 100, tol: 1e-15, seed: 3 }).unwrap();
        for pair in m.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-10);
        }
    }

    #[test]
    fn sparse_and_dense_objectives_agree() {
        let a = rank_one();
        let h = array![[0.5], [1.5]];
        let w = array![[1.0, 2.0, 3.0]];
        let d = frobenius_dense(&a.to_dense(), &h, &w);
        let s = frobenius_sparse(&a, &h, &w);
        assert!((d - s).abs() < 1e-9);
    }

    #[test]
    fn topic_count_bounds() {
        let a = DocTermMatrix::from_dense(&array![[1.0, 0.0, 2.0], [0.0, 3.0, 1.0]], ids(2), vocab(&["a", "b", "c"]))
            .unwrap();
        for k in [0, 3, 5] {
            assert!(nmf_fit(&a, NmfParams { k, ..NmfParams::default() }).is_err(), "k = {k}");
        }
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let a = DocTermMatrix::from_dense(&Array2::zeros((2, 2)), ids(2), vocab(&["a", "b"])).unwrap();
        assert!(matches!(nmf_fit(&a, NmfParams { k: 1, ..NmfParams::default() }), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn parameter_validation() {
        let a = rank_one();
        assert!(nmf_fit(&a, NmfParams { k: 1, max_iter: 0, tol: 1e-6, seed: 0 }).is_err());
        assert!(nmf_fit(&a, NmfParams { k: 1, max_iter: 5, tol: 0.0, seed: 0 }).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let a = rank_one();
        let p = NmfParams { k: 2, max_iter: 50, tol: 1e-12, seed: 11 };
        let (m1, m2) = (nmf_fit(&a, p).unwrap(), nmf_fit(&a, p).unwrap());
        assert_eq!(m1.h, m2.h);
        assert_eq!(m1.w, m2.w);
    }

    #[test]
    fn top_words_sorted() {
        let m = model_with(array![[1.0]], array![[0.0, 5.0, 3.0]], &["a", "b", "c"]);
        assert_eq!(m.top_words(0, 2).unwrap(), vec![("b".into(), 5.0), ("c".into(), 3.0)]);
        assert_eq!(m.top_words(0, 3).unwrap().len(), 3);
        assert!(m.top_words(1, 2).is_err());
    }

    #[test]
    fn top_words_tie_is_lexicographic() {
        // Vocabulary ids are lexicographic, so [b, a] is stored as [a, b].
        let m = model_with(array![[1.0]], array![[2.0, 2.0]], &["b", "a"]);
        assert_eq!(m.top_words(0, 2).unwrap(), vec![("a".into(), 2.0), ("b".into(), 2.0)]);
    }

    #[test]
    fn distribution_of_table_row() {
        let m = model_with(array![[30.0, 70.0, 10.0], [0.0, 0.0, 0.0]], Array2::ones((3, 3)), &["a", "b", "c"]);
        let d = m.topic_distribution(0).unwrap();
        assert!((d.shares[0] - 30.0 / 110.0).abs() < 1e-12);
        assert!((d.shares[1] - 70.0 / 110.0).abs() < 1e-12);
        assert!((d.shares[2] - 10.0 / 110.0).abs() < 1e-12);
        assert!((d.shares.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(d.dominant, 1);
        assert!(!d.zero_row);

        let z = m.topic_distribution(1).unwrap();
        assert!(z.zero_row);
        assert_eq!(z.dominant, 0);
        assert!(z.shares.iter().all(|&s| s == 0.0));
        assert!(m.topic_distribution(2).is_err());
    }

    #[test]
    fn single_topic_distribution() {
        let m = model_with(array![[5.0]], array![[1.0]], &["a"]);
        let d = m.topic_distribution(0).unwrap();
        assert_eq!(d.shares, vec![1.0]);
        assert_eq!(d.dominant, 0);
    }

    #[test]
    fn assignment_of_table_rows() {
        let m = model_with(
            array![[30.0, 70.0, 10.0], [20.0, 65.0, 40.0], [17.0, 80.0, 8.0]],
            Array2::ones((3, 3)),
            &["a", "b", "c"],
        );
        let a = m.assign_topics();
        assert_eq!(a.topics, vec![1, 1, 1]);
        assert_eq!(a.counts, vec![0, 3, 0]);
        assert_eq!(a.topic_of("P2"), Some(1));
        assert_eq!(a.patents_in(1).count(), 3);
    }

    #[test]
    fn zero_and_tied_rows_go_to_lowest_topic() {
        let m = model_with(array![[0.0, 0.0], [2.0, 2.0]], Array2::ones((2, 2)), &["a", "b"]);
        let a = m.assign_topics();
        assert_eq!(a.topics, vec![0, 0]);
        assert_eq!(a.zero_rows, vec!["P1".to_string()]);
        assert_eq!(a.counts.iter().sum::<usize>(), 2);
    }

    #[test]
    fn titles_are_editable() {
        let mut m = model_with(Array2::ones((1, 10)), Array2::ones((10, 10)), &["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]);
        assert_eq!(m.titles()[8], "Topic 8");
        m.set_topic_title(8, "Delivery systems and devices").unwrap();
        assert_eq!(m.titles()[8], "Delivery systems and devices");
        assert!(matches!(m.set_topic_title(10, "x"), Err(Error::OutOfRange { .. })));
        assert!(matches!(m.set_topic_title(0, "   "), Err(Error::EmptyTitle)));
    }
}

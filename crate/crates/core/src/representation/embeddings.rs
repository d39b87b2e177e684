use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Word vectors keyed by term, all of dimension `dim`.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// Inserts unless the word is already present; returns whether it was added.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "vector of dimension {} in table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        let word = word.into();
        if self.vectors.contains_key(&word) {
            return Ok(false);
        }
        self.vectors.insert(word, vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text, path)
}

/// Text word-vector format: `word v1 ... vd` per line, with an optional
/// leading `count dim` header. Duplicate words keep their first vector.
pub fn parse_embeddings(text: &str, origin: &Path) -> Result<EmbeddingTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let mut dim = None;
    if let Some(&(_, first)) = lines.peek() {
        let fields: Vec<&str> = first.split_whitespace().collect();
        if let [count, d] = fields.as_slice() {
            if let (Ok(_), Ok(d)) = (count.parse::<usize>(), d.parse::<usize>()) {
                dim = Some(d);
                lines.next();
            }
        }
    }

    let mut table: Option<EmbeddingTable> = None;
    for (line_no, line) in lines {
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line has a field");
        let vector = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("unparsable value {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let expected = *dim.get_or_insert(vector.len());
        if vector.len() != expected || expected == 0 {
            return Err(parse_err(
                line_no,
                format!("dimension mismatch: expected {expected}, found {}", vector.len()),
            ));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(expected));
        table.insert(word, vector)?;
    }
    table.ok_or_else(|| parse_err(0, "no embedding vectors".into()))
}

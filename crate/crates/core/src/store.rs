//! On-disk model snapshot.
//!
//! Layout of a store directory:
//!
//! | file             | contents                                             |
//! |------------------|------------------------------------------------------|
//! | `corpus.jsonl`   | normalized copy of the imported patents              |
//! | `vocab.json`     | terms and document frequencies                       |
//! | `h.f64`, `w.f64` | factor matrices, row-major little-endian `f64`       |
//! | `model.json`     | shapes, seed, iterations, objective trace, row ids   |
//! | `titles.json`    | topic titles; the only file edited after a build     |
//! | `config.json`    | pipeline configuration                               |
//! | `stats.json`     | dashboard statistics                                 |
//! | `pertinence.json`| entity x topic pertinence for each entity kind       |

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::correlation::{DashboardStats, EntityKind, EntityPertinence};
use crate::corpus::{parse_jsonl, PatentRecord, Vocabulary};
use crate::error::{Error, Result};
use crate::factorization::{Assignments, TopicDistribution, TopicModel};
use crate::pipeline::PipelineConfig;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const VOCAB_FILE: &str = "vocab.json";
pub const H_FILE: &str = "h.f64";
pub const W_FILE: &str = "w.f64";
pub const MODEL_FILE: &str = "model.json";
pub const TITLES_FILE: &str = "titles.json";
pub const CONFIG_FILE: &str = "config.json";
pub const STATS_FILE: &str = "stats.json";
pub const PERTINENCE_FILE: &str = "pertinence.json";

/// Everything the API serves, fully in memory.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub config: PipelineConfig,
    pub corpus: Vec<PatentRecord>,
    pub model: TopicModel,
    pub assignments: Assignments,
    pub pertinence: BTreeMap<EntityKind, EntityPertinence>,
    pub stats: DashboardStats,
}

impl Snapshot {
    pub fn record(&self, id: &str) -> Option<&PatentRecord> {
        self.corpus.iter().find(|r| r.id == id)
    }

    pub fn distribution(&self, id: &str) -> Option<TopicDistribution> {
        let row = self.model.row_of(id)?;
        self.model.topic_distribution(row).ok()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelMeta {
    n_docs: usize,
    n_terms: usize,
    k: usize,
    seed: u64,
    iterations_run: usize,
    objective_trace: Vec<f64>,
    row_ids: Vec<String>,
}

/// Handle on a persisted store directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelStore {
    dir: PathBuf,
}

impl ModelStore {
    pub fn open(dir: impl Into<PathBuf>) -> Self {
        ModelStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    /// Writes `snapshot` into a fresh directory `dir`. The files are staged in a
    /// sibling directory and renamed into place, so a failed write leaves
    /// nothing at `dir`.
    pub fn create(dir: &Path, snapshot: &Snapshot) -> Result<ModelStore> {
        if dir.exists() {
            let non_empty = fs::read_dir(dir)
                .map_err(|e| Error::io(dir, e))?
                .next()
                .is_some();
            if non_empty {
                return Err(Error::InvalidParameter(format!(
                    "output directory {} already exists and is not empty",
                    dir.display()
                )));
            }
        }
        let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "store".into());
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;

        let written = write_all(&staging, snapshot).and_then(|_| {
            if dir.exists() {
                fs::remove_dir(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::rename(&staging, dir).map_err(|e| Error::io(dir, e))
        });
        if let Err(e) = written {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
        Ok(ModelStore::open(dir))
    }

    pub fn load(&self) -> Result<Snapshot> {
        let config: PipelineConfig = self.read_json(CONFIG_FILE)?;
        let corpus_path = self.path(CORPUS_FILE);
        let corpus_text = fs::read_to_string(&corpus_path).map_err(|e| self.corrupt(CORPUS_FILE, e))?;
        let corpus = parse_jsonl(&corpus_text, &corpus_path).map_err(|e| self.corrupt(CORPUS_FILE, e))?;

        let mut vocab: Vocabulary = self.read_json(VOCAB_FILE)?;
        vocab.rebuild_index();
        let meta: ModelMeta = self.read_json(MODEL_FILE)?;
        let h = self.read_matrix(H_FILE, meta.n_docs, meta.k)?;
        let w = self.read_matrix(W_FILE, meta.k, meta.n_terms)?;
        let titles = self.load_titles()?;

        let model = TopicModel::from_parts(
            h,
            w,
            titles,
            meta.objective_trace,
            meta.seed,
            meta.iterations_run,
            meta.row_ids,
            Arc::new(vocab),
        )
        .map_err(|e| self.corrupt(MODEL_FILE, e))?;
        if model.row_ids().len() != corpus.len() || model.row_ids().iter().zip(&corpus).any(|(a, r)| *a != r.id) {
            return Err(self.corrupt(MODEL_FILE, "row ids do not match corpus.jsonl"));
        }
        let assignments = model.assign_topics();
        let stats = self.read_json(STATS_FILE)?;
        let pertinence = self.read_json(PERTINENCE_FILE)?;
        Ok(Snapshot {
            config,
            corpus,
            model,
            assignments,
            pertinence,
            stats,
        })
    }

    pub fn load_titles(&self) -> Result<Vec<String>> {
        self.read_json(TITLES_FILE)
    }

    /// Replaces `titles.json` through a rename so readers never see a partial file.
    pub fn save_titles(&self, titles: &[String]) -> Result<()> {
        let tmp = self.path(".titles.json.tmp");
        write_file(&tmp, &to_json(&titles)?)?;
        let target = self.path(TITLES_FILE);
        fs::rename(&tmp, &target).map_err(|e| Error::io(target, e))
    }

    fn corrupt(&self, file: &str, err: impl ToString) -> Error {
        Error::CorruptStore {
            file: self.path(file).display().to_string(),
            message: err.to_string(),
        }
    }

    fn read_json<T: DeserializeOwned>(&self, file: &str) -> Result<T> {
        let text = fs::read_to_string(self.path(file)).map_err(|e| self.corrupt(file, e))?;
        serde_json::from_str(&text).map_err(|e| self.corrupt(file, e))
    }

    fn read_matrix(&self, file: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let bytes = fs::read(self.path(file)).map_err(|e| self.corrupt(file, e))?;
        let values = decode_f64s(&bytes).map_err(|e| self.corrupt(file, e))?;
        if values.len() != rows * cols {
            return Err(self.corrupt(
                file,
                format!("expected {rows}x{cols} = {} values, found {}", rows * cols, values.len()),
            ));
        }
        Array2::from_shape_vec((rows, cols), values).map_err(|e| self.corrupt(file, e))
    }
}

fn write_all(dir: &Path, s: &Snapshot) -> Result<()> {
    let mut corpus = String::new();
    for r in &s.corpus {
        corpus.push_str(&serde_json::to_string(r).map_err(json_err)?);
        corpus.push('\n');
    }
    write_file(&dir.join(CORPUS_FILE), corpus.as_bytes())?;
    write_file(&dir.join(VOCAB_FILE), &to_json(s.model.vocabulary().as_ref())?)?;
    write_file(&dir.join(H_FILE), &encode_f64s(s.model.h.iter().copied()))?;
    write_file(&dir.join(W_FILE), &encode_f64s(s.model.w.iter().copied()))?;
    let meta = ModelMeta {
        n_docs: s.model.n_docs(),
        n_terms: s.model.vocabulary().len(),
        k: s.model.k(),
        seed: s.model.seed,
        iterations_run: s.model.iterations_run,
        objective_trace: s.model.objective_trace.clone(),
        row_ids: s.model.row_ids().to_vec(),
    };
    write_file(&dir.join(MODEL_FILE), &to_json(&meta)?)?;
    write_file(&dir.join(TITLES_FILE), &to_json(&s.model.titles())?)?;
    write_file(&dir.join(CONFIG_FILE), &to_json(&s.config)?)?;
    write_file(&dir.join(STATS_FILE), &to_json(&s.stats)?)?;
    write_file(&dir.join(PERTINENCE_FILE), &to_json(&s.pertinence)?)?;
    Ok(())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::InvalidParameter(format!("serialization failed: {e}"))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(json_err)?;
    out.push(b'\n');
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

pub fn encode_f64s(values: impl Iterator<Item = f64>) -> Vec<u8> {
    values.flat_map(f64::to_le_bytes).collect()
}

pub fn decode_f64s(bytes: &[u8]) -> std::result::Result<Vec<f64>, String> {
    if bytes.len() % 8 != 0 {
        return Err(format!("length {} is not a multiple of 8", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

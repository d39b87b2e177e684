#![allow(dead_code)]

use std::path::{Path, PathBuf};

use patopics::pipeline::PipelineConfig;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Build configuration for the bundled 60-patent planted corpus.
pub fn planted_config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        input: fixture("planted.jsonl"),
        embeddings: fixture("planted_embeddings.txt"),
        topics: 3,
        top_words: 10,
        out: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

/// Planted theme encoded in fixture ids (`T<theme>-<nn>`).
pub fn planted_theme(id: &str) -> usize {
    id[1..2].parse().expect("fixture id has a theme digit")
}

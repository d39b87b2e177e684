use std::fs;

use patopics::correlation::{EntityKind, Totals};
use patopics::corpus::{parse_corpus, CorpusFormat};
use patopics::pipeline::{build, run, PipelineConfig};
use patopics::store::{ModelStore, H_FILE, STATS_FILE, W_FILE};
use patopics::Error;

mod common;
use common::{fixture, planted_config, planted_theme};

#[test]
fn fixture_build_has_expected_shape_and_totals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("store");
    let (store, snap) = build(&planted_config(&out)).unwrap();
    assert_eq!(snap.model.h.dim(), (60, 3));
    assert_eq!(snap.model.w.nrows(), 3);
    assert_eq!(
        snap.stats.totals,
        Totals { patents: 60, companies: 6, molecules: 9, inventors: 25 }
    );
    assert_eq!(snap.stats.patents_per_topic.iter().sum::<usize>(), 60);
    assert!(snap.model.vocabulary().id("nitric_oxide").is_some());

    // brute-force recount from the raw fixture file
    let records = parse_corpus(&fixture("planted.jsonl"), CorpusFormat::JsonLines).unwrap();
    let undated = records.iter().filter(|r| r.filed_year.is_none()).count();
    assert_eq!(snap.stats.patents_per_filed_year.values().sum::<usize>(), 60 - undated);
    for kind in EntityKind::ALL {
        let pert = &snap.pertinence[&kind];
        for t in 0..3 {
            let col: f64 = pert.raw.iter().map(|r| r[t]).sum();
            let expected: f64 = match kind {
                EntityKind::Inventor => (0..60)
                    .map(|r| snap.model.h[[r, t]] * records[r].inventors.len() as f64)
                    .sum(),
                _ => snap.model.h.column(t).sum(),
            };
            assert!((col - expected).abs() < 1e-9 * expected.max(1.0));
        }
    }

    let stats: serde_json::Value = serde_json::from_slice(&fs::read(store.path(STATS_FILE)).unwrap()).unwrap();
    assert_eq!(stats["totals"]["inventors"], 25);
}

#[test]
fn planted_themes_are_recovered() {
    let snap = run(&planted_config(std::path::Path::new("unused"))).unwrap();
    for theme in 0..3 {
        let topics: Vec<usize> = snap
            .model
            .row_ids()
            .iter()
            .zip(&snap.assignments.topics)
            .filter(|(id, _)| planted_theme(id) == theme)
            .map(|(_, &t)| t)
            .collect();
        assert!(topics.windows(2).all(|w| w[0] == w[1]), "theme {theme} split: {topics:?}");
    }
}

#[test]
fn rebuild_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = build(&planted_config(&dir.path().join("a"))).unwrap();
    let (b, _) = build(&planted_config(&dir.path().join("b"))).unwrap();
    for file in [H_FILE, W_FILE, STATS_FILE, "vocab.json", "model.json", "pertinence.json", "corpus.jsonl"] {
        assert_eq!(fs::read(a.path(file)).unwrap(), fs::read(b.path(file)).unwrap(), "{file}");
    }
}

#[test]
fn store_round_trip_preserves_everything() {
    let dir = tempfile::tempdir().unwrap();
    let (store, snap) = build(&planted_config(&dir.path().join("s"))).unwrap();
    let loaded = ModelStore::open(store.dir()).load().unwrap();
    let bits = |m: &ndarray::Array2<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&loaded.model.h), bits(&snap.model.h));
    assert_eq!(bits(&loaded.model.w), bits(&snap.model.w));
    assert_eq!(loaded.model.objective_trace, snap.model.objective_trace);
    assert_eq!(loaded.model.vocabulary().terms(), snap.model.vocabulary().terms());
    assert_eq!(loaded.assignments, snap.assignments);
    assert_eq!(loaded.pertinence, snap.pertinence);
    assert_eq!(loaded.stats, snap.stats);
    assert_eq!(loaded.corpus, snap.corpus);
    assert_eq!(loaded.config, snap.config);
}

#[test]
fn duplicate_ids_fail_at_parse_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("dup.jsonl");
    let line = fs::read_to_string(fixture("planted.jsonl")).unwrap().lines().next().unwrap().to_owned();
    fs::write(&input, format!("{line}\n{line}\n")).unwrap();
    let out = dir.path().join("store");
    let config = PipelineConfig { input, ..planted_config(&out) };
    let err = build(&config).unwrap_err();
    assert_eq!(err.stage(), Some("parse"));
    assert!(matches!(err, Error::Stage { ref source, .. } if matches!(**source, Error::DuplicateId(_))));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1, "only the input file remains");
}

#[test]
fn failing_stage_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig {
        embeddings: dir.path().join("missing.txt"),
        ..planted_config(&dir.path().join("s"))
    };
    assert_eq!(build(&config).unwrap_err().stage(), Some("embeddings"));

    let config = PipelineConfig { topics: 500, ..planted_config(&dir.path().join("s")) };
    assert_eq!(build(&config).unwrap_err().stage(), Some("nmf"));
    assert!(!dir.path().join("s").exists());
}

#[test]
fn refuses_non_empty_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("keep.txt"), "x").unwrap();
    let err = build(&planted_config(dir.path())).unwrap_err();
    assert_eq!(err.stage(), Some("persist"));
    assert!(dir.path().join("keep.txt").exists());
}

#[test]
fn extra_stoplist_removes_words() {
    let dir = tempfile::tempdir().unwrap();
    let stop = dir.path().join("extra.txt");
    fs::write(&stop, "tumor\ncarcinoma\n").unwrap();
    let config = PipelineConfig { stoplist: Some(stop), ..planted_config(&dir.path().join("s")) };
    let snap = run(&config).unwrap();
    assert!(snap.model.vocabulary().id("tumor").is_none());
    assert!(snap.model.vocabulary().id("kinase").is_some());
}

#[test]
fn corrupt_store_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let (store, _) = build(&planted_config(&dir.path().join("s"))).unwrap();
    fs::write(store.path(W_FILE), [0u8; 12]).unwrap();
    match ModelStore::open(store.dir()).load() {
        Err(Error::CorruptStore { file, .. }) => assert!(file.ends_with(W_FILE)),
        other => panic!("expected corrupt store error, got {other:?}"),
    }
}

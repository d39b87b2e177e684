//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use patopics::corpus::{parse_corpus, CorpusFormat, ProcessedDocument, Vocabulary};
use patopics::correlation::{aggregate_entity_topics, normalize_pertinence, EntityKind, EntityMap};
use patopics::factorization::{nmf_fit, NmfParams};
use patopics::pipeline::{build, represent, run, PipelineConfig};
use patopics::representation::{fit_phrases, load_embeddings, DocTermMatrix};
use patopics::server::{router, AppState, Credentials, DEFAULT_SESSION_TTL};
use patopics::store::{ModelStore, H_FILE, STATS_FILE, W_FILE};

#[path = "common/mod.rs"]
mod common;
use common::{planted_config, planted_theme};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

fn pertinence_example() -> Check {
    let start = Instant::now();
    let h = array![[30.0, 70.0, 10.0], [20.0, 65.0, 40.0], [17.0, 80.0, 8.0]];
    let ids: Vec<String> = ["P1", "P2", "P3"].map(String::from).to_vec();
    let mut map = EntityMap::new(EntityKind::Inventor);
    for id in &ids {
        map.insert("Inventor 1", id.clone());
    }
    let raw = aggregate_entity_topics(&h, &ids, &map).map_err(|e| e.to_string())?;
    let norm = normalize_pertinence(&raw.raw).map_err(|e| e.to_string())?;
    let took = within(start, Duration::from_millis(1))?;
    let sums: Vec<f64> = raw.raw.row(0).to_vec();
    ensure(sums == [67.0, 215.0, 58.0], || format!("sums {sums:?}"))?;
    let pct: Vec<f64> = norm.values.row(0).iter().map(|v| (v * 100.0).round()).collect();
    ensure(pct == [20.0, 63.0, 17.0], || format!("percentages {pct:?}"))?;
    Ok(format!("sums {sums:?}, shares {pct:?}% in {took:?}"))
}

fn unnamed_matrix(dense: &Array2<f64>) -> DocTermMatrix {
    let (n, m) = dense.dim();
    let vocab = Vocabulary::from_terms((0..m).map(|j| (format!("t{j:03}"), 1)).collect()).unwrap();
    DocTermMatrix::from_dense(dense, (0..n).map(|i| format!("d{i:03}")).collect(), Arc::new(vocab)).unwrap()
}

fn rank_one() -> Check {
    let start = Instant::now();
    let dense = array![[3.0, 4.0, 5.0], [6.0, 8.0, 10.0]];
    let model = nmf_fit(&unnamed_matrix(&dense), NmfParams { k: 1, max_iter: 500, tol: 1e-15, seed: 42 })
        .map_err(|e| e.to_string())?;
    let took = within(start, Duration::from_secs(1))?;
    let recon = model.h.dot(&model.w);
    let err = (&dense - &recon).mapv(|v| v * v).sum().sqrt() / dense.mapv(|v| v * v).sum().sqrt();
    ensure(model.iterations_run <= 500, || format!("{} iterations", model.iterations_run))?;
    ensure(err < 1e-6, || format!("relative error {err:e}"))?;
    Ok(format!("relative error {err:.2e} after {} iterations in {took:?}", model.iterations_run))
}

fn monotonicity() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dense = Array2::from_shape_simple_fn((100, 50), || rng.gen::<f64>());
    let model = nmf_fit(&unnamed_matrix(&dense), NmfParams { k: 10, max_iter: 200, tol: 1e-300, seed: 42 })
        .map_err(|e| e.to_string())?;
    let took = within(start, Duration::from_secs(5))?;
    let trace = &model.objective_trace;
    let worst = trace.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst <= 1e-10, || format!("objective rose by {worst:e}"))?;
    Ok(format!("{} steps, largest step change {worst:.2e} in {took:?}", trace.len()))
}

fn planted_recovery() -> Check {
    let start = Instant::now();
    let snap = run(&planted_config(Path::new("unused"))).map_err(|e| e.to_string())?;
    let took = within(start, Duration::from_secs(10))?;
    let mut correct = 0;
    for theme in 0..3 {
        let mut votes = [0usize; 3];
        for (id, &t) in snap.model.row_ids().iter().zip(&snap.assignments.topics) {
            if planted_theme(id) == theme {
                votes[t] += 1;
            }
        }
        correct += votes.iter().max().unwrap();
    }
    let purity = correct as f64 / snap.corpus.len() as f64;
    ensure(purity >= 0.9, || format!("purity {purity:.3}"))?;
    Ok(format!("purity {:.1}% in {took:?}", purity * 100.0))
}

fn brute_force_phrases(docs: &[ProcessedDocument], min_count: usize, threshold: f64) -> BTreeSet<(String, String)> {
    let mut unigram: HashMap<&str, f64> = HashMap::new();
    let mut total = 0.0;
    for d in docs {
        for t in &d.tokens {
            *unigram.entry(t).or_default() += 1.0;
            total += 1.0;
        }
    }
    let mut out = BTreeSet::new();
    let words: BTreeSet<&str> = unigram.keys().copied().collect();
    for &a in &words {
        for &b in &words {
            let count = docs
                .iter()
                .map(|d| d.tokens.windows(2).filter(|w| w[0] == a && w[1] == b).count())
                .sum::<usize>();
            if count < min_count || count == 0 {
                continue;
            }
            let c = count as f64;
            let score = (c * total / (unigram[a] * unigram[b])).ln() / (total.ln() - c.ln());
            if score >= threshold {
                out.insert((a.to_owned(), b.to_owned()));
            }
        }
    }
    out
}

fn phrase_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let words: Vec<String> = (0..40).map(|i| format!("w{i:02}")).collect();
    let planted = [("w00", "w01"), ("w02", "w03"), ("w04", "w05"), ("w06", "w07")];
    let mut docs = Vec::new();
    for d in 0..20 {
        let mut tokens = Vec::with_capacity(50);
        while tokens.len() < 50 {
            if rng.gen_bool(0.15) && tokens.len() < 49 {
                let (a, b) = planted[rng.gen_range(0..planted.len())];
                tokens.extend([a.to_owned(), b.to_owned()]);
            } else {
                tokens.push(words[rng.gen_range(0..words.len())].clone());
            }
        }
        docs.push(ProcessedDocument::new(format!("d{d}"), tokens));
    }
    let total: usize = docs.iter().map(|d| d.tokens.len()).sum();
    ensure(total == 1000, || format!("corpus has {total} tokens"))?;

    let start = Instant::now();
    let mut compared = 0;
    for (min_count, threshold) in [(1, -1.0), (2, 0.0), (3, 0.2), (5, 0.5), (10, 0.3)] {
        let model = fit_phrases(&docs, min_count, threshold).map_err(|e| e.to_string())?;
        let expected = brute_force_phrases(&docs, min_count, threshold);
        ensure(model.accepted() == &expected, || {
            format!("min_count {min_count} threshold {threshold}: {:?} vs {expected:?}", model.accepted())
        })?;
        compared += expected.len();
    }
    let took = within(start, Duration::from_secs(1))?;
    ensure(compared > 0, || "oracle accepted nothing".into())?;
    Ok(format!("5 settings, {compared} accepted pairs matched in {took:?}"))
}

fn cluwords_degeneracy() -> Check {
    let config = PipelineConfig { alpha: 1.0, ..planted_config(Path::new("unused")) };
    let records = parse_corpus(&config.input, CorpusFormat::JsonLines).map_err(|e| e.to_string())?;
    let stop = config.load_stoplist().map_err(|e| e.to_string())?;
    let emb = load_embeddings(&config.embeddings).map_err(|e| e.to_string())?;
    let repr = represent(&records, &stop, &emb, &config).map_err(|e| e.to_string())?;
    let diff = (&repr.cluwords.to_dense() - &repr.tfidf.to_dense()).mapv(f64::abs);
    let worst = diff.iter().copied().fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("max entry difference {worst:e}"))?;
    Ok(format!("{}x{} matrices, max difference {worst:e}", diff.nrows(), diff.ncols()))
}

fn partition() -> Check {
    let snap = run(&planted_config(Path::new("unused"))).map_err(|e| e.to_string())?;
    let mut corpora = vec![(snap.model.h.clone(), snap.assignments.counts.clone(), snap.corpus.len())];
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = Array2::from_shape_simple_fn((40, 25), || if rng.gen_bool(0.3) { rng.gen::<f64>() } else { 0.0 });
        let model = nmf_fit(&unnamed_matrix(&dense), NmfParams { k: 4, ..NmfParams::default() })
            .map_err(|e| e.to_string())?;
        corpora.push((model.h.clone(), model.assign_topics().counts, 40));
    }
    for (i, (_, counts, n)) in corpora.iter().enumerate() {
        let sum: usize = counts.iter().sum();
        ensure(sum == *n, || format!("corpus {i}: counts sum to {sum}, expected {n}"))?;
    }

    let mut worst: f64 = 0.0;
    for kind in [EntityKind::Company, EntityKind::Molecule] {
        let map = EntityMap::from_corpus(kind, &snap.corpus);
        let raw = aggregate_entity_topics(&snap.model.h, snap.model.row_ids(), &map).map_err(|e| e.to_string())?;
        let total = snap.model.h.sum_axis(ndarray::Axis(0));
        let by_entity = raw.raw.sum_axis(ndarray::Axis(0));
        worst = (&total - &by_entity).iter().fold(worst, |acc, v| acc.max(v.abs()));
    }
    ensure(worst <= 1e-9, || format!("column sums differ by {worst:e}"))?;
    Ok(format!("{} corpora partitioned, conservation error {worst:e}", corpora.len()))
}

async fn request(app: &axum::Router, method: Method, uri: &str, body: Option<Value>, token: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn persistence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (store, snap) = build(&planted_config(&dir.path().join("model"))).map_err(|e| e.to_string())?;
    let loaded = ModelStore::open(store.dir()).load().map_err(|e| e.to_string())?;
    let bits = |m: &Array2<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    ensure(bits(&snap.model.h) == bits(&loaded.model.h), || "H differs after reload".into())?;
    ensure(bits(&snap.model.w) == bits(&loaded.model.w), || "W differs after reload".into())?;
    let h_file = fs::read(store.path(H_FILE)).map_err(|e| e.to_string())?;
    let w_file = fs::read(store.path(W_FILE)).map_err(|e| e.to_string())?;

    let open = || {
        let creds = Credentials::parse("analyst:secret").unwrap();
        AppState::open(store.dir(), creds, DEFAULT_SESSION_TTL).map(|s| router(Arc::new(s)))
    };
    let app = open().map_err(|e| e.to_string())?;
    let (_, stats) = request(&app, Method::GET, "/api/stats", None, None).await;
    let on_disk: Value = serde_json::from_slice(&fs::read(store.path(STATS_FILE)).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(stats == on_disk, || "/api/stats differs from stats.json".into())?;

    let (_, session) = request(&app, Method::POST, "/api/auth/login", Some(json!({"user": "analyst", "password": "secret"})), None).await;
    let token = session["token"].as_str().ok_or("login returned no token")?.to_owned();
    let title = "Delivery systems and devices";
    let (status, _) = request(&app, Method::PATCH, "/api/topics/2/title", Some(json!({ "title": title })), Some(&token)).await;
    ensure(status == StatusCode::OK, || format!("PATCH returned {status}"))?;
    drop(app);

    let restarted = open().map_err(|e| e.to_string())?;
    let (_, topic) = request(&restarted, Method::GET, "/api/topics/2", None, None).await;
    ensure(topic["title"] == title, || format!("title after restart: {}", topic["title"]))?;
    ensure(fs::read(store.path(H_FILE)).map_err(|e| e.to_string())? == h_file, || "h.f64 rewritten".into())?;
    ensure(fs::read(store.path(W_FILE)).map_err(|e| e.to_string())? == w_file, || "w.f64 rewritten".into())?;
    Ok("H/W bit-identical, stats match, title survives restart".into())
}

fn main() {
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    let checks: Vec<(&str, Box<dyn FnOnce() -> Check>)> = vec![
        ("inventor pertinence example", Box::new(pertinence_example)),
        ("nmf rank-1 recovery", Box::new(rank_one)),
        ("nmf monotonicity", Box::new(monotonicity)),
        ("planted-topic recovery", Box::new(planted_recovery)),
        ("phrase oracle equivalence", Box::new(phrase_oracle)),
        ("cluwords degeneracy", Box::new(cluwords_degeneracy)),
        ("partition invariant", Box::new(partition)),
        ("persistence round-trip", Box::new(move || runtime.block_on(persistence()))),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

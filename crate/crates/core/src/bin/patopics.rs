use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use patopics::correlation::{compare_patents, DEFAULT_SHARE_THRESHOLD};
use patopics::pipeline::{build, PipelineConfig};
use patopics::server::{self, AppState, Credentials, DEFAULT_SESSION_TTL};
use patopics::store::ModelStore;

#[derive(Parser)]
#[command(name = "patopics", version, about = "Topic models over pharmaceutical patent collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model store from a JSON Lines patent file.
    Build(BuildArgs),
    /// Serve a model store over HTTP.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Credentials file, one `user:password` per line.
        #[arg(long)]
        auth: PathBuf,
    },
    /// Compare the topic distributions of two or more patents.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ids: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SHARE_THRESHOLD)]
        threshold: f64,
    },
    /// Print the dashboard statistics of a model store.
    Stats {
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Extra stopwords, merged with the bundled SMART list.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    topics: usize,
    #[arg(long, default_value_t = 30)]
    top_words: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    phrase_threshold: f64,
    #[arg(long, default_value_t = 5)]
    phrase_min_count: usize,
    #[arg(long, default_value_t = 100)]
    neighbors: usize,
    #[arg(long, default_value_t = 0.4)]
    alpha: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    min_len: usize,
    #[arg(long, default_value_t = 2)]
    min_df: usize,
    #[arg(long, default_value_t = 0.95)]
    max_df_ratio: f64,
    #[arg(long)]
    out: PathBuf,
}

impl From<BuildArgs> for PipelineConfig {
    fn from(a: BuildArgs) -> Self {
        PipelineConfig {
            input: a.input,
            embeddings: a.embeddings,
            stoplist: a.stoplist,
            topics: a.topics,
            top_words: a.top_words,
            min_len: a.min_len,
            min_df: a.min_df,
            max_df_ratio: a.max_df_ratio,
            phrase_min_count: a.phrase_min_count,
            phrase_threshold: a.phrase_threshold,
            neighbors: a.neighbors,
            alpha: a.alpha,
            max_iter: a.max_iter,
            tol: a.tol,
            seed: a.seed,
            out: a.out,
        }
    }
}

fn main() -> Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match Cli::parse().command {
        Command::Build(args) => {
            let config = PipelineConfig::from(args);
            let (store, snapshot) = build(&config)?;
            eprintln!(
                "built {} patents x {} terms, {} topics in {} iterations -> {}",
                snapshot.model.n_docs(),
                snapshot.model.vocabulary().len(),
                snapshot.model.k(),
                snapshot.model.iterations_run,
                store.dir().display()
            );
        }
        Command::Serve { model, port, auth } => {
            let credentials = Credentials::load(&auth)?;
            let state = Arc::new(AppState::open(&model, credentials, DEFAULT_SESSION_TTL)?);
            let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
            runtime.block_on(async move {
                let listener = server::bind(port).await.context("port unavailable")?;
                server::serve(state, listener).await?;
                anyhow::Ok(())
            })?;
        }
        Command::Compare { model, ids, threshold } => {
            let snapshot = ModelStore::open(&model).load()?;
            let mut dists = Vec::with_capacity(ids.len());
            for id in &ids {
                match snapshot.distribution(id) {
                    Some(d) => dists.push(d),
                    None => bail!("no patent {id:?} in {}", model.display()),
                }
            }
            let result = compare_patents(&dists, threshold)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
        Command::Stats { model } => {
            let snapshot = ModelStore::open(&model).load()?;
            println!("{}", serde_json::to_string_pretty(&snapshot.stats)?);
        }
    }
    Ok(())
}

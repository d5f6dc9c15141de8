//! Command-line front end. Each subcommand reads and writes files only, so
//! stages can be rerun independently.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::json;

use crate::coexpan::{Engine, Expansion};
use crate::config::Config;
use crate::context_index::ContextIndex;
use crate::corpus::{Corpus, EntityCatalog, EntityId};
use crate::embedding::{train_joint, CentroidProvider, EmbeddingTable};
use crate::error::{Error, Result};
use crate::evalkit::{self, RecallBase};
use crate::synthetic::{self, SyntheticConfig};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const INDEX_FILE: &str = "index.json";
pub const CONFIG_ECHO: &str = "config.resolved";

#[derive(Parser, Debug)]
#[command(name = "coexpand", version, about = "Entity set expansion with auxiliary rival sets")]
pub struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a JSONL corpus and write a bundle directory.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train static embeddings for a bundle.
    TrainEmbed {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        min_count: Option<u64>,
    },
    /// Build the skip-gram feature index for a bundle.
    Index {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep raw fixed-radius skip-grams.
        #[arg(long)]
        no_flex: bool,
        #[arg(long = "W")]
        radius: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        k_gen: Option<f64>,
    },
    /// Expand every query in a query file.
    Expand(ExpandArgs),
    /// Score ranking files against ground truth.
    Eval {
        #[arg(long)]
        rankings: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Comma-separated cutoffs.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        /// Cap the recall base at k.
        #[arg(long)]
        recall_cap: bool,
        /// Directory for report.txt and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the planted three-class demo corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        docs: usize,
    },
}

#[derive(Args, Debug)]
struct ExpandArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Per-entity centroid file; defaults to the static embeddings.
    #[arg(long)]
    centroids: Option<PathBuf>,
    #[arg(long)]
    no_aux: bool,
    /// Require an index built without flexgrams.
    #[arg(long)]
    no_flex: bool,
    /// Generate auxiliary sets only in the first iteration.
    #[arg(long)]
    freeze_aux: bool,
    #[arg(long = "t")]
    t: Option<usize>,
    #[arg(long = "T")]
    iterations: Option<usize>,
    #[arg(long = "Q")]
    q: Option<usize>,
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve(global: &GlobalArgs) -> Result<Config> {
    let mut cfg = match &global.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for o in &global.overrides {
        cfg.apply_assignment(o)?;
    }
    if let Some(s) = global.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(t) = global.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = resolve(&cli.global)?;
    match cli.command {
        Command::Preprocess { input, out } => {
            cfg.validate()?;
            preprocess(&input, &out, &cfg)
        }
        Command::TrainEmbed {
            bundle,
            out,
            dim,
            window,
            negatives,
            epochs,
            lambda,
            learning_rate,
            min_count,
        } => {
            let t = &mut cfg.train;
            t.dim = dim.unwrap_or(t.dim);
            t.window = window.unwrap_or(t.window);
            t.negatives = negatives.unwrap_or(t.negatives);
            t.epochs = epochs.unwrap_or(t.epochs);
            t.lambda = lambda.unwrap_or(t.lambda);
            t.learning_rate = learning_rate.unwrap_or(t.learning_rate);
            t.min_count = min_count.unwrap_or(t.min_count);
            cfg.validate()?;
            let out = out.unwrap_or_else(|| bundle.join(EMBEDDINGS_FILE));
            train_embed(&bundle, &out, &cfg)
        }
        Command::Index {
            bundle,
            out,
            no_flex,
            radius,
            gamma,
            k_gen,
        } => {
            if no_flex {
                cfg.index.apply_flex = false;
            }
            cfg.index.radius = radius.unwrap_or(cfg.index.radius);
            cfg.index.flex.gamma = gamma.unwrap_or(cfg.index.flex.gamma);
            cfg.index.flex.k_gen = k_gen.unwrap_or(cfg.index.flex.k_gen);
            cfg.validate()?;
            let out = out.unwrap_or_else(|| bundle.join(INDEX_FILE));
            index(&bundle, &out, &cfg)
        }
        Command::Expand(args) => {
            let x = &mut cfg.expand;
            x.no_aux |= args.no_aux;
            x.freeze_aux |= args.freeze_aux;
            if args.no_flex {
                cfg.index.apply_flex = false;
            }
            x.t = args.t.unwrap_or(x.t);
            x.iterations = args.iterations.unwrap_or(x.iterations);
            x.q = args.q.unwrap_or(x.q);
            cfg.validate()?;
            expand(&args, &cfg)
        }
        Command::Eval {
            rankings,
            queries,
            truth,
            k,
            recall_cap,
            out,
        } => {
            if let Some(k) = k {
                cfg.ks = k;
            }
            if recall_cap {
                cfg.recall_base = RecallBase::CappedAtK;
            }
            cfg.validate()?;
            eval(&rankings, &queries, &truth, out.as_deref(), &cfg)
        }
        Command::Synth { out, docs } => {
            cfg.validate()?;
            let fx = synthetic::generate(&SyntheticConfig {
                seed: cfg.seed,
                n_docs: docs,
                ..SyntheticConfig::default()
            });
            fx.write_to(&out)?;
            println!("wrote {} documents to {}", fx.documents.len(), out.display());
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn echo_config(dir: &Path, cfg: &Config) -> Result<()> {
    write_file(&dir.join(CONFIG_ECHO), cfg.to_text())
}

fn with_threads<T: Send>(cfg: &Config, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn load_bundle(bundle: &Path) -> Result<Corpus> {
    let path = bundle.join(CORPUS_FILE);
    if !path.exists() {
        return Err(Error::NotFound(format!(
            "{} is not a bundle (missing {CORPUS_FILE})",
            bundle.display()
        )));
    }
    Corpus::load(path)
}

fn preprocess(input: &Path, out: &Path, cfg: &Config) -> Result<()> {
    let corpus = Corpus::load(input)?;
    create_dir(out)?;

    let path = out.join(CORPUS_FILE);
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(f);
    corpus
        .write_jsonl(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;

    let mut vocab = String::new();
    for (_, token, n) in corpus.vocab().iter() {
        vocab.push_str(&format!("{token}\t{n}\n"));
    }
    write_file(&out.join("vocab.tsv"), vocab)?;

    let catalog = corpus.catalog();
    let mut entities = String::new();
    for e in catalog.ids() {
        entities.push_str(&format!("{}\t{}\t{}\n", e.0, catalog.name(e), catalog.count(e)));
    }
    write_file(&out.join("entities.tsv"), entities)?;
    echo_config(out, cfg)?;
    println!(
        "documents: {}  vocabulary: {}  entities: {}  mentions: {}",
        corpus.documents().len(),
        corpus.vocab().len(),
        catalog.len(),
        corpus.total_mentions()
    );
    Ok(())
}

fn train_embed(bundle: &Path, out: &Path, cfg: &Config) -> Result<()> {
    let corpus = load_bundle(bundle)?;
    if cfg.threads > 1 {
        warn!("embedding training is single-threaded; --threads has no effect here");
    }
    let table = train_joint(&corpus, &cfg.train)?;
    table.save(out)?;
    echo_config(out.parent().unwrap_or(Path::new(".")), cfg)?;
    println!("{} vectors of dimension {} written to {}", table.len(), table.dim(), out.display());
    Ok(())
}

fn index(bundle: &Path, out: &Path, cfg: &Config) -> Result<()> {
    let corpus = load_bundle(bundle)?;
    let idx = ContextIndex::build(&corpus, &cfg.index)?;
    if idx.features().is_empty() {
        warn!("the corpus has no entity mentions; the index is empty");
    }
    idx.save(out)?;
    echo_config(out.parent().unwrap_or(Path::new(".")), cfg)?;
    let s = idx.stats();
    println!(
        "{} features over {} entities ({} distinct skip-grams, {} split) written to {}",
        idx.features().len(),
        idx.matrix().n_entities(),
        s.distinct_skipgrams,
        s.split_skipgrams,
        out.display()
    );
    Ok(())
}

fn names(catalog: &EntityCatalog, ids: &[EntityId]) -> Vec<String> {
    ids.iter().map(|&e| catalog.name(e).to_owned()).collect()
}

fn write_expansion(out: &Path, key: &str, catalog: &EntityCatalog, x: &Expansion) -> Result<()> {
    let mut ranking = String::new();
    for (i, a) in x.admissions.iter().enumerate() {
        ranking.push_str(&format!("{}\t{}\t{}\n", i + 1, a.mrr, catalog.name(a.entity)));
    }
    write_file(&out.join("rankings").join(format!("{key}.tsv")), ranking)?;

    let mut trace = String::new();
    let mut aux = String::new();
    for it in &x.trace {
        for (k, admitted) in it.admitted.iter().enumerate() {
            let admitted: Vec<_> = admitted
                .iter()
                .map(|a| {
                    json!({
                        "entity": catalog.name(a.entity),
                        "mrr": a.mrr,
                        "r_sg": a.r_sg,
                        "r_emb": a.r_emb,
                    })
                })
                .collect();
            let rec = json!({
                "iteration": it.iteration,
                "set_index": k,
                "admitted": admitted,
                "n_features": it.features.len(),
                "pool_size": it.pool_size,
            });
            trace.push_str(&rec.to_string());
            trace.push('\n');
        }
        if let Some(generated) = &it.generated {
            for (k, set) in generated.sets.iter().enumerate() {
                let provenance: Vec<_> = set
                    .provenance
                    .iter()
                    .map(|g| json!({"seed": catalog.name(g.seed), "group": g.index}))
                    .collect();
                let rec = json!({
                    "iteration": it.iteration,
                    "set_index": k + 1,
                    "members": names(catalog, &set.members),
                    "provenance": provenance,
                });
                aux.push_str(&rec.to_string());
                aux.push('\n');
            }
        }
    }
    write_file(&out.join("traces").join(format!("{key}.jsonl")), trace)?;
    write_file(&out.join("aux").join(format!("{key}.jsonl")), aux)
}

fn expand(args: &ExpandArgs, cfg: &Config) -> Result<()> {
    let corpus = load_bundle(&args.bundle)?;
    let catalog = corpus.catalog();
    let index_path = args.index.clone().unwrap_or_else(|| args.bundle.join(INDEX_FILE));
    let idx = ContextIndex::load(&index_path)?;
    if cfg.index.apply_flex != idx.config().apply_flex {
        return Err(Error::Config(format!(
            "{} was built {} flexgrams; rebuild it with{} --no-flex",
            index_path.display(),
            if idx.config().apply_flex { "with" } else { "without" },
            if idx.config().apply_flex { "" } else { "out" },
        )));
    }
    if idx.matrix().n_entities() != catalog.len() {
        return Err(Error::DimensionMismatch {
            expected: catalog.len(),
            actual: idx.matrix().n_entities(),
        });
    }
    let emb_path = args.embeddings.clone().unwrap_or_else(|| args.bundle.join(EMBEDDINGS_FILE));
    let table = EmbeddingTable::load(&emb_path, catalog)?;
    let centroids = match &args.centroids {
        Some(p) => CentroidProvider::load(p, catalog)?,
        None => CentroidProvider::from_table(&table),
    };
    let queries = evalkit::load_queries(&args.queries)?;
    if queries.is_empty() {
        return Err(Error::NotFound(format!("{} has no queries", args.queries.display())));
    }
    let mut seen = HashSet::new();
    for (i, q) in queries.iter().enumerate() {
        if !seen.insert(q.key(i)) {
            return Err(Error::Config(format!("duplicate query id {}", q.key(i))));
        }
    }
    for sub in ["rankings", "traces", "aux"] {
        create_dir(&args.out.join(sub))?;
    }
    echo_config(&args.out, cfg)?;

    let engine = Engine::new(idx.weights(), &table, &centroids);
    with_threads(cfg, || {
        for (i, q) in queries.iter().enumerate() {
            let key = q.key(i);
            let seeds = catalog.resolve_all(&q.seeds)?;
            let x = engine.co_expand(&seeds, &cfg.expand)?;
            info!("{key}: {} admitted, stopped by {:?}", x.admissions.len(), x.stop);
            write_expansion(&args.out, &key, catalog, &x)?;
            println!("{key}: {} entities", x.admissions.len());
        }
        Ok(())
    })
}

fn eval(rankings: &Path, queries: &Path, truth: &Path, out: Option<&Path>, cfg: &Config) -> Result<()> {
    if !rankings.is_dir() {
        return Err(Error::NotFound(format!("rankings directory {}", rankings.display())));
    }
    let queries = evalkit::load_queries(queries)?;
    let truth = evalkit::load_truth(truth)?;
    let report = evalkit::evaluate(rankings, &queries, &truth, &cfg.ks, cfg.recall_base)?;
    let text = report.to_text();
    print!("{text}");
    if let Some(out) = out {
        create_dir(out)?;
        write_file(&out.join("report.txt"), &text)?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Invariant(e.to_string()))?;
        write_file(&out.join("report.json"), json + "\n")?;
        echo_config(out, cfg)?;
    }
    Ok(())
}

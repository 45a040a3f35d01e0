//! `pugraph` command-line front end.

use std::collections::hash_map::RandomState;
use std::collections::BTreeMap;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pugraph::error::{Error, Result};
use pugraph::graph::{load_edge_list, load_labels, write_snapshot, EdgeFormat, LabelStore, TransactionGraph};
use pugraph::harness::{
    dataset_seed, generate_synthetic, run_benchmark, run_hidden_positive_sweep, train_embeddings, ExperimentConfig,
    SyntheticSpec,
};

#[derive(Debug, Parser)]
#[command(name = "pugraph", version, about = "PU learning for illicit node detection on transaction graphs")]
struct Cli {
    /// Run seed; overrides `rng_seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for all outputs.
    #[arg(long, global = true, env = "PUGRAPH_OUT_DIR", default_value = "pugraph-out")]
    out_dir: PathBuf,

    /// Worker threads; 1 gives bit-reproducible runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load an edge list (and optional labels) and write a snapshot.
    Ingest(IngestArgs),
    /// Generate a synthetic planted-partition dataset.
    Synth {
        /// TOML file with generator parameters; defaults when absent.
        spec: Option<PathBuf>,
    },
    /// Train the configured embeddings on the whole graph.
    Embed { config: PathBuf },
    /// Hidden-positive sweep.
    Sweep { config: PathBuf },
    /// Embedding × model benchmark matrix.
    Bench { config: PathBuf },
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// csv or tsv; guessed from the extension when absent.
    #[arg(long, value_parser = parse_format)]
    format: Option<EdgeFormat>,
    #[arg(long)]
    directed: bool,
}

fn parse_format(s: &str) -> std::result::Result<EdgeFormat, String> {
    match s {
        "csv" => Ok(EdgeFormat::Csv),
        "tsv" => Ok(EdgeFormat::Tsv),
        _ => Err(format!("unknown format `{s}` (csv or tsv)")),
    }
}

#[derive(Debug, Serialize)]
enum SeedSource {
    #[serde(rename = "flag")]
    Flag,
    #[serde(rename = "config")]
    Config,
    #[serde(rename = "random")]
    Random,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    config: Option<PathBuf>,
    seed: u64,
    seed_source: SeedSource,
    version: &'static str,
    out_dir: PathBuf,
    jobs: Option<usize>,
    timings: BTreeMap<&'static str, f64>,
    outputs: Vec<PathBuf>,
}

struct Run {
    manifest: RunManifest,
    started: Instant,
}

impl Run {
    fn new(cli: &Cli, command: &'static str, config: Option<&Path>, config_seed: Option<u64>) -> Self {
        let (seed, seed_source) = match (cli.seed, config_seed) {
            (Some(s), _) => (s, SeedSource::Flag),
            (None, Some(s)) => (s, SeedSource::Config),
            (None, None) => (random_seed(), SeedSource::Random),
        };
        log::info!("{command}: seed {seed}");
        Run {
            manifest: RunManifest {
                command,
                config: config.map(Path::to_path_buf),
                seed,
                seed_source,
                version: env!("CARGO_PKG_VERSION"),
                out_dir: cli.out_dir.clone(),
                jobs: cli.jobs,
                timings: BTreeMap::new(),
                outputs: Vec::new(),
            },
            started: Instant::now(),
        }
    }

    fn seed(&self) -> u64 {
        self.manifest.seed
    }

    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.manifest.timings.insert(stage, t.elapsed().as_secs_f64());
        Ok(out)
    }

    fn output(&mut self, path: PathBuf) {
        self.manifest.outputs.push(path);
    }

    /// Writes `manifest.json` via a temporary file and a rename.
    fn finish(mut self) -> Result<()> {
        self.manifest.timings.insert("total", self.started.elapsed().as_secs_f64());
        let dir = &self.manifest.out_dir;
        let tmp = dir.join(".manifest.json.tmp");
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&tmp, json).map_err(|e| io_err(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn random_seed() -> u64 {
    let mut h = RandomState::new().build_hasher();
    h.write_u128(std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos()));
    h.finish()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn load_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<(TransactionGraph, LabelStore)> {
    let (graph, labels) = cfg.dataset.load(cfg.base_dir.as_deref(), dataset_seed(seed))?;
    log::info!(
        "dataset: {} nodes, {} edges, {} labeled",
        graph.node_count(),
        graph.edge_count(),
        labels.labeled_count()
    );
    Ok((graph, labels))
}

fn summary_json(graph: &TransactionGraph, labels: &LabelStore) -> serde_json::Value {
    serde_json::json!({
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "directed": graph.is_directed(),
        "labeled": labels.labeled_count(),
        "true_positives": labels.true_positive_count(),
    })
}

fn write_summary(run: &mut Run, dir: &Path, graph: &TransactionGraph, labels: &LabelStore) -> Result<()> {
    let summary = summary_json(graph, labels);
    println!("{summary}");
    let path = dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|e| io_err(&path, e))?;
    run.output(path);
    Ok(())
}

fn cmd_ingest(cli: &Cli, args: &IngestArgs) -> Result<()> {
    let mut run = Run::new(cli, "ingest", None, None);
    let format = args.format.unwrap_or_else(|| EdgeFormat::from_path(&args.edges));
    let (graph, labels) = run.time("load", || {
        let graph = load_edge_list(&args.edges, format, args.directed)?;
        let labels = match &args.labels {
            Some(p) => {
                let (store, unknown) = load_labels(p, &graph)?;
                if !unknown.is_empty() {
                    log::warn!("{} labeled ids are not in the graph", unknown.len());
                }
                store
            }
            None => LabelStore::unlabeled(graph.node_count()),
        };
        Ok((graph, labels))
    })?;
    let dir = cli.out_dir.join("snapshot");
    run.time("write", || write_snapshot(&dir, &graph, &labels))?;
    run.output(dir);
    write_summary(&mut run, &cli.out_dir, &graph, &labels)?;
    run.finish()
}

fn cmd_synth(cli: &Cli, spec_path: Option<&Path>) -> Result<()> {
    let spec: SyntheticSpec = match spec_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            SyntheticSpec::from_toml_str(&text)?
        }
        None => SyntheticSpec::default(),
    };
    spec.validate()?;
    let mut run = Run::new(cli, "synth", spec_path, None);
    let seed = dataset_seed(run.seed());
    let (graph, labels) = run.time("generate", || generate_synthetic(&spec, seed))?;
    let dir = cli.out_dir.join("snapshot");
    run.time("write", || write_snapshot(&dir, &graph, &labels))?;
    run.output(dir);
    write_summary(&mut run, &cli.out_dir, &graph, &labels)?;
    run.finish()
}

fn cmd_embed(cli: &Cli, config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let mut run = Run::new(cli, "embed", Some(config), cfg.rng_seed);
    let seed = run.seed();
    let (graph, _) = run.time("load", || load_dataset(&cfg, seed))?;
    let embs = run.time("embed", || train_embeddings(&cfg.embeddings, &graph, seed))?;
    let dir = cli.out_dir.join("embeddings");
    create_dir(&dir)?;
    for (spec, emb) in cfg.embeddings.iter().zip(&embs) {
        let path = dir.join(format!("{}.csv", spec.name));
        emb.write_csv(&path)?;
        println!("{}: {} x {}", spec.name, emb.len(), emb.dim());
        run.output(path);
    }
    run.finish()
}

fn cmd_sweep(cli: &Cli, config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let mut run = Run::new(cli, "sweep", Some(config), cfg.rng_seed);
    let seed = run.seed();
    let (graph, labels) = run.time("load", || load_dataset(&cfg, seed))?;
    let table = run.time("sweep", || run_hidden_positive_sweep(&cfg, &graph, &labels, seed))?;
    let path = cli.out_dir.join("sweep.csv");
    table.write_csv(&path)?;
    println!("sweep over `{}`: {} rows", table.embedding, table.rows.len());
    run.output(path);
    run.finish()
}

fn cmd_bench(cli: &Cli, config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let mut run = Run::new(cli, "bench", Some(config), cfg.rng_seed);
    let seed = run.seed();
    let (graph, labels) = run.time("load", || load_dataset(&cfg, seed))?;
    let result = run.time("bench", || run_benchmark(&cfg, &graph, &labels, seed))?;
    result.write(&cli.out_dir)?;
    for est in &result.metadata.estimates {
        if let (Some(c), Some(p)) = (est.c_hat_mean, est.pi_hat_mean) {
            println!("{} / {}: c_hat {c:.4} pi_hat {p:.4}", est.embedding, est.model);
        }
    }
    for name in ["matrix.csv", "matrix.md", "metadata.json"] {
        run.output(cli.out_dir.join(name));
    }
    run.finish()
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    create_dir(&cli.out_dir)?;
    match &cli.command {
        Command::Ingest(args) => cmd_ingest(cli, args),
        Command::Synth { spec } => cmd_synth(cli, spec.as_deref()),
        Command::Embed { config } => cmd_embed(cli, config),
        Command::Sweep { config } => cmd_sweep(cli, config),
        Command::Bench { config } => cmd_bench(cli, config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error[{}]: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}

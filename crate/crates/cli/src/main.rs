//! `rankscope`: stage-by-stage pipeline over an artifact store.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 data error, 4 missing artifact.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rankscope::dataset::QueryId;
use rankscope::explain::Method;
use rankscope::pipeline::{self, DatasetConfig, ExplainSettings, MappingSource, PipelineConfig};
use rankscope::store::Store;
use rankscope::synthetic::{write_csv, SyntheticSpec};
use rankscope::Error;
use rankscope_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "rankscope", version, about = "Explain and compare learned rankers against published rankings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read the source table into the store.
    Ingest(PipelineArgs),
    /// Train every configured ranker on the ingested table.
    Train(PipelineArgs),
    /// Rank each year with each trained ranker and store fit reports.
    Evaluate(PipelineArgs),
    /// Compute LIME and/or ICE explanations per ranker and year.
    Explain(PipelineArgs),
    /// Compare LIME and ICE explanations item by item.
    Agreement(PipelineArgs),
    /// Print the ranker x {NDCG@10, P@10, MAP, agreement} table.
    Report(PipelineArgs),
    /// Run every stage in order and print the report.
    Run(PipelineArgs),
    /// Serve the store over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic ranking table scored by a known linear function.
    Synth(SynthArgs),
}

/// Every flag overrides the matching key of the config file.
#[derive(Args, Clone, Default)]
struct PipelineArgs {
    /// Pipeline config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random stream; `seed` in the file. Required.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact store directory; `store` in the file (default: store).
    #[arg(long)]
    store: Option<PathBuf>,
    /// Source table; `dataset.path` in the file. Required without --config.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Column mapping file for CSV input; `dataset.mapping` in the file.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Dataset id in the store; `dataset.id` in the file (default: the
    /// mapping's dataset_id, else the file stem).
    #[arg(long)]
    dataset_id: Option<String>,
    /// Ranker ids or algorithm names, comma-separated; `rankers` in the file
    /// (default: all six algorithms).
    #[arg(long, value_delimiter = ',')]
    rankers: Vec<String>,
    /// Years to keep, comma-separated; `dataset.years` in the file (default: all).
    #[arg(long, value_delimiter = ',')]
    years: Vec<QueryId>,
    /// Explanation methods (LIME, ICE), comma-separated; `explain.methods` in
    /// the file (default: LIME,ICE).
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    method: Vec<Method>,
}

#[derive(Args)]
struct ServeArgs {
    /// Pipeline config file; only its `store` is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Service config file (TOML: host, port, store, cache_size, static_dir).
    #[arg(long)]
    service_config: Option<PathBuf>,
    /// Artifact store directory (default: store).
    #[arg(long)]
    store: Option<PathBuf>,
    /// Listen address (default: 127.0.0.1).
    #[arg(long)]
    host: Option<String>,
    /// Listen port (default: 8080).
    #[arg(long)]
    port: Option<u16>,
    /// Cached responses; 0 disables the cache (default: 256).
    #[arg(long)]
    cache_size: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    candidates: usize,
    #[arg(long, default_value_t = 6)]
    years: usize,
    #[arg(long, default_value_t = 2010)]
    first_year: QueryId,
    /// Standard deviation of score noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = SyntheticSpec::default().seed)]
    seed: u64,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|_| format!("unknown method `{s}`; expected LIME or ICE"))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidKey(_) => 2,
        Error::NotFound(_) => 4,
        _ => 3,
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn build_config(a: &PipelineArgs) -> rankscope::Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            if !path.is_file() {
                return Err(config_error(format!("config file {} does not exist", path.display())));
            }
            PipelineConfig::from_file(path).map_err(|e| match e {
                Error::Io { path, source } => config_error(format!("cannot read {}: {source}", path.display())),
                other => other,
            })?
        }
        None => {
            let seed = a.seed.ok_or_else(|| config_error("--seed is required (or `seed` in a --config file)"))?;
            let path = a
                .dataset
                .clone()
                .ok_or_else(|| config_error("--dataset is required (or `dataset.path` in a --config file)"))?;
            PipelineConfig {
                seed,
                store: PathBuf::from("store"),
                dataset: DatasetConfig {
                    id: None,
                    path,
                    format: None,
                    mapping: None,
                    years: None,
                },
                rankers: Vec::new(),
                explain: ExplainSettings::default(),
            }
        }
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = &a.store {
        cfg.store = s.clone();
    }
    if let Some(d) = &a.dataset {
        cfg.dataset.path = d.clone();
    }
    if let Some(m) = &a.mapping {
        cfg.dataset.mapping = Some(MappingSource::File(m.clone()));
    }
    if let Some(id) = &a.dataset_id {
        cfg.dataset.id = Some(id.clone());
    }
    if !a.years.is_empty() {
        cfg.dataset.years = Some(a.years.clone());
    }
    if !a.method.is_empty() {
        cfg.explain.methods = a.method.clone();
    }
    if !a.rankers.is_empty() {
        cfg.select_rankers(&a.rankers)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require_inputs(cfg: &PipelineConfig) -> rankscope::Result<()> {
    if !cfg.dataset.path.is_file() {
        return Err(config_error(format!("dataset file {} does not exist", cfg.dataset.path.display())));
    }
    if let Some(MappingSource::File(p)) = &cfg.dataset.mapping {
        if !p.is_file() {
            return Err(config_error(format!("mapping file {} does not exist", p.display())));
        }
    }
    Ok(())
}

fn run_stage(command: Command) -> rankscope::Result<()> {
    match command {
        Command::Ingest(a) => {
            let cfg = build_config(&a)?;
            require_inputs(&cfg)?;
            let s = pipeline::ingest(&cfg, &Store::new(&cfg.store))?;
            println!(
                "ingested {}: {} years, {} rows, {} attributes, {} rows skipped",
                s.dataset_id, s.queries, s.rows, s.attributes, s.rejected
            );
        }
        Command::Train(a) => {
            let cfg = build_config(&a)?;
            for id in pipeline::train_all(&cfg, &Store::new(&cfg.store))? {
                println!("trained {id}");
            }
        }
        Command::Evaluate(a) => {
            let cfg = build_config(&a)?;
            let reports = pipeline::evaluate(&cfg, &Store::new(&cfg.store))?;
            println!("wrote {} fit reports", reports.len());
        }
        Command::Explain(a) => {
            let cfg = build_config(&a)?;
            let n = pipeline::explain_all(&cfg, &Store::new(&cfg.store))?;
            println!("wrote {n} explanation matrices");
        }
        Command::Agreement(a) => {
            let cfg = build_config(&a)?;
            for r in pipeline::agreement_all(&cfg, &Store::new(&cfg.store))? {
                let median = r.median.map_or_else(|| "-".to_string(), |m| format!("{m:.3}"));
                println!("{} {} median {} undefined {}", r.ranker_id, r.query_id, median, r.undefined);
            }
        }
        Command::Report(a) => {
            let cfg = build_config(&a)?;
            print!("{}", pipeline::report(&cfg, &Store::new(&cfg.store))?);
        }
        Command::Run(a) => {
            let cfg = build_config(&a)?;
            require_inputs(&cfg)?;
            print!("{}", pipeline::run(&cfg, &Store::new(&cfg.store))?);
        }
        Command::Serve(a) => serve(a)?,
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                candidates: a.candidates,
                years: a.years,
                first_year: a.first_year,
                noise: a.noise,
                seed: a.seed,
                ..SyntheticSpec::default()
            };
            let table = spec.generate()?;
            let file = std::fs::File::create(&a.out).map_err(|e| Error::Io {
                path: a.out.clone(),
                source: e,
            })?;
            write_csv(&table, file)?;
            println!("wrote {} ({} years x {} candidates)", a.out.display(), a.years, a.candidates);
        }
    }
    Ok(())
}

fn serve(a: ServeArgs) -> rankscope::Result<()> {
    let mut cfg = ServiceConfig::load(a.service_config.as_deref(), |k| std::env::var(k).ok())?;
    if let Some(p) = &a.config {
        cfg.store = PipelineConfig::from_file(p)?.store;
    }
    if let Some(s) = a.store {
        cfg.store = s;
    }
    if let Some(h) = a.host {
        cfg.host = h;
    }
    if let Some(p) = a.port {
        cfg.port = p;
    }
    if let Some(c) = a.cache_size {
        cfg.cache_size = c;
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| config_error(format!("cannot start runtime: {e}")))?;
    rt.block_on(rankscope_service::serve(&cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run_stage(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

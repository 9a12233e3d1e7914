use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use nutrifilter_core::embeddings::Sampling;
use nutrifilter_core::eval::{load_questions, render_report, resolve, run_suite, EvalReport, ReportFormat};
use nutrifilter_core::filtergen::LlmBackend;

use crate::app::{self, AppError};
use crate::config::{AppConfig, ThresholdSetting};
use crate::http::{self, AppState};

const DEFAULT_CONFIG: &str = "nutrifilter.toml";

#[derive(Debug, Parser)]
#[command(
    name = "nutrifilter",
    version,
    about = "Metadata-filtered retrieval over food composition data"
)]
pub struct Cli {
    /// Config file; `nutrifilter.toml` in the working directory is used when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a corpus and write a snapshot.
    Ingest(IngestArgs),
    /// Print distance statistics and candidate thresholds for a snapshot.
    Calibrate(CalibrateArgs),
    /// Answer one question.
    Query(QueryArgs),
    /// Score a question set and write reports.
    Eval(EvalArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Number of random pairs to sample.
    #[arg(long, conflicts_with = "exact")]
    pub sample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enumerate every pair regardless of store size.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub question: String,
    #[arg(long)]
    pub threshold: Option<ThresholdSetting>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub questions: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Comma-separated thresholds, or `calibrated` for (mu - sigma, mu, mu + sigma).
    #[arg(long, default_value = "calibrated")]
    pub thresholds: String,
    #[arg(long, default_value = "eval-out")]
    pub out: PathBuf,
    /// Scripted LLM backends to compare; repeatable. Defaults to the configured LLM.
    #[arg(long = "script")]
    pub scripts: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<String>,
}

pub fn load_config(path: Option<&Path>) -> Result<AppConfig, AppError> {
    match path {
        Some(p) => Ok(AppConfig::load(p)?),
        None if Path::new(DEFAULT_CONFIG).is_file() => Ok(AppConfig::load(Path::new(DEFAULT_CONFIG))?),
        None => Ok(AppConfig::default()),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
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

pub fn run(cli: Cli) -> Result<(), AppError> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => ingest(&config, a),
        Command::Calibrate(a) => calibrate(&config, a),
        Command::Query(a) => query(config, a),
        Command::Eval(a) => eval(&config, a),
        Command::Serve(a) => serve(&config, a),
    }
}

fn ingest(config: &AppConfig, args: IngestArgs) -> Result<(), AppError> {
    let corpus = args
        .corpus
        .or_else(|| config.corpus.clone())
        .ok_or_else(|| AppError::Config("no corpus given".into()))?;
    let out = args
        .out
        .or_else(|| config.snapshot.clone())
        .ok_or_else(|| AppError::Config("no snapshot output path given".into()))?;
    let embedder = app::build_embedder(&config.embedding);
    let n = app::ingest_to_snapshot(&corpus, &out, embedder.as_ref())?;
    println!("ingested {n} items");
    Ok(())
}

fn calibrate(config: &AppConfig, args: CalibrateArgs) -> Result<(), AppError> {
    let path = args
        .snapshot
        .or_else(|| config.snapshot.clone())
        .ok_or_else(|| AppError::Config("no snapshot given".into()))?;
    let (store, _) = app::load_snapshot(&path)?;
    let sampling = match (args.exact, args.sample) {
        (true, _) => Sampling::Exact,
        (false, Some(pairs)) => Sampling::Sampled { pairs },
        (false, None) => Sampling::default(),
    };
    let stats = app::calibrate_store(&store, sampling, args.seed.unwrap_or(config.seed))?;
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}

fn query(mut config: AppConfig, args: QueryArgs) -> Result<(), AppError> {
    if let Some(t) = args.threshold {
        config.threshold = t;
    }
    let loaded = app::open_store(&config)?;
    let engine = app::build_engine(&config, &loaded, app::configured_llm(&config)?)?;
    let resp = app::answer(&engine, &args.question)?;
    if args.json {
        println!("{}", serde_json::to_string(&resp).expect("response serializes"));
        return Ok(());
    }
    println!("filter: {}", resp.filter_document);
    println!("tier: {}", resp.tier);
    match resp.threshold_used {
        Some(t) => println!("threshold: {t:.3}"),
        None => println!("threshold: -"),
    }
    println!("items: {}", resp.items.len());
    for item in &resp.items {
        match item.distance {
            Some(d) => println!("  {}\t{}\t{}\t{d:.4}", item.id, item.food_group, item.name),
            None => println!("  {}\t{}\t{}", item.id, item.food_group, item.name),
        }
    }
    Ok(())
}

fn parse_thresholds(raw: &str, loaded: &app::LoadedStore, seed: u64) -> Result<Vec<f64>, AppError> {
    if raw.trim() == "calibrated" {
        return Ok(app::calibrate_store(&loaded.store, Sampling::default(), seed)?
            .thresholds()
            .to_vec());
    }
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && *v <= 2.0)
                .ok_or_else(|| AppError::Config(format!("invalid threshold `{}`", t.trim())))
        })
        .collect()
}

fn eval(config: &AppConfig, args: EvalArgs) -> Result<(), AppError> {
    let loaded = app::open_store(config)?;
    let thresholds = parse_thresholds(&args.thresholds, &loaded, config.seed)?;
    let backends: Vec<Arc<dyn LlmBackend>> = if args.scripts.is_empty() {
        vec![app::configured_llm(config)?]
    } else {
        args.scripts
            .iter()
            .map(|p| app::load_script(p).map(|b| Arc::new(b) as Arc<dyn LlmBackend>))
            .collect::<Result<_, _>>()?
    };
    let cases = load_questions(&args.questions).map_err(|e| AppError::Data(e.to_string()))?;

    let mut report = EvalReport::default();
    let mut audit = Vec::new();
    for llm in backends {
        let engine = app::build_engine(config, &loaded, llm)?;
        let questions =
            resolve(cases.clone(), engine.store(), engine.schema()).map_err(|e| AppError::Data(e.to_string()))?;
        let out = run_suite(&questions, &engine, &thresholds, args.runs, args.seed)
            .map_err(|e| AppError::Config(e.to_string()))?;
        report.merge(out.report);
        audit.extend(out.audit);
    }

    let write = |name: &str, body: String| -> Result<(), AppError> {
        let path = args.out.join(name);
        fs::write(&path, body).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))
    };
    fs::create_dir_all(&args.out).map_err(|e| AppError::Data(format!("{}: {e}", args.out.display())))?;
    write("report.json", render_report(&report, ReportFormat::Json))?;
    write("report.csv", render_report(&report, ReportFormat::Csv))?;
    let table = render_report(&report, ReportFormat::TableText);
    write("report.txt", table.clone())?;
    let mut lines = String::new();
    for record in &audit {
        lines.push_str(&serde_json::to_string(record).expect("audit serializes"));
        lines.push('\n');
    }
    write("audit.jsonl", lines)?;
    print!("{table}");
    Ok(())
}

fn serve(config: &AppConfig, args: ServeArgs) -> Result<(), AppError> {
    let bind = args.bind.unwrap_or_else(|| config.bind.clone());
    let snapshot_exists = config.snapshot.as_deref().is_some_and(Path::is_file);
    let state = if snapshot_exists {
        let loaded = app::open_store(config)?;
        AppState::new(app::build_engine(config, &loaded, app::configured_llm(config)?)?)
    } else {
        log::warn!("no snapshot found; serving health checks only");
        AppState::default()
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::Config(e.to_string()))?;
    runtime
        .block_on(http::serve(state, &bind))
        .map_err(|e| AppError::Config(format!("{bind}: {e}")))
}

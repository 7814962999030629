use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use cohort_core::commands::{
    cmd_expand, cmd_geolocate, cmd_ingest, cmd_prevalence, CohortSource, Comparison, ExpandMode, ExpandOptions,
    GeolocateOptions, Indicators, IngestOptions, PrevalenceOptions,
};
use cohort_core::config::{PipelineConfig, CONFIG_ENV};
use cohort_core::corpus::{Thresholds, TimeWindow};
use cohort_core::lm::{RankingParams, DEFAULT_ALPHA, DEFAULT_TOP_DOCS, DEFAULT_TOP_TERMS, DEFAULT_VOCABULARY_THRESHOLD};
use cohort_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "cohort", version, about = "Subcommunity retrieval, author geolocation and cohort prevalence")]
struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the index cache from NDJSON dumps.
    Ingest(IngestArgs),
    /// Run query expansion from seed terms.
    Expand(ExpandArgs),
    /// Assign authors to US states.
    Geolocate(GeolocateArgs),
    /// Per-state and per-division prevalence, with optional indicator statistics.
    Prevalence(PrevalenceArgs),
}

#[derive(Args, Debug)]
struct WindowArgs {
    /// Inclusive start, seconds since epoch.
    #[arg(long)]
    window_start: Option<i64>,
    /// Exclusive end, seconds since epoch.
    #[arg(long)]
    window_end: Option<i64>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Dump files, plain or gzip.
    inputs: Vec<PathBuf>,
    /// Index cache to write.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Token-to-lemma TSV.
    #[arg(long)]
    lemmas: Option<PathBuf>,
    #[arg(long)]
    min_entries: Option<u64>,
    #[arg(long)]
    min_term_count: Option<u64>,
    /// Summary JSON path (default: <index>.summary.json).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args, Debug)]
struct RankingArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    top_docs: Option<usize>,
    #[arg(long)]
    top_terms: Option<usize>,
}

#[derive(Args, Debug)]
struct ExpandArgs {
    /// Seed terms.
    seeds: Vec<String>,
    #[arg(long)]
    index: Option<PathBuf>,
    /// Run the session API on this port.
    #[arg(long, value_name = "PORT", conflicts_with = "policy")]
    serve: Option<u16>,
    /// Allowlist of terms to accept, one per line.
    #[arg(long, value_name = "FILE")]
    policy: Option<PathBuf>,
    /// Static files served next to the API.
    #[arg(long, requires = "serve")]
    static_dir: Option<PathBuf>,
    /// Seconds to keep serving after convergence; omit to serve until interrupted.
    #[arg(long, requires = "serve")]
    linger_secs: Option<u64>,
    /// Resume a saved session.
    #[arg(long)]
    session: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    ranking: RankingArgs,
    /// Minimum score for the exported vocabulary.
    #[arg(long, default_value_t = DEFAULT_VOCABULARY_THRESHOLD)]
    vocab_threshold: f64,
    #[arg(long, default_value_t = 100)]
    max_iterations: u32,
}

#[derive(Args, Debug)]
struct GeolocateArgs {
    inputs: Vec<PathBuf>,
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    #[arg(long)]
    flairs: Option<PathBuf>,
    #[arg(long)]
    locations: Option<PathBuf>,
    #[arg(long)]
    census: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args, Debug)]
struct PrevalenceArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    /// Geolocation CSV.
    #[arg(long)]
    geo: PathBuf,
    /// Cohort documents, one per line.
    #[arg(long, group = "cohort_source")]
    subreddits: Option<PathBuf>,
    /// Cohort from a saved session's relevant set.
    #[arg(long, group = "cohort_source")]
    session: Option<PathBuf>,
    /// Cohort authors, one per line.
    #[arg(long, group = "cohort_source")]
    cohort: Option<PathBuf>,
    #[arg(long)]
    divisions: Option<PathBuf>,
    #[arg(long, requires = "prescribing")]
    overdose: Option<PathBuf>,
    #[arg(long, requires = "overdose")]
    prescribing: Option<PathBuf>,
    #[arg(long)]
    log_transform: bool,
    /// Index of a second period for the delta table.
    #[arg(long)]
    compare_index: Option<PathBuf>,
    /// Geolocation CSV for the second period.
    #[arg(long, requires = "compare_index")]
    compare_geo: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn window(args: &WindowArgs, cfg: &PipelineConfig) -> Result<Option<TimeWindow>, Error> {
    let start = args.window_start.or(cfg.window_start);
    let end = args.window_end.or(cfg.window_end);
    if start.is_none() && end.is_none() {
        return Ok(None);
    }
    TimeWindow::new(start.unwrap_or(i64::MIN), end.unwrap_or(i64::MAX)).map(Some)
}

fn inputs(args: &[PathBuf], cfg: &PipelineConfig) -> Result<Vec<PathBuf>, Error> {
    let v = if args.is_empty() { cfg.inputs.clone() } else { args.to_vec() };
    if v.is_empty() {
        return Err(usage("no input files given"));
    }
    Ok(v)
}

fn out_dir(arg: &Option<PathBuf>, cfg: &PipelineConfig) -> PathBuf {
    arg.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."))
}

fn index_path(arg: &Option<PathBuf>, cfg: &PipelineConfig) -> Result<PathBuf, Error> {
    arg.clone()
        .or_else(|| cfg.index.clone())
        .ok_or_else(|| usage("--index is required"))
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Ingest(a) => {
            let defaults = Thresholds::default();
            let opts = IngestOptions {
                inputs: inputs(&a.inputs, &cfg)?,
                index: index_path(&a.index, &cfg)?,
                lemmas: a.lemmas.or(cfg.lemmas.clone()),
                thresholds: Thresholds {
                    min_doc_entries: a.min_entries.or(cfg.min_entries).unwrap_or(defaults.min_doc_entries),
                    min_term_count: a.min_term_count.or(cfg.min_term_count).unwrap_or(defaults.min_term_count),
                },
                window: window(&a.window, &cfg)?,
                summary: a.summary,
            };
            let summary = cmd_ingest(&opts)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Expand(a) => {
            let mode = match (a.serve.or(cfg.serve), a.policy) {
                (_, Some(p)) => ExpandMode::Policy(p),
                (Some(port), None) => ExpandMode::Serve {
                    port,
                    static_dir: a.static_dir,
                    linger: a.linger_secs.map(Duration::from_secs),
                },
                (None, None) => return Err(usage("one of --serve PORT or --policy FILE is required")),
            };
            if a.seeds.is_empty() && a.session.is_none() {
                return Err(usage("give seed terms or --session"));
            }
            let params = RankingParams {
                alpha: a.ranking.alpha.or(cfg.alpha).unwrap_or(DEFAULT_ALPHA),
                top_docs: a.ranking.top_docs.or(cfg.top_docs).unwrap_or(DEFAULT_TOP_DOCS),
                top_terms: a.ranking.top_terms.or(cfg.top_terms).unwrap_or(DEFAULT_TOP_TERMS),
            };
            params.validate()?;
            let opts = ExpandOptions {
                index: index_path(&a.index, &cfg)?,
                seeds: a.seeds.iter().map(|s| s.to_lowercase()).collect(),
                params,
                mode,
                out_dir: out_dir(&a.out, &cfg),
                resume: a.session,
                vocabulary_threshold: a.vocab_threshold,
                max_iterations: a.max_iterations,
            };
            let o = cmd_expand(&opts)?;
            println!(
                "{}",
                serde_json::json!({
                    "status": o.session.status,
                    "iterations": o.session.iteration(),
                    "query": o.session.query,
                    "relevant": o.session.relevant,
                    "session": o.session_path,
                })
            );
        }
        Command::Geolocate(a) => {
            let opts = GeolocateOptions {
                inputs: inputs(&a.inputs, &cfg)?,
                gazetteer: a
                    .gazetteer
                    .or(cfg.geo.gazetteer.clone())
                    .ok_or_else(|| usage("--gazetteer is required"))?,
                flairs: a.flairs.or(cfg.geo.flairs.clone()),
                locations: a.locations.or(cfg.geo.locations.clone()),
                census: a.census.or(cfg.geo.census.clone()),
                window: window(&a.window, &cfg)?,
                out_dir: out_dir(&a.out, &cfg),
            };
            let o = cmd_geolocate(&opts)?;
            println!("{}", serde_json::to_string(&o.summary)?);
        }
        Command::Prevalence(a) => {
            let cohort = match (a.subreddits, a.session, a.cohort) {
                (Some(p), _, _) => CohortSource::Subreddits(p),
                (_, Some(p), _) => CohortSource::Session(p),
                (_, _, Some(p)) => CohortSource::Authors(p),
                _ => return Err(usage("one of --subreddits, --session or --cohort is required")),
            };
            let index = a.index.or(cfg.index.clone());
            let opts = PrevalenceOptions {
                index,
                geolocation: a.geo,
                cohort,
                divisions: a.divisions,
                indicators: match (a.overdose, a.prescribing) {
                    (Some(overdose), Some(prescribing)) => Some(Indicators {
                        overdose,
                        prescribing,
                        log_transform: a.log_transform,
                    }),
                    _ => None,
                },
                compare: a.compare_index.map(|index| Comparison {
                    index,
                    geolocation: a.compare_geo,
                }),
                out_dir: out_dir(&a.out, &cfg),
            };
            let o = cmd_prevalence(&opts)?;
            println!(
                "{}",
                serde_json::json!({ "cohort_authors": o.cohort_authors, "states": o.records.len() })
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { EXIT_DATA } else { EXIT_USAGE })
        }
    }
}

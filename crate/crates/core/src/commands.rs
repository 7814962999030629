//! The four pipeline commands, callable without the command line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::api::{serve, SessionServer};
use crate::corpus::{ingest_dumps, EntryFilter, IngestSummary, LemmaTable, LoadedIndex, Thresholds, TimeWindow};
use crate::error::{Error, Result};
use crate::geo::{
    census_agreement, load_census, Assignments, Census, FlairMap, Gazetteer, GeoResources, GeoSummary, GeoTallies,
    LocationSubreddits, SourceTally, SourceYield, State,
};
use crate::lm::{export_topic_vocabulary, rank_documents, rank_terms, Query, RankingParams};
use crate::output;
use crate::session::{AllowlistPolicy, ExpansionSession};
use crate::stats::{
    aggregate_divisions, compute_prevalence, regression_report, temporal_compare, DivisionMap, IndicatorSeries,
    PrevalenceRecord,
};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn filter_for(window: Option<TimeWindow>) -> EntryFilter {
    EntryFilter { window }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub inputs: Vec<PathBuf>,
    pub index: PathBuf,
    pub lemmas: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub window: Option<TimeWindow>,
    /// Defaults to the index path with `.summary.json` appended.
    pub summary: Option<PathBuf>,
}

fn appended(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn cmd_ingest(opts: &IngestOptions) -> Result<IngestSummary> {
    let lemmas = match &opts.lemmas {
        Some(p) => LemmaTable::load(p)?,
        None => LemmaTable::new(),
    };
    let (index, summary) = ingest_dumps(&opts.inputs, &lemmas, &filter_for(opts.window), opts.thresholds)?;
    if summary.lines.accepted == 0 {
        warn!("no entries admitted; writing an empty index");
    }
    if summary.lines.malformed > 0 {
        warn!("skipped {} malformed lines", summary.lines.malformed);
    }
    if let Some(dir) = opts.index.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    index.save(&opts.index)?;
    let summary_path = opts.summary.clone().unwrap_or_else(|| appended(&opts.index, ".summary.json"));
    output::write_json(&summary_path, &summary)?;
    info!(
        "indexed {} documents, {} terms from {} lines",
        summary.documents_retained, summary.vocabulary_size, summary.lines.lines
    );
    Ok(summary)
}

#[derive(Debug, Clone)]
pub enum ExpandMode {
    /// Scripted decisions from an allowlist file.
    Policy(PathBuf),
    Serve {
        port: u16,
        static_dir: Option<PathBuf>,
        /// Keep serving this long after convergence; None serves until interrupted.
        linger: Option<Duration>,
    },
}

#[derive(Debug, Clone)]
pub struct ExpandOptions {
    pub index: PathBuf,
    pub seeds: Vec<String>,
    pub params: RankingParams,
    pub mode: ExpandMode,
    pub out_dir: PathBuf,
    /// Resume from a saved session instead of starting from `seeds`.
    pub resume: Option<PathBuf>,
    pub vocabulary_threshold: f64,
    pub max_iterations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandOutcome {
    pub session: ExpansionSession,
    pub session_path: PathBuf,
    pub ranking_path: PathBuf,
    pub vocabulary_path: PathBuf,
}

pub fn cmd_expand(opts: &ExpandOptions) -> Result<ExpandOutcome> {
    let index = Arc::new(LoadedIndex::open(&opts.index)?);
    let mut session = match &opts.resume {
        Some(p) => ExpansionSession::load(p, &index)?,
        None => ExpansionSession::create(&index, &opts.seeds, opts.params)?,
    };
    create_dir(&opts.out_dir)?;
    let session_path = opts.out_dir.join("session.json");

    match &opts.mode {
        ExpandMode::Policy(path) => {
            let mut policy = AllowlistPolicy::load(path)?;
            let n = session.run_to_convergence(&index, &mut policy, opts.max_iterations)?;
            info!("converged after {n} iterations");
        }
        ExpandMode::Serve {
            port,
            static_dir,
            linger,
        } => {
            let server = SessionServer::new(Arc::clone(&index), session, Some(session_path.clone()))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Session(format!("runtime: {e}")))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", *port))
                    .await
                    .map_err(|e| Error::Session(format!("bind port {port}: {e}")))?;
                info!("session API on http://{}", listener.local_addr().map_err(|e| Error::Session(e.to_string()))?);
                let ctrl_c = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                serve(listener, Arc::clone(&server), static_dir.clone(), *linger, ctrl_c).await
            })?;
            session = server.into_session();
            if !session.is_converged() {
                warn!("stopped before convergence at iteration {}", session.iteration());
            }
        }
    }

    session.save(&session_path)?;
    let (ranking_path, vocabulary_path) = write_rankings(&index, &session, opts.vocabulary_threshold, &opts.out_dir)?;
    Ok(ExpandOutcome {
        session,
        session_path,
        ranking_path,
        vocabulary_path,
    })
}

/// Every document ranked by the session's query, and the topic vocabulary
/// scored over its relevant set.
fn write_rankings(
    index: &LoadedIndex,
    session: &ExpansionSession,
    threshold: f64,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let ranking_path = out_dir.join("ranking.csv");
    let vocabulary_path = out_dir.join("vocabulary.csv");
    let q = Query::from_terms(index, &session.query)?;
    let ranking = rank_documents(index, &q, &session.params)?;
    output::write_ranking(&ranking_path, index, &ranking)?;
    let vocab = if session.relevant.is_empty() {
        Vec::new()
    } else {
        let k: Vec<_> = session
            .relevant
            .iter()
            .map(|d| index.resolve_doc(d))
            .collect::<Result<_>>()?;
        export_topic_vocabulary(index, &rank_terms(index, &k, &session.params)?, threshold)
    };
    output::write_vocabulary(&vocabulary_path, &vocab)?;
    Ok((ranking_path, vocabulary_path))
}

#[derive(Debug, Clone)]
pub struct GeolocateOptions {
    pub inputs: Vec<PathBuf>,
    pub gazetteer: PathBuf,
    pub flairs: Option<PathBuf>,
    pub locations: Option<PathBuf>,
    pub census: Option<PathBuf>,
    pub window: Option<TimeWindow>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeolocateOutcome {
    pub assignments: Assignments,
    pub summary: GeoSummary,
}

fn source_yield(observed: usize, assigned: &Assignments, census: Option<&Census>) -> SourceYield {
    let agreement = census.and_then(|c| match census_agreement(assigned, c) {
        Ok(a) => Some(a),
        Err(e) => {
            warn!("census agreement unavailable: {e}");
            None
        }
    });
    SourceYield {
        observed_authors: observed as u64,
        assigned_authors: assigned.len() as u64,
        census_r: agreement.as_ref().map(|a| a.r),
        census_p_value: agreement.as_ref().map(|a| a.p_value),
    }
}

fn tally_yield(t: &SourceTally, census: Option<&Census>) -> SourceYield {
    source_yield(t.authors(), &t.assignments(), census)
}

pub fn cmd_geolocate(opts: &GeolocateOptions) -> Result<GeolocateOutcome> {
    let res = GeoResources {
        gazetteer: Gazetteer::load(&opts.gazetteer)?,
        flairs: match &opts.flairs {
            Some(p) => FlairMap::load(p)?,
            None => FlairMap::default(),
        },
        locations: match &opts.locations {
            Some(p) => LocationSubreddits::load(p)?,
            None => LocationSubreddits::default(),
        },
    };
    let census = opts.census.as_deref().map(load_census).transpose()?;
    let (tallies, lines) = GeoTallies::scan(&opts.inputs, &filter_for(opts.window), &res)?;
    let merged = tallies.merged();
    let observed: BTreeSet<&str> = [&tallies.self_report, &tallies.flair, &tallies.location]
        .iter()
        .flat_map(|t| t.counts.keys().map(String::as_str))
        .collect();
    let c = census.as_ref();
    let summary = GeoSummary {
        lines,
        candidate_expressions: tallies.candidate_expressions,
        resolved_expressions: tallies.resolved_expressions,
        self_report: tally_yield(&tallies.self_report, c),
        flair: tally_yield(&tallies.flair, c),
        location_subreddit: tally_yield(&tallies.location, c),
        merged: source_yield(observed.len(), &merged, c),
    };
    create_dir(&opts.out_dir)?;
    output::write_geolocation(&opts.out_dir.join("geolocation.csv"), &merged)?;
    output::write_state_counts(&opts.out_dir.join("state_counts.csv"), &merged)?;
    output::write_json(&opts.out_dir.join("geolocation_summary.json"), &summary)?;
    info!("geolocated {} of {} observed authors", merged.len(), observed.len());
    Ok(GeolocateOutcome {
        assignments: merged,
        summary,
    })
}

#[derive(Debug, Clone)]
pub enum CohortSource {
    /// Documents listed one per line; cohort is their authors.
    Subreddits(PathBuf),
    /// A saved session; cohort is the authors of its relevant set.
    Session(PathBuf),
    /// Authors listed one per line.
    Authors(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Indicators {
    pub overdose: PathBuf,
    pub prescribing: PathBuf,
    pub log_transform: bool,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub index: PathBuf,
    /// Defaults to the primary geolocation table.
    pub geolocation: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct PrevalenceOptions {
    pub index: Option<PathBuf>,
    pub geolocation: PathBuf,
    pub cohort: CohortSource,
    pub divisions: Option<PathBuf>,
    pub indicators: Option<Indicators>,
    pub compare: Option<Comparison>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceOutcome {
    pub cohort_authors: u64,
    pub records: Vec<PrevalenceRecord>,
}

#[derive(Debug, Clone)]
enum CohortDocs {
    Names(Vec<String>),
    Authors(BTreeSet<String>),
}

fn cohort_docs(source: &CohortSource, index: Option<&LoadedIndex>) -> Result<CohortDocs> {
    match source {
        CohortSource::Subreddits(p) => Ok(CohortDocs::Names(output::read_list(p)?)),
        CohortSource::Authors(p) => Ok(CohortDocs::Authors(output::read_list(p)?.into_iter().collect())),
        CohortSource::Session(p) => {
            let index = index.ok_or_else(|| Error::InvalidParameter("a session cohort needs --index".into()))?;
            let s = ExpansionSession::load(p, index)?;
            if !s.is_converged() {
                warn!("session {} has not converged; using its current relevant set", s.session_id);
            }
            Ok(CohortDocs::Names(s.relevant))
        }
    }
}

fn cohort_authors(docs: &CohortDocs, index: Option<&LoadedIndex>, strict: bool) -> Result<BTreeSet<String>> {
    match docs {
        CohortDocs::Authors(a) => Ok(a.clone()),
        CohortDocs::Names(names) => {
            let index = index.ok_or_else(|| Error::InvalidParameter("a document cohort needs --index".into()))?;
            let present: Vec<&str> = names
                .iter()
                .map(String::as_str)
                .filter(|d| strict || index.doc_id(d).is_some())
                .collect();
            if present.len() < names.len() {
                warn!("{} cohort documents absent from the comparison index", names.len() - present.len());
            }
            index.author_set(present)
        }
    }
}

fn prevalence_for(cohort: &BTreeSet<String>, geo: &[(String, State)]) -> Result<Vec<PrevalenceRecord>> {
    if geo.is_empty() {
        return Err(Error::Stats("geolocation table is empty".into()));
    }
    let overlap = geo.iter().filter(|(a, _)| cohort.contains(a)).count();
    if overlap == 0 {
        return Err(Error::Stats(format!(
            "none of the {} cohort authors is among the {} geolocated authors",
            cohort.len(),
            geo.len()
        )));
    }
    Ok(compute_prevalence(cohort, geo.iter().map(|(a, s)| (a.as_str(), *s))))
}

pub fn cmd_prevalence(opts: &PrevalenceOptions) -> Result<PrevalenceOutcome> {
    let index = opts.index.as_deref().map(LoadedIndex::open).transpose()?;
    let docs = cohort_docs(&opts.cohort, index.as_ref())?;
    let cohort = cohort_authors(&docs, index.as_ref(), true)?;
    let geo = output::read_geolocation(&opts.geolocation)?;
    let records = prevalence_for(&cohort, &geo)?;

    let divisions = match &opts.divisions {
        Some(p) => DivisionMap::load(p)?,
        None => DivisionMap::census(),
    };
    let division_rows = aggregate_divisions(&records, &divisions)?;

    create_dir(&opts.out_dir)?;
    output::write_prevalence(&opts.out_dir.join("prevalence.csv"), &records)?;
    output::write_divisions(&opts.out_dir.join("divisions.csv"), &division_rows)?;

    if let Some(ind) = &opts.indicators {
        let report = regression_report(
            &IndicatorSeries::from_prevalence(&records),
            &IndicatorSeries::load("overdose", &ind.overdose)?,
            &IndicatorSeries::load("prescribing", &ind.prescribing)?,
            ind.log_transform,
        )?;
        output::write_json(&opts.out_dir.join("stats.json"), &report)?;
    }

    if let Some(cmp) = &opts.compare {
        let index_b = LoadedIndex::open(&cmp.index)?;
        let cohort_b = cohort_authors(&docs, Some(&index_b), false)?;
        let geo_b = match &cmp.geolocation {
            Some(p) => output::read_geolocation(p)?,
            None => geo.clone(),
        };
        let records_b = prevalence_for(&cohort_b, &geo_b)?;
        output::write_deltas(&opts.out_dir.join("delta.csv"), &temporal_compare(&records, &records_b))?;
    }

    Ok(PrevalenceOutcome {
        cohort_authors: cohort.len() as u64,
        records,
    })
}

//! Iterative query expansion with human (or scripted) term selection.
//!
//! Each iteration ranks documents with the current query, takes the top
//! `n` as the relevant set, ranks terms over that set and offers the top
//! `m` not already in the query. Accepted terms join the query. The loop
//! has converged once an iteration leaves both the query and the relevant
//! set unchanged.

mod policy;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use policy::{AllowlistPolicy, DecisionPolicy, RejectAll};

use crate::corpus::{DocId, LoadedIndex};
use crate::error::{Error, Result};
use crate::lm::{rank_documents, rank_terms, Query, RankingParams};

pub const SESSION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingIteration,
    AwaitingDecisions,
    Converged,
}

impl SessionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionStatus::AwaitingIteration => "awaiting_iteration",
            SessionStatus::AwaitingDecisions => "awaiting_decisions",
            SessionStatus::Converged => "converged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

pub type Decisions = BTreeMap<String, Decision>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDocument {
    pub document: String,
    pub score: f64,
    pub total_words: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTerm {
    pub term: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    /// Query the documents were ranked with.
    pub query: Vec<String>,
    /// Top-n documents (the relevant set) with scores.
    pub ranking: Vec<RankedDocument>,
    /// Top-m terms over the relevant set, minus terms already in the query.
    pub candidates: Vec<CandidateTerm>,
    pub decisions: Decisions,
    pub decided_by: Option<String>,
    /// Every document scored zero.
    pub zero_signal: bool,
    pub started_at: u64,
    pub decided_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSession {
    pub schema_version: u32,
    pub session_id: String,
    pub index_fingerprint: String,
    pub params: RankingParams,
    pub initial_query: Vec<String>,
    pub query: Vec<String>,
    pub previous_query: Vec<String>,
    /// Relevant set K: top-n of the latest ranking.
    pub relevant: Vec<String>,
    pub previous_relevant: Vec<String>,
    pub status: SessionStatus,
    pub history: Vec<IterationRecord>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn same_set(a: &[String], b: &[String]) -> bool {
    a.iter().collect::<BTreeSet<_>>() == b.iter().collect::<BTreeSet<_>>()
}

fn dedup_preserving_order(terms: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    terms
        .iter()
        .filter(|t| seen.insert(t.as_str()))
        .cloned()
        .collect()
}

impl ExpansionSession {
    /// Starts a session from seed terms. Duplicates are dropped, keeping
    /// first occurrences; every seed must be in the vocabulary.
    pub fn create<S: AsRef<str>>(index: &LoadedIndex, seeds: &[S], params: RankingParams) -> Result<Self> {
        params.validate()?;
        let seeds: Vec<String> = seeds.iter().map(|s| s.as_ref().to_string()).collect();
        let query = dedup_preserving_order(&seeds);
        Query::from_terms(index, &query)?;

        let mut h = Sha256::new();
        h.update(index.fingerprint.as_bytes());
        for t in &query {
            h.update([0u8]);
            h.update(t.as_bytes());
        }
        h.update(serde_json::to_vec(&params)?);
        let session_id = hex::encode(&h.finalize()[..8]);

        Ok(ExpansionSession {
            schema_version: SESSION_SCHEMA_VERSION,
            session_id,
            index_fingerprint: index.fingerprint.clone(),
            params,
            initial_query: query.clone(),
            query,
            previous_query: Vec::new(),
            relevant: Vec::new(),
            previous_relevant: Vec::new(),
            status: SessionStatus::AwaitingIteration,
            history: Vec::new(),
        })
    }

    pub fn iteration(&self) -> u32 {
        self.history.len() as u32
    }

    pub fn latest(&self) -> Option<&IterationRecord> {
        self.history.last()
    }

    pub fn is_converged(&self) -> bool {
        self.status == SessionStatus::Converged
    }

    fn check_index(&self, index: &LoadedIndex) -> Result<()> {
        if index.fingerprint != self.index_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.index_fingerprint.clone(),
                actual: index.fingerprint.clone(),
            });
        }
        Ok(())
    }

    fn require(&self, status: SessionStatus, operation: &'static str) -> Result<()> {
        if self.status == status {
            Ok(())
        } else {
            Err(Error::WrongStatus {
                operation,
                status: self.status.as_str(),
            })
        }
    }

    /// Computes the next iteration without touching `self`.
    pub fn compute_iteration(&self, index: &LoadedIndex) -> Result<IterationRecord> {
        self.require(SessionStatus::AwaitingIteration, "iterate")?;
        self.check_index(index)?;
        let q = Query::from_terms(index, &self.query)?;
        let p = &self.params;

        let ranked = rank_documents(index, &q, p)?;
        let zero_signal = ranked.iter().all(|s| s.score == 0.0);
        let top: Vec<_> = ranked.iter().take(p.top_docs).collect();
        let relevant: Vec<DocId> = top.iter().map(|s| s.doc).collect();
        if zero_signal {
            log::warn!("no document contains any query term; relevant set falls back to name order");
        }

        let in_query: HashSet<&str> = self.query.iter().map(String::as_str).collect();
        let candidates = rank_terms(index, &relevant, p)?
            .into_iter()
            .take(p.top_terms)
            .map(|t| CandidateTerm {
                term: index.vocabulary().term(t.term).to_string(),
                score: t.score,
            })
            .filter(|c| !in_query.contains(c.term.as_str()))
            .collect();

        let ranking = top
            .iter()
            .map(|s| {
                let d = index.document(s.doc);
                RankedDocument {
                    document: d.name.clone(),
                    score: s.score,
                    total_words: d.total_words(),
                }
            })
            .collect();

        Ok(IterationRecord {
            iteration: self.iteration() + 1,
            query: self.query.clone(),
            ranking,
            candidates,
            decisions: Decisions::new(),
            decided_by: None,
            zero_signal,
            started_at: now(),
            decided_at: None,
        })
    }

    /// Installs an iteration computed by [`Self::compute_iteration`] on a
    /// session in the same state.
    pub fn apply_iteration(&mut self, record: IterationRecord) -> Result<&IterationRecord> {
        self.require(SessionStatus::AwaitingIteration, "iterate")?;
        if record.iteration != self.iteration() + 1 || record.query != self.query {
            return Err(Error::Session("iteration computed against a stale session".into()));
        }
        let k_new: Vec<String> = record.ranking.iter().map(|r| r.document.clone()).collect();
        self.previous_relevant = std::mem::replace(&mut self.relevant, k_new);
        self.status = if record.candidates.is_empty() && same_set(&self.relevant, &self.previous_relevant) {
            self.previous_query = self.query.clone();
            SessionStatus::Converged
        } else {
            SessionStatus::AwaitingDecisions
        };
        self.history.push(record);
        Ok(self.history.last().expect("just pushed"))
    }

    pub fn run_iteration(&mut self, index: &LoadedIndex) -> Result<&IterationRecord> {
        let record = self.compute_iteration(index)?;
        self.apply_iteration(record)
    }

    /// Records a decision for every offered candidate.
    pub fn submit_decisions(&mut self, decisions: &Decisions, decided_by: Option<&str>) -> Result<()> {
        self.require(SessionStatus::AwaitingDecisions, "decide")?;
        let record = self.history.last().expect("awaiting decisions implies an iteration");
        let offered: BTreeSet<&str> = record.candidates.iter().map(|c| c.term.as_str()).collect();
        let unknown: Vec<&str> = decisions
            .keys()
            .map(String::as_str)
            .filter(|t| !offered.contains(t))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::InvalidDecisions(format!(
                "not offered as candidates: {}",
                unknown.join(", ")
            )));
        }
        let missing: Vec<&str> = offered
            .iter()
            .copied()
            .filter(|t| !decisions.contains_key(*t))
            .collect();
        if !missing.is_empty() {
            return Err(Error::InvalidDecisions(format!(
                "every candidate needs a decision; undecided: {}",
                missing.join(", ")
            )));
        }

        let accepted: Vec<String> = record
            .candidates
            .iter()
            .filter(|c| decisions.get(&c.term) == Some(&Decision::Accept))
            .map(|c| c.term.clone())
            .collect();

        let record = self.history.last_mut().expect("checked above");
        record.decisions = decisions.clone();
        record.decided_by = decided_by.map(str::to_string);
        record.decided_at = Some(now());

        let mut q_new = self.query.clone();
        q_new.extend(accepted);
        self.previous_query = std::mem::replace(&mut self.query, q_new);
        self.status = if same_set(&self.query, &self.previous_query)
            && same_set(&self.relevant, &self.previous_relevant)
        {
            SessionStatus::Converged
        } else {
            SessionStatus::AwaitingIteration
        };
        Ok(())
    }

    /// Alternates iterations and policy decisions until convergence.
    /// Returns the number of iterations run.
    pub fn run_to_convergence(
        &mut self,
        index: &LoadedIndex,
        policy: &mut dyn DecisionPolicy,
        max_iterations: u32,
    ) -> Result<u32> {
        let start = self.iteration();
        loop {
            match self.status {
                SessionStatus::Converged => return Ok(self.iteration() - start),
                SessionStatus::AwaitingIteration => {
                    if self.iteration() - start >= max_iterations {
                        return Err(Error::Session(format!(
                            "no convergence after {max_iterations} iterations"
                        )));
                    }
                    self.run_iteration(index)?;
                }
                SessionStatus::AwaitingDecisions => {
                    let record = self.latest().expect("awaiting decisions implies an iteration");
                    let decisions = policy.decide(record);
                    let who = policy.annotator().to_string();
                    self.submit_decisions(&decisions, Some(&who))?;
                }
            }
        }
    }

    /// Re-runs the recorded decisions from the initial query. Fails if the
    /// index no longer offers the recorded candidates.
    pub fn replay(&self, index: &LoadedIndex) -> Result<ExpansionSession> {
        let mut fresh = ExpansionSession::create(index, &self.initial_query, self.params)?;
        for past in &self.history {
            if fresh.status != SessionStatus::AwaitingIteration {
                break;
            }
            fresh.run_iteration(index)?;
            if fresh.status == SessionStatus::AwaitingDecisions {
                if past.decided_at.is_none() {
                    break;
                }
                fresh.submit_decisions(&past.decisions, past.decided_by.as_deref())?;
            }
        }
        Ok(fresh)
    }

    /// Copy with all timestamps zeroed, for comparisons.
    pub fn without_timestamps(&self) -> ExpansionSession {
        let mut s = self.clone();
        for r in &mut s.history {
            r.started_at = 0;
            r.decided_at = r.decided_at.map(|_| 0);
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = self.to_json()?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Parses a session and checks it against `index`.
    pub fn from_json(json: &str, index: &LoadedIndex) -> Result<Self> {
        let session: ExpansionSession = serde_json::from_str(json)?;
        session.validate(index)?;
        Ok(session)
    }

    pub fn load(path: &Path, index: &LoadedIndex) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json, index)
    }

    /// Checks structural invariants and the binding to `index`.
    pub fn validate(&self, index: &LoadedIndex) -> Result<()> {
        if self.schema_version != SESSION_SCHEMA_VERSION {
            return Err(Error::Session(format!(
                "unsupported session schema version {}",
                self.schema_version
            )));
        }
        self.check_index(index)?;
        self.params.validate()?;
        index.resolve_terms(&self.query)?;
        for d in self.relevant.iter().chain(&self.previous_relevant) {
            index.resolve_doc(d)?;
        }
        if self.relevant.len() > self.params.top_docs {
            return Err(Error::Session("relevant set larger than top_docs".into()));
        }
        if !self.query.starts_with(&self.initial_query) {
            return Err(Error::Session("query does not extend the initial query".into()));
        }
        match self.history.last() {
            None if self.status != SessionStatus::AwaitingIteration || !self.relevant.is_empty() => {
                return Err(Error::Session("no iterations recorded but session has progressed".into()))
            }
            Some(r) => {
                let k: Vec<String> = r.ranking.iter().map(|d| d.document.clone()).collect();
                if k != self.relevant {
                    return Err(Error::Session("relevant set differs from latest ranking".into()));
                }
                if self.status == SessionStatus::AwaitingDecisions && r.decided_at.is_some() {
                    return Err(Error::Session("latest iteration already decided".into()));
                }
            }
            None => {}
        }
        for r in &self.history {
            let offered: BTreeSet<&str> = r.candidates.iter().map(|c| c.term.as_str()).collect();
            if r.decisions.keys().any(|t| !offered.contains(t.as_str())) {
                return Err(Error::Session(format!(
                    "iteration {} has decisions on terms it did not offer",
                    r.iteration
                )));
            }
        }
        Ok(())
    }
}

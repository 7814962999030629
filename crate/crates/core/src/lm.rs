//! Document language models, query-conditioned document ranking and
//! term scoring for query expansion.
//!
//! With `f_d(w)` the count of `w` in document `d`, `N_d` its total word
//! count and `p_C(w)` the corpus probability:
//!
//! * `p_d(w) = f_d(w) / (N_d + alpha) + p_C(w)`
//! * `score(d | Q) = sum_{w in Q} p_d(w) * log(p_d(w) / p_C(w))`
//! * `score(w | K) = sum_{k in K} log((f_k(w) / (N_k + alpha) + p_C(w)) / p_C(w))`

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, DocId, DocumentModel, TermId};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1e4;
pub const DEFAULT_TOP_DOCS: usize = 10;
pub const DEFAULT_TOP_TERMS: usize = 20;
pub const DEFAULT_VOCABULARY_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingParams {
    /// Document-size regularizer.
    pub alpha: f64,
    /// Size `n` of the relevant set.
    pub top_docs: usize,
    /// Number `m` of terms offered per iteration.
    pub top_terms: usize,
}

impl Default for RankingParams {
    fn default() -> Self {
        RankingParams {
            alpha: DEFAULT_ALPHA,
            top_docs: DEFAULT_TOP_DOCS,
            top_terms: DEFAULT_TOP_TERMS,
        }
    }
}

impl RankingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be a non-negative number, got {}",
                self.alpha
            )));
        }
        if self.top_docs == 0 {
            return Err(Error::InvalidParameter("top_docs must be at least 1".into()));
        }
        if self.top_terms == 0 {
            return Err(Error::InvalidParameter("top_terms must be at least 1".into()));
        }
        Ok(())
    }
}

/// Logarithm used for scores. Rankings do not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    #[inline]
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// Non-empty ordered set of vocabulary terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query(Vec<TermId>);

impl Query {
    pub fn new(terms: Vec<TermId>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut seen = HashSet::with_capacity(terms.len());
        if let Some(dup) = terms.iter().find(|t| !seen.insert(**t)) {
            return Err(Error::InvalidParameter(format!(
                "duplicate query term id {}",
                dup.0
            )));
        }
        Ok(Query(terms))
    }

    /// Resolves term strings against the index vocabulary.
    pub fn from_terms<S: AsRef<str>>(index: &CorpusIndex, terms: &[S]) -> Result<Self> {
        Self::new(index.resolve_terms(terms)?)
    }

    pub fn terms(&self) -> &[TermId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocScore {
    pub doc: DocId,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: TermId,
    pub score: f64,
}

// Frequency part of p_d(w), without the corpus prior.
#[inline]
fn frequency(doc: &DocumentModel, count: u64, alpha: f64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    count as f64 / (doc.total_words() as f64 + alpha)
}

fn check_term(index: &CorpusIndex, w: TermId) -> Result<()> {
    if index.vocabulary().contains(w) {
        Ok(())
    } else {
        Err(Error::UnknownTerms(vec![format!("#{}", w.0)]))
    }
}

fn check_doc(index: &CorpusIndex, d: DocId) -> Result<()> {
    if index.contains_doc(d) {
        Ok(())
    } else {
        Err(Error::UnknownDocument(format!("#{}", d.0)))
    }
}

fn check_query(index: &CorpusIndex, q: &Query) -> Result<()> {
    let v = index.vocabulary();
    let unknown: Vec<String> = q
        .terms()
        .iter()
        .filter(|t| !v.contains(**t))
        .map(|t| format!("#{}", t.0))
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::UnknownTerms(unknown))
    }
}

/// Regularized document probability p_d(w).
pub fn doc_prob(index: &CorpusIndex, d: DocId, w: TermId, params: &RankingParams) -> Result<f64> {
    check_doc(index, d)?;
    check_term(index, w)?;
    let doc = index.document(d);
    Ok(frequency(doc, doc.count(w), params.alpha) + index.vocabulary().prob(w))
}

/// One query term's share of a document score, p_d(w)·log(p_d(w)/p_C(w)),
/// from raw counts and a fixed corpus prior.
pub fn query_term_score(count: u64, total_words: u64, prior: f64, alpha: f64, base: LogBase) -> f64 {
    let f = if count == 0 {
        0.0
    } else {
        count as f64 / (total_words as f64 + alpha)
    };
    let pd = f + prior;
    pd * base.log(pd / prior)
}

fn score_doc(index: &CorpusIndex, doc: &DocumentModel, q: &Query, alpha: f64, base: LogBase) -> f64 {
    let v = index.vocabulary();
    q.terms()
        .iter()
        .map(|&w| query_term_score(doc.count(w), doc.total_words(), v.prob(w), alpha, base))
        .sum()
}

/// Query contribution to the KL divergence between document and corpus.
pub fn doc_score(index: &CorpusIndex, d: DocId, q: &Query, params: &RankingParams) -> Result<f64> {
    doc_score_in(index, d, q, params, LogBase::Natural)
}

pub fn doc_score_in(
    index: &CorpusIndex,
    d: DocId,
    q: &Query,
    params: &RankingParams,
    base: LogBase,
) -> Result<f64> {
    check_doc(index, d)?;
    check_query(index, q)?;
    Ok(score_doc(index, index.document(d), q, params.alpha, base))
}

/// Scores every document; descending score, ties by ascending document name.
pub fn rank_documents(index: &CorpusIndex, q: &Query, params: &RankingParams) -> Result<Vec<DocScore>> {
    rank_documents_in(index, q, params, LogBase::Natural)
}

pub fn rank_documents_in(
    index: &CorpusIndex,
    q: &Query,
    params: &RankingParams,
    base: LogBase,
) -> Result<Vec<DocScore>> {
    params.validate()?;
    check_query(index, q)?;
    let mut ranked: Vec<DocScore> = index
        .documents()
        .par_iter()
        .enumerate()
        .map(|(i, doc)| DocScore {
            doc: DocId(i as u32),
            score: score_doc(index, doc, q, params.alpha, base),
        })
        .collect();
    // document ids follow name order
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
    Ok(ranked)
}

fn sorted_relevant(index: &CorpusIndex, relevant: &[DocId]) -> Result<Vec<DocId>> {
    if relevant.is_empty() {
        return Err(Error::EmptyRelevantSet);
    }
    for &d in relevant {
        check_doc(index, d)?;
    }
    let mut k = relevant.to_vec();
    k.sort_unstable();
    k.dedup();
    Ok(k)
}

#[inline]
fn term_contribution(doc: &DocumentModel, count: u64, pc: f64, alpha: f64, base: LogBase) -> f64 {
    base.log((frequency(doc, count, alpha) + pc) / pc)
}

/// Log likelihood-ratio score of `w` over the relevant documents.
pub fn term_score(index: &CorpusIndex, w: TermId, relevant: &[DocId], params: &RankingParams) -> Result<f64> {
    term_score_in(index, w, relevant, params, LogBase::Natural)
}

pub fn term_score_in(
    index: &CorpusIndex,
    w: TermId,
    relevant: &[DocId],
    params: &RankingParams,
    base: LogBase,
) -> Result<f64> {
    check_term(index, w)?;
    let k = sorted_relevant(index, relevant)?;
    let pc = index.vocabulary().prob(w);
    Ok(k.iter()
        .map(|&d| {
            let doc = index.document(d);
            match doc.count(w) {
                0 => 0.0,
                c => term_contribution(doc, c, pc, params.alpha, base),
            }
        })
        .sum())
}

/// Scores every vocabulary term; descending score, ties by ascending term.
pub fn rank_terms(index: &CorpusIndex, relevant: &[DocId], params: &RankingParams) -> Result<Vec<TermScore>> {
    rank_terms_in(index, relevant, params, LogBase::Natural)
}

pub fn rank_terms_in(
    index: &CorpusIndex,
    relevant: &[DocId],
    params: &RankingParams,
    base: LogBase,
) -> Result<Vec<TermScore>> {
    params.validate()?;
    let k = sorted_relevant(index, relevant)?;
    let v = index.vocabulary();
    let mut scores = vec![0.0f64; v.len()];
    for &d in &k {
        let doc = index.document(d);
        for &(w, c) in doc.term_counts() {
            scores[w.0 as usize] += term_contribution(doc, c, v.prob(w), params.alpha, base);
        }
    }
    let mut ranked: Vec<TermScore> = scores
        .into_iter()
        .enumerate()
        .map(|(i, score)| TermScore {
            term: TermId(i as u32),
            score,
        })
        .collect();
    // term ids follow lexicographic order
    ranked.par_sort_by(|a, b| b.score.total_cmp(&a.score).then(a.term.cmp(&b.term)));
    Ok(ranked)
}

/// Terms scoring strictly above `threshold`, in ranked order.
pub fn export_topic_vocabulary(index: &CorpusIndex, ranked: &[TermScore], threshold: f64) -> Vec<(String, f64)> {
    ranked
        .iter()
        .filter(|t| t.score > threshold)
        .map(|t| (index.vocabulary().term(t.term).to_string(), t.score))
        .collect()
}

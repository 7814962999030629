use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::entry::Entry;
use super::text::{normalize_text, LemmaTable};
use crate::error::{Error, Result};

/// Index of a term in the [`Vocabulary`]; terms are stored in ascending
/// lexicographic order, so id order equals string order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AuthorId(pub u32);

/// Minimum sizes for documents and terms to survive indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_doc_entries: u64,
    pub min_term_count: u64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_doc_entries: 100,
            min_term_count: 100,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    counts: Vec<u64>,
    total: u64,
    lookup: HashMap<String, TermId>,
}

impl Vocabulary {
    pub(crate) fn from_sorted(terms: Vec<String>, counts: Vec<u64>) -> Self {
        debug_assert_eq!(terms.len(), counts.len());
        let total = counts.iter().sum();
        let lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();
        Vocabulary {
            terms,
            counts,
            total,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id.0 as usize]
    }

    pub fn contains(&self, id: TermId) -> bool {
        (id.0 as usize) < self.terms.len()
    }

    /// Corpus count f_C(w).
    pub fn count(&self, id: TermId) -> u64 {
        self.counts[id.0 as usize]
    }

    /// Total number of retained-term occurrences in the corpus.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Corpus probability p_C(w) over retained terms.
    pub fn prob(&self, id: TermId) -> f64 {
        self.count(id) as f64 / self.total as f64
    }

    pub fn ids(&self) -> impl Iterator<Item = TermId> + '_ {
        (0..self.terms.len() as u32).map(TermId)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Bag-of-words model of one sub-community.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentModel {
    pub name: String,
    /// Number of entries that contributed to the document.
    pub entries: u64,
    /// Sorted by term id, counts are non-zero.
    pub(crate) term_counts: Vec<(TermId, u64)>,
    pub(crate) total_words: u64,
    /// Sorted author ids.
    pub(crate) authors: Vec<AuthorId>,
}

impl DocumentModel {
    /// f_d(w).
    pub fn count(&self, term: TermId) -> u64 {
        self.term_counts
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.term_counts[i].1)
            .unwrap_or(0)
    }

    /// Σ_w f_d(w) over retained terms.
    pub fn total_words(&self) -> u64 {
        self.total_words
    }

    pub fn term_counts(&self) -> &[(TermId, u64)] {
        &self.term_counts
    }

    pub fn author_ids(&self) -> &[AuthorId] {
        &self.authors
    }
}

/// The immutable corpus: vocabulary, documents and author incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    pub(crate) thresholds: Thresholds,
    pub(crate) vocab: Vocabulary,
    pub(crate) docs: Vec<DocumentModel>,
    pub(crate) authors: Vec<String>,
    doc_lookup: HashMap<String, DocId>,
    author_docs: Vec<Vec<DocId>>,
}

impl CorpusIndex {
    pub(crate) fn from_parts(
        thresholds: Thresholds,
        vocab: Vocabulary,
        docs: Vec<DocumentModel>,
        authors: Vec<String>,
    ) -> Self {
        let doc_lookup = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.clone(), DocId(i as u32)))
            .collect();
        let mut author_docs = vec![Vec::new(); authors.len()];
        for (i, d) in docs.iter().enumerate() {
            for a in &d.authors {
                author_docs[a.0 as usize].push(DocId(i as u32));
            }
        }
        CorpusIndex {
            thresholds,
            vocab,
            docs,
            authors,
            doc_lookup,
            author_docs,
        }
    }

    pub fn empty(thresholds: Thresholds) -> Self {
        Self::from_parts(thresholds, Vocabulary::default(), Vec::new(), Vec::new())
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn documents(&self) -> &[DocumentModel] {
        &self.docs
    }

    pub fn document_count(&self) -> usize {
        self.docs.len()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = DocId> {
        (0..self.docs.len() as u32).map(DocId)
    }

    pub fn doc_id(&self, name: &str) -> Option<DocId> {
        self.doc_lookup.get(name).copied()
    }

    pub fn resolve_doc(&self, name: &str) -> Result<DocId> {
        self.doc_id(name)
            .ok_or_else(|| Error::UnknownDocument(name.to_string()))
    }

    pub fn document(&self, id: DocId) -> &DocumentModel {
        &self.docs[id.0 as usize]
    }

    pub fn contains_doc(&self, id: DocId) -> bool {
        (id.0 as usize) < self.docs.len()
    }

    pub fn author_name(&self, id: AuthorId) -> &str {
        &self.authors[id.0 as usize]
    }

    pub fn author_count(&self) -> usize {
        self.authors.len()
    }

    /// Documents an author contributed to.
    pub fn documents_of(&self, author: &str) -> &[DocId] {
        match self.authors.binary_search_by(|a| a.as_str().cmp(author)) {
            Ok(i) => &self.author_docs[i],
            Err(_) => &[],
        }
    }

    /// Union of the contributing authors of `docs`.
    pub fn author_set<'a, I>(&self, docs: I) -> Result<BTreeSet<String>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut ids = BTreeSet::new();
        for name in docs {
            let d = self.resolve_doc(name)?;
            ids.extend(self.document(d).authors.iter().copied());
        }
        Ok(ids
            .into_iter()
            .map(|a| self.author_name(a).to_string())
            .collect())
    }

    /// Resolves terms to ids, failing with every unknown term listed.
    pub fn resolve_terms<S: AsRef<str>>(&self, terms: &[S]) -> Result<Vec<TermId>> {
        let mut ids = Vec::with_capacity(terms.len());
        let mut unknown = Vec::new();
        for t in terms {
            match self.vocab.id(t.as_ref()) {
                Some(id) => ids.push(id),
                None => unknown.push(t.as_ref().to_string()),
            }
        }
        if unknown.is_empty() {
            Ok(ids)
        } else {
            Err(Error::UnknownTerms(unknown))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct PartialDoc {
    entries: u64,
    terms: HashMap<String, u64>,
    authors: HashSet<String>,
}

impl PartialDoc {
    fn absorb(&mut self, other: PartialDoc) {
        self.entries += other.entries;
        for (t, c) in other.terms {
            *self.terms.entry(t).or_insert(0) += c;
        }
        self.authors.extend(other.authors);
    }
}

/// Unfiltered counts for one shard of the input. Merging is associative and
/// commutative, and [`PartialIndex::finish`] sorts everything, so any
/// partition of the input yields the same finished index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialIndex {
    docs: HashMap<String, PartialDoc>,
}

impl PartialIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entry(&mut self, entry: &Entry, lemmas: &LemmaTable) {
        let terms = normalize_text(&entry.text, lemmas);
        self.add_entry_terms(&entry.subreddit, &entry.author, terms);
    }

    /// Records one entry by `author` in `doc` with already-normalized terms.
    pub fn add_entry_terms<I, S>(&mut self, doc: &str, author: &str, terms: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let d = self.docs.entry(doc.to_string()).or_default();
        d.entries += 1;
        if !d.authors.contains(author) {
            d.authors.insert(author.to_string());
        }
        for t in terms {
            *d.terms.entry(t.into()).or_insert(0) += 1;
        }
    }

    /// Adds `count` occurrences of `term` to `doc` without recording an entry.
    pub fn add_term_count(&mut self, doc: &str, term: &str, count: u64) {
        let d = self.docs.entry(doc.to_string()).or_default();
        *d.terms.entry(term.to_string()).or_insert(0) += count;
    }

    pub fn merge(mut self, other: PartialIndex) -> PartialIndex {
        let (mut big, small) = if self.docs.len() >= other.docs.len() {
            (std::mem::take(&mut self.docs), other.docs)
        } else {
            (other.docs, std::mem::take(&mut self.docs))
        };
        for (name, doc) in small {
            big.entry(name).or_default().absorb(doc);
        }
        PartialIndex { docs: big }
    }

    pub fn document_count(&self) -> usize {
        self.docs.len()
    }

    /// Applies the document filter, then the term filter over surviving
    /// documents, and freezes the result.
    pub fn finish(self, thresholds: Thresholds) -> CorpusIndex {
        let docs: BTreeMap<String, PartialDoc> = self
            .docs
            .into_iter()
            .filter(|(_, d)| d.entries >= thresholds.min_doc_entries)
            .collect();

        let mut corpus_counts: BTreeMap<&str, u64> = BTreeMap::new();
        for d in docs.values() {
            for (t, &c) in &d.terms {
                *corpus_counts.entry(t.as_str()).or_insert(0) += c;
            }
        }
        let (terms, counts): (Vec<String>, Vec<u64>) = corpus_counts
            .into_iter()
            .filter(|&(_, c)| c >= thresholds.min_term_count && c > 0)
            .map(|(t, c)| (t.to_string(), c))
            .unzip();
        let vocab = Vocabulary::from_sorted(terms, counts);

        let authors: Vec<String> = docs
            .values()
            .flat_map(|d| d.authors.iter())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .cloned()
            .collect();
        let author_lookup: HashMap<&str, AuthorId> = authors
            .iter()
            .enumerate()
            .map(|(i, a)| (a.as_str(), AuthorId(i as u32)))
            .collect();

        let models = docs
            .into_iter()
            .map(|(name, d)| {
                let mut term_counts: Vec<(TermId, u64)> = d
                    .terms
                    .iter()
                    .filter_map(|(t, &c)| vocab.id(t).map(|id| (id, c)))
                    .collect();
                term_counts.sort_unstable();
                let total_words = term_counts.iter().map(|&(_, c)| c).sum();
                let mut doc_authors: Vec<AuthorId> =
                    d.authors.iter().map(|a| author_lookup[a.as_str()]).collect();
                doc_authors.sort_unstable();
                DocumentModel {
                    name,
                    entries: d.entries,
                    term_counts,
                    total_words,
                    authors: doc_authors,
                }
            })
            .collect();

        CorpusIndex::from_parts(thresholds, vocab, models, authors)
    }
}

/// Single-pass sequential indexing.
pub fn build_corpus_index<I>(entries: I, lemmas: &LemmaTable, thresholds: Thresholds) -> CorpusIndex
where
    I: IntoIterator<Item = Entry>,
{
    let mut partial = PartialIndex::new();
    for e in entries {
        partial.add_entry(&e, lemmas);
    }
    partial.finish(thresholds)
}

/// Indexes each shard in parallel and merges the partial indexes.
pub fn build_corpus_index_sharded(
    shards: Vec<Vec<Entry>>,
    lemmas: &LemmaTable,
    thresholds: Thresholds,
) -> CorpusIndex {
    shards
        .into_par_iter()
        .map(|shard| {
            let mut p = PartialIndex::new();
            for e in &shard {
                p.add_entry(e, lemmas);
            }
            p
        })
        .reduce(PartialIndex::new, PartialIndex::merge)
        .finish(thresholds)
}

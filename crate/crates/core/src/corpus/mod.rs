//! Dump parsing, text normalization and the corpus index.

mod cache;
pub mod dump;
pub mod entry;
pub mod index;
pub mod text;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use cache::{fingerprint_bytes, FORMAT_VERSION};
pub use dump::{open_dump, DumpScan, DumpSummary};
pub use entry::{parse_entry, Admission, Entry, EntryFilter, EntryKind, TimeWindow, SENTINEL_AUTHORS};
pub use index::{
    build_corpus_index, build_corpus_index_sharded, AuthorId, CorpusIndex, DocId, DocumentModel,
    PartialIndex, TermId, Thresholds, Vocabulary,
};
pub use text::{normalize_text, tokenize, LemmaTable};

use crate::error::Result;

/// Counts reported after ingesting dumps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    #[serde(flatten)]
    pub lines: DumpSummary,
    pub documents_seen: u64,
    pub documents_retained: u64,
    pub vocabulary_size: u64,
    pub corpus_words: u64,
    pub authors: u64,
}

/// Streams every dump, indexes admitted entries in parallel chunks and
/// applies the thresholds.
pub fn ingest_dumps(
    paths: &[PathBuf],
    lemmas: &LemmaTable,
    filter: &EntryFilter,
    thresholds: Thresholds,
) -> Result<(CorpusIndex, IngestSummary)> {
    ingest_with(DumpScan::new(filter), paths, lemmas, thresholds)
}

pub fn ingest_with(
    scan: DumpScan<'_>,
    paths: &[PathBuf],
    lemmas: &LemmaTable,
    thresholds: Thresholds,
) -> Result<(CorpusIndex, IngestSummary)> {
    let (partial, lines) = scan.run(
        paths,
        PartialIndex::new,
        |p, e| p.add_entry(e, lemmas),
        PartialIndex::merge,
    )?;
    let documents_seen = partial.document_count() as u64;
    let index = partial.finish(thresholds);
    let summary = IngestSummary {
        lines,
        documents_seen,
        documents_retained: index.document_count() as u64,
        vocabulary_size: index.vocabulary().len() as u64,
        corpus_words: index.vocabulary().total(),
        authors: index.author_count() as u64,
    };
    Ok((index, summary))
}

/// An index together with the fingerprint of its serialized form.
#[derive(Debug, Clone)]
pub struct LoadedIndex {
    pub index: CorpusIndex,
    pub fingerprint: String,
}

impl LoadedIndex {
    pub fn new(index: CorpusIndex) -> Self {
        let fingerprint = index.fingerprint();
        LoadedIndex { index, fingerprint }
    }

    pub fn open(path: &std::path::Path) -> Result<Self> {
        let (index, fingerprint) = CorpusIndex::load_with_fingerprint(path)?;
        Ok(LoadedIndex { index, fingerprint })
    }
}

impl std::ops::Deref for LoadedIndex {
    type Target = CorpusIndex;

    fn deref(&self) -> &CorpusIndex {
        &self.index
    }
}

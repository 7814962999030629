//! Binary index cache.
//!
//! Layout (little endian): the 8-byte magic `COHORTIX`, a `u32` format
//! version, the two thresholds as `u64`, then the vocabulary
//! (`u64` length, each term as a length-prefixed UTF-8 string followed by
//! its `u64` corpus count), the author table (`u64` length, strings), and the
//! documents (`u64` length; each: name, `u64` entries, `u64` number of
//! postings, `(u32 term, u64 count)` postings, `u64` number of authors,
//! `u32` author ids). Strings are `u32` byte length plus bytes. All
//! sequences are sorted, so equal indexes serialize to equal bytes.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use super::index::{AuthorId, CorpusIndex, DocumentModel, TermId, Thresholds, Vocabulary};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"COHORTIX";
pub const FORMAT_VERSION: u32 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.write_u32::<LE>(s.len() as u32).unwrap();
    out.extend_from_slice(s.as_bytes());
}

impl CorpusIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        // writes into a Vec cannot fail
        out.write_u32::<LE>(FORMAT_VERSION).unwrap();
        out.write_u64::<LE>(self.thresholds.min_doc_entries).unwrap();
        out.write_u64::<LE>(self.thresholds.min_term_count).unwrap();

        let v = &self.vocab;
        out.write_u64::<LE>(v.len() as u64).unwrap();
        for id in v.ids() {
            put_str(&mut out, v.term(id));
            out.write_u64::<LE>(v.count(id)).unwrap();
        }

        out.write_u64::<LE>(self.authors.len() as u64).unwrap();
        for a in &self.authors {
            put_str(&mut out, a);
        }

        out.write_u64::<LE>(self.docs.len() as u64).unwrap();
        for d in &self.docs {
            put_str(&mut out, &d.name);
            out.write_u64::<LE>(d.entries).unwrap();
            out.write_u64::<LE>(d.term_counts.len() as u64).unwrap();
            for &(t, c) in &d.term_counts {
                out.write_u32::<LE>(t.0).unwrap();
                out.write_u64::<LE>(c).unwrap();
            }
            out.write_u64::<LE>(d.authors.len() as u64).unwrap();
            for a in &d.authors {
                out.write_u32::<LE>(a.0).unwrap();
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader(Cursor::new(bytes));
        let mut magic = [0u8; 8];
        r.0.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
        if &magic != MAGIC {
            return Err(Error::Cache("not an index cache (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Cache(format!(
                "unsupported cache version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let thresholds = Thresholds {
            min_doc_entries: r.u64()?,
            min_term_count: r.u64()?,
        };

        let n_terms = r.len(bytes.len())?;
        let mut terms = Vec::with_capacity(n_terms);
        let mut counts = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            let t = r.string()?;
            if terms.last().is_some_and(|prev: &String| prev >= &t) {
                return Err(corrupt("vocabulary not strictly sorted"));
            }
            terms.push(t);
            counts.push(r.u64()?);
        }

        let n_authors = r.len(bytes.len())?;
        let mut authors = Vec::with_capacity(n_authors);
        for _ in 0..n_authors {
            let a = r.string()?;
            if authors.last().is_some_and(|prev: &String| prev >= &a) {
                return Err(corrupt("author table not strictly sorted"));
            }
            authors.push(a);
        }

        let n_docs = r.len(bytes.len())?;
        let mut docs = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            let name = r.string()?;
            if docs.last().is_some_and(|prev: &DocumentModel| prev.name >= name) {
                return Err(corrupt("documents not strictly sorted"));
            }
            let entries = r.u64()?;
            let n_post = r.len(bytes.len())?;
            let mut term_counts = Vec::with_capacity(n_post);
            for _ in 0..n_post {
                let t = r.u32()?;
                let c = r.u64()?;
                if t as usize >= n_terms {
                    return Err(corrupt("posting references unknown term"));
                }
                term_counts.push((TermId(t), c));
            }
            if term_counts.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(corrupt("postings not sorted"));
            }
            let n_da = r.len(bytes.len())?;
            let mut doc_authors = Vec::with_capacity(n_da);
            for _ in 0..n_da {
                let a = r.u32()?;
                if a as usize >= n_authors {
                    return Err(corrupt("document references unknown author"));
                }
                doc_authors.push(AuthorId(a));
            }
            let total_words = term_counts.iter().map(|&(_, c)| c).sum();
            docs.push(DocumentModel {
                name,
                entries,
                term_counts,
                total_words,
                authors: doc_authors,
            });
        }
        if (r.0.position() as usize) != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }

        Ok(CorpusIndex::from_parts(
            thresholds,
            Vocabulary::from_sorted(terms, counts),
            docs,
            authors,
        ))
    }

    /// Hex SHA-256 of the serialized index; identifies the corpus a session
    /// was built against.
    pub fn fingerprint(&self) -> String {
        fingerprint_bytes(&self.to_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_fingerprint(path).map(|(idx, _)| idx)
    }

    /// Loads an index and returns the fingerprint of the file contents.
    pub fn load_with_fingerprint(path: &Path) -> Result<(Self, String)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let idx = Self::from_bytes(&bytes)?;
        Ok((idx, fingerprint_bytes(&bytes)))
    }
}

pub fn fingerprint_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn corrupt(msg: &str) -> Error {
    Error::Cache(format!("corrupt cache: {msg}"))
}

struct Reader<'a>(Cursor<&'a [u8]>);

impl Reader<'_> {
    fn u32(&mut self) -> Result<u32> {
        self.0.read_u32::<LE>().map_err(|_| corrupt("truncated"))
    }

    fn u64(&mut self) -> Result<u64> {
        self.0.read_u64::<LE>().map_err(|_| corrupt("truncated"))
    }

    // Lengths larger than the remaining input are rejected before allocating.
    fn len(&mut self, total: usize) -> Result<usize> {
        let n = self.u64()?;
        if n > total as u64 {
            return Err(corrupt("length exceeds file size"));
        }
        Ok(n as usize)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let pos = self.0.position() as usize;
        let buf = self.0.get_ref();
        if pos + n > buf.len() {
            return Err(corrupt("truncated string"));
        }
        let s = std::str::from_utf8(&buf[pos..pos + n])
            .map_err(|_| corrupt("invalid utf-8"))?
            .to_string();
        self.0.set_position((pos + n) as u64);
        Ok(s)
    }
}

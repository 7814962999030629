//! Streaming readers for NDJSON dump files.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::entry::{parse_entry, Admission, Entry, EntryFilter};
use crate::error::{Error, Result};

/// Lines handed to one worker at a time.
pub const DEFAULT_CHUNK_LINES: usize = 16 * 1024;

/// Opens a dump, transparently decompressing gzip input.
pub fn open_dump(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic).map_err(|e| Error::io(path, e))?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Line accounting for one pass over the input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpSummary {
    pub lines: u64,
    pub parsed: u64,
    pub malformed: u64,
    pub deleted_author: u64,
    pub out_of_window: u64,
    pub accepted: u64,
}

impl DumpSummary {
    pub fn merge(mut self, o: DumpSummary) -> Self {
        self.lines += o.lines;
        self.parsed += o.parsed;
        self.malformed += o.malformed;
        self.deleted_author += o.deleted_author;
        self.out_of_window += o.out_of_window;
        self.accepted += o.accepted;
        self
    }
}

/// Parallel fold over every admitted entry of every dump.
///
/// Input is read in chunks; each chunk is parsed and folded into a fresh
/// accumulator on a worker, and accumulators are combined with `merge`,
/// which must be associative and commutative.
pub struct DumpScan<'a> {
    pub filter: &'a EntryFilter,
    pub chunk_lines: usize,
    /// Chunks read ahead and processed concurrently.
    pub batch_chunks: usize,
}

impl<'a> DumpScan<'a> {
    pub fn new(filter: &'a EntryFilter) -> Self {
        DumpScan {
            filter,
            chunk_lines: DEFAULT_CHUNK_LINES,
            batch_chunks: rayon::current_num_threads().max(1) * 2,
        }
    }

    pub fn run<T, Make, Visit, Merge>(
        &self,
        paths: &[PathBuf],
        make: Make,
        visit: Visit,
        merge: Merge,
    ) -> Result<(T, DumpSummary)>
    where
        T: Send,
        Make: Fn() -> T + Sync,
        Visit: Fn(&mut T, &Entry) + Sync,
        Merge: Fn(T, T) -> T + Sync,
    {
        let mut acc = make();
        let mut summary = DumpSummary::default();
        for path in paths {
            let mut reader = open_dump(path)?;
            loop {
                let batch = read_batch(&mut reader, path, self.chunk_lines, self.batch_chunks)?;
                if batch.is_empty() {
                    break;
                }
                let (part, s) = batch
                    .par_iter()
                    .map(|chunk| {
                        let mut local = make();
                        let mut s = DumpSummary::default();
                        for line in chunk {
                            if let Some(e) = self.classify(line, &mut s) {
                                visit(&mut local, &e);
                            }
                        }
                        (local, s)
                    })
                    .reduce(
                        || (make(), DumpSummary::default()),
                        |(a, sa), (b, sb)| (merge(a, b), sa.merge(sb)),
                    );
                acc = merge(acc, part);
                summary = summary.merge(s);
            }
        }
        Ok((acc, summary))
    }

    fn classify(&self, line: &Result<String, ()>, s: &mut DumpSummary) -> Option<Entry> {
        let line = match line {
            Ok(l) => l,
            Err(()) => {
                s.lines += 1;
                s.malformed += 1;
                return None;
            }
        };
        if line.trim().is_empty() {
            return None;
        }
        s.lines += 1;
        let entry = match parse_entry(line) {
            Ok(e) => e,
            Err(err) => {
                log::debug!("skipping line: {err}");
                s.malformed += 1;
                return None;
            }
        };
        s.parsed += 1;
        match self.filter.admit(&entry) {
            Admission::Accept => {
                s.accepted += 1;
                Some(entry)
            }
            Admission::DeletedAuthor => {
                s.deleted_author += 1;
                None
            }
            Admission::OutOfWindow => {
                s.out_of_window += 1;
                None
            }
        }
    }
}

type Chunk = Vec<Result<String, ()>>;

// Invalid UTF-8 lines surface as `Err(())` so they are counted, not fatal.
fn read_batch<R: BufRead + ?Sized>(
    reader: &mut R,
    path: &Path,
    chunk_lines: usize,
    chunks: usize,
) -> Result<Vec<Chunk>> {
    let mut batch = Vec::with_capacity(chunks);
    let mut buf = Vec::new();
    'outer: for _ in 0..chunks {
        let mut chunk = Vec::with_capacity(chunk_lines.min(4096));
        while chunk.len() < chunk_lines {
            buf.clear();
            let n = reader
                .read_until(b'\n', &mut buf)
                .map_err(|e| Error::io(path, e))?;
            if n == 0 {
                if !chunk.is_empty() {
                    batch.push(chunk);
                }
                break 'outer;
            }
            while buf.last().is_some_and(|&b| b == b'\n' || b == b'\r') {
                buf.pop();
            }
            chunk.push(String::from_utf8(std::mem::take(&mut buf)).map_err(|_| ()));
        }
        batch.push(chunk);
    }
    Ok(batch)
}

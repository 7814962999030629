//! Table files: UTF-8, comma separated, header row, LF line endings.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::geo::{parse_state, read_rows, Assignments, State};
use crate::lm::DocScore;
use crate::stats::{DeltaRecord, DivisionRecord, PrevalenceRecord};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_ranking(path: &Path, index: &CorpusIndex, ranking: &[DocScore]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["document", "score", "total_words"])?;
    for s in ranking {
        let d = index.document(s.doc);
        w.write_record([d.name.clone(), s.score.to_string(), d.total_words().to_string()])?;
    }
    finish(w, path)
}

pub fn write_vocabulary(path: &Path, terms: &[(String, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["term", "score"])?;
    for (t, s) in terms {
        w.write_record([t.clone(), s.to_string()])?;
    }
    finish(w, path)
}

pub fn write_geolocation(path: &Path, assignments: &Assignments) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["author", "state_code", "source"])?;
    for a in assignments.values() {
        w.write_record([a.author.as_str(), a.state.code(), a.basis.as_str()])?;
    }
    finish(w, path)
}

/// Every state, zeros included.
pub fn write_state_counts(path: &Path, assignments: &Assignments) -> Result<()> {
    let counts = crate::geo::state_counts(assignments);
    let mut w = writer(path)?;
    w.write_record(["state_code", "authors"])?;
    for s in State::all() {
        w.write_record([s.code().to_string(), counts.get(&s).copied().unwrap_or(0).to_string()])?;
    }
    finish(w, path)
}

/// Reads `author,state_code,source`.
pub fn read_geolocation(path: &Path) -> Result<Vec<(String, State)>> {
    let rows = read_rows(path, &["author", "state_code", "source"])?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let state = parse_state(&row[1], path, line)?;
        if !seen.insert(row[0].clone()) {
            return Err(Error::format(path, line, format!("author `{}` listed twice", row[0])));
        }
        out.push((row[0].clone(), state));
    }
    Ok(out)
}

/// One entry per line; blank lines and `#` comments are skipped.
pub fn read_list(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push(t.to_string());
        }
    }
    Ok(out)
}

pub fn write_prevalence(path: &Path, records: &[PrevalenceRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["state", "cohort_authors", "geolocated_authors", "prevalence"])?;
    for r in records {
        w.write_record([
            r.state.code().to_string(),
            r.cohort_authors.to_string(),
            r.geolocated_authors.to_string(),
            format!("{:.2}", r.prevalence),
        ])?;
    }
    finish(w, path)
}

pub fn write_divisions(path: &Path, records: &[DivisionRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["region", "division", "cohort_authors", "geolocated_authors", "prevalence"])?;
    for r in records {
        w.write_record([
            r.region.clone(),
            r.division.clone(),
            r.cohort_authors.to_string(),
            r.geolocated_authors.to_string(),
            format!("{:.2}", r.prevalence),
        ])?;
    }
    finish(w, path)
}

pub fn write_deltas(path: &Path, records: &[DeltaRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["state", "prevalence_a", "prevalence_b", "relative_change", "decreased", "presence"])?;
    for r in records {
        w.write_record([
            r.state.code().to_string(),
            r.prevalence_a.map(|v| format!("{v:.2}")).unwrap_or_default(),
            r.prevalence_b.map(|v| format!("{v:.2}")).unwrap_or_default(),
            opt(r.relative_change),
            r.decreased.to_string(),
            r.presence.as_str().to_string(),
        ])?;
    }
    finish(w, path)
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}

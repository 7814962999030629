use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gazetteer::Gazetteer;
use super::states::State;
use crate::corpus::Entry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    SelfReport,
    Flair,
    LocationSubreddit,
    Merged,
}

/// Where a merged assignment's evidence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    SelfReport,
    Flair,
    LocationSubreddit,
    /// Summed flair and location-subreddit counts.
    Combined,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::SelfReport => "self_report",
            Basis::Flair => "flair",
            Basis::LocationSubreddit => "location_subreddit",
            Basis::Combined => "combined",
        }
    }
}

pub type StateCounts = BTreeMap<State, u32>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoAssignment {
    pub author: String,
    pub state: State,
    pub source: Source,
    pub basis: Basis,
    /// Observations behind the assignment.
    pub counts: StateCounts,
}

pub type Assignments = BTreeMap<String, GeoAssignment>;

fn unique_argmax(counts: &StateCounts) -> Option<State> {
    let best = counts.values().copied().max()?;
    let mut top = counts.iter().filter(|(_, &c)| c == best);
    let (&state, _) = top.next()?;
    if top.next().is_some() {
        None
    } else {
        Some(state)
    }
}

/// Per-author state observations from one source, before tie resolution.
/// Tallies merge by addition, so extraction can run on any partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceTally {
    pub source: Source,
    pub counts: BTreeMap<String, StateCounts>,
}

impl SourceTally {
    pub fn new(source: Source) -> Self {
        SourceTally {
            source,
            counts: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, author: &str, state: State, n: u32) {
        let per = match self.counts.get_mut(author) {
            Some(p) => p,
            None => self.counts.entry(author.to_string()).or_default(),
        };
        *per.entry(state).or_insert(0) += n;
    }

    pub fn merge(mut self, other: SourceTally) -> SourceTally {
        for (author, per) in other.counts {
            let mine = self.counts.entry(author).or_default();
            for (s, n) in per {
                *mine.entry(s).or_insert(0) += n;
            }
        }
        self
    }

    pub fn authors(&self) -> usize {
        self.counts.len()
    }

    /// Resolves each author: self-reports need a single distinct state,
    /// the other sources a unique most frequent state.
    pub fn assignments(&self) -> Assignments {
        self.counts
            .iter()
            .filter_map(|(author, counts)| {
                let state = match self.source {
                    Source::SelfReport if counts.len() == 1 => counts.keys().next().copied(),
                    Source::SelfReport => None,
                    _ => unique_argmax(counts),
                }?;
                Some((
                    author.clone(),
                    GeoAssignment {
                        author: author.clone(),
                        state,
                        source: self.source,
                        basis: match self.source {
                            Source::SelfReport => Basis::SelfReport,
                            Source::Flair => Basis::Flair,
                            Source::LocationSubreddit => Basis::LocationSubreddit,
                            Source::Merged => Basis::Combined,
                        },
                        counts: counts.clone(),
                    },
                ))
            })
            .collect()
    }
}

/// Tallies resolved self-reports and returns those authors consistent
/// with a single state.
pub fn self_report_assignments<I>(resolved: I) -> Assignments
where
    I: IntoIterator<Item = (String, State)>,
{
    let mut t = SourceTally::new(Source::SelfReport);
    for (a, s) in resolved {
        t.add(&a, s, 1);
    }
    t.assignments()
}

/// Resolves self-report expressions with the gazetteer into a tally.
pub fn self_report_tally<'a, I>(candidates: I, gazetteer: &Gazetteer) -> SourceTally
where
    I: IntoIterator<Item = &'a (String, String)>,
{
    let mut t = SourceTally::new(Source::SelfReport);
    for (author, expr) in candidates {
        if let Some(s) = gazetteer.resolve(expr) {
            t.add(author, s, 1);
        }
    }
    t
}

/// `(subreddit, flair text) → state`. Subreddits compare case-insensitively,
/// flair text exactly (after trimming).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlairMap {
    map: HashMap<String, HashMap<String, State>>,
}

impl FlairMap {
    pub fn insert(&mut self, subreddit: &str, flair: &str, state: State) {
        self.map
            .entry(subreddit.to_lowercase())
            .or_default()
            .insert(flair.trim().to_string(), state);
    }

    pub fn lookup(&self, subreddit: &str, flair: &str) -> Option<State> {
        let per = match self.map.get(subreddit) {
            Some(p) => p,
            None => self.map.get(&subreddit.to_lowercase())?,
        };
        per.get(flair.trim()).copied()
    }

    pub fn len(&self) -> usize {
        self.map.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// CSV `subreddit,flair_text,state_code`, header optional.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m = FlairMap::default();
        for (line, row) in read_rows(path, &["subreddit", "flair_text", "state_code"])? {
            let state = parse_state(&row[2], path, line)?;
            m.insert(&row[0], &row[1], state);
        }
        Ok(m)
    }
}

impl<'a> FromIterator<(&'a str, &'a str, State)> for FlairMap {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str, State)>>(iter: I) -> Self {
        let mut m = FlairMap::default();
        for (s, f, st) in iter {
            m.insert(s, f, st);
        }
        m
    }
}

/// Location-specific subreddit → state, case-insensitive on the name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocationSubreddits {
    map: HashMap<String, State>,
}

impl LocationSubreddits {
    pub fn insert(&mut self, subreddit: &str, state: State) {
        self.map.insert(subreddit.to_lowercase(), state);
    }

    pub fn lookup(&self, subreddit: &str) -> Option<State> {
        self.map
            .get(subreddit)
            .or_else(|| self.map.get(&subreddit.to_lowercase()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// CSV `subreddit,state_code`, header optional.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m = LocationSubreddits::default();
        for (line, row) in read_rows(path, &["subreddit", "state_code"])? {
            let state = parse_state(&row[1], path, line)?;
            m.insert(&row[0], state);
        }
        Ok(m)
    }
}

impl<'a> FromIterator<(&'a str, State)> for LocationSubreddits {
    fn from_iter<I: IntoIterator<Item = (&'a str, State)>>(iter: I) -> Self {
        let mut m = LocationSubreddits::default();
        for (s, st) in iter {
            m.insert(s, st);
        }
        m
    }
}

pub(crate) fn parse_state(s: &str, path: &Path, line: u64) -> Result<State> {
    State::from_code(s).ok_or_else(|| Error::format(path, line, format!("unknown state code `{s}`")))
}

/// Reads a comma-separated file with exactly `header.len()` columns,
/// skipping a first row equal to `header`. Rows come back with their
/// 1-based line numbers.
pub(crate) fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows_from(file, path, header)
}

pub(crate) fn read_rows_from_str(text: &str, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    read_rows_from(text.as_bytes(), Path::new("<bundled>"), header)
}

pub(crate) fn read_rows_from<R: std::io::Read>(
    reader: R,
    path: &Path,
    header: &[&str],
) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if i == 0
            && rec.len() == header.len()
            && rec.iter().zip(header).all(|(a, b)| a.eq_ignore_ascii_case(b))
        {
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::format(
                path,
                line,
                format!("expected {} columns ({})", header.len(), header.join(", ")),
            ));
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

pub fn flair_tally<'a, I>(entries: I, flairs: &FlairMap) -> SourceTally
where
    I: IntoIterator<Item = &'a Entry>,
{
    let mut t = SourceTally::new(Source::Flair);
    for e in entries {
        observe_flair(&mut t, e, flairs);
    }
    t
}

pub(crate) fn observe_flair(t: &mut SourceTally, e: &Entry, flairs: &FlairMap) {
    if let Some(state) = e.flair_text.as_deref().and_then(|f| flairs.lookup(&e.subreddit, f)) {
        t.add(&e.author, state, 1);
    }
}

/// Most common location flair per author; ties are dropped.
pub fn flair_assignments<'a, I>(entries: I, flairs: &FlairMap) -> Assignments
where
    I: IntoIterator<Item = &'a Entry>,
{
    flair_tally(entries, flairs).assignments()
}

pub fn location_subreddit_tally<'a, I>(entries: I, locations: &LocationSubreddits) -> SourceTally
where
    I: IntoIterator<Item = &'a Entry>,
{
    let mut t = SourceTally::new(Source::LocationSubreddit);
    for e in entries {
        observe_location(&mut t, e, locations);
    }
    t
}

pub(crate) fn observe_location(t: &mut SourceTally, e: &Entry, locations: &LocationSubreddits) {
    if let Some(state) = locations.lookup(&e.subreddit) {
        t.add(&e.author, state, 1);
    }
}

/// Most frequent location subreddit state per author; ties are dropped.
pub fn location_subreddit_assignments<'a, I>(entries: I, locations: &LocationSubreddits) -> Assignments
where
    I: IntoIterator<Item = &'a Entry>,
{
    location_subreddit_tally(entries, locations).assignments()
}

/// Self-reports take precedence. Other authors get the unique most
/// frequent state of their summed flair and location-subreddit counts,
/// tied authors being dropped.
pub fn merge_assignments(self_report: &SourceTally, flair: &SourceTally, location: &SourceTally) -> Assignments {
    let mut out = Assignments::new();
    for (author, a) in self_report.assignments() {
        out.insert(
            author,
            GeoAssignment {
                source: Source::Merged,
                ..a
            },
        );
    }

    let mut combined: BTreeMap<&str, (StateCounts, bool, bool)> = BTreeMap::new();
    for (author, per) in &flair.counts {
        if out.contains_key(author) {
            continue;
        }
        let e = combined.entry(author).or_default();
        e.1 = true;
        for (&s, &n) in per {
            *e.0.entry(s).or_insert(0) += n;
        }
    }
    for (author, per) in &location.counts {
        if out.contains_key(author) {
            continue;
        }
        let e = combined.entry(author).or_default();
        e.2 = true;
        for (&s, &n) in per {
            *e.0.entry(s).or_insert(0) += n;
        }
    }
    for (author, (counts, from_flair, from_loc)) in combined {
        if let Some(state) = unique_argmax(&counts) {
            let basis = match (from_flair, from_loc) {
                (true, true) => Basis::Combined,
                (true, false) => Basis::Flair,
                _ => Basis::LocationSubreddit,
            };
            out.insert(
                author.to_string(),
                GeoAssignment {
                    author: author.to_string(),
                    state,
                    source: Source::Merged,
                    basis,
                    counts,
                },
            );
        }
    }
    out
}

/// Number of assigned authors per state.
pub fn state_counts(assignments: &Assignments) -> BTreeMap<State, u64> {
    let mut out = BTreeMap::new();
    for a in assignments.values() {
        *out.entry(a.state).or_insert(0) += 1;
    }
    out
}

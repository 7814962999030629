//! Author geolocation from self-reports, location flairs and
//! location-specific subreddits.

mod assign;
mod census;
mod extract;
mod gazetteer;
mod states;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use assign::{
    flair_assignments, flair_tally, location_subreddit_assignments, location_subreddit_tally,
    merge_assignments, self_report_assignments, self_report_tally, state_counts, Assignments, Basis,
    FlairMap, GeoAssignment, LocationSubreddits, Source, SourceTally, StateCounts,
};
pub use census::{census_agreement, load_census, CensusAgreement, Census};
pub use extract::{extract_self_report_candidates, self_report_expressions, WINDOW_TOKENS};
pub use gazetteer::{City, Gazetteer, Stage, BARE_CITY_MIN_POPULATION, CITY_STATE_MIN_POPULATION};
pub use states::{State, STATES};

pub(crate) use assign::{parse_state, read_rows, read_rows_from_str};

use crate::corpus::{DumpScan, DumpSummary, Entry, EntryFilter};
use crate::error::Result;

/// Lookup resources for the three extractors.
#[derive(Debug, Clone, Default)]
pub struct GeoResources {
    pub gazetteer: Gazetteer,
    pub flairs: FlairMap,
    pub locations: LocationSubreddits,
}

/// Everything observed in one pass over the entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoTallies {
    pub self_report: SourceTally,
    pub flair: SourceTally,
    pub location: SourceTally,
    pub candidate_expressions: u64,
    pub resolved_expressions: u64,
}

impl Default for GeoTallies {
    fn default() -> Self {
        GeoTallies {
            self_report: SourceTally::new(Source::SelfReport),
            flair: SourceTally::new(Source::Flair),
            location: SourceTally::new(Source::LocationSubreddit),
            candidate_expressions: 0,
            resolved_expressions: 0,
        }
    }
}

impl GeoTallies {
    pub fn observe(&mut self, e: &Entry, res: &GeoResources) {
        for expr in self_report_expressions(&e.text) {
            self.candidate_expressions += 1;
            if let Some(s) = res.gazetteer.resolve(expr) {
                self.resolved_expressions += 1;
                self.self_report.add(&e.author, s, 1);
            }
        }
        assign::observe_flair(&mut self.flair, e, &res.flairs);
        assign::observe_location(&mut self.location, e, &res.locations);
    }

    pub fn merge(self, o: GeoTallies) -> GeoTallies {
        GeoTallies {
            self_report: self.self_report.merge(o.self_report),
            flair: self.flair.merge(o.flair),
            location: self.location.merge(o.location),
            candidate_expressions: self.candidate_expressions + o.candidate_expressions,
            resolved_expressions: self.resolved_expressions + o.resolved_expressions,
        }
    }

    pub fn merged(&self) -> Assignments {
        merge_assignments(&self.self_report, &self.flair, &self.location)
    }

    pub fn from_entries<'a, I: IntoIterator<Item = &'a Entry>>(entries: I, res: &GeoResources) -> Self {
        let mut t = GeoTallies::default();
        for e in entries {
            t.observe(e, res);
        }
        t
    }

    pub fn scan(paths: &[PathBuf], filter: &EntryFilter, res: &GeoResources) -> Result<(Self, DumpSummary)> {
        DumpScan::new(filter).run(paths, GeoTallies::default, |t, e| t.observe(e, res), GeoTallies::merge)
    }
}

/// Per-source yields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceYield {
    /// Authors with at least one observation.
    pub observed_authors: u64,
    /// Authors remaining after conflict or tie removal.
    pub assigned_authors: u64,
    pub census_r: Option<f64>,
    pub census_p_value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeoSummary {
    #[serde(flatten)]
    pub lines: DumpSummary,
    pub candidate_expressions: u64,
    pub resolved_expressions: u64,
    pub self_report: SourceYield,
    pub flair: SourceYield,
    pub location_subreddit: SourceYield,
    pub merged: SourceYield,
}

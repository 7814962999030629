use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{parse_state, read_rows, State};

pub const PER: f64 = 100_000.0;

/// Cohort authors per 100,000 geolocated authors.
pub fn prevalence_per_100k(cohort: u64, geolocated: u64) -> f64 {
    PER * cohort as f64 / geolocated as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceRecord {
    pub state: State,
    pub cohort_authors: u64,
    pub geolocated_authors: u64,
    pub prevalence: f64,
}

impl PrevalenceRecord {
    pub fn new(state: State, cohort_authors: u64, geolocated_authors: u64) -> Self {
        PrevalenceRecord {
            state,
            cohort_authors,
            geolocated_authors,
            prevalence: prevalence_per_100k(cohort_authors, geolocated_authors),
        }
    }
}

/// Per-state prevalence for states with at least one geolocated author,
/// in state-code order.
pub fn compute_prevalence<'a, I>(cohort: &BTreeSet<String>, geo: I) -> Vec<PrevalenceRecord>
where
    I: IntoIterator<Item = (&'a str, State)>,
{
    let mut counts: BTreeMap<State, (u64, u64)> = BTreeMap::new();
    for (author, state) in geo {
        let e = counts.entry(state).or_default();
        e.1 += 1;
        if cohort.contains(author) {
            e.0 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(s, (c, g))| PrevalenceRecord::new(s, c, g))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Division {
    pub region: String,
    pub division: String,
}

/// State → (region, division). Regions keep the order in which they first
/// appear in the source table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisionMap {
    map: BTreeMap<State, Division>,
    region_order: Vec<String>,
}

const CENSUS_DIVISIONS: &str = include_str!("../../data/census_divisions.csv");

impl DivisionMap {
    /// The nine US Census Bureau divisions.
    pub fn census() -> Self {
        Self::from_rows(
            crate::geo::read_rows_from_str(CENSUS_DIVISIONS, &["state_code", "region", "division"])
                .expect("bundled division table parses"),
            Path::new("census_divisions.csv"),
        )
        .expect("bundled division table is valid")
    }

    /// CSV `state_code,region,division`, header optional.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_rows(read_rows(path, &["state_code", "region", "division"])?, path)
    }

    fn from_rows(rows: Vec<(u64, Vec<String>)>, path: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut region_order: Vec<String> = Vec::new();
        for (line, row) in rows {
            let state = parse_state(&row[0], path, line)?;
            if !region_order.contains(&row[1]) {
                region_order.push(row[1].clone());
            }
            if map
                .insert(
                    state,
                    Division {
                        region: row[1].clone(),
                        division: row[2].clone(),
                    },
                )
                .is_some()
            {
                return Err(Error::format(path, line, format!("state {state} listed twice")));
            }
        }
        Ok(DivisionMap { map, region_order })
    }

    pub fn get(&self, state: State) -> Option<&Division> {
        self.map.get(&state)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisionRecord {
    pub region: String,
    pub division: String,
    pub cohort_authors: u64,
    pub geolocated_authors: u64,
    pub prevalence: f64,
}

/// Sums counts per division and recomputes prevalence on the sums.
/// Rows are ordered by region (table order), then division name.
pub fn aggregate_divisions(records: &[PrevalenceRecord], divisions: &DivisionMap) -> Result<Vec<DivisionRecord>> {
    let mut sums: BTreeMap<(usize, &str, &str), (u64, u64)> = BTreeMap::new();
    for r in records {
        let d = divisions
            .get(r.state)
            .ok_or_else(|| Error::UnknownState(format!("{} has no division", r.state)))?;
        let region_rank = divisions
            .region_order
            .iter()
            .position(|x| *x == d.region)
            .expect("region recorded on load");
        let e = sums
            .entry((region_rank, d.region.as_str(), d.division.as_str()))
            .or_default();
        e.0 += r.cohort_authors;
        e.1 += r.geolocated_authors;
    }
    Ok(sums
        .into_iter()
        .map(|((_, region, division), (c, g))| DivisionRecord {
            region: region.to_string(),
            division: division.to_string(),
            cohort_authors: c,
            geolocated_authors: g,
            prevalence: prevalence_per_100k(c, g),
        })
        .collect())
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::assign::{parse_state, read_rows, state_counts, Assignments};
use super::states::State;
use crate::error::{Error, Result};
use crate::stats::pearson;

/// Population per state.
pub type Census = BTreeMap<State, u64>;

/// CSV `state_code,population`, header optional.
pub fn load_census(path: &Path) -> Result<Census> {
    let mut census = Census::new();
    for (line, row) in read_rows(path, &["state_code", "population"])? {
        let state = parse_state(&row[0], path, line)?;
        let pop = row[1]
            .parse::<u64>()
            .map_err(|_| Error::format(path, line, format!("bad population `{}`", row[1])))?;
        census.insert(state, pop);
    }
    Ok(census)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusAgreement {
    /// Assigned authors for every state, zeros included.
    pub counts: BTreeMap<State, u64>,
    /// Correlation of log census population with log assigned count.
    pub r: f64,
    pub p_value: f64,
    /// States with a non-zero count that entered the correlation.
    pub states_used: usize,
}

/// Pearson correlation between log census population and log assigned
/// author count over states with at least one assigned author.
pub fn census_agreement(assignments: &Assignments, census: &Census) -> Result<CensusAgreement> {
    let missing: Vec<String> = State::all()
        .filter(|s| !census.contains_key(s))
        .map(|s| s.code().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::StateMismatch(missing));
    }
    let assigned = state_counts(assignments);
    let counts: BTreeMap<State, u64> = State::all()
        .map(|s| (s, assigned.get(&s).copied().unwrap_or(0)))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = counts
        .iter()
        .filter(|(s, &c)| c > 0 && census[s] > 0)
        .map(|(s, &c)| ((census[s] as f64).ln(), (c as f64).ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::Stats(format!(
            "census agreement needs at least 3 states with assigned authors, got {}",
            xs.len()
        )));
    }
    let c = pearson(&xs, &ys)?;
    Ok(CensusAgreement {
        counts,
        r: c.r,
        p_value: c.p_value,
        states_used: xs.len(),
    })
}

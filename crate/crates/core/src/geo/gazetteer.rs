use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use super::states::State;
use crate::corpus::text::token_spans;
use crate::error::{Error, Result};

/// Minimum population for "City, State" matches.
pub const CITY_STATE_MIN_POPULATION: u64 = 20_000;
/// Minimum population for bare city-name matches.
pub const BARE_CITY_MIN_POPULATION: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct City {
    pub name: String,
    pub state: State,
    pub population: u64,
    /// Variants and nicknames ("Big Apple").
    pub alternates: Vec<String>,
}

/// Resolution stage that produced a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    CityState,
    BareCity,
    StateName,
}

type Pattern = Vec<String>;

fn words(s: &str) -> Pattern {
    token_spans(s)
        .into_iter()
        .map(|(a, b)| s[a..b].to_lowercase())
        .collect()
}

/// City records plus the three pattern tables used for staged matching.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    cities: Vec<City>,
    city_state: HashMap<Pattern, BTreeSet<State>>,
    bare_city: HashMap<Pattern, BTreeSet<State>>,
    state_names: HashMap<Pattern, State>,
    max_len: usize,
}

impl Gazetteer {
    pub fn new(cities: Vec<City>) -> Self {
        let mut g = Gazetteer {
            cities,
            ..Default::default()
        };
        for s in State::all() {
            g.state_names.insert(words(s.name()), s);
        }
        for c in &g.cities {
            let names = std::iter::once(&c.name).chain(&c.alternates);
            for name in names {
                let base = words(name);
                if base.is_empty() {
                    continue;
                }
                if c.population > CITY_STATE_MIN_POPULATION {
                    for suffix in [words(c.state.name()), vec![c.state.code().to_lowercase()]] {
                        let mut p = base.clone();
                        p.extend(suffix);
                        g.city_state.entry(p).or_default().insert(c.state);
                    }
                }
                if c.population > BARE_CITY_MIN_POPULATION {
                    g.bare_city.entry(base).or_default().insert(c.state);
                }
            }
        }
        // bare names shared by large cities in different states are unusable
        g.bare_city.retain(|_, states| states.len() == 1);
        g.max_len = g
            .city_state
            .keys()
            .chain(g.bare_city.keys())
            .chain(g.state_names.keys())
            .map(Vec::len)
            .max()
            .unwrap_or(1);
        g
    }

    pub fn cities(&self) -> &[City] {
        &self.cities
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }

    /// Reads `name<TAB>state_code<TAB>population[<TAB>alt1|alt2...]`.
    /// A header row is skipped when present.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cities = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if i == 0 && cols.get(2).is_some_and(|c| c.trim().eq_ignore_ascii_case("population")) {
                continue;
            }
            let lineno = i as u64 + 1;
            if cols.len() < 3 {
                return Err(Error::format(origin, lineno, "expected name, state_code, population"));
            }
            let state = State::from_code(cols[1])
                .ok_or_else(|| Error::format(origin, lineno, format!("unknown state code `{}`", cols[1])))?;
            let population = cols[2]
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::format(origin, lineno, format!("bad population `{}`", cols[2])))?;
            let alternates = cols
                .get(3)
                .map(|a| {
                    a.split('|')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            cities.push(City {
                name: cols[0].trim().to_string(),
                state,
                population,
                alternates,
            });
        }
        Ok(Gazetteer::new(cities))
    }

    /// Maps a free-text location expression to a state.
    ///
    /// Stages are tried in order: "City, State" / "City ST" for cities above
    /// 20k, bare city names and variants above 200k, then state names (and
    /// two-letter codes written in upper case). The first stage with a match
    /// decides; within it the longest match wins, and equally long matches
    /// naming different states resolve to nothing.
    pub fn resolve(&self, expr: &str) -> Option<State> {
        self.resolve_with_stage(expr).map(|(s, _)| s)
    }

    pub fn resolve_with_stage(&self, expr: &str) -> Option<(State, Stage)> {
        let spans = token_spans(expr);
        let raw: Vec<&str> = spans.iter().map(|&(a, b)| &expr[a..b]).collect();
        let lower: Vec<String> = raw.iter().map(|t| t.to_lowercase()).collect();

        let stages: [(Stage, &dyn Fn(&[String]) -> Option<BTreeSet<State>>); 2] = [
            (Stage::CityState, &|p| self.city_state.get(p).cloned()),
            (Stage::BareCity, &|p| self.bare_city.get(p).cloned()),
        ];
        for (stage, lookup) in stages {
            if let Some(found) = self.longest(&lower, |p| lookup(p)) {
                return found.map(|s| (s, stage));
            }
        }

        let by_name = self.longest(&lower, |p| self.state_names.get(p).map(|s| BTreeSet::from([*s])));
        let by_code = raw
            .iter()
            .filter(|t| t.len() == 2 && t.chars().all(|c| c.is_ascii_uppercase()))
            .filter_map(|t| State::from_code(t))
            .collect::<BTreeSet<_>>();
        match by_name {
            Some(found) => found.map(|s| (s, Stage::StateName)),
            None if by_code.len() == 1 => by_code.first().map(|&s| (s, Stage::StateName)),
            None => None,
        }
    }

    // Outer None: nothing matched. Some(None): the longest matches disagree.
    fn longest<F>(&self, tokens: &[String], lookup: F) -> Option<Option<State>>
    where
        F: Fn(&[String]) -> Option<BTreeSet<State>>,
    {
        for len in (1..=self.max_len.min(tokens.len())).rev() {
            let mut states = BTreeSet::new();
            for window in tokens.windows(len) {
                if let Some(s) = lookup(window) {
                    states.extend(s);
                }
            }
            if !states.is_empty() {
                return Some(if states.len() == 1 { states.first().copied() } else { None });
            }
        }
        None
    }
}

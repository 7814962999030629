use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::correlation::{pearson, Correlation};
use super::prevalence::PrevalenceRecord;
use super::regression::ols_fit;
use crate::error::{Error, Result};
use crate::geo::{parse_state, read_rows, State};

/// A per-state external indicator, e.g. overdose deaths per 100,000.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub name: String,
    pub values: BTreeMap<State, f64>,
}

impl IndicatorSeries {
    pub fn new(name: impl Into<String>, values: BTreeMap<State, f64>) -> Self {
        IndicatorSeries {
            name: name.into(),
            values,
        }
    }

    /// CSV `state_code,value`, header optional.
    pub fn load(name: impl Into<String>, path: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (line, row) in read_rows(path, &["state_code", "value"])? {
            let state = parse_state(&row[0], path, line)?;
            let v: f64 = row[1]
                .parse()
                .map_err(|_| Error::format(path, line, format!("bad value `{}`", row[1])))?;
            if !v.is_finite() {
                return Err(Error::format(path, line, "non-finite value"));
            }
            if values.insert(state, v).is_some() {
                return Err(Error::format(path, line, format!("state {state} listed twice")));
            }
        }
        Ok(IndicatorSeries::new(name, values))
    }

    pub fn from_prevalence(records: &[PrevalenceRecord]) -> Self {
        IndicatorSeries::new("prevalence", records.iter().map(|r| (r.state, r.prevalence)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub x: String,
    pub y: String,
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

impl PairCorrelation {
    fn new(x: &str, y: &str, c: Correlation) -> Self {
        PairCorrelation {
            x: x.to_string(),
            y: y.to_string(),
            r: c.r,
            p_value: c.p_value,
            n: c.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSummary {
    pub intercept: f64,
    /// Feature name → coefficient.
    pub coefficients: BTreeMap<String, f64>,
    pub fitted_r: f64,
    pub fitted_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub states: Vec<State>,
    pub log_transform: bool,
    pub correlations: Vec<PairCorrelation>,
    pub regression: RegressionSummary,
}

fn align(series: &[&IndicatorSeries]) -> Result<Vec<State>> {
    let all: BTreeSet<State> = series.iter().flat_map(|s| s.values.keys().copied()).collect();
    let mut missing = Vec::new();
    for s in series {
        for st in &all {
            if !s.values.contains_key(st) {
                missing.push(format!("{}: {}", s.name, st));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::StateMismatch(missing));
    }
    Ok(all.into_iter().collect())
}

fn column(s: &IndicatorSeries, states: &[State], log: bool) -> Result<Vec<f64>> {
    states
        .iter()
        .map(|st| {
            let v = s.values[st];
            if !log {
                Ok(v)
            } else if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::Stats(format!("{} for {st} is {v}; log transform needs positive values", s.name)))
            }
        })
        .collect()
}

/// Pairwise correlations among prevalence and both indicators, plus a
/// two-feature least-squares fit of prevalence and the correlation of its
/// fitted values with the observed prevalence.
pub fn regression_report(
    prevalence: &IndicatorSeries,
    overdose: &IndicatorSeries,
    prescribing: &IndicatorSeries,
    log_transform: bool,
) -> Result<StatsReport> {
    let states = align(&[prevalence, overdose, prescribing])?;
    let p = column(prevalence, &states, log_transform)?;
    let o = column(overdose, &states, log_transform)?;
    let r = column(prescribing, &states, log_transform)?;

    let correlations = vec![
        PairCorrelation::new(&prevalence.name, &overdose.name, pearson(&p, &o)?),
        PairCorrelation::new(&prevalence.name, &prescribing.name, pearson(&p, &r)?),
        PairCorrelation::new(&overdose.name, &prescribing.name, pearson(&o, &r)?),
    ];
    let features: Vec<Vec<f64>> = o.iter().zip(&r).map(|(a, b)| vec![*a, *b]).collect();
    let fit = ols_fit(&features, &p)?;
    let fc = pearson(&fit.fitted, &p)?;
    let coefficients = [overdose.name.clone(), prescribing.name.clone()]
        .into_iter()
        .zip(fit.coefficients.iter().copied())
        .collect();

    Ok(StatsReport {
        states,
        log_transform,
        correlations,
        regression: RegressionSummary {
            intercept: fit.intercept,
            coefficients,
            fitted_r: fc.r,
            fitted_p_value: fc.p_value,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Presence {
    Both,
    OnlyA,
    OnlyB,
}

impl Presence {
    pub fn as_str(self) -> &'static str {
        match self {
            Presence::Both => "both",
            Presence::OnlyA => "only_a",
            Presence::OnlyB => "only_b",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub state: State,
    pub prevalence_a: Option<f64>,
    pub prevalence_b: Option<f64>,
    /// (B - A) / A; None when a year is missing or A is zero.
    pub relative_change: Option<f64>,
    pub decreased: bool,
    pub presence: Presence,
}

/// Per-state change from period A to period B. States seen in only one
/// period are kept and flagged.
pub fn temporal_compare(a: &[PrevalenceRecord], b: &[PrevalenceRecord]) -> Vec<DeltaRecord> {
    let ma: BTreeMap<State, f64> = a.iter().map(|r| (r.state, r.prevalence)).collect();
    let mb: BTreeMap<State, f64> = b.iter().map(|r| (r.state, r.prevalence)).collect();
    let states: BTreeSet<State> = ma.keys().chain(mb.keys()).copied().collect();
    states
        .into_iter()
        .map(|state| {
            let (pa, pb) = (ma.get(&state).copied(), mb.get(&state).copied());
            let presence = match (pa, pb) {
                (Some(_), Some(_)) => Presence::Both,
                (Some(_), None) => Presence::OnlyA,
                _ => Presence::OnlyB,
            };
            let relative_change = match (pa, pb) {
                (Some(x), Some(y)) if x != 0.0 => Some((y - x) / x),
                _ => None,
            };
            DeltaRecord {
                state,
                prevalence_a: pa,
                prevalence_b: pb,
                relative_change,
                decreased: matches!((pa, pb), (Some(x), Some(y)) if y < x),
                presence,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(name: &str, vals: &[(&str, f64)]) -> IndicatorSeries {
        IndicatorSeries::new(
            name,
            vals.iter().map(|(c, v)| (State::from_code(c).unwrap(), *v)).collect(),
        )
    }

    const CODES: [&str; 8] = ["AL", "AK", "AZ", "CA", "CO", "NY", "TX", "WA"];

    #[test]
    fn copies_correlate_perfectly() {
        let v: Vec<_> = CODES.iter().enumerate().map(|(i, c)| (*c, (i * i) as f64 + 1.0)).collect();
        let w: Vec<_> = CODES.iter().enumerate().map(|(i, c)| (*c, ((i * 7) % 5) as f64)).collect();
        let p = series("prevalence", &v);
        let rep = regression_report(&p, &p, &series("rx", &w), false).unwrap();
        assert_eq!(rep.correlations[0].r, 1.0);
        assert!((rep.regression.fitted_r - 1.0).abs() < 1e-12);
        assert!((rep.regression.coefficients["prevalence"] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mismatched_states_are_listed() {
        let p = series("prevalence", &[("AL", 1.0), ("AK", 2.0), ("AZ", 3.0), ("CA", 5.0)]);
        let o = series("overdose", &[("AL", 1.0), ("AK", 2.0), ("AZ", 3.0)]);
        match regression_report(&p, &o, &p, false) {
            Err(Error::StateMismatch(m)) => assert_eq!(m, ["overdose: CA"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn log_transform_rejects_non_positive() {
        let p = series("p", &[("AL", 1.0), ("AK", 0.0), ("AZ", 3.0), ("CA", 5.0)]);
        assert!(regression_report(&p, &p, &p, true).is_err());
    }

    #[test]
    fn deltas() {
        let st = |c| State::from_code(c).unwrap();
        let a = [
            PrevalenceRecord::new(st("CA"), 500, 100_000),
            PrevalenceRecord::new(st("NY"), 300, 100_000),
            PrevalenceRecord::new(st("TX"), 1, 10),
        ];
        let b = [
            PrevalenceRecord::new(st("CA"), 550, 100_000),
            PrevalenceRecord::new(st("NY"), 270, 100_000),
            PrevalenceRecord::new(st("WA"), 1, 10),
        ];
        let d = temporal_compare(&a, &b);
        assert_eq!(d.len(), 4);
        assert!((d[0].relative_change.unwrap() - 0.10).abs() < 1e-12);
        assert!(!d[0].decreased);
        assert!(d[1].decreased);
        assert_eq!(d[2].presence, Presence::OnlyA);
        assert_eq!(d[3].presence, Presence::OnlyB);
        assert_eq!(d[3].relative_change, None);

        for r in temporal_compare(&a, &a) {
            assert_eq!(r.relative_change, Some(0.0));
        }
    }
}

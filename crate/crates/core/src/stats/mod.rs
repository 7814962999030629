//! Prevalence, regional aggregation and comparisons against external
//! indicator series.

mod correlation;
mod prevalence;
mod regression;
mod report;
pub mod special;

pub use correlation::{pearson, Correlation};
pub use prevalence::{
    aggregate_divisions, compute_prevalence, prevalence_per_100k, Division, DivisionMap, DivisionRecord,
    PrevalenceRecord, PER,
};
pub use regression::{ols_fit, OlsFit};
pub use report::{
    regression_report, temporal_compare, DeltaRecord, IndicatorSeries, PairCorrelation, Presence,
    RegressionSummary, StatsReport,
};

//! Subcommunity retrieval with language-model ranking and interactive
//! query expansion, author geolocation, and cohort prevalence statistics.

pub mod api;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod geo;
pub mod lm;
pub mod output;
pub mod session;
pub mod stats;

pub use error::{Error, Result};

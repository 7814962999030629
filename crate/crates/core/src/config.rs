//! Optional TOML defaults for the command line. Flags override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Names the environment variable holding the default config path.
pub const CONFIG_ENV: &str = "COHORT_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub index: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub top_docs: Option<usize>,
    pub top_terms: Option<usize>,
    pub min_entries: Option<u64>,
    pub min_term_count: Option<u64>,
    pub window_start: Option<i64>,
    pub window_end: Option<i64>,
    pub serve: Option<u16>,
    pub geo: GeoConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeoConfig {
    pub gazetteer: Option<PathBuf>,
    pub flairs: Option<PathBuf>,
    pub locations: Option<PathBuf>,
    pub census: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))
    }

    /// Relative paths resolve against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.inputs.iter_mut().for_each(fix);
        for p in [
            &mut cfg.index,
            &mut cfg.lemmas,
            &mut cfg.out,
            &mut cfg.geo.gazetteer,
            &mut cfg.geo.flairs,
            &mut cfg.geo.locations,
            &mut cfg.geo.census,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        Ok(cfg)
    }
}

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use super::{Decision, Decisions, IterationRecord};
use crate::error::{Error, Result};

/// Supplies a complete decision map for an iteration's candidates.
pub trait DecisionPolicy {
    fn decide(&mut self, record: &IterationRecord) -> Decisions;

    /// Recorded as `decided_by`.
    fn annotator(&self) -> &str;
}

/// Accepts candidates found in a fixed allowlist, rejects the rest.
#[derive(Debug, Clone, Default)]
pub struct AllowlistPolicy {
    allow: HashSet<String>,
    name: String,
}

impl AllowlistPolicy {
    pub fn new<I, S>(terms: I, name: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AllowlistPolicy {
            allow: terms.into_iter().map(Into::into).collect(),
            name: name.into(),
        }
    }

    /// One term per line; blank lines and `#` comments are ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut terms = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                terms.push(t.to_lowercase());
            }
        }
        Ok(Self::new(terms, format!("policy:{}", path.display())))
    }

    pub fn len(&self) -> usize {
        self.allow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allow.is_empty()
    }
}

impl DecisionPolicy for AllowlistPolicy {
    fn decide(&mut self, record: &IterationRecord) -> Decisions {
        record
            .candidates
            .iter()
            .map(|c| {
                let d = if self.allow.contains(&c.term) {
                    Decision::Accept
                } else {
                    Decision::Reject
                };
                (c.term.clone(), d)
            })
            .collect()
    }

    fn annotator(&self) -> &str {
        &self.name
    }
}

/// Rejects every candidate.
#[derive(Debug, Clone, Copy, Default)]
pub struct RejectAll;

impl DecisionPolicy for RejectAll {
    fn decide(&mut self, record: &IterationRecord) -> Decisions {
        record
            .candidates
            .iter()
            .map(|c| (c.term.clone(), Decision::Reject))
            .collect()
    }

    fn annotator(&self) -> &str {
        "reject-all"
    }
}

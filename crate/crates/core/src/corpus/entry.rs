use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Author names the dump uses for accounts that no longer exist.
pub const SENTINEL_AUTHORS: [&str; 2] = ["[deleted]", "[removed]"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Submission,
    Comment,
}

/// One submission or comment from the dump, normalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub author: String,
    pub subreddit: String,
    pub created_utc: i64,
    /// Comment body, or submission title and selftext joined by a space.
    pub text: String,
    pub flair_text: Option<String>,
    pub kind: EntryKind,
}

#[derive(Deserialize)]
struct RawEntry<'a> {
    #[serde(default, borrow)]
    id: Option<std::borrow::Cow<'a, str>>,
    #[serde(default, borrow)]
    author: Option<std::borrow::Cow<'a, str>>,
    #[serde(default, borrow)]
    subreddit: Option<std::borrow::Cow<'a, str>>,
    #[serde(default)]
    created_utc: Option<serde_json::Value>,
    #[serde(default, borrow)]
    body: Option<std::borrow::Cow<'a, str>>,
    #[serde(default, borrow)]
    title: Option<std::borrow::Cow<'a, str>>,
    #[serde(default, borrow)]
    selftext: Option<std::borrow::Cow<'a, str>>,
    #[serde(default, borrow)]
    author_flair_text: Option<std::borrow::Cow<'a, str>>,
}

fn required<'a>(field: Option<std::borrow::Cow<'a, str>>, name: &str) -> Result<String> {
    match field {
        Some(v) if !v.is_empty() => Ok(v.into_owned()),
        _ => Err(Error::Parse(format!("missing field `{name}`"))),
    }
}

// Pushshift has shipped created_utc as integers, floats and strings over the years.
fn timestamp(value: Option<serde_json::Value>) -> Result<i64> {
    let missing = || Error::Parse("missing or invalid field `created_utc`".into());
    match value.ok_or_else(missing)? {
        serde_json::Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().map(|f| f as i64))
            .ok_or_else(missing),
        serde_json::Value::String(s) => s
            .trim()
            .parse::<i64>()
            .or_else(|_| s.trim().parse::<f64>().map(|f| f as i64))
            .map_err(|_| missing()),
        _ => Err(missing()),
    }
}

/// Parses one NDJSON line into an [`Entry`].
pub fn parse_entry(line: &str) -> Result<Entry> {
    let raw: RawEntry<'_> =
        serde_json::from_str(line).map_err(|e| Error::Parse(format!("invalid json: {e}")))?;
    let id = required(raw.id, "id")?;
    let author = required(raw.author, "author")?;
    let subreddit = required(raw.subreddit, "subreddit")?;
    let created_utc = timestamp(raw.created_utc)?;

    let (kind, text) = match (raw.body, raw.title) {
        (Some(body), _) => (EntryKind::Comment, body.into_owned()),
        (None, Some(title)) => {
            let selftext = raw.selftext.unwrap_or_default();
            let text = if selftext.is_empty() {
                title.into_owned()
            } else {
                format!("{title} {selftext}")
            };
            (EntryKind::Submission, text)
        }
        (None, None) => return Err(Error::Parse("entry has neither `body` nor `title`".into())),
    };

    let flair_text = raw
        .author_flair_text
        .map(|f| f.trim().to_string())
        .filter(|f| !f.is_empty());

    Ok(Entry {
        id,
        author,
        subreddit,
        created_utc,
        text,
        flair_text,
        kind,
    })
}

/// Half-open analysis window `[start, end)` in epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: i64,
    pub end: i64,
}

impl TimeWindow {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidParameter(format!(
                "window start {start} must precede end {end}"
            )));
        }
        Ok(TimeWindow { start, end })
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Accept,
    DeletedAuthor,
    OutOfWindow,
}

/// Decides which parsed entries take part in the analysis.
#[derive(Debug, Clone, Copy, Default)]
pub struct EntryFilter {
    pub window: Option<TimeWindow>,
}

impl EntryFilter {
    pub fn admit(&self, entry: &Entry) -> Admission {
        if SENTINEL_AUTHORS.contains(&entry.author.as_str()) {
            return Admission::DeletedAuthor;
        }
        match self.window {
            Some(w) if !w.contains(entry.created_utc) => Admission::OutOfWindow,
            _ => Admission::Accept,
        }
    }
}

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Byte spans of tokens in `text`: maximal runs of letters and digits,
/// allowing apostrophes between two word characters ("don't").
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut start: Option<usize> = None;
    let mut end = 0;
    while let Some((i, c)) = chars.next() {
        if is_word_char(c) {
            start.get_or_insert(i);
            end = i + c.len_utf8();
        } else if is_apostrophe(c)
            && start.is_some()
            && chars.peek().is_some_and(|&(_, n)| is_word_char(n))
        {
            end = i + c.len_utf8();
        } else if let Some(s) = start.take() {
            spans.push((s, end));
        }
    }
    if let Some(s) = start {
        spans.push((s, end));
    }
    spans
}

/// Splits text into raw (not lowercased) tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    token_spans(text).into_iter().map(move |(s, e)| &text[s..e])
}

/// Lowercase token to lemma lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaTable {
    map: HashMap<String, String>,
}

impl LemmaTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, token: &str, lemma: &str) {
        self.map.insert(token.to_lowercase(), lemma.to_lowercase());
    }

    pub fn get(&self, token: &str) -> Option<&str> {
        self.map.get(token).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Reads a two-column `token<TAB>lemma` file. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_reader<R: BufRead>(reader: R, origin: &Path) -> Result<Self> {
        let mut table = LemmaTable::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next()) {
                (Some(token), Some(lemma)) if !token.is_empty() && !lemma.is_empty() => {
                    table.insert(token.trim(), lemma.trim())
                }
                _ => {
                    return Err(Error::format(
                        origin,
                        n as u64 + 1,
                        "expected `token<TAB>lemma`",
                    ))
                }
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), path)
    }

    fn lemmatize(&self, token: String) -> String {
        match self.map.get(&token) {
            Some(lemma) => lemma.clone(),
            None => token,
        }
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for LemmaTable {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut table = LemmaTable::new();
        for (t, l) in iter {
            table.insert(t, l);
        }
        table
    }
}

/// Lowercases, tokenizes and lemmatizes `raw`. Unknown tokens pass through.
pub fn normalize_text(raw: &str, lemmas: &LemmaTable) -> Vec<String> {
    tokenize(raw)
        .map(|t| lemmas.lemmatize(t.to_lowercase()))
        .collect()
}

use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::text::token_spans;
use crate::corpus::Entry;

/// Tokens kept after the phrase.
pub const WINDOW_TOKENS: usize = 6;

fn phrase() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bi\s+live\s+in\b").expect("valid regex"))
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\n' | '\r')
}

/// Location expressions following each "I live in" in `text`: up to
/// [`WINDOW_TOKENS`] tokens, stopping at the end of the sentence.
pub fn self_report_expressions(text: &str) -> Vec<&str> {
    phrase()
        .find_iter(text)
        .filter_map(|m| {
            let rest = &text[m.end()..];
            let sentence = match rest.find(is_sentence_end) {
                Some(i) => &rest[..i],
                None => rest,
            };
            let spans = token_spans(sentence);
            let first = spans.first()?;
            let last = spans[spans.len().min(WINDOW_TOKENS) - 1];
            Some(&sentence[first.0..last.1])
        })
        .collect()
}

/// `(author, expression)` for every self-report phrase in the entries.
pub fn extract_self_report_candidates<'a, I>(entries: I) -> Vec<(String, String)>
where
    I: IntoIterator<Item = &'a Entry>,
{
    entries
        .into_iter()
        .flat_map(|e| {
            self_report_expressions(&e.text)
                .into_iter()
                .map(|x| (e.author.clone(), x.to_string()))
                .collect::<Vec<_>>()
        })
        .collect()
}

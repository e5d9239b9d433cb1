//! Tokenisation and span search shared by metrics and generators.
//!
//! A token is either a maximal run of alphanumeric characters or a single
//! non-whitespace, non-alphanumeric character. `"19:45"` and `"19 : 45"`
//! therefore tokenise identically, and `"cambridge."` contains the token
//! `"cambridge"`.

use std::ops::Range;

/// Splits lowercased `text` into tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            current.push(c);
            continue;
        }
        if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Whether `needle` occurs as a contiguous run inside `haystack`.
///
/// An empty needle never matches.
pub fn contains_subsequence<T: PartialEq>(haystack: &[T], needle: &[T]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Whether the tokens of `value` occur contiguously in the tokens of `text`.
pub fn text_contains_value(text: &str, value: &str) -> bool {
    contains_subsequence(&tokenize(text), &tokenize(value))
}

fn lower(c: char) -> char {
    let mut it = c.to_lowercase();
    match (it.next(), it.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Byte ranges of case-insensitive occurrences of `needle` in `text`.
///
/// `needle` must already be lowercase. Matches are character-aligned (the
/// span has exactly as many characters as the needle) and must not be glued
/// to a neighbouring alphanumeric character. Occurrences do not overlap.
pub fn find_spans(text: &str, needle: &str) -> Vec<Range<usize>> {
    let needle: Vec<char> = needle.chars().collect();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    if needle.is_empty() || chars.len() < needle.len() {
        return spans;
    }
    let mut i = 0;
    while i + needle.len() <= chars.len() {
        if let Some(end) = match_at(&chars, i, &needle) {
            let start_byte = chars[i].0;
            let end_byte = chars.get(end).map_or(text.len(), |&(b, _)| b);
            spans.push(start_byte..end_byte);
            i = end;
        } else {
            i += 1;
        }
    }
    spans
}

/// If `needle` matches `chars` starting at index `i` with token boundaries
/// on both sides, returns the index one past the match.
pub(crate) fn match_at(chars: &[(usize, char)], i: usize, needle: &[char]) -> Option<usize> {
    let end = i + needle.len();
    if end > chars.len() {
        return None;
    }
    if needle[0].is_alphanumeric() && i > 0 && chars[i - 1].1.is_alphanumeric() {
        return None;
    }
    if needle[needle.len() - 1].is_alphanumeric() && end < chars.len() && chars[end].1.is_alphanumeric()
    {
        return None;
    }
    chars[i..end]
        .iter()
        .zip(needle)
        .all(|(&(_, c), &n)| lower(c) == n)
        .then_some(end)
}

/// Number of whitespace-separated words.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

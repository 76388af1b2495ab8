//! Normalization and tokenization shared by every stage.
//!
//! Lexicon lookups, entity matching, NIL keys and the token-level metrics all
//! go through [`tokenize`] and [`normalize`], so a token boundary means the
//! same thing everywhere in the crate.

use unicode_normalization::char::{decompose_canonical, is_combining_mark};
use unicode_normalization::UnicodeNormalization;

use crate::span::Span;

/// A token borrowed from its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub span: Span,
}

impl Token<'_> {
    /// True for tokens carrying at least one letter or digit.
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }

    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

/// Splits on whitespace after detaching punctuation.
///
/// A token is either a run of alphanumeric characters (inner hyphens kept, so
/// `Web-Design` stays one token) or a single non-space, non-alphanumeric char.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if !c.is_alphanumeric() {
            let end = start + c.len_utf8();
            tokens.push(Token { text: &text[start..end], span: Span::new(start, end) });
            continue;
        }
        let mut end = start + c.len_utf8();
        while let Some(&(i, next)) = chars.peek() {
            if next.is_alphanumeric() {
                end = i + next.len_utf8();
                chars.next();
            } else if next == '-' {
                // keep the hyphen only when another alphanumeric follows
                let after = text[i + 1..].chars().next();
                if after.is_some_and(char::is_alphanumeric) {
                    chars.next();
                    end = i + 1;
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        tokens.push(Token { text: &text[start..end], span: Span::new(start, end) });
    }
    tokens
}

/// NFC, lowercase, umlaut folding (ä→ae, ö→oe, ü→ue, ß→ss), remaining
/// diacritics stripped.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.nfc() {
        for lower in c.to_lowercase() {
            match lower {
                'ä' => out.push_str("ae"),
                'ö' => out.push_str("oe"),
                'ü' => out.push_str("ue"),
                'ß' => out.push_str("ss"),
                other if other.is_ascii() => out.push(other),
                other => decompose_canonical(other, |d| {
                    if !is_combining_mark(d) {
                        out.push(d);
                    }
                }),
            }
        }
    }
    out
}

/// Normalized tokens of `text`, punctuation included.
pub fn normalized_tokens(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| normalize(t.text)).collect()
}

/// Normalized word tokens only (punctuation stripped).
pub fn normalized_words(text: &str) -> Vec<String> {
    tokenize(text).iter().filter(|t| t.is_word()).map(|t| normalize(t.text)).collect()
}

/// The lookup key of a surface form: normalized tokens joined by one space.
pub fn normalized_key(text: &str) -> String {
    normalized_tokens(text).join(" ")
}

/// Whitespace-delimited word count, as used by the title length bound.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Finds `needle` as a contiguous run inside `haystack`.
pub fn contains_sequence<S: AsRef<str>>(haystack: &[S], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w.iter().zip(needle).all(|(a, b)| a.as_ref() == b))
}

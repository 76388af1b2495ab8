//! Surface-form variation: plural and possessive suffixing from a rule table,
//! plus initialism abbreviations.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::text::{normalize, tokenize};

static DEFAULT_RULES: &str = include_str!("../../data/variation_rules.tsv");

const MIN_LEMMA_CHARS: usize = 3;
const MAX_LEMMA_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Plural,
    Possessive,
}

/// One suffix rule. `suffix == None` matches any word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixRule {
    pub kind: RuleKind,
    pub suffix: Option<String>,
    pub strip: usize,
    pub append: String,
}

impl SuffixRule {
    fn suffix_len(&self) -> usize {
        self.suffix.as_ref().map_or(0, |s| s.chars().count())
    }

    fn matches(&self, lower: &str) -> bool {
        self.suffix.as_ref().is_none_or(|s| lower.ends_with(s.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariationRules {
    pub rules: Vec<SuffixRule>,
    /// Normalized function words skipped in abbreviations.
    pub stopwords: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("variation rules line {line}: {message}")]
pub struct RuleError {
    pub line: usize,
    pub message: String,
}

impl Default for VariationRules {
    fn default() -> Self {
        Self::parse(DEFAULT_RULES).expect("shipped variation rules parse")
    }
}

impl VariationRules {
    pub fn parse(source: &str) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        let mut stopwords = Vec::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| RuleError { line: idx + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            match cols[0] {
                "stopword" if cols.len() == 2 => stopwords.push(normalize(cols[1].trim())),
                "plural" | "possessive" if cols.len() == 4 => {
                    let kind = if cols[0] == "plural" { RuleKind::Plural } else { RuleKind::Possessive };
                    let suffix = match cols[1] {
                        "*" => None,
                        "" => return Err(err("empty suffix, use `*`".into())),
                        s => Some(s.to_lowercase()),
                    };
                    let strip: usize = cols[2].parse().map_err(|_| err(format!("bad strip count {:?}", cols[2])))?;
                    let suffix_chars = suffix.as_ref().map_or(0, |s| s.chars().count());
                    if strip > suffix_chars {
                        return Err(err(format!("strip {strip} exceeds the suffix length")));
                    }
                    if cols[3].is_empty() {
                        return Err(err("empty append".into()));
                    }
                    rules.push(SuffixRule { kind, suffix, strip, append: cols[3].to_string() });
                }
                other => return Err(err(format!("unrecognized rule {other:?} with {} columns", cols.len()))),
            }
        }
        stopwords.sort();
        stopwords.dedup();
        Ok(VariationRules { rules, stopwords })
    }

    /// Rules of `kind` in the longest-suffix group matching `lower`.
    fn group<'a>(&'a self, kind: RuleKind, lower: &str) -> Vec<&'a SuffixRule> {
        let matching: Vec<&SuffixRule> = self.rules.iter().filter(|r| r.kind == kind && r.matches(lower)).collect();
        let longest = matching.iter().map(|r| r.suffix_len()).max();
        matching.into_iter().filter(|r| Some(r.suffix_len()) == longest).collect()
    }

    fn apply(&self, kind: RuleKind, word: &str) -> Vec<String> {
        let lower = word.to_lowercase();
        self.group(kind, &lower)
            .into_iter()
            .map(|rule| {
                let keep = word.chars().count() - rule.strip;
                let mut out: String = word.chars().take(keep).collect();
                out.push_str(&rule.append);
                out
            })
            .collect()
    }

    fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.binary_search(&normalize(word)).is_ok()
    }

    /// Collapses a normalized word to the shortest form it can be derived
    /// from by plural rules, so `podcastings` and `podcasting` agree.
    pub fn reduce_plural(&self, normalized: &str) -> String {
        // rules in the same folded form as the input
        let folded = VariationRules {
            rules: self
                .rules
                .iter()
                .filter(|r| r.kind == RuleKind::Plural)
                .map(|r| SuffixRule {
                    kind: r.kind,
                    suffix: r.suffix.as_deref().map(normalize),
                    strip: r.strip,
                    append: normalize(&r.append),
                })
                .collect(),
            stopwords: vec![],
        };
        let mut current = normalized.to_string();
        for _ in 0..MAX_LEMMA_STEPS {
            let mut best: Option<String> = None;
            for (orig, rule) in self.rules.iter().filter(|r| r.kind == RuleKind::Plural).zip(&folded.rules) {
                let Some(stem) = current.strip_suffix(rule.append.as_str()) else { continue };
                let suffix = rule.suffix.clone().unwrap_or_default();
                // strip counts characters of the unfolded suffix
                let orig_suffix = orig.suffix.as_deref().unwrap_or_default();
                let n = orig_suffix.chars().count();
                let restored = normalize(&orig_suffix.chars().skip(n - orig.strip.min(n)).collect::<String>());
                let base = format!("{stem}{restored}");
                if base.chars().count() < MIN_LEMMA_CHARS || !base.ends_with(suffix.as_str()) {
                    continue;
                }
                // the rule must be one the forward direction would pick for `base`
                let picked = folded
                    .group(RuleKind::Plural, &base)
                    .iter()
                    .any(|r| r.suffix.as_deref().unwrap_or_default() == suffix && r.append == rule.append);
                if !picked {
                    continue;
                }
                let shorter = best.as_ref().is_none_or(|b| (base.chars().count(), &base) < (b.chars().count(), b));
                if shorter {
                    best = Some(base);
                }
            }
            match best {
                Some(b) if b != current => current = b,
                _ => break,
            }
        }
        current
    }

    /// Normalized key with plural variation removed from the last word;
    /// equal keys denote the same NIL entity.
    pub fn lemma_key(&self, surface: &str) -> String {
        let tokens = tokenize(surface);
        let mut norm: Vec<String> = tokens.iter().map(|t| normalize(t.text)).collect();
        if let Some(last) = tokens.iter().rposition(|t| t.is_word()) {
            norm[last] = self.reduce_plural(&norm[last]);
        }
        norm.join(" ")
    }
}

fn is_acronym(word: &str) -> bool {
    word.chars().count() > 1 && word.chars().all(|c| !c.is_lowercase())
}

/// Original forms plus plural, possessive and abbreviation variants,
/// deduplicated in first-seen order.
pub fn expand_forms<'a, I>(forms: I, rules: &VariationRules) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let originals: Vec<&str> = forms.into_iter().map(str::trim).filter(|f| !f.is_empty()).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |s: String, out: &mut Vec<String>| {
        if seen.insert(s.clone()) {
            out.push(s);
        }
    };
    for form in &originals {
        push(form.to_string(), &mut out);
    }
    for form in &originals {
        let words: Vec<&str> = form.split_whitespace().collect();
        let Some((last, head)) = words.split_last() else { continue };
        let prefix = if head.is_empty() { String::new() } else { format!("{} ", head.join(" ")) };
        let inflectable = last.chars().all(char::is_alphabetic) && !is_acronym(last);
        if inflectable {
            for kind in [RuleKind::Plural, RuleKind::Possessive] {
                for variant in rules.apply(kind, last) {
                    push(format!("{prefix}{variant}"), &mut out);
                }
            }
        }
        let content: Vec<&str> = words.iter().copied().filter(|w| !rules.is_stopword(w)).collect();
        if words.len() >= 2
            && content.len() >= 2
            && content.iter().all(|w| w.chars().next().is_some_and(char::is_alphabetic))
        {
            let initials: Vec<String> =
                content.iter().map(|w| w.chars().next().unwrap().to_uppercase().collect()).collect();
            push(initials.concat(), &mut out);
            push(initials.iter().map(|i| format!("{i}.")).collect(), &mut out);
        }
    }
    out
}

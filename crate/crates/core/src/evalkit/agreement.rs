use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::gold::GoldMention;
use super::metrics::{match_spans, Counts, Setting};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub kappa: f64,
    pub pairwise_f1: f64,
    pub tokens: usize,
}

/// Cohen's kappa over label sequences of equal length. Defined as 1 when
/// both annotators use a single identical label throughout.
pub fn cohen_kappa<L: Ord>(a: &[L], b: &[L]) -> f64 {
    assert_eq!(a.len(), b.len(), "label sequences differ in length");
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let po = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n as f64;
    let mut fa: BTreeMap<&L, usize> = BTreeMap::new();
    let mut fb: BTreeMap<&L, usize> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *fa.entry(x).or_default() += 1;
        *fb.entry(y).or_default() += 1;
    }
    let pe: f64 =
        fa.iter().map(|(l, ca)| (*ca as f64 / n as f64) * (fb.get(l).copied().unwrap_or(0) as f64 / n as f64)).sum();
    if (1.0 - pe).abs() < f64::EPSILON {
        return if po == 1.0 { 1.0 } else { 0.0 };
    }
    (po - pe) / (1.0 - pe)
}

/// Per word token: the type tag of the covering mention, or `O`.
pub fn token_labels(text: &str, mentions: &[GoldMention]) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.is_word())
        .map(|t| mentions.iter().find(|m| m.span.contains(&t.span)).map_or_else(|| "O".to_string(), |m| m.etype.tag()))
        .collect()
}

/// Strict span-and-type F1 with `a` as reference.
pub fn pairwise_counts(a: &[GoldMention], b: &[GoldMention]) -> Counts {
    let sa: Vec<_> = a.iter().map(|m| m.span).collect();
    let sb: Vec<_> = b.iter().map(|m| m.span).collect();
    let tp = match_spans(&sb, &sa, Setting::Strict).into_iter().filter(|&(i, j)| b[i].etype == a[j].etype).count();
    Counts::new(tp, b.len() - tp, a.len() - tp)
}

/// Agreement of two annotations of the same text.
pub fn agreement(text: &str, a: &[GoldMention], b: &[GoldMention]) -> Agreement {
    let la = token_labels(text, a);
    let lb = token_labels(text, b);
    Agreement { kappa: cohen_kappa(&la, &lb), pairwise_f1: pairwise_counts(a, b).f1(), tokens: la.len() }
}

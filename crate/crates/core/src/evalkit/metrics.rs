use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::gold::{GoldDocument, GoldMention, GoldSegment};
use crate::ontology::NIL_PREFIX;
use crate::segmenter::SegmentType;
use crate::span::Span;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Counts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Counts { tp, fp, fn_ }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    /// Segment tokens, untyped.
    T1,
    /// Segment tokens with segment type.
    T2,
    /// Entity recognition: spans.
    T3,
    /// Entity classification: spans and types.
    T4,
    /// Entity linking: spans, types and ids.
    T5,
    /// Slot filling.
    T6,
}

impl Task {
    pub const ALL: [Task; 6] = [Task::T1, Task::T2, Task::T3, Task::T4, Task::T5, Task::T6];

    /// Whether strict and relaxed settings differ for this task.
    pub fn has_settings(self) -> bool {
        !matches!(self, Task::T1 | Task::T2)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Task::T1 => "page segmentation",
            Task::T2 => "segment classification",
            Task::T3 => "entity recognition",
            Task::T4 => "entity classification",
            Task::T5 => "entity linking",
            Task::T6 => "slot filling",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown task {s:?}, expected T1..T6"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// Spans must be identical.
    Strict,
    /// Overlapping spans match.
    Relaxed,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Strict => "strict",
            Setting::Relaxed => "relaxed",
        })
    }
}

impl std::str::FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict" => Ok(Setting::Strict),
            "relaxed" => Ok(Setting::Relaxed),
            _ => Err(format!("unknown setting {s:?}, expected strict or relaxed")),
        }
    }
}

fn enclosing(segments: &[GoldSegment], token: Span) -> Option<SegmentType> {
    segments.iter().find(|s| s.span.contains(&token)).map(|s| s.seg_type)
}

/// Token-level counts over the word tokens of `text` (T1 untyped, T2 typed).
pub fn eval_segments(text: &str, pred: &[GoldSegment], gold: &[GoldSegment], typed: bool) -> Counts {
    let mut c = Counts::default();
    for token in tokenize(text).into_iter().filter(|t| t.is_word()) {
        match (enclosing(pred, token.span), enclosing(gold, token.span)) {
            (Some(p), Some(g)) if !typed || p == g => c.tp += 1,
            (Some(_), Some(_)) => {
                c.fp += 1;
                c.fn_ += 1;
            }
            (Some(_), None) => c.fp += 1,
            (None, Some(_)) => c.fn_ += 1,
            (None, None) => {}
        }
    }
    c
}

/// One-to-one greedy span matching. Candidate pairs are identical spans
/// (strict) or overlapping spans (relaxed), taken by descending overlap,
/// identical spans first, then earliest predicted and gold start.
/// Returns `(pred index, gold index)` pairs.
pub fn match_spans(pred: &[Span], gold: &[Span], setting: Setting) -> Vec<(usize, usize)> {
    let mut cands: Vec<(usize, bool, usize, usize, usize, usize)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gold.iter().enumerate() {
            let exact = p == g;
            let ok = match setting {
                Setting::Strict => exact,
                Setting::Relaxed => exact || p.overlaps(g),
            };
            if ok {
                cands.push((p.overlap(g), exact, p.start, g.start, i, j));
            }
        }
    }
    cands.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
            .then(a.4.cmp(&b.4))
            .then(a.5.cmp(&b.5))
    });
    let mut pred_used = vec![false; pred.len()];
    let mut gold_used = vec![false; gold.len()];
    let mut pairs = Vec::new();
    for (_, _, _, _, i, j) in cands {
        if !pred_used[i] && !gold_used[j] {
            pred_used[i] = true;
            gold_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort();
    pairs
}

pub fn is_nil(id: Option<&str>) -> bool {
    id.is_none_or(|id| id.starts_with(NIL_PREFIX))
}

/// Identity of a mention's entity for linking. Unnamed NILs get a class of their own.
fn nil_class(id: Option<&str>, index: usize) -> String {
    match id {
        Some(id) => id.to_string(),
        None => format!("\u{0}{index}"),
    }
}

#[derive(Default)]
struct ClassLinks<'a> {
    p2g: BTreeMap<&'a str, BTreeSet<&'a str>>,
    g2p: BTreeMap<&'a str, BTreeSet<&'a str>>,
}

impl<'a> ClassLinks<'a> {
    fn new(pairs: impl Iterator<Item = &'a (String, String)>) -> Self {
        let mut links = ClassLinks::default();
        for (pc, gc) in pairs {
            links.p2g.entry(pc).or_default().insert(gc);
            links.g2p.entry(gc).or_default().insert(pc);
        }
        links
    }

    fn aligned(&self, pc: &str, gc: &str) -> bool {
        self.p2g.get(pc).is_some_and(|g| g.len() == 1) && self.g2p.get(gc).is_some_and(|p| p.len() == 1)
    }
}

/// T3, T4 and T5 counts for one document under one setting.
pub fn eval_entities(pred: &[GoldMention], gold: &[GoldMention], setting: Setting) -> [Counts; 3] {
    let pred_spans: Vec<Span> = pred.iter().map(|m| m.span).collect();
    let gold_spans: Vec<Span> = gold.iter().map(|m| m.span).collect();
    let pairs = match_spans(&pred_spans, &gold_spans, setting);

    // NIL classes align when, among matched NIL pairs, each predicted class
    // meets exactly one gold class and vice versa. Identical-span pairs are
    // judged on identical-span evidence only, so overlap pairs added by the
    // relaxed setting cannot revoke a strict match.
    let classes: Vec<Option<(String, String)>> = pairs
        .iter()
        .map(|&(i, j)| {
            let (p, g) = (pred[i].entity_id.as_deref(), gold[j].entity_id.as_deref());
            (is_nil(p) && is_nil(g)).then(|| (nil_class(p, usize::MAX - i), nil_class(g, j)))
        })
        .collect();
    let exact: Vec<bool> = pairs.iter().map(|&(i, j)| pred[i].span == gold[j].span).collect();
    let exact_links = ClassLinks::new(classes.iter().zip(&exact).filter(|(_, e)| **e).filter_map(|(c, _)| c.as_ref()));
    let all_links = ClassLinks::new(classes.iter().flatten());

    let mut tp = [0usize; 3];
    for ((&(i, j), class), &is_exact) in pairs.iter().zip(&classes).zip(&exact) {
        tp[0] += 1;
        if pred[i].etype != gold[j].etype {
            continue;
        }
        tp[1] += 1;
        let linked = match class {
            Some((pc, gc)) if is_exact => exact_links.aligned(pc, gc),
            Some((pc, gc)) => all_links.aligned(pc, gc),
            None => pred[i].entity_id.is_some() && pred[i].entity_id == gold[j].entity_id,
        };
        if linked {
            tp[2] += 1;
        }
    }
    tp.map(|t| Counts::new(t, pred.len() - t, gold.len() - t))
}

/// T6 counts for one course. Strict compares `(slot, entity)` sets; relaxed
/// additionally accepts a NIL value whose provenance span overlaps a gold NIL
/// mention that fills the same slot.
pub fn eval_slots(pred: &GoldDocument, gold: &GoldDocument, setting: Setting) -> Counts {
    let pred_set: BTreeMap<(crate::slotfill::SlotName, &str), Option<Span>> =
        pred.slots.iter().map(|s| ((s.slot, s.entity_id.as_str()), s.span)).fold(BTreeMap::new(), |mut m, (k, v)| {
            let e = m.entry(k).or_insert(v);
            if e.is_none() {
                *e = v;
            }
            m
        });
    let gold_set: BTreeSet<(crate::slotfill::SlotName, &str)> =
        gold.slots.iter().map(|s| (s.slot, s.entity_id.as_str())).collect();

    let mut matched_gold: BTreeSet<(crate::slotfill::SlotName, &str)> = BTreeSet::new();
    let mut tp = 0;
    let mut unmatched = Vec::new();
    for (&key, &span) in &pred_set {
        if gold_set.contains(&key) {
            matched_gold.insert(key);
            tp += 1;
        } else {
            unmatched.push((key, span));
        }
    }
    if setting == Setting::Relaxed {
        for ((slot, entity), span) in unmatched {
            let Some(span) = span else { continue };
            if !is_nil(Some(entity)) {
                continue;
            }
            let hit = gold
                .mentions
                .iter()
                .filter(|m| m.span.overlaps(&span) && is_nil(m.entity_id.as_deref()))
                .filter_map(|m| m.entity_id.as_deref())
                .map(|g| (slot, g))
                .find(|key| gold_set.contains(key) && !matched_gold.contains(key));
            if let Some(key) = hit {
                matched_gold.insert(key);
                tp += 1;
            }
        }
    }
    Counts::new(tp, pred_set.len() - tp, gold_set.len() - tp)
}

/// Per-task counts for one document pair.
pub type TaskCounts = BTreeMap<(Task, Option<Setting>), Counts>;

/// Runs the requested tasks on one document. Task/setting pairs that do not
/// apply (settings for T1/T2) are collapsed.
pub fn eval_document(pred: &GoldDocument, gold: &GoldDocument, tasks: &[Task], settings: &[Setting]) -> TaskCounts {
    let mut out = TaskCounts::new();
    for &task in tasks {
        match task {
            Task::T1 | Task::T2 => {
                out.insert((task, None), eval_segments(&gold.text, &pred.segments, &gold.segments, task == Task::T2));
            }
            Task::T3 | Task::T4 | Task::T5 => {
                for &s in settings {
                    let idx = task as usize - Task::T3 as usize;
                    out.insert((task, Some(s)), eval_entities(&pred.mentions, &gold.mentions, s)[idx]);
                }
            }
            Task::T6 => {
                for &s in settings {
                    out.insert((task, Some(s)), eval_slots(pred, gold, s));
                }
            }
        }
    }
    out
}

pub fn merge_counts(into: &mut TaskCounts, other: &TaskCounts) {
    for (k, v) in other {
        *into.entry(*k).or_default() += *v;
    }
}

//! Benchmarking against gold annotations.
//!
//! Tasks: T1 segment tokens, T2 typed segment tokens, T3 entity spans, T4
//! spans and types, T5 spans, types and ids, T6 slot values. T3 to T6 are
//! scored in a strict (identical span) and a relaxed (overlapping span)
//! setting. Counts are micro-averaged over documents.

mod agreement;
mod align;
mod gold;
mod kfold;
mod metrics;
mod nif;
mod report;

use std::collections::BTreeMap;

use thiserror::Error;

pub use agreement::{agreement, cohen_kappa, pairwise_counts, token_labels, Agreement};
pub use align::TextAlignment;
pub use gold::{load_gold, parse_gold, to_json, GoldDocument, GoldMention, GoldSegment, GoldSlot, Partition};
pub use kfold::{kfold, Fold};
pub use metrics::{
    eval_document, eval_entities, eval_segments, eval_slots, is_nil, match_spans, merge_counts, Counts, Setting, Task,
    TaskCounts,
};
pub use nif::nif_to_gold;
pub use report::{EvalReport, FoldedReport, TaskScore};

use crate::par::Execution;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: document {doc_id}: {layer} span [{start},{end}) outside text of {len} characters")]
    Span { path: String, doc_id: String, layer: &'static str, start: usize, end: usize, len: usize },
    #[error("{path}: document {doc_id}: span [{start},{end}) reads {found:?}, annotation says {expected:?}")]
    Surface { path: String, doc_id: String, start: usize, end: usize, expected: String, found: String },
    #[error("{path}: duplicate document {doc_id}")]
    DuplicateDoc { path: String, doc_id: String },
    #[error("cannot split {n} documents into {k} folds")]
    Folds { n: usize, k: usize },
    #[error("NIF input: {0}")]
    Nif(String),
}

/// Moves every span of `pred` onto `gold_text` when the texts differ.
/// Annotations whose text does not survive are dropped.
pub fn align_prediction(pred: &GoldDocument, gold_text: &str) -> GoldDocument {
    if pred.text == gold_text {
        return pred.clone();
    }
    let a = TextAlignment::new(&pred.text, gold_text);
    let mut out = GoldDocument::new(&pred.doc_id, gold_text);
    out.partition = pred.partition;
    out.segments = pred
        .segments
        .iter()
        .filter_map(|s| Some(GoldSegment { span: a.map_span(s.span)?, seg_type: s.seg_type }))
        .collect();
    out.mentions = pred
        .mentions
        .iter()
        .filter_map(|m| {
            let span = a.map_span(m.span)?;
            Some(GoldMention { span, surface: span.slice(gold_text).to_string(), ..m.clone() })
        })
        .collect();
    out.slots =
        pred.slots.iter().map(|s| GoldSlot { span: s.span.and_then(|sp| a.map_span(sp)), ..s.clone() }).collect();
    out
}

/// Scores `pred` against `gold`, matching documents by id. Gold documents
/// without a prediction count as empty predictions; predictions without
/// gold are ignored.
pub fn evaluate(
    gold: &[GoldDocument],
    pred: &[GoldDocument],
    tasks: &[Task],
    settings: &[Setting],
    exec: Execution,
) -> EvalReport {
    let by_id: BTreeMap<&str, &GoldDocument> = pred.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    for id in by_id.keys().filter(|id| !gold.iter().any(|g| g.doc_id == **id)) {
        log::warn!("prediction for {id} has no gold document");
    }
    let per_doc = exec.map(gold, |g| {
        let p = match by_id.get(g.doc_id.as_str()) {
            Some(p) => align_prediction(p, &g.text),
            None => {
                log::warn!("no prediction for {}", g.doc_id);
                GoldDocument::new(&g.doc_id, &g.text)
            }
        };
        eval_document(&p, g, tasks, settings)
    });
    let mut total = TaskCounts::new();
    for c in &per_doc {
        merge_counts(&mut total, c);
    }
    // tasks requested on an empty corpus still show up
    for &t in tasks {
        if t.has_settings() {
            for &s in settings {
                total.entry((t, Some(s))).or_default();
            }
        } else {
            total.entry((t, None)).or_default();
        }
    }
    EvalReport::from_counts(gold.len(), &total)
}

/// k-fold protocol: one report per test fold plus the aggregate.
pub fn evaluate_folds(
    gold: &[GoldDocument],
    pred: &[GoldDocument],
    tasks: &[Task],
    settings: &[Setting],
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<FoldedReport, EvalError> {
    let ids: Vec<String> = gold.iter().map(|d| d.doc_id.clone()).collect();
    let folds = kfold(&ids, k, seed)?;
    let reports = folds
        .iter()
        .map(|f| {
            let docs: Vec<GoldDocument> = gold.iter().filter(|d| f.test.contains(&d.doc_id)).cloned().collect();
            evaluate(&docs, pred, tasks, settings, exec)
        })
        .collect();
    Ok(FoldedReport { k, seed, folds: reports, aggregate: evaluate(gold, pred, tasks, settings, exec) })
}

//! End-to-end extraction over a corpus.
//!
//! Per-document work (segmentation, linking, baseline recognition, slot
//! filling) runs data-parallel; NIL identifiers are handed out in one
//! sequential pass in course-id order so that numbering does not depend on
//! scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Failure;
use crate::evalkit::{GoldDocument, GoldMention, GoldSegment, GoldSlot, Partition};
use crate::kg::{count_statements, serialize, to_triples, Namespace, RdfFormat, StatementCounts, Triple};
use crate::linker::{Linker, LinkerWeights, Mention, Origin};
use crate::ontology::ElProfile;
use crate::par::Execution;
use crate::recognizer::{
    assign_nil_ids, import_external, recognize_baseline, CueLexicon, NilRegistry, RecognizerError,
};
use crate::segmenter::{segment_with_index, HtmlDocument, SegmentType, SegmentedDocument, TermIndex};
use crate::slotfill::{contextualize, fill_school, validate_course, ProviderRecord, SlotAssignment, Violation};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Recognizer(#[from] RecognizerError),
}

#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    pub weights: LinkerWeights,
    pub namespaces: Namespace,
    pub providers: BTreeMap<String, ProviderRecord>,
    pub cues: CueLexicon,
    pub execution: Execution,
    /// Contents of an externally labelled token file. When set, its
    /// mentions replace the baseline recognizer.
    pub external_tokens: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DocumentOutput {
    pub doc: SegmentedDocument,
    /// Linked and recognized mentions ordered by span.
    pub mentions: Vec<Mention>,
    pub assignments: Vec<SlotAssignment>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionCounts {
    pub linked: usize,
    pub recognized: usize,
    pub nil_entities: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub profile_hash: String,
    pub documents: usize,
    pub failures: Vec<Failure>,
    pub clusters: BTreeMap<SegmentType, usize>,
    pub mentions: MentionCounts,
    pub assignments: usize,
    pub statements: StatementCounts,
    pub violations: Vec<Violation>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExtractOutput {
    pub documents: Vec<DocumentOutput>,
    pub triples: BTreeSet<Triple>,
    pub nil_registry: NilRegistry,
    pub report: RunReport,
    namespaces: Namespace,
}

impl ExtractOutput {
    pub fn graph(&self, format: RdfFormat) -> String {
        serialize(&self.triples, format, &self.namespaces)
    }

    pub fn segmented(&self) -> Vec<SegmentedDocument> {
        self.documents.iter().map(|d| d.doc.clone()).collect()
    }

    /// Predictions in the gold schema, for scoring with the eval harness.
    pub fn predictions(&self) -> Vec<GoldDocument> {
        self.documents.iter().map(to_gold_schema).collect()
    }
}

/// One processed document expressed as a gold document: typed clusters as
/// segments, every mention, and every slot with its provenance span.
pub fn to_gold_schema(out: &DocumentOutput) -> GoldDocument {
    let mut g = GoldDocument::new(&out.doc.id, &out.doc.text);
    g.partition = Some(Partition::P2);
    g.segments = out
        .doc
        .clusters
        .iter()
        .filter(|c| c.seg_type != SegmentType::Unknown)
        .map(|c| GoldSegment { span: c.span, seg_type: c.seg_type })
        .collect();
    g.mentions = out
        .mentions
        .iter()
        .map(|m| GoldMention {
            span: m.span,
            surface: m.surface.clone(),
            etype: m.etype,
            entity_id: m.entity_id.clone(),
        })
        .collect();
    g.slots = out
        .assignments
        .iter()
        .map(|a| GoldSlot { slot: a.slot, entity_id: a.entity_id.clone(), span: a.provenance.as_ref().map(|p| p.span) })
        .collect();
    g
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Segmentation, linking and baseline recognition for one page.
pub fn analyze(
    doc: &HtmlDocument,
    profile: &ElProfile,
    index: &TermIndex,
    settings: &RunSettings,
) -> (SegmentedDocument, Vec<Mention>, Vec<Mention>) {
    let seg = segment_with_index(doc, &profile.title_lexicon, index);
    let linked = Linker::new(profile, settings.weights).link(&seg);
    let recognized = if settings.external_tokens.is_some() {
        vec![]
    } else {
        seg.clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| recognize_baseline(&seg.text, c, i, &linked, &settings.cues))
            .collect()
    };
    (seg, linked, recognized)
}

fn merge_mentions(linked: Vec<Mention>, recognized: Vec<Mention>) -> Vec<Mention> {
    // recognizer output never overrides a linked span
    let mut out = linked;
    for r in recognized {
        if !out.iter().any(|m| m.origin == Origin::Linked && m.span.overlaps(&r.span)) {
            out.push(r);
        }
    }
    out.sort_by(|a, b| a.span.cmp(&b.span).then(a.origin.cmp(&b.origin)));
    out
}

/// Runs every stage over `docs` (which must have distinct ids).
pub fn run(docs: &[HtmlDocument], profile: &ElProfile, settings: &RunSettings) -> Result<ExtractOutput, PipelineError> {
    let index = profile.title_lexicon.term_index();
    let exec = settings.execution;
    let mut failures = Vec::new();

    let mut sorted: Vec<&HtmlDocument> = docs.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let analyzed = exec.map(&sorted, |d| {
        catch_unwind(AssertUnwindSafe(|| analyze(d, profile, &index, settings))).map_err(panic_message)
    });
    let mut stage: Vec<(SegmentedDocument, Vec<Mention>, Vec<Mention>)> = Vec::new();
    for (doc, result) in sorted.iter().zip(analyzed) {
        match result {
            Ok(r) => stage.push(r),
            Err(message) => {
                log::error!("{}: {message}", doc.url);
                failures.push(Failure { document: doc.url.clone(), message });
            }
        }
    }

    if let Some(tokens) = &settings.external_tokens {
        let segmented: Vec<SegmentedDocument> = stage.iter().map(|s| s.0.clone()).collect();
        for (s, recognized) in stage.iter_mut().zip(import_external(tokens, &segmented)?) {
            s.2 = recognized;
        }
    }

    let mut registry = NilRegistry::new();
    let mut merged = Vec::with_capacity(stage.len());
    for (seg, linked, recognized) in stage {
        let mentions = assign_nil_ids(merge_mentions(linked, recognized), &mut registry, &profile.rules);
        merged.push((seg, mentions));
    }

    let filled = exec.map(&merged, |(seg, mentions)| {
        let provider = settings.providers.get(&seg.provider_id);
        let mut assignments = contextualize(&seg.id, &seg.clusters, mentions, &profile.schema);
        let mut violations = Vec::new();
        match fill_school(&seg.id, provider, mentions) {
            Ok(a) => assignments.push(a),
            Err(v) => violations.push(v),
        }
        violations.extend(validate_course(&seg.id, &assignments, &profile.schema));
        violations.sort();
        violations.dedup();
        let base = provider.and_then(|p| p.base_iri.as_deref());
        let triples = to_triples(&assignments, &settings.namespaces, |_| base);
        (assignments, violations, triples)
    });

    let mut documents = Vec::new();
    let mut triples = BTreeSet::new();
    for ((seg, mentions), (assignments, violations, doc_triples)) in merged.into_iter().zip(filled) {
        match doc_triples {
            Ok(t) => triples.extend(t),
            Err(e) => {
                log::error!("{}: {e}", seg.url);
                failures.push(Failure { document: seg.url.clone(), message: e.to_string() });
                continue;
            }
        }
        documents.push(DocumentOutput { doc: seg, mentions, assignments, violations });
    }

    let mut clusters: BTreeMap<SegmentType, usize> = SegmentType::ALL.iter().map(|t| (*t, 0)).collect();
    let mut counts = MentionCounts { nil_entities: registry.len(), ..Default::default() };
    for d in &documents {
        for c in &d.doc.clusters {
            *clusters.entry(c.seg_type).or_default() += 1;
        }
        for m in &d.mentions {
            match m.origin {
                Origin::Linked => counts.linked += 1,
                Origin::Recognized => counts.recognized += 1,
            }
        }
    }
    failures.sort();
    let report = RunReport {
        profile_hash: profile.version_hash.clone(),
        documents: documents.len(),
        failures,
        clusters,
        mentions: counts,
        assignments: documents.iter().map(|d| d.assignments.len()).sum(),
        statements: count_statements(&triples, &settings.namespaces),
        violations: documents.iter().flat_map(|d| d.violations.iter().cloned()).collect(),
    };
    Ok(ExtractOutput { documents, triples, nil_registry: registry, report, namespaces: settings.namespaces.clone() })
}

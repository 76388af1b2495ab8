//! Entity linking against a compiled [`ElProfile`].
//!
//! Matching is a greedy left-to-right longest match over normalized tokens.
//! Ambiguous forms are resolved by a co-occurrence score:
//!
//! ```text
//! score(e) = w1 * U_cluster(type(e)) + w2 * C_cluster(e) + w3 * (U_doc(type(e)) + C_doc(e))
//! ```
//!
//! where `U` counts unambiguous mentions of the same entity type and `C`
//! counts the distinct context terms of `e` present in the scope.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ontology::{AmbiguityClass, ElProfile, EntityType, ProfileEntity};
use crate::segmenter::SegmentedDocument;
use crate::span::Span;
use crate::text::{contains_sequence, normalize, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkerWeights {
    /// w1: unambiguous same-type mentions in the cluster.
    pub cluster_type: f64,
    /// w2: context terms present in the cluster.
    pub cluster_context: f64,
    /// w3: both counts at document scope.
    pub document: f64,
}

impl Default for LinkerWeights {
    fn default() -> Self {
        LinkerWeights { cluster_type: 1.0, cluster_context: 0.5, document: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Linked,
    Recognized,
}

/// A located entity occurrence. Spans are byte offsets into the document text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub span: Span,
    pub surface: String,
    pub etype: EntityType,
    /// Ontology id, NIL id, or `None` before NIL assignment.
    pub entity_id: Option<String>,
    pub origin: Origin,
    pub confidence: f64,
    pub cluster_ref: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub span: Span,
    pub key: String,
    pub entities: Vec<String>,
    pub ambiguity: AmbiguityClass,
}

/// Longest-match, non-overlapping scan of `text`. Spans are relative to `text`.
/// Context-only forms are returned too; they never become mentions.
pub fn match_candidates(text: &str, profile: &ElProfile) -> Vec<Candidate> {
    let tokens = tokenize(text);
    let norm: Vec<String> = tokens.iter().map(|t| normalize(t.text)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = profile.max_form_tokens.min(tokens.len() - i);
        let hit = (1..=longest).rev().find_map(|len| {
            let key = norm[i..i + len].join(" ");
            profile.lookup(&key).map(|entry| (len, key, entry))
        });
        match hit {
            Some((len, key, entry)) => {
                out.push(Candidate {
                    span: Span::new(tokens[i].span.start, tokens[i + len - 1].span.end),
                    key,
                    entities: entry.entities.clone(),
                    ambiguity: entry.ambiguity,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

/// Disambiguation evidence collected over one scope (a cluster or a whole document).
#[derive(Debug, Clone, Default)]
pub struct Evidence {
    unambiguous_types: BTreeMap<EntityType, usize>,
    segments: Vec<Vec<String>>,
}

impl Evidence {
    pub fn new<'a>(
        candidates: &[Candidate],
        profile: &ElProfile,
        segment_texts: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut ev = Evidence::default();
        for c in candidates.iter().filter(|c| c.ambiguity == AmbiguityClass::Unambiguous) {
            if let Some(e) = profile.entity(&c.entities[0]) {
                *ev.unambiguous_types.entry(e.etype).or_default() += 1;
            }
        }
        ev.segments =
            segment_texts.into_iter().map(|t| tokenize(t).iter().map(|tok| normalize(tok.text)).collect()).collect();
        ev
    }

    pub fn merge(&mut self, other: &Evidence) {
        for (t, n) in &other.unambiguous_types {
            *self.unambiguous_types.entry(*t).or_default() += n;
        }
        self.segments.extend(other.segments.iter().cloned());
    }

    pub fn same_type(&self, etype: EntityType) -> usize {
        self.unambiguous_types.get(&etype).copied().unwrap_or(0)
    }

    /// Distinct context terms of `entity` occurring in this scope.
    pub fn context_hits(&self, entity: &ProfileEntity) -> usize {
        entity.context.iter().filter(|term| self.segments.iter().any(|seg| contains_sequence(seg, term))).count()
    }
}

/// Resolves candidates of one cluster. `text` is the string the candidate
/// spans index into.
pub fn disambiguate(
    candidates: &[Candidate],
    cluster: &Evidence,
    document: &Evidence,
    profile: &ElProfile,
    weights: &LinkerWeights,
    text: &str,
    cluster_ref: usize,
) -> Vec<Mention> {
    let mut mentions = Vec::new();
    for cand in candidates {
        let resolved = match cand.ambiguity {
            AmbiguityClass::ContextOnly => continue,
            AmbiguityClass::Unambiguous => Some((cand.entities[0].clone(), 1.0)),
            AmbiguityClass::Ambiguous => {
                let mut ids = cand.entities.clone();
                ids.sort();
                let scored: Vec<(String, f64)> = ids
                    .into_iter()
                    .filter_map(|id| {
                        let e = profile.entity(&id)?;
                        let score = weights.cluster_type * cluster.same_type(e.etype) as f64
                            + weights.cluster_context * cluster.context_hits(e) as f64
                            + weights.document * (document.same_type(e.etype) + document.context_hits(e)) as f64;
                        Some((id, score))
                    })
                    .collect();
                let total: f64 = scored.iter().map(|(_, s)| s).sum();
                // only a strictly higher score replaces, so ties keep the smaller id
                let best = scored.iter().fold(None::<&(String, f64)>, |best, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                });
                best.map(
                    |(id, score)| {
                        if *score > 0.0 {
                            (id.clone(), score / total)
                        } else {
                            (scored[0].0.clone(), 0.5)
                        }
                    },
                )
            }
        };
        let Some((id, confidence)) = resolved else { continue };
        let Some(entity) = profile.entity(&id) else { continue };
        mentions.push(Mention {
            span: cand.span,
            surface: cand.span.slice(text).to_string(),
            etype: entity.etype,
            entity_id: Some(id),
            origin: Origin::Linked,
            confidence,
            cluster_ref,
        });
    }
    mentions
}

/// Links a segmented document with a fixed profile and weights.
#[derive(Debug, Clone, Copy)]
pub struct Linker<'a> {
    pub profile: &'a ElProfile,
    pub weights: LinkerWeights,
}

impl<'a> Linker<'a> {
    pub fn new(profile: &'a ElProfile, weights: LinkerWeights) -> Self {
        Linker { profile, weights }
    }

    /// Candidates per cluster, in document coordinates. Matching never
    /// crosses a segment boundary.
    pub fn candidates(&self, doc: &SegmentedDocument) -> Vec<Vec<Candidate>> {
        doc.clusters
            .iter()
            .map(|cluster| {
                cluster
                    .segments()
                    .flat_map(|seg| {
                        match_candidates(&seg.text, self.profile).into_iter().map(move |mut c| {
                            c.span = c.span.shift(seg.span.start);
                            c
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn link(&self, doc: &SegmentedDocument) -> Vec<Mention> {
        let per_cluster = self.candidates(doc);
        let evidence: Vec<Evidence> = doc
            .clusters
            .iter()
            .zip(&per_cluster)
            .map(|(cluster, cands)| Evidence::new(cands, self.profile, cluster.segments().map(|s| s.text.as_str())))
            .collect();
        let mut document = Evidence::default();
        for ev in &evidence {
            document.merge(ev);
        }
        per_cluster
            .iter()
            .zip(&evidence)
            .enumerate()
            .flat_map(|(idx, (cands, ev))| {
                disambiguate(cands, ev, &document, self.profile, &self.weights, &doc.text, idx)
            })
            .collect()
    }
}

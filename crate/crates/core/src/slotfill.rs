//! Slot filling: routes each resolved mention into a course slot according to
//! the type of the segment it was found in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linker::{Mention, Origin};
use crate::ontology::{EntityType, SlotSchema};
use crate::segmenter::{SegmentCluster, SegmentType};
use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotName {
    School,
    TargetGroup,
    Prerequisite,
    LearningObjective,
    CourseContent,
    Certificates,
    /// Values whose slot could not be resolved.
    Related,
}

impl SlotName {
    pub const ALL: [SlotName; 7] = [
        SlotName::School,
        SlotName::TargetGroup,
        SlotName::Prerequisite,
        SlotName::LearningObjective,
        SlotName::CourseContent,
        SlotName::Certificates,
        SlotName::Related,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SlotName::School => "school",
            SlotName::TargetGroup => "target_group",
            SlotName::Prerequisite => "prerequisite",
            SlotName::LearningObjective => "learning_objective",
            SlotName::CourseContent => "course_content",
            SlotName::Certificates => "certificates",
            SlotName::Related => "related",
        }
    }

    /// The slot a segment type feeds, if any.
    pub fn for_segment(seg_type: SegmentType) -> Option<SlotName> {
        match seg_type {
            SegmentType::TargetGroup => Some(SlotName::TargetGroup),
            SegmentType::Prerequisite => Some(SlotName::Prerequisite),
            SegmentType::LearningObjective => Some(SlotName::LearningObjective),
            SegmentType::CourseContent => Some(SlotName::CourseContent),
            SegmentType::CertificatesDegree => Some(SlotName::Certificates),
            SegmentType::Unknown => None,
        }
    }
}

impl fmt::Display for SlotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a slot value came from. Absent for provider metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub cluster_ref: usize,
    pub span: Span,
    pub origin: Origin,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotAssignment {
    pub course_id: String,
    pub slot: SlotName,
    pub entity_id: String,
    pub etype: EntityType,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    BelowMin { min: u32, found: usize },
    AboveMax { max: u32, found: usize },
    NoSchool,
}

/// Advisory cardinality problem; the offending assignments are kept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub course_id: String,
    pub slot: SlotName,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

/// Provider metadata used for the school slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderRecord {
    pub school: Option<String>,
    /// Base IRI for course subjects, e.g. `https://sae.edu`.
    pub base_iri: Option<String>,
}

/// The slot a mention of `etype` found in a `seg_type` segment lands in.
pub fn route(seg_type: SegmentType, etype: EntityType, schema: &SlotSchema) -> SlotName {
    match SlotName::for_segment(seg_type) {
        Some(slot) if schema.allows(slot, etype) => slot,
        _ => SlotName::Related,
    }
}

fn better(a: &Provenance, b: &Provenance) -> bool {
    (a.confidence, std::cmp::Reverse(a.span)) > (b.confidence, std::cmp::Reverse(b.span))
}

/// Keeps one assignment per (course, slot, entity): the most confident, then
/// the earliest. Output is sorted by (course, slot, entity).
pub fn dedup(assignments: Vec<SlotAssignment>) -> Vec<SlotAssignment> {
    let mut best: BTreeMap<(String, SlotName, String), SlotAssignment> = BTreeMap::new();
    for a in assignments {
        let key = (a.course_id.clone(), a.slot, a.entity_id.clone());
        match best.get_mut(&key) {
            Some(cur) => {
                let replace = match (&a.provenance, &cur.provenance) {
                    (_, None) => false,
                    (None, Some(_)) => true,
                    (Some(new), Some(old)) => better(new, old),
                };
                if replace {
                    *cur = a;
                }
            }
            None => {
                best.insert(key, a);
            }
        }
    }
    best.into_values().collect()
}

/// Assigns every mention of `clusters` to a slot. Mentions must carry an
/// entity id (NIL ids included); `cluster_ref` indexes into `clusters`.
pub fn contextualize(
    course_id: &str,
    clusters: &[SegmentCluster],
    mentions: &[Mention],
    schema: &SlotSchema,
) -> Vec<SlotAssignment> {
    let assignments = mentions
        .iter()
        .filter_map(|m| {
            let Some(entity_id) = m.entity_id.clone() else {
                log::warn!("{course_id}: unresolved mention {:?} skipped", m.surface);
                return None;
            };
            let seg_type = clusters.get(m.cluster_ref).map_or(SegmentType::Unknown, |c| c.seg_type);
            Some(SlotAssignment {
                course_id: course_id.to_string(),
                slot: route(seg_type, m.etype, schema),
                entity_id,
                etype: m.etype,
                provenance: Some(Provenance {
                    cluster_ref: m.cluster_ref,
                    span: m.span,
                    origin: m.origin,
                    confidence: m.confidence,
                }),
            })
        })
        .collect();
    dedup(assignments)
}

/// One school per course: provider metadata first, else the most confident
/// and then earliest School mention.
pub fn fill_school(
    course_id: &str,
    provider: Option<&ProviderRecord>,
    mentions: &[Mention],
) -> Result<SlotAssignment, Violation> {
    if let Some(school) = provider.and_then(|p| p.school.clone()) {
        return Ok(SlotAssignment {
            course_id: course_id.to_string(),
            slot: SlotName::School,
            entity_id: school,
            etype: EntityType::School,
            provenance: None,
        });
    }
    mentions
        .iter()
        .filter(|m| m.etype == EntityType::School && m.entity_id.is_some())
        .max_by(|a, b| a.confidence.total_cmp(&b.confidence).then_with(|| b.span.cmp(&a.span)))
        .map(|m| SlotAssignment {
            course_id: course_id.to_string(),
            slot: SlotName::School,
            entity_id: m.entity_id.clone().unwrap_or_default(),
            etype: EntityType::School,
            provenance: Some(Provenance {
                cluster_ref: m.cluster_ref,
                span: m.span,
                origin: m.origin,
                confidence: m.confidence,
            }),
        })
        .ok_or_else(|| Violation {
            course_id: course_id.to_string(),
            slot: SlotName::School,
            kind: ViolationKind::NoSchool,
        })
}

/// Per course and slot, counts distinct entities against the schema bounds.
/// `Related` is exempt.
pub fn validate_cardinality(assignments: &[SlotAssignment], schema: &SlotSchema) -> Vec<Violation> {
    let courses: BTreeSet<&str> = assignments.iter().map(|a| a.course_id.as_str()).collect();
    courses.into_iter().flat_map(|c| validate_course(c, assignments, schema)).collect()
}

/// Like [`validate_cardinality`] for a single course, which may have no
/// assignments at all.
pub fn validate_course(course_id: &str, assignments: &[SlotAssignment], schema: &SlotSchema) -> Vec<Violation> {
    let mut distinct: BTreeMap<SlotName, BTreeSet<&str>> = BTreeMap::new();
    for a in assignments.iter().filter(|a| a.course_id == course_id) {
        distinct.entry(a.slot).or_default().insert(&a.entity_id);
    }
    let mut out = Vec::new();
    for (&slot, rule) in &schema.rows {
        let found = distinct.get(&slot).map_or(0, BTreeSet::len);
        if found < rule.min_card as usize {
            out.push(Violation {
                course_id: course_id.to_string(),
                slot,
                kind: ViolationKind::BelowMin { min: rule.min_card, found },
            });
        }
        if let Some(max) = rule.max_card {
            if found > max as usize {
                out.push(Violation {
                    course_id: course_id.to_string(),
                    slot,
                    kind: ViolationKind::AboveMax { max, found },
                });
            }
        }
    }
    out
}

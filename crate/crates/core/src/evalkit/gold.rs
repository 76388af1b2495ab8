//! Gold annotation files.
//!
//! A gold document is a JSON object; offsets count Unicode scalar values
//! (characters) into `text`, half-open:
//!
//! ```json
//! {
//!   "doc_id": "c01",
//!   "partition": "P2",
//!   "text": "Voraussetzungen\nProgrammierung",
//!   "segments": [{"start": 0, "end": 30, "type": "prerequisite"}],
//!   "mentions": [{"start": 16, "end": 30, "surface": "Programmierung",
//!                 "type": "topic", "entity": "edu:prog"}],
//!   "slots": [{"slot": "prerequisite", "entity": "edu:prog"}]
//! }
//! ```
//!
//! `entity` is `null` for an unnamed NIL entity; ids starting with `nil:`
//! group NIL mentions that denote the same thing. A slot may carry the
//! `start`/`end` of the mention it was filled from. A file holds a single
//! document, an array of them, or `{"documents": [...]}`; a directory is read
//! file by file in name order.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ontology::EntityType;
use crate::segmenter::SegmentType;
use crate::slotfill::SlotName;
use crate::span::{OffsetMap, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Partition {
    /// Segment annotations only.
    P1,
    /// Segments, mentions and slots.
    P2,
}

impl std::str::FromStr for Partition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(Partition::P1),
            "P2" => Ok(Partition::P2),
            _ => Err(format!("unknown partition {s:?}, expected P1 or P2")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSegment {
    pub span: Span,
    pub seg_type: SegmentType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldMention {
    pub span: Span,
    pub surface: String,
    pub etype: EntityType,
    /// `None` for an unnamed NIL entity.
    pub entity_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSlot {
    pub slot: SlotName,
    pub entity_id: String,
    /// Span of the mention the value was taken from, when known.
    pub span: Option<Span>,
}

/// One annotated document. Spans are byte offsets into `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldDocument {
    pub doc_id: String,
    pub text: String,
    pub partition: Option<Partition>,
    pub segments: Vec<GoldSegment>,
    pub mentions: Vec<GoldMention>,
    pub slots: Vec<GoldSlot>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentRepr {
    start: usize,
    end: usize,
    #[serde(rename = "type")]
    seg_type: SegmentType,
}

#[derive(Debug, Serialize, Deserialize)]
struct MentionRepr {
    start: usize,
    end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    surface: Option<String>,
    #[serde(rename = "type")]
    etype: EntityType,
    #[serde(default)]
    entity: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SlotRepr {
    slot: SlotName,
    entity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRepr {
    doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<Partition>,
    text: String,
    #[serde(default)]
    segments: Vec<SegmentRepr>,
    #[serde(default)]
    mentions: Vec<MentionRepr>,
    #[serde(default)]
    slots: Vec<SlotRepr>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FileRepr {
    Wrapped { documents: Vec<DocumentRepr> },
    Many(Vec<DocumentRepr>),
    One(Box<DocumentRepr>),
}

#[derive(Serialize)]
struct WrappedOut<'a> {
    documents: &'a [DocumentRepr],
}

impl GoldDocument {
    pub fn new(doc_id: &str, text: &str) -> Self {
        GoldDocument {
            doc_id: doc_id.into(),
            text: text.into(),
            partition: None,
            segments: vec![],
            mentions: vec![],
            slots: vec![],
        }
    }

    fn from_repr(repr: DocumentRepr, path: &Path) -> Result<Self, EvalError> {
        let map = OffsetMap::new(&repr.text);
        let doc_id = repr.doc_id;
        let bytes = |layer: &'static str, start: usize, end: usize| {
            map.span_to_bytes(start, end).ok_or_else(|| EvalError::Span {
                path: path.display().to_string(),
                doc_id: doc_id.clone(),
                layer,
                start,
                end,
                len: map.char_len(),
            })
        };
        let mut segments = Vec::with_capacity(repr.segments.len());
        for s in repr.segments {
            segments.push(GoldSegment { span: bytes("segment", s.start, s.end)?, seg_type: s.seg_type });
        }
        let mut mentions = Vec::with_capacity(repr.mentions.len());
        for m in repr.mentions {
            let span = bytes("mention", m.start, m.end)?;
            let found = span.slice(&repr.text);
            if let Some(surface) = &m.surface {
                if surface != found {
                    return Err(EvalError::Surface {
                        path: path.display().to_string(),
                        doc_id: doc_id.clone(),
                        start: m.start,
                        end: m.end,
                        expected: surface.clone(),
                        found: found.to_string(),
                    });
                }
            }
            mentions.push(GoldMention { span, surface: found.to_string(), etype: m.etype, entity_id: m.entity });
        }
        let mut slots = Vec::with_capacity(repr.slots.len());
        for s in repr.slots {
            let span = match (s.start, s.end) {
                (Some(a), Some(b)) => Some(bytes("slot", a, b)?),
                (None, None) => None,
                _ => {
                    return Err(EvalError::Parse {
                        path: path.display().to_string(),
                        message: format!("{doc_id}: slot span needs both start and end"),
                    })
                }
            };
            slots.push(GoldSlot { slot: s.slot, entity_id: s.entity, span });
        }
        Ok(GoldDocument { doc_id, text: repr.text, partition: repr.partition, segments, mentions, slots })
    }

    fn to_repr(&self) -> DocumentRepr {
        let map = OffsetMap::new(&self.text);
        let chars = |s: Span| map.span_to_chars(s).expect("gold spans lie on char boundaries");
        DocumentRepr {
            doc_id: self.doc_id.clone(),
            partition: self.partition,
            text: self.text.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| {
                    let (start, end) = chars(s.span);
                    SegmentRepr { start, end, seg_type: s.seg_type }
                })
                .collect(),
            mentions: self
                .mentions
                .iter()
                .map(|m| {
                    let (start, end) = chars(m.span);
                    MentionRepr {
                        start,
                        end,
                        surface: Some(m.surface.clone()),
                        etype: m.etype,
                        entity: m.entity_id.clone(),
                    }
                })
                .collect(),
            slots: self
                .slots
                .iter()
                .map(|s| {
                    let span = s.span.map(chars);
                    SlotRepr {
                        slot: s.slot,
                        entity: s.entity_id.clone(),
                        start: span.map(|p| p.0),
                        end: span.map(|p| p.1),
                    }
                })
                .collect(),
        }
    }

    /// Keeps only the layers annotated in `partition`.
    pub fn restrict(mut self, partition: Partition) -> Self {
        if partition == Partition::P1 {
            self.mentions.clear();
            self.slots.clear();
        }
        self
    }
}

/// Serializes documents as `{"documents": [...]}` with character offsets.
pub fn to_json(docs: &[GoldDocument]) -> String {
    let reprs: Vec<DocumentRepr> = docs.iter().map(GoldDocument::to_repr).collect();
    let mut out = serde_json::to_string_pretty(&WrappedOut { documents: &reprs }).expect("gold serializes");
    out.push('\n');
    out
}

/// Parses the JSON content of one file. `path` only labels diagnostics.
pub fn parse_gold(json: &str, path: &Path) -> Result<Vec<GoldDocument>, EvalError> {
    let repr: FileRepr = serde_json::from_str(json)
        .map_err(|e| EvalError::Parse { path: path.display().to_string(), message: e.to_string() })?;
    let docs = match repr {
        FileRepr::Wrapped { documents } => documents,
        FileRepr::Many(docs) => docs,
        FileRepr::One(doc) => vec![*doc],
    };
    docs.into_iter().map(|d| GoldDocument::from_repr(d, path)).collect()
}

fn gold_files(path: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |source| EvalError::Io { path: path.display().to_string(), source };
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).map_err(io)? {
        let p = entry.map_err(io)?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == "json") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads gold documents from a file or directory.
///
/// With a `partition`, documents labelled with a different partition are
/// skipped and layers outside the partition are dropped.
pub fn load_gold(path: &Path, partition: Option<Partition>) -> Result<Vec<GoldDocument>, EvalError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for file in gold_files(path)? {
        let json = std::fs::read_to_string(&file)
            .map_err(|source| EvalError::Io { path: file.display().to_string(), source })?;
        for doc in parse_gold(&json, &file)? {
            if let (Some(want), Some(have)) = (partition, doc.partition) {
                if want != have {
                    log::debug!("{}: skipping {} from partition {have:?}", file.display(), doc.doc_id);
                    continue;
                }
            }
            if !seen.insert(doc.doc_id.clone()) {
                return Err(EvalError::DuplicateDoc { path: file.display().to_string(), doc_id: doc.doc_id });
            }
            out.push(match partition {
                Some(p) => doc.restrict(p),
                None => doc,
            });
        }
    }
    Ok(out)
}

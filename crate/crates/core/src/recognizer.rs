//! Fallback recognition of entities missing from the ontology.
//!
//! The token file exchanged with external token classifiers has one
//! `token<TAB>tag` line per token, one sentence per text segment separated
//! by blank lines, and `#` comment lines. The header is `#coursekg-tokens v1`
//! and `#doc<TAB><id>` marks the start of each document. Tags are BIO over
//! the entity types in upper case (`B-SKILL`, `I-SKILL`, `O`).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linker::{Linker, Mention, Origin};
use crate::ontology::{EntityType, VariationRules, NIL_PREFIX};
use crate::segmenter::{SegmentCluster, SegmentType, SegmentedDocument, TextSegment};
use crate::span::Span;
use crate::text::{normalize, tokenize};

pub const TOKEN_FILE_HEADER: &str = "#coursekg-tokens\tv1";
const DOC_MARKER: &str = "#doc\t";
const BASELINE_CONFIDENCE: f64 = 0.3;
const BASELINE_MAX_TOKENS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioTag {
    O,
    B(EntityType),
    I(EntityType),
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::B(t) => write!(f, "B-{}", t.tag()),
            BioTag::I(t) => write!(f, "I-{}", t.tag()),
        }
    }
}

impl FromStr for BioTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioTag::O);
        }
        match s.split_once('-') {
            Some(("B", t)) => Ok(BioTag::B(t.parse()?)),
            Some(("I", t)) => Ok(BioTag::I(t.parse()?)),
            _ => Err(format!("bad BIO tag {s:?}")),
        }
    }
}

/// Tokens of one segment with their BIO labels. Spans are in document coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenLabelSequence {
    pub tokens: Vec<(String, Span)>,
    pub labels: Vec<BioTag>,
}

fn segment_tokens(seg: &TextSegment) -> Vec<(String, Span)> {
    tokenize(&seg.text).into_iter().map(|t| (t.text.to_string(), t.span.shift(seg.span.start))).collect()
}

impl TokenLabelSequence {
    /// Projects mentions onto the tokens of `seg`. Mentions outside the segment are ignored.
    pub fn project(seg: &TextSegment, mentions: &[Mention]) -> Self {
        let tokens = segment_tokens(seg);
        let mut labels = vec![BioTag::O; tokens.len()];
        for m in mentions.iter().filter(|m| seg.span.contains(&m.span)) {
            let mut first = true;
            for (label, (_, span)) in labels.iter_mut().zip(&tokens) {
                if m.span.contains(span) {
                    *label = if first { BioTag::B(m.etype) } else { BioTag::I(m.etype) };
                    first = false;
                }
            }
        }
        TokenLabelSequence { tokens, labels }
    }

    /// Decodes labels into mentions. A stray `I-X` opens a new mention.
    pub fn decode(&self, doc_text: &str, cluster_ref: usize) -> Vec<Mention> {
        let mut out = Vec::new();
        let mut open: Option<(EntityType, Span)> = None;
        let close = |open: &mut Option<(EntityType, Span)>, out: &mut Vec<Mention>| {
            if let Some((etype, span)) = open.take() {
                out.push(Mention {
                    span,
                    surface: span.slice(doc_text).to_string(),
                    etype,
                    entity_id: None,
                    origin: Origin::Recognized,
                    confidence: 1.0,
                    cluster_ref,
                });
            }
        };
        for ((token, span), label) in self.tokens.iter().zip(&self.labels) {
            match *label {
                BioTag::O => close(&mut open, &mut out),
                BioTag::B(t) => {
                    close(&mut open, &mut out);
                    open = Some((t, *span));
                }
                BioTag::I(t) => match open.as_mut() {
                    Some((cur, s)) if *cur == t => s.end = span.end,
                    _ => {
                        log::warn!("stray I-{} at {token:?} {span}; treated as B", t.tag());
                        close(&mut open, &mut out);
                        open = Some((t, *span));
                    }
                },
            }
        }
        close(&mut open, &mut out);
        out
    }
}

#[derive(Debug, Error)]
pub enum RecognizerError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("token file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(
        "token file misaligned at token position {position} (line {line}): expected {expected:?}, found {found:?}"
    )]
    Misaligned { position: usize, line: usize, expected: String, found: String },
}

fn clusters_with_segments(doc: &SegmentedDocument) -> impl Iterator<Item = (usize, &TextSegment)> {
    doc.clusters.iter().enumerate().flat_map(|(i, c)| c.segments().map(move |s| (i, s)))
}

/// Writes a token file for `corpus` with `mentions[d]` projected onto document `d`.
pub fn write_token_file<W: Write>(
    out: &mut W,
    corpus: &[SegmentedDocument],
    mentions: &[Vec<Mention>],
) -> io::Result<()> {
    writeln!(out, "{TOKEN_FILE_HEADER}")?;
    for (doc, doc_mentions) in corpus.iter().zip(mentions) {
        writeln!(out, "{DOC_MARKER}{}", doc.id)?;
        for (_, seg) in clusters_with_segments(doc) {
            let seq = TokenLabelSequence::project(seg, doc_mentions);
            for ((token, _), label) in seq.tokens.iter().zip(&seq.labels) {
                writeln!(out, "{token}\t{label}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Runs linking over every document and writes the silver-annotated token file.
/// Returns the number of projected mentions.
pub fn export_silver<W: Write>(out: &mut W, corpus: &[SegmentedDocument], linker: &Linker<'_>) -> io::Result<usize> {
    let mentions: Vec<Vec<Mention>> = corpus.iter().map(|d| linker.link(d)).collect();
    write_token_file(out, corpus, &mentions)?;
    Ok(mentions.iter().map(Vec::len).sum())
}

struct FileToken<'a> {
    line: usize,
    text: &'a str,
    tag: BioTag,
}

enum FileItem<'a> {
    Doc { line: usize, id: &'a str },
    Token(FileToken<'a>),
}

fn parse_token_file(source: &str) -> Result<Vec<FileItem<'_>>, RecognizerError> {
    let mut items = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if let Some(id) = line.strip_prefix(DOC_MARKER) {
            items.push(FileItem::Doc { line: idx + 1, id });
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (text, tag) = line
            .rsplit_once('\t')
            .ok_or_else(|| RecognizerError::Format { line: idx + 1, message: "expected `token<TAB>tag`".into() })?;
        let tag = tag.parse().map_err(|message| RecognizerError::Format { line: idx + 1, message })?;
        items.push(FileItem::Token(FileToken { line: idx + 1, text, tag }));
    }
    Ok(items)
}

/// Reads a token file produced by an external model and turns its tags into
/// `Recognized` mentions, one list per document of `corpus`.
///
/// The file must reproduce the corpus tokenization exactly; `#doc` markers,
/// when present, must name the documents in corpus order.
pub fn import_external(source: &str, corpus: &[SegmentedDocument]) -> Result<Vec<Vec<Mention>>, RecognizerError> {
    let items = parse_token_file(source)?;
    let mut cursor = items.iter().peekable();
    let mut position = 0usize;
    let mut last_line = 0usize;
    let mut result = Vec::with_capacity(corpus.len());
    for doc in corpus {
        if let Some(FileItem::Doc { line, id }) = cursor.peek() {
            if *id != doc.id {
                return Err(RecognizerError::Misaligned {
                    position,
                    line: *line,
                    expected: format!("document {}", doc.id),
                    found: format!("document {id}"),
                });
            }
            last_line = *line;
            cursor.next();
        }
        let mut mentions = Vec::new();
        for (cluster_ref, seg) in clusters_with_segments(doc) {
            let tokens = segment_tokens(seg);
            let mut labels = Vec::with_capacity(tokens.len());
            for (expected, _) in &tokens {
                let found = match cursor.next() {
                    Some(FileItem::Token(t)) => t,
                    Some(FileItem::Doc { line, id }) => {
                        return Err(RecognizerError::Misaligned {
                            position,
                            line: *line,
                            expected: expected.clone(),
                            found: format!("start of document {id}"),
                        })
                    }
                    None => {
                        return Err(RecognizerError::Misaligned {
                            position,
                            line: last_line + 1,
                            expected: expected.clone(),
                            found: "end of file".into(),
                        })
                    }
                };
                if found.text != expected {
                    return Err(RecognizerError::Misaligned {
                        position,
                        line: found.line,
                        expected: expected.clone(),
                        found: found.text.to_string(),
                    });
                }
                last_line = found.line;
                labels.push(found.tag);
                position += 1;
            }
            mentions.extend(TokenLabelSequence { tokens, labels }.decode(&doc.text, cluster_ref));
        }
        result.push(mentions);
    }
    if let Some(extra) = cursor.next() {
        let (line, found) = match extra {
            FileItem::Doc { line, id } => (*line, format!("document {id}")),
            FileItem::Token(t) => (t.line, t.text.to_string()),
        };
        return Err(RecognizerError::Misaligned { position, line, expected: "end of file".into(), found });
    }
    Ok(result)
}

/// Segment type → default entity type, plus words that never form a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueLexicon {
    pub segment_types: BTreeMap<SegmentType, EntityType>,
    #[serde(default)]
    pub stopwords: Stopwords,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stopwords {
    pub words: Vec<String>,
}

static DEFAULT_CUES: &str = include_str!("../data/cues.toml");

impl Default for CueLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_CUES).expect("shipped cue lexicon parses")
    }
}

impl CueLexicon {
    pub fn parse(source: &str) -> Result<Self, toml::de::Error> {
        let mut cues: CueLexicon = toml::from_str(source)?;
        let mut words: Vec<String> = cues.stopwords.words.iter().map(|w| normalize(w)).collect();
        words.sort();
        words.dedup();
        cues.stopwords.words = words;
        Ok(cues)
    }

    fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.words.binary_search(&normalize(word)).is_ok()
    }
}

/// Capitalized word runs (1 to 4 tokens) in the cluster body that no linked
/// mention touches, typed by the cluster's segment type.
pub fn recognize_baseline(
    doc_text: &str,
    cluster: &SegmentCluster,
    cluster_ref: usize,
    linked: &[Mention],
    cues: &CueLexicon,
) -> Vec<Mention> {
    let Some(&etype) = cues.segment_types.get(&cluster.seg_type) else {
        return vec![];
    };
    let mut out = Vec::new();
    let mut emit = |run: &mut Vec<Span>| {
        for chunk in run.chunks(BASELINE_MAX_TOKENS) {
            let span = Span::new(chunk[0].start, chunk[chunk.len() - 1].end);
            out.push(Mention {
                span,
                surface: span.slice(doc_text).to_string(),
                etype,
                entity_id: None,
                origin: Origin::Recognized,
                confidence: BASELINE_CONFIDENCE,
                cluster_ref,
            });
        }
        run.clear();
    };
    for seg in &cluster.body {
        let mut run: Vec<Span> = Vec::new();
        for token in tokenize(&seg.text) {
            let span = token.span.shift(seg.span.start);
            let candidate = token.is_word()
                && token.is_capitalized()
                && !token.text.chars().all(|c| c.is_numeric())
                && !cues.is_stopword(token.text)
                && !linked.iter().any(|m| m.span.overlaps(&span));
            if candidate {
                run.push(span);
            } else if !run.is_empty() {
                emit(&mut run);
            }
        }
        if !run.is_empty() {
            emit(&mut run);
        }
    }
    out
}

/// Corpus-wide temporary identifiers for unknown entities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NilRegistry {
    ids: BTreeMap<String, String>,
    counter: u64,
}

impl NilRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// The id for a lemma key, allocated on first use.
    pub fn id_for(&mut self, key: &str) -> String {
        if let Some(id) = self.ids.get(key) {
            return id.clone();
        }
        self.counter += 1;
        let id = format!("{NIL_PREFIX}{}", self.counter);
        self.ids.insert(key.to_string(), id.clone());
        id
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.ids.get(key).map(String::as_str)
    }

    /// Folds `other` into `self`. Returns how `other`'s ids map onto ours.
    pub fn merge(&mut self, other: &NilRegistry) -> BTreeMap<String, String> {
        let mut by_id: Vec<(&String, &String)> = other.ids.iter().map(|(k, id)| (id, k)).collect();
        // allocate in other's issue order so merges replay its numbering
        by_id.sort_by_key(|(id, _)| id.trim_start_matches(NIL_PREFIX).parse::<u64>().unwrap_or(u64::MAX));
        by_id.into_iter().map(|(old, key)| (old.clone(), self.id_for(key))).collect()
    }
}

/// Gives every unresolved recognized mention the NIL id of its lemma key.
/// Linked mentions and mentions that already carry an id pass through.
pub fn assign_nil_ids(mut mentions: Vec<Mention>, registry: &mut NilRegistry, rules: &VariationRules) -> Vec<Mention> {
    for m in mentions.iter_mut() {
        if m.origin == Origin::Recognized && m.entity_id.is_none() {
            m.entity_id = Some(registry.id_for(&rules.lemma_key(&m.surface)));
        }
    }
    mentions
}

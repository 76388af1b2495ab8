//! Page segmentation.
//!
//! Three steps: split the rendered page text at separator elements, mark
//! titles (headings plus short lexicon hits), then merge every title with the
//! segments that follow it and type the resulting cluster from its title.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ego_tree::iter::Edge;
use scraper::{Html, Node};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::Span;
use crate::text::{contains_sequence, normalized_words, word_count};

/// Elements that delimit a text segment.
pub const SEPARATORS: [&str; 15] =
    ["div", "p", "li", "td", "th", "dt", "dd", "summary", "legend", "h1", "h2", "h3", "h4", "h5", "h6"];

/// Block-level elements outside the separator set. They still break lines.
const BLOCKS: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "body",
    "caption",
    "center",
    "details",
    "dialog",
    "dl",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "header",
    "hgroup",
    "hr",
    "html",
    "main",
    "menu",
    "nav",
    "ol",
    "pre",
    "section",
    "table",
    "tbody",
    "tfoot",
    "thead",
    "tr",
    "ul",
];

const SKIPPED: &[&str] =
    &["script", "style", "noscript", "template", "head", "svg", "math", "iframe", "object", "canvas"];

const TITLE_MAX_WORDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtmlDocument {
    pub id: String,
    pub provider_id: String,
    pub url: String,
    pub html: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSegment {
    pub text: String,
    /// Byte span into the document's normalized text.
    pub span: Span,
    pub order: usize,
    pub is_title: bool,
    pub source_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentType {
    TargetGroup,
    Prerequisite,
    LearningObjective,
    CourseContent,
    CertificatesDegree,
    Unknown,
}

impl SegmentType {
    /// The five content classes, in tie-break order.
    pub const CLASSES: [SegmentType; 5] = [
        SegmentType::TargetGroup,
        SegmentType::Prerequisite,
        SegmentType::LearningObjective,
        SegmentType::CourseContent,
        SegmentType::CertificatesDegree,
    ];

    pub const ALL: [SegmentType; 6] = [
        SegmentType::TargetGroup,
        SegmentType::Prerequisite,
        SegmentType::LearningObjective,
        SegmentType::CourseContent,
        SegmentType::CertificatesDegree,
        SegmentType::Unknown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentType::TargetGroup => "target_group",
            SegmentType::Prerequisite => "prerequisite",
            SegmentType::LearningObjective => "learning_objective",
            SegmentType::CourseContent => "course_content",
            SegmentType::CertificatesDegree => "certificates_degree",
            SegmentType::Unknown => "unknown",
        }
    }
}

impl fmt::Display for SegmentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegmentType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s.trim().chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();
        Ok(match folded.as_str() {
            "targetgroup" => SegmentType::TargetGroup,
            "prerequisite" | "prerequisites" => SegmentType::Prerequisite,
            "learningobjective" | "learningobjectives" => SegmentType::LearningObjective,
            "coursecontent" | "content" => SegmentType::CourseContent,
            "certificatesdegree" | "certificates" | "certificate" | "degree" => SegmentType::CertificatesDegree,
            "unknown" | "none" | "title" => SegmentType::Unknown,
            _ => return Err(format!("unknown segment type {s:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentCluster {
    pub title: Option<TextSegment>,
    pub body: Vec<TextSegment>,
    pub seg_type: SegmentType,
    pub span: Span,
}

impl SegmentCluster {
    /// Title first, then body, in document order.
    pub fn segments(&self) -> impl Iterator<Item = &TextSegment> {
        self.title.iter().chain(self.body.iter())
    }
}

/// A page after segmentation and cluster classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedDocument {
    pub id: String,
    pub provider_id: String,
    pub url: String,
    pub text: String,
    pub clusters: Vec<SegmentCluster>,
}

#[derive(Debug, Error)]
#[error("title lexicon line {line}: {message}")]
pub struct LexiconError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TitleTerm {
    pub tokens: Vec<String>,
    pub seg_type: SegmentType,
}

/// Title terms and the segment type each term sequence signals.
///
/// File format: one term sequence, a tab, and a segment type per line. The
/// type `unknown` marks a term that makes a title without typing the cluster.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TitleLexicon {
    pub terms: Vec<TitleTerm>,
}

static DEFAULT_TITLE_TERMS: &str = include_str!("../data/title_terms.tsv");

impl TitleLexicon {
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_TITLE_TERMS).expect("shipped title lexicon parses")
    }

    pub fn parse(source: &str) -> Result<Self, LexiconError> {
        let mut terms = Vec::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError { line: idx + 1, message };
            let (term, kind) = line.split_once('\t').ok_or_else(|| err("expected `term<TAB>segment type`".into()))?;
            let tokens = normalized_words(term);
            if tokens.is_empty() {
                return Err(err(format!("term {term:?} has no words")));
            }
            let seg_type = kind.parse().map_err(err)?;
            terms.push(TitleTerm { tokens, seg_type });
        }
        terms.sort();
        terms.dedup();
        Ok(TitleLexicon { terms })
    }

    pub fn extend(&mut self, other: &TitleLexicon) {
        self.terms.extend(other.terms.iter().cloned());
        self.terms.sort();
        self.terms.dedup();
    }

    /// Every term sequence as a normalized key.
    pub fn title_terms(&self) -> std::collections::BTreeSet<String> {
        self.terms.iter().map(|t| t.tokens.join(" ")).collect()
    }

    pub fn term_index(&self) -> TermIndex {
        let mut map: BTreeMap<Vec<String>, SegmentType> = BTreeMap::new();
        for term in &self.terms {
            if term.seg_type == SegmentType::Unknown {
                continue;
            }
            map.entry(term.tokens.clone()).and_modify(|t| *t = (*t).min(term.seg_type)).or_insert(term.seg_type);
        }
        TermIndex { map }
    }
}

/// Normalized term sequence → segment type, for cluster classification.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermIndex {
    map: BTreeMap<Vec<String>, SegmentType>,
}

impl TermIndex {
    pub fn from_pairs<I: IntoIterator<Item = (Vec<String>, SegmentType)>>(pairs: I) -> Self {
        TermIndex { map: pairs.into_iter().collect() }
    }

    /// Longest contained term sequence wins; equal lengths break by enum order.
    pub fn classify(&self, title: &str) -> SegmentType {
        let words = normalized_words(title);
        let mut best: Option<(usize, SegmentType)> = None;
        for (seq, &ty) in &self.map {
            if !contains_sequence(&words, seq) {
                continue;
            }
            let better = match best {
                None => true,
                Some((len, cur)) => seq.len() > len || (seq.len() == len && ty < cur),
            };
            if better {
                best = Some((seq.len(), ty));
            }
        }
        best.map_or(SegmentType::Unknown, |(_, ty)| ty)
    }
}

/// Decodes raw HTML bytes: BOM first, then UTF-8, then a `charset` meta
/// declaration, finally windows-1252.
pub fn decode_html(bytes: &[u8]) -> String {
    if let Some((encoding, bom_len)) = encoding_rs::Encoding::for_bom(bytes) {
        let (text, _) = encoding.decode_without_bom_handling(&bytes[bom_len..]);
        return text.into_owned();
    }
    if let Ok(text) = std::str::from_utf8(bytes) {
        return text.to_owned();
    }
    let head = &bytes[..bytes.len().min(2048)];
    let encoding = sniff_meta_charset(head)
        .and_then(|label| encoding_rs::Encoding::for_label(label.as_bytes()))
        .unwrap_or(encoding_rs::WINDOWS_1252);
    let (text, _, _) = encoding.decode(bytes);
    text.into_owned()
}

fn sniff_meta_charset(head: &[u8]) -> Option<String> {
    let lower: String = head.iter().map(|&b| (b as char).to_ascii_lowercase()).collect();
    let at = lower.find("charset=")? + "charset=".len();
    let rest = lower[at..].trim_start_matches(['"', '\'', ' ']);
    let label: String =
        rest.chars().take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | ':' | '.')).collect();
    (!label.is_empty()).then_some(label)
}

fn is_heading(tag: &str) -> bool {
    matches!(tag, "h1" | "h2" | "h3" | "h4" | "h5" | "h6")
}

fn is_boundary(tag: &str) -> bool {
    SEPARATORS.contains(&tag) || BLOCKS.contains(&tag)
}

#[derive(Default)]
struct Walker {
    text: String,
    segments: Vec<TextSegment>,
    buf: String,
    pending_space: bool,
    open: Vec<String>,
}

impl Walker {
    fn push_text(&mut self, chunk: &str) {
        for c in chunk.chars() {
            if c.is_whitespace() {
                self.pending_space = !self.buf.is_empty();
            } else if !c.is_control() {
                if self.pending_space {
                    self.buf.push(' ');
                    self.pending_space = false;
                }
                self.buf.push(c);
            }
        }
    }

    fn source_tag(&self) -> String {
        let innermost = |pred: &dyn Fn(&str) -> bool| self.open.iter().rev().find(|t| pred(t.as_str())).cloned();
        innermost(&|t| SEPARATORS.contains(&t))
            .or_else(|| innermost(&|t| BLOCKS.contains(&t) && t != "html"))
            .unwrap_or_else(|| "body".to_string())
    }

    fn flush(&mut self) {
        self.pending_space = false;
        if self.buf.is_empty() {
            return;
        }
        let segment_text = std::mem::take(&mut self.buf);
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        let start = self.text.len();
        self.text.push_str(&segment_text);
        self.segments.push(TextSegment {
            span: Span::new(start, self.text.len()),
            order: self.segments.len(),
            is_title: self.open.iter().any(|t| is_heading(t)),
            source_tag: self.source_tag(),
            text: segment_text,
        });
    }
}

/// Renders `html` to block-structured text and splits it into segments.
///
/// Each segment is one line of the returned text. Only the text runs between
/// separator or block boundaries become segments, so a wrapper `div` around
/// paragraphs contributes nothing of its own.
pub fn extract_text(html: &str) -> (String, Vec<TextSegment>) {
    let dom = Html::parse_document(html);
    let mut walker = Walker::default();
    let mut skip_depth = 0usize;
    for edge in dom.tree.root().traverse() {
        match edge {
            Edge::Open(node) => match node.value() {
                Node::Element(el) => {
                    let name = el.name();
                    if skip_depth > 0 || SKIPPED.contains(&name) {
                        skip_depth += 1;
                        continue;
                    }
                    if is_boundary(name) {
                        walker.flush();
                    } else if name == "br" {
                        walker.pending_space = !walker.buf.is_empty();
                    }
                    walker.open.push(name.to_string());
                }
                Node::Text(t) if skip_depth == 0 => walker.push_text(t),
                _ => {}
            },
            Edge::Close(node) => {
                if let Node::Element(el) = node.value() {
                    if skip_depth > 0 {
                        skip_depth -= 1;
                        continue;
                    }
                    if is_boundary(el.name()) {
                        walker.flush();
                    }
                    walker.open.pop();
                }
            }
        }
    }
    walker.flush();
    (walker.text, walker.segments)
}

/// Marks short segments containing a title term as titles. Headings stay titles.
pub fn detect_titles(mut segments: Vec<TextSegment>, lexicon: &TitleLexicon) -> Vec<TextSegment> {
    for seg in &mut segments {
        if seg.is_title || word_count(&seg.text) > TITLE_MAX_WORDS {
            continue;
        }
        let words = normalized_words(&seg.text);
        seg.is_title = lexicon.terms.iter().any(|term| contains_sequence(&words, &term.tokens));
    }
    segments
}

/// Each title opens a cluster that runs up to the next title. Segments before
/// the first title form one untitled cluster.
pub fn build_clusters(segments: Vec<TextSegment>) -> Vec<SegmentCluster> {
    let mut clusters: Vec<SegmentCluster> = Vec::new();
    for seg in segments {
        match clusters.last_mut() {
            Some(cluster) if !seg.is_title => {
                cluster.span = cluster.span.union(&seg.span);
                cluster.body.push(seg);
            }
            _ => {
                let span = seg.span;
                let (title, body) = if seg.is_title { (Some(seg), vec![]) } else { (None, vec![seg]) };
                clusters.push(SegmentCluster { title, body, seg_type: SegmentType::Unknown, span });
            }
        }
    }
    clusters
}

pub fn classify_cluster(cluster: &SegmentCluster, index: &TermIndex) -> SegmentType {
    cluster.title.as_ref().map_or(SegmentType::Unknown, |t| index.classify(&t.text))
}

/// Runs all segmentation steps on one page.
pub fn segment_document(doc: &HtmlDocument, lexicon: &TitleLexicon) -> SegmentedDocument {
    segment_with_index(doc, lexicon, &lexicon.term_index())
}

pub fn segment_with_index(doc: &HtmlDocument, lexicon: &TitleLexicon, index: &TermIndex) -> SegmentedDocument {
    let (text, segments) = extract_text(&doc.html);
    let mut clusters = build_clusters(detect_titles(segments, lexicon));
    for cluster in &mut clusters {
        cluster.seg_type = classify_cluster(cluster, index);
    }
    SegmentedDocument { id: doc.id.clone(), provider_id: doc.provider_id.clone(), url: doc.url.clone(), text, clusters }
}

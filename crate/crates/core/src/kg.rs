//! Knowledge graph output: IRI minting, triple formation and serialization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::NIL_PREFIX;
use crate::slotfill::{SlotAssignment, SlotName};

pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Iri(String);

impl Iri {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Accepts absolute IRIs without characters N-Triples cannot carry.
    pub fn parse(s: &str) -> Result<Iri, KgError> {
        let scheme_ok = s.split_once(':').is_some_and(|(scheme, _)| {
            !scheme.is_empty()
                && scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && scheme.chars().all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))
        });
        if !scheme_ok || s.chars().any(|c| c.is_whitespace() || c.is_control() || "<>\"{}|^`\\".contains(c)) {
            return Err(KgError::BadIri(s.to_string()));
        }
        Ok(Iri(s.to_string()))
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Iri,
}

#[derive(Debug, Error)]
pub enum KgError {
    #[error("not an absolute IRI: {0:?}")]
    BadIri(String),
    #[error("RDF syntax error: {0}")]
    Syntax(String),
    #[error("unsupported RDF term {0}; only IRIs are expected")]
    UnsupportedTerm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RdfFormat {
    NTriples,
    Turtle,
}

/// Namespace configuration for one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Namespace {
    /// Base of the education vocabulary (`edu:`).
    pub edu: String,
    /// Base for temporary NIL entities (`nil:`).
    pub nil: String,
    /// Base for course subjects when the provider has no base IRI.
    pub course: String,
    /// Extra `prefix → base` pairs used to expand entity ids.
    pub prefixes: BTreeMap<String, String>,
}

impl Default for Namespace {
    fn default() -> Self {
        Namespace {
            edu: "https://example.org/edu#".into(),
            nil: "https://example.org/nil#".into(),
            course: "https://example.org/course#".into(),
            prefixes: BTreeMap::new(),
        }
    }
}

fn escape_local(local: &str) -> String {
    let mut out = String::with_capacity(local.len());
    for c in local.chars() {
        if c.is_whitespace() || c.is_control() || "<>\"{}|^`\\%#".contains(c) {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        } else {
            out.push(c);
        }
    }
    out
}

impl Namespace {
    /// All `prefix → base` pairs, built-ins included, sorted by prefix.
    pub fn prefix_table(&self) -> BTreeMap<String, String> {
        let mut table = self.prefixes.clone();
        table.insert("edu".into(), self.edu.clone());
        table.insert("nil".into(), self.nil.clone());
        table.insert("skos".into(), SKOS.into());
        table
    }

    /// Expands `prefix:local` ids; absolute IRIs pass; bare ids go under `edu:`.
    pub fn entity_iri(&self, id: &str) -> Result<Iri, KgError> {
        if let Some(local) = id.strip_prefix(NIL_PREFIX) {
            return Iri::parse(&format!("{}{}", self.nil, escape_local(local)));
        }
        if let Some((prefix, local)) = id.split_once(':') {
            if let Some(base) = self.prefix_table().get(prefix) {
                return Iri::parse(&format!("{base}{}", escape_local(local)));
            }
            if local.starts_with("//") {
                return Iri::parse(id);
            }
        }
        Iri::parse(&format!("{}{}", self.edu, escape_local(id)))
    }

    /// `<base>#<id>` when the provider has a base IRI, else under `course`.
    pub fn course_iri(&self, course_id: &str, provider_base: Option<&str>) -> Result<Iri, KgError> {
        match provider_base {
            Some(base) => Iri::parse(&format!("{}#{}", base.trim_end_matches('#'), escape_local(course_id))),
            None => Iri::parse(&format!("{}{}", self.course, escape_local(course_id))),
        }
    }

    pub fn predicate(&self, slot: SlotName) -> Iri {
        let iri = match slot {
            SlotName::Related => format!("{SKOS}related"),
            SlotName::School => format!("{}school", self.edu),
            SlotName::TargetGroup => format!("{}target_group", self.edu),
            SlotName::Prerequisite => format!("{}prerequisite", self.edu),
            SlotName::LearningObjective => format!("{}learning_objective", self.edu),
            SlotName::CourseContent => format!("{}course_content", self.edu),
            SlotName::Certificates => format!("{}certificate", self.edu),
        };
        Iri(iri)
    }

    /// Short name of a predicate IRI (`prerequisite`, `related`, ...), if it is one of ours.
    pub fn predicate_name(&self, predicate: &Iri) -> Option<&'static str> {
        SlotName::ALL.into_iter().find(|s| &self.predicate(*s) == predicate).map(|s| match s {
            SlotName::Certificates => "certificate",
            other => other.as_str(),
        })
    }
}

/// Forms the duplicate-free triple set. `course_base` maps a course id to its
/// provider base IRI, when one is known.
pub fn to_triples<'a, F>(
    assignments: &[SlotAssignment],
    ns: &Namespace,
    course_base: F,
) -> Result<BTreeSet<Triple>, KgError>
where
    F: Fn(&str) -> Option<&'a str>,
{
    assignments
        .iter()
        .map(|a| {
            Ok(Triple {
                subject: ns.course_iri(&a.course_id, course_base(&a.course_id))?,
                predicate: ns.predicate(a.slot),
                object: ns.entity_iri(&a.entity_id)?,
            })
        })
        .collect()
}

fn is_pn_local(local: &str) -> bool {
    let mut chars = local.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        && local.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn compact(iri: &Iri, prefixes: &BTreeMap<String, String>) -> String {
    // longest matching base wins, so nested namespaces compact correctly
    prefixes
        .iter()
        .filter_map(|(p, base)| iri.as_str().strip_prefix(base.as_str()).map(|local| (base.len(), p, local)))
        .filter(|(_, _, local)| is_pn_local(local))
        .max_by_key(|(len, _, _)| *len)
        .map(|(_, p, local)| format!("{p}:{local}"))
        .unwrap_or_else(|| iri.to_string())
}

/// Deterministic text form. N-Triples is sorted by (subject, predicate,
/// object); Turtle groups by subject with comma-separated object lists.
pub fn serialize(triples: &BTreeSet<Triple>, format: RdfFormat, ns: &Namespace) -> String {
    let mut out = String::new();
    match format {
        RdfFormat::NTriples => {
            for t in triples {
                let _ = writeln!(out, "{} {} {} .", t.subject, t.predicate, t.object);
            }
        }
        RdfFormat::Turtle => {
            let prefixes = ns.prefix_table();
            for (p, base) in &prefixes {
                let _ = writeln!(out, "@prefix {p}: <{base}> .");
            }
            let mut grouped: BTreeMap<&Iri, BTreeMap<&Iri, Vec<&Iri>>> = BTreeMap::new();
            for t in triples {
                grouped.entry(&t.subject).or_default().entry(&t.predicate).or_default().push(&t.object);
            }
            for (subject, preds) in grouped {
                out.push('\n');
                let subject = compact(subject, &prefixes);
                let indent = " ".repeat(subject.chars().count() + 1);
                let n = preds.len();
                for (i, (pred, objects)) in preds.into_iter().enumerate() {
                    let lead = if i == 0 { format!("{subject} ") } else { indent.clone() };
                    let objs: Vec<String> = objects.iter().map(|o| compact(o, &prefixes)).collect();
                    let end = if i + 1 == n { " ." } else { " ;" };
                    let _ = writeln!(out, "{lead}{} {}{end}", compact(pred, &prefixes), objs.join(", "));
                }
            }
        }
    }
    out
}

/// Parses N-Triples or Turtle whose terms are all IRIs.
pub fn parse(text: &str, format: RdfFormat) -> Result<BTreeSet<Triple>, KgError> {
    let convert = |t: oxrdf::Triple| -> Result<Triple, KgError> {
        let subject = match t.subject {
            oxrdf::NamedOrBlankNode::NamedNode(n) => Iri::parse(n.as_str())?,
            other => return Err(KgError::UnsupportedTerm(other.to_string())),
        };
        let object = match t.object {
            oxrdf::Term::NamedNode(n) => Iri::parse(n.as_str())?,
            other => return Err(KgError::UnsupportedTerm(other.to_string())),
        };
        Ok(Triple { subject, predicate: Iri::parse(t.predicate.as_str())?, object })
    };
    let syntax = |e: &dyn fmt::Display| KgError::Syntax(e.to_string());
    match format {
        RdfFormat::NTriples => oxttl::NTriplesParser::new()
            .for_slice(text.as_bytes())
            .map(|r| r.map_err(|e| syntax(&e)).and_then(convert))
            .collect(),
        RdfFormat::Turtle => oxttl::TurtleParser::new()
            .for_slice(text.as_bytes())
            .map(|r| r.map_err(|e| syntax(&e)).and_then(convert))
            .collect(),
    }
}

/// Unique-statement counts, overall and per predicate short name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementCounts {
    pub total: usize,
    pub by_predicate: BTreeMap<String, usize>,
}

/// Every slot predicate appears in the result, zero or not. Predicates
/// outside the vocabulary are counted under their full IRI.
pub fn count_statements(triples: &BTreeSet<Triple>, ns: &Namespace) -> StatementCounts {
    let mut by_predicate: BTreeMap<String, usize> = SlotName::ALL
        .iter()
        .filter_map(|s| ns.predicate_name(&ns.predicate(*s)))
        .map(|name| (name.to_string(), 0))
        .collect();
    for t in triples {
        let name =
            ns.predicate_name(&t.predicate).map(str::to_string).unwrap_or_else(|| t.predicate.as_str().to_string());
        *by_predicate.entry(name).or_default() += 1;
    }
    StatementCounts { total: triples.len(), by_predicate }
}

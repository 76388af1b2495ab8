//! Converter from NIF 2.0 Turtle to gold documents.
//!
//! Each `nif:Context` with `nif:isString` becomes a document. Annotations
//! point to their context with `nif:referenceContext` and carry
//! `nif:beginIndex`/`nif:endIndex` (character offsets) plus
//! `itsrdf:taClassRef`, whose local name is read as an entity type or, failing
//! that, a segment type. `itsrdf:taIdentRef` gives the entity; its absence
//! marks an unnamed NIL. IRIs under a configured namespace are written as
//! `prefix:local`.

use std::collections::BTreeMap;

use oxrdf::{NamedOrBlankNode, Term};

use super::gold::{GoldDocument, GoldMention, GoldSegment, Partition};
use super::EvalError;
use crate::kg::Namespace;
use crate::ontology::EntityType;
use crate::segmenter::SegmentType;
use crate::span::OffsetMap;

const NIF: &str = "http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#";
const ITSRDF: &str = "http://www.w3.org/2005/11/its/rdf#";

type Properties = BTreeMap<String, Vec<Term>>;

fn local_name(iri: &str) -> &str {
    iri.rsplit(['#', '/']).next().unwrap_or(iri)
}

fn doc_id(context: &str) -> String {
    let base = context.split("#char=").next().unwrap_or(context);
    let name = local_name(base.trim_end_matches('/'));
    if name.is_empty() {
        base.to_string()
    } else {
        name.to_string()
    }
}

fn first<'a>(props: &'a Properties, pred: &str) -> Option<&'a Term> {
    props.get(pred).and_then(|v| v.first())
}

fn literal(props: &Properties, pred: &str) -> Option<String> {
    match first(props, pred)? {
        Term::Literal(l) => Some(l.value().to_string()),
        _ => None,
    }
}

fn iri(props: &Properties, pred: &str) -> Option<String> {
    match first(props, pred)? {
        Term::NamedNode(n) => Some(n.as_str().to_string()),
        _ => None,
    }
}

fn compact(iri: &str, ns: &Namespace) -> String {
    ns.prefix_table()
        .iter()
        .filter_map(|(p, base)| iri.strip_prefix(base.as_str()).map(|local| (base.len(), p, local)))
        .max_by_key(|(len, _, _)| *len)
        .map(|(_, p, local)| format!("{p}:{local}"))
        .unwrap_or_else(|| iri.to_string())
}

pub fn nif_to_gold(turtle: &str, ns: &Namespace, partition: Option<Partition>) -> Result<Vec<GoldDocument>, EvalError> {
    let mut subjects: BTreeMap<String, Properties> = BTreeMap::new();
    for triple in oxttl::TurtleParser::new().for_slice(turtle.as_bytes()) {
        let triple = triple.map_err(|e| EvalError::Nif(e.to_string()))?;
        let subject = match triple.subject {
            NamedOrBlankNode::NamedNode(n) => n.into_string(),
            NamedOrBlankNode::BlankNode(b) => format!("_:{}", b.as_str()),
        };
        subjects.entry(subject).or_default().entry(triple.predicate.into_string()).or_default().push(triple.object);
    }

    let mut docs: BTreeMap<String, GoldDocument> = BTreeMap::new();
    for (subject, props) in &subjects {
        if let Some(text) = literal(props, &format!("{NIF}isString")) {
            let mut doc = GoldDocument::new(&doc_id(subject), &text);
            doc.partition = partition;
            docs.insert(subject.clone(), doc);
        }
    }
    for (subject, props) in &subjects {
        let Some(context) = iri(props, &format!("{NIF}referenceContext")) else { continue };
        let doc =
            docs.get_mut(&context).ok_or_else(|| EvalError::Nif(format!("{subject}: unknown context {context}")))?;
        let index = |name: &str| {
            literal(props, &format!("{NIF}{name}"))
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| EvalError::Nif(format!("{subject}: missing or bad nif:{name}")))
        };
        let (start, end) = (index("beginIndex")?, index("endIndex")?);
        let map = OffsetMap::new(&doc.text);
        let span = map.span_to_bytes(start, end).ok_or_else(|| EvalError::Span {
            path: "<nif>".into(),
            doc_id: doc.doc_id.clone(),
            layer: "annotation",
            start,
            end,
            len: map.char_len(),
        })?;
        let Some(class) = iri(props, &format!("{ITSRDF}taClassRef")) else {
            log::debug!("{subject}: no taClassRef, skipped");
            continue;
        };
        let class = local_name(&class);
        if let Ok(etype) = class.parse::<EntityType>() {
            doc.mentions.push(GoldMention {
                span,
                surface: span.slice(&doc.text).to_string(),
                etype,
                entity_id: iri(props, &format!("{ITSRDF}taIdentRef")).map(|e| compact(&e, ns)),
            });
        } else if let Ok(seg_type) = class.parse::<SegmentType>() {
            doc.segments.push(GoldSegment { span, seg_type });
        } else {
            return Err(EvalError::Nif(format!("{subject}: unrecognized class {class:?}")));
        }
    }
    let mut out: Vec<GoldDocument> = docs.into_values().collect();
    for d in &mut out {
        d.segments.sort_by_key(|s| s.span);
        d.mentions.sort_by_key(|m| m.span);
    }
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(out
        .into_iter()
        .map(|d| match partition {
            Some(p) => d.restrict(p),
            None => d,
        })
        .collect())
}

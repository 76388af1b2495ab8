//! Course knowledge extraction.
//!
//! Turns education-provider web pages into slot-filled course records and an
//! RDF graph. The stages run in this order:
//!
//! - [`segmenter`]: HTML to text segments, titles, typed clusters
//! - [`ontology`]: entity store, surface-form expansion, the compiled EL profile
//! - [`linker`]: longest-match lookup plus co-occurrence disambiguation
//! - [`recognizer`]: fallback recognition, silver export, NIL identifiers
//! - [`slotfill`]: routing of mentions into course slots
//! - [`kg`]: IRI minting, triples, N-Triples/Turtle output
//!
//! [`evalkit`] benchmarks each stage against gold annotations and
//! [`pipeline`] wires the stages together over a corpus.

pub mod config;
pub mod corpus;
pub mod evalkit;
pub mod kg;
pub mod linker;
pub mod ontology;
pub mod par;
pub mod pipeline;
pub mod recognizer;
pub mod segmenter;
pub mod slotfill;
pub mod span;
pub mod text;

pub use linker::{Linker, LinkerWeights, Mention, Origin};
pub use ontology::{ElProfile, EntityRecord, EntityType, OntologyStore};
pub use par::Execution;
pub use segmenter::{HtmlDocument, SegmentCluster, SegmentType, SegmentedDocument, TextSegment};
pub use slotfill::{SlotAssignment, SlotName};
pub use span::Span;

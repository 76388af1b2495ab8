//! The skill and education knowledge base.
//!
//! Entities come from line-oriented TSV or JSON files; the store expands
//! their surface forms and compiles them into an [`ElProfile`], the only
//! artifact the linker needs at extraction time.
//!
//! Entity TSV columns: `id`, `type`, `canonical name`, `|`-separated surface
//! forms, `|`-separated context terms. The last two are optional. Files are
//! dispatched by name: `*.titles.tsv` is a title lexicon, `*.rules.tsv`
//! replaces the variation rules, `*.json` holds entities in JSON form, and
//! anything else is read as entity TSV.

mod profile;
mod schema;
mod variants;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::segmenter::TitleLexicon;
use crate::slotfill::SlotName;

pub use profile::{build_profile, ElProfile, FormEntry, ProfileEntity, ProfileError, PROFILE_FORMAT};
pub use schema::{SlotRule, SlotSchema};
pub use variants::{expand_forms, RuleKind, SuffixRule, VariationRules};

/// Prefix reserved for temporary identifiers of unknown entities.
pub const NIL_PREFIX: &str = "nil:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityType {
    Skill,
    Occupation,
    Topic,
    Position,
    School,
    Industry,
    Education,
    Degree,
}

impl EntityType {
    pub const ALL: [EntityType; 8] = [
        EntityType::Skill,
        EntityType::Occupation,
        EntityType::Topic,
        EntityType::Position,
        EntityType::School,
        EntityType::Industry,
        EntityType::Education,
        EntityType::Degree,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EntityType::Skill => "skill",
            EntityType::Occupation => "occupation",
            EntityType::Topic => "topic",
            EntityType::Position => "position",
            EntityType::School => "school",
            EntityType::Industry => "industry",
            EntityType::Education => "education",
            EntityType::Degree => "degree",
        }
    }

    /// Upper-case label used in BIO tags (`B-SKILL`).
    pub fn tag(&self) -> String {
        self.as_str().to_ascii_uppercase()
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        EntityType::ALL.into_iter().find(|t| t.as_str() == lower).ok_or_else(|| format!("unknown entity type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub id: String,
    pub etype: EntityType,
    pub canonical_name: String,
    /// Always contains `canonical_name` first.
    pub surface_forms: Vec<String>,
    pub context_terms: Vec<String>,
}

impl EntityRecord {
    pub fn new(id: &str, etype: EntityType, canonical: &str) -> Self {
        EntityRecord {
            id: id.to_string(),
            etype,
            canonical_name: canonical.to_string(),
            surface_forms: vec![canonical.to_string()],
            context_terms: vec![],
        }
    }

    pub fn with_surfaces(mut self, forms: &[&str]) -> Self {
        for f in forms {
            if !f.trim().is_empty() && !self.surface_forms.iter().any(|s| s == f) {
                self.surface_forms.push(f.to_string());
            }
        }
        self
    }

    pub fn with_context(mut self, terms: &[&str]) -> Self {
        self.context_terms.extend(terms.iter().filter(|t| !t.trim().is_empty()).map(|t| t.to_string()));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguityClass {
    Unambiguous,
    Ambiguous,
    ContextOnly,
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", location(path, *line))]
    Schema { path: PathBuf, line: Option<usize>, message: String },
    #[error("{}: duplicate entity id {id:?} (first defined at {first})", location(path, Some(*line)))]
    DuplicateId { id: String, path: PathBuf, line: usize, first: String },
    #[error("ontology store is empty")]
    Empty,
}

fn location(path: &Path, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("{}:{l}", path.display()),
        None => path.display().to_string(),
    }
}

/// Checks that an id can be embedded into an IRI and does not collide with NIL ids.
pub fn validate_id(id: &str) -> Result<(), String> {
    if id.is_empty() {
        return Err("empty entity id".into());
    }
    if let Some(c) = id.chars().find(|c| c.is_whitespace() || "<>\"{}|^`\\".contains(*c) || c.is_control()) {
        return Err(format!("entity id {id:?} contains {c:?}"));
    }
    if id.starts_with(NIL_PREFIX) {
        return Err(format!("entity id {id:?} uses the reserved {NIL_PREFIX:?} prefix"));
    }
    Ok(())
}

/// In-memory knowledge base: entity records, title lexicon, variation rules
/// and slot schema. Immutable once loaded.
#[derive(Debug, Clone)]
pub struct OntologyStore {
    entities: Vec<EntityRecord>,
    index: HashMap<String, usize>,
    origins: Vec<String>,
    pub title_lexicon: TitleLexicon,
    pub rules: VariationRules,
    schema: SlotSchema,
    digest: String,
}

#[derive(Deserialize)]
struct JsonOntology {
    #[serde(default)]
    entities: Vec<JsonEntity>,
    #[serde(default)]
    slot_extensions: BTreeMap<SlotName, Vec<EntityType>>,
}

#[derive(Deserialize)]
struct JsonEntity {
    id: Option<String>,
    #[serde(rename = "type")]
    etype: Option<String>,
    canonical: Option<String>,
    #[serde(default)]
    surface_forms: Vec<String>,
    #[serde(default)]
    context_terms: Vec<String>,
}

#[derive(Default)]
struct Builder {
    entities: Vec<EntityRecord>,
    index: HashMap<String, usize>,
    origins: Vec<String>,
    lexicon: Option<TitleLexicon>,
    rules: Option<VariationRules>,
    schema: SlotSchema,
    hasher: Sha256,
}

fn split_list(col: Option<&str>) -> Vec<String> {
    col.map(|c| c.split('|').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()).unwrap_or_default()
}

impl Builder {
    fn hash_source(&mut self, kind: &str, content: &str) {
        self.hasher.update(kind.as_bytes());
        self.hasher.update([0]);
        self.hasher.update((content.len() as u64).to_le_bytes());
        self.hasher.update(content.as_bytes());
    }

    #[allow(clippy::too_many_arguments)]
    fn add(
        &mut self,
        path: &Path,
        line: Option<usize>,
        id: &str,
        etype: &str,
        canonical: &str,
        surfaces: Vec<String>,
        context: Vec<String>,
    ) -> Result<(), OntologyError> {
        let schema_err = |message: String| OntologyError::Schema { path: path.to_path_buf(), line, message };
        let id = id.trim();
        validate_id(id).map_err(schema_err)?;
        if etype.trim().is_empty() {
            return Err(schema_err(format!("entity {id:?} has no type")));
        }
        let etype: EntityType = etype.parse().map_err(schema_err)?;
        let canonical = canonical.trim();
        if canonical.is_empty() {
            return Err(schema_err(format!("entity {id:?} has an empty canonical name")));
        }
        let here = location(path, line);
        if let Some(&prev) = self.index.get(id) {
            return Err(OntologyError::DuplicateId {
                id: id.to_string(),
                path: path.to_path_buf(),
                line: line.unwrap_or(0),
                first: self.origins[prev].clone(),
            });
        }
        let mut record = EntityRecord::new(id, etype, canonical);
        record = record.with_surfaces(&surfaces.iter().map(String::as_str).collect::<Vec<_>>());
        record.context_terms = context;
        self.index.insert(id.to_string(), self.entities.len());
        self.entities.push(record);
        self.origins.push(here);
        Ok(())
    }

    fn load_tsv(&mut self, path: &Path, content: &str) -> Result<(), OntologyError> {
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 || cols.len() > 5 {
                return Err(OntologyError::Schema {
                    path: path.to_path_buf(),
                    line: Some(idx + 1),
                    message: format!("expected 3 to 5 tab-separated columns, found {}", cols.len()),
                });
            }
            self.add(
                path,
                Some(idx + 1),
                cols[0],
                cols[1],
                cols[2],
                split_list(cols.get(3).copied()),
                split_list(cols.get(4).copied()),
            )?;
        }
        Ok(())
    }

    fn load_json(&mut self, path: &Path, content: &str) -> Result<(), OntologyError> {
        let parsed: JsonOntology = serde_json::from_str(content).map_err(|e| OntologyError::Schema {
            path: path.to_path_buf(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        for (n, e) in parsed.entities.into_iter().enumerate() {
            let missing = |field: &str| OntologyError::Schema {
                path: path.to_path_buf(),
                line: None,
                message: format!("entity #{} lacks {field:?}", n + 1),
            };
            let id = e.id.ok_or_else(|| missing("id"))?;
            let etype = e.etype.ok_or_else(|| missing("type"))?;
            let canonical = e.canonical.unwrap_or_default();
            let clean = |v: Vec<String>| v.into_iter().filter(|s| !s.trim().is_empty()).collect();
            self.add(path, None, &id, &etype, &canonical, clean(e.surface_forms), clean(e.context_terms))?;
        }
        for (slot, types) in parsed.slot_extensions {
            self.schema.extend(slot, types);
        }
        Ok(())
    }

    fn finish(mut self) -> OntologyStore {
        let lexicon = self.lexicon.take().unwrap_or_else(TitleLexicon::shipped);
        let rules = self.rules.take().unwrap_or_default();
        // the effective lexicon, rules and schema are part of the fingerprint
        let lex_json = serde_json::to_string(&lexicon).expect("lexicon serializes");
        let rules_json = serde_json::to_string(&rules).expect("rules serialize");
        let schema_json = serde_json::to_string(&self.schema).expect("schema serializes");
        self.hash_source("lexicon", &lex_json);
        self.hash_source("rules", &rules_json);
        self.hash_source("schema", &schema_json);
        OntologyStore {
            entities: self.entities,
            index: self.index,
            origins: self.origins,
            title_lexicon: lexicon,
            rules,
            schema: self.schema,
            digest: hex::encode(self.hasher.finalize()),
        }
    }
}

fn file_kind(path: &Path) -> &'static str {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_ascii_lowercase();
    if name.ends_with(".titles.tsv") {
        "titles"
    } else if name.ends_with(".rules.tsv") {
        "rules"
    } else if name.ends_with(".json") {
        "json"
    } else {
        "tsv"
    }
}

/// Loads entity files, title lexicons and rule tables. Duplicate ids abort.
pub fn load_ontology<P: AsRef<Path>>(paths: &[P]) -> Result<OntologyStore, OntologyError> {
    let mut builder = Builder::default();
    for path in paths {
        let path = path.as_ref();
        let content =
            std::fs::read_to_string(path).map_err(|source| OntologyError::Io { path: path.to_path_buf(), source })?;
        let kind = file_kind(path);
        builder.hash_source(kind, &content);
        let schema_err = |line: usize, message: String| OntologyError::Schema {
            path: path.to_path_buf(),
            line: Some(line),
            message,
        };
        match kind {
            "titles" => {
                let lex = TitleLexicon::parse(&content).map_err(|e| schema_err(e.line, e.message))?;
                builder.lexicon.get_or_insert_with(TitleLexicon::default).extend(&lex);
            }
            "rules" => {
                let rules = VariationRules::parse(&content).map_err(|e| schema_err(e.line, e.message))?;
                builder.rules = Some(rules);
            }
            "json" => builder.load_json(path, &content)?,
            _ => builder.load_tsv(path, &content)?,
        }
    }
    Ok(builder.finish())
}

impl OntologyStore {
    /// Builds a store from in-memory records (shipped lexicon and rules).
    pub fn from_records(records: Vec<EntityRecord>) -> Result<Self, OntologyError> {
        let mut builder = Builder::default();
        let path = PathBuf::from("<memory>");
        for (n, r) in records.into_iter().enumerate() {
            let json = serde_json::to_string(&r).expect("record serializes");
            builder.hash_source("record", &json);
            builder.add(
                &path,
                Some(n + 1),
                &r.id,
                r.etype.as_str(),
                &r.canonical_name,
                r.surface_forms,
                r.context_terms,
            )?;
        }
        Ok(builder.finish())
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn get(&self, id: &str) -> Option<&EntityRecord> {
        self.index.get(id).map(|&i| &self.entities[i])
    }

    /// Where a record was defined (`path:line`).
    pub fn origin(&self, id: &str) -> Option<&str> {
        self.index.get(id).map(|&i| self.origins[i].as_str())
    }

    /// Hex SHA-256 over every source in load order plus the effective
    /// lexicon, rules and schema.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn slot_schema(&self) -> SlotSchema {
        self.schema.clone()
    }

    pub fn expand_surface_forms(&self, record: &EntityRecord) -> Vec<String> {
        expand_surface_forms(record, &self.rules)
    }
}

pub fn expand_surface_forms(record: &EntityRecord, rules: &VariationRules) -> Vec<String> {
    let forms = std::iter::once(record.canonical_name.as_str()).chain(record.surface_forms.iter().map(String::as_str));
    expand_forms(forms, rules)
}

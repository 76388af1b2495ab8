use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    expand_surface_forms, AmbiguityClass, EntityType, OntologyError, OntologyStore, SlotSchema, VariationRules,
};
use crate::segmenter::TitleLexicon;
use crate::text::{normalized_key, normalized_tokens};

pub const PROFILE_FORMAT: &str = "coursekg-el-profile";
pub const PROFILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntity {
    pub etype: EntityType,
    pub canonical: String,
    /// Context terms as normalized token sequences.
    pub context: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormEntry {
    /// Candidate entity ids, sorted. Empty for context-only forms.
    pub entities: Vec<String>,
    pub ambiguity: AmbiguityClass,
}

/// Self-contained linking profile compiled from an [`OntologyStore`].
///
/// The leading `format`, `version` and `version_hash` fields form the file
/// header. All maps are ordered, so serialization is byte-stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElProfile {
    pub format: String,
    pub version: u32,
    pub version_hash: String,
    pub entities: BTreeMap<String, ProfileEntity>,
    /// Normalized surface form → candidates.
    pub forms: BTreeMap<String, FormEntry>,
    pub max_form_tokens: usize,
    pub title_lexicon: TitleLexicon,
    pub rules: VariationRules,
    pub schema: SlotSchema,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed profile: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("not a linking profile: {0}")]
    Format(String),
}

/// Expands every entity's forms, classifies their ambiguity and compiles the
/// longest-match index.
pub fn build_profile(store: &OntologyStore) -> Result<ElProfile, OntologyError> {
    if store.is_empty() {
        return Err(OntologyError::Empty);
    }
    let mut owners: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut entities = BTreeMap::new();
    for record in store.entities() {
        for form in expand_surface_forms(record, &store.rules) {
            let key = normalized_key(&form);
            if !key.is_empty() {
                owners.entry(key).or_default().insert(record.id.clone());
            }
        }
        let context = record.context_terms.iter().map(|t| normalized_tokens(t)).filter(|t| !t.is_empty()).collect();
        entities.insert(
            record.id.clone(),
            ProfileEntity { etype: record.etype, canonical: record.canonical_name.clone(), context },
        );
    }

    let mut forms: BTreeMap<String, FormEntry> = owners
        .into_iter()
        .map(|(key, ids)| {
            let ambiguity = if ids.len() == 1 { AmbiguityClass::Unambiguous } else { AmbiguityClass::Ambiguous };
            (key, FormEntry { entities: ids.into_iter().collect(), ambiguity })
        })
        .collect();
    for entity in entities.values() {
        for ctx in &entity.context {
            forms
                .entry(ctx.join(" "))
                .or_insert_with(|| FormEntry { entities: vec![], ambiguity: AmbiguityClass::ContextOnly });
        }
    }
    let max_form_tokens = forms.keys().map(|k| k.split(' ').count()).max().unwrap_or(0);

    Ok(ElProfile {
        format: PROFILE_FORMAT.to_string(),
        version: PROFILE_VERSION,
        version_hash: store.digest().to_string(),
        entities,
        forms,
        max_form_tokens,
        title_lexicon: store.title_lexicon.clone(),
        rules: store.rules.clone(),
        schema: store.slot_schema(),
    })
}

impl ElProfile {
    pub fn lookup(&self, key: &str) -> Option<&FormEntry> {
        self.forms.get(key)
    }

    pub fn ambiguity(&self, key: &str) -> Option<AmbiguityClass> {
        self.forms.get(key).map(|f| f.ambiguity)
    }

    pub fn entity(&self, id: &str) -> Option<&ProfileEntity> {
        self.entities.get(id)
    }

    /// Number of keys that can become mentions.
    pub fn surface_count(&self) -> usize {
        self.forms.values().filter(|f| f.ambiguity != AmbiguityClass::ContextOnly).count()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("profile serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        let header: serde_json::Value = serde_json::from_str(text)?;
        let format = header.get("format").and_then(|f| f.as_str()).unwrap_or_default();
        if format != PROFILE_FORMAT {
            return Err(ProfileError::Format(format!("format field is {format:?}")));
        }
        let version = header.get("version").and_then(|v| v.as_u64());
        if version != Some(PROFILE_VERSION as u64) {
            return Err(ProfileError::Format(format!("unsupported version {version:?}")));
        }
        Ok(serde_json::from_value(header)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ProfileError> {
        std::fs::write(path, self.to_json())
            .map_err(|source| ProfileError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ProfileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}

//! Local corpus ingestion: `<input_dir>/<provider_id>/<course_id>.html`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmenter::{decode_html, HtmlDocument};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A file that could not become a document. The rest of the corpus loads.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Failure {
    pub document: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct Corpus {
    /// Sorted by course id.
    pub documents: Vec<HtmlDocument>,
    pub failures: Vec<Failure>,
}

fn is_html(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let io = |source| CorpusError::Io { path: dir.display().to_string(), source };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        out.push(entry.map_err(io)?.path());
    }
    out.sort();
    Ok(out)
}

/// Reads every provider directory below `input_dir`. Unreadable files and
/// duplicate course ids are reported as failures; stray files are ignored.
pub fn load_corpus(input_dir: &Path) -> Result<Corpus, CorpusError> {
    let mut by_id: BTreeMap<String, HtmlDocument> = BTreeMap::new();
    let mut failures = Vec::new();
    for provider_dir in sorted_entries(input_dir)? {
        if !provider_dir.is_dir() {
            log::warn!("{}: not inside a provider directory, ignored", provider_dir.display());
            continue;
        }
        let provider_id = provider_dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        for file in sorted_entries(&provider_dir)? {
            if !file.is_file() || !is_html(&file) {
                continue;
            }
            let id = file.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let rel = format!("{provider_id}/{}", file.file_name().unwrap_or_default().to_string_lossy());
            if let Some(first) = by_id.get(&id) {
                failures
                    .push(Failure { document: rel, message: format!("course id {id} already used by {}", first.url) });
                continue;
            }
            match std::fs::read(&file) {
                Ok(bytes) => {
                    let doc = HtmlDocument {
                        id: id.clone(),
                        provider_id: provider_id.clone(),
                        url: rel,
                        html: decode_html(&bytes),
                    };
                    by_id.insert(id, doc);
                }
                Err(e) => failures.push(Failure { document: rel, message: e.to_string() }),
            }
        }
    }
    Ok(Corpus { documents: by_id.into_values().collect(), failures })
}

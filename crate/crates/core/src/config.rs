//! Declarative run configuration (TOML).
//!
//! ```toml
//! input_dir = "html"
//! ontology_paths = ["ontology.tsv"]
//! profile_path = "out/profile.json"
//! workers = 4
//! seed = 7
//!
//! [providers.sae]
//! school = "edu:sae_institute"
//! base_iri = "https://sae.edu"
//!
//! [output]
//! dir = "out"
//! formats = ["ntriples", "turtle"]
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{Namespace, RdfFormat};
use crate::linker::LinkerWeights;
use crate::slotfill::ProviderRecord;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem of the graph files (`<stem>.nt`, `<stem>.ttl`).
    pub stem: String,
    pub formats: Vec<RdfFormat>,
    /// Also write predictions in the gold JSON schema.
    pub predictions: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            stem: "kg".into(),
            formats: vec![RdfFormat::NTriples, RdfFormat::Turtle],
            predictions: true,
        }
    }
}

impl OutputConfig {
    pub fn graph_path(&self, format: RdfFormat) -> PathBuf {
        let ext = match format {
            RdfFormat::NTriples => "nt",
            RdfFormat::Turtle => "ttl",
        };
        self.dir.join(format!("{}.{ext}", self.stem))
    }

    pub fn report_path(&self) -> PathBuf {
        self.dir.join("run_report.json")
    }

    pub fn predictions_path(&self) -> PathBuf {
        self.dir.join("predictions.json")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognizerConfig {
    /// Replaces the shipped cue lexicon.
    pub cues_path: Option<PathBuf>,
    /// Token file labelled by an external model; replaces the baseline.
    pub external_tokens: Option<PathBuf>,
    /// Where to write the silver-annotated token file.
    pub silver_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    #[serde(default)]
    pub ontology_paths: Vec<PathBuf>,
    pub profile_path: PathBuf,
    #[serde(default)]
    pub providers: BTreeMap<String, ProviderRecord>,
    #[serde(default)]
    pub namespaces: Namespace,
    #[serde(default)]
    pub linker_weights: LinkerWeights,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub recognizer: RecognizerConfig,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: PipelineConfig = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.input_dir);
        resolve(base, &mut cfg.profile_path);
        resolve(base, &mut cfg.output.dir);
        for p in &mut cfg.ontology_paths {
            resolve(base, p);
        }
        for p in [&mut cfg.recognizer.cues_path, &mut cfg.recognizer.external_tokens, &mut cfg.recognizer.silver_out]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, path)
    }

    fn require(path: &Path, what: &str) -> Result<(), ConfigError> {
        if path.exists() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(format!("{what} {} does not exist", path.display())))
        }
    }

    /// Checks what profile building needs.
    pub fn validate_for_profile(&self) -> Result<(), ConfigError> {
        if self.ontology_paths.is_empty() {
            return Err(ConfigError::Invalid("ontology_paths is empty".into()));
        }
        self.ontology_paths.iter().try_for_each(|p| Self::require(p, "ontology file"))
    }

    /// Checks what extraction needs.
    pub fn validate_for_extract(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.output.formats.is_empty() {
            return Err(ConfigError::Invalid("output.formats is empty".into()));
        }
        Self::require(&self.input_dir, "input_dir")?;
        Self::require(&self.profile_path, "profile")?;
        if let Some(p) = &self.recognizer.cues_path {
            Self::require(p, "cue lexicon")?;
        }
        if let Some(p) = &self.recognizer.external_tokens {
            Self::require(p, "token file")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_file() {
        let cfg = PipelineConfig::parse(
            r#"
input_dir = "html"
ontology_paths = ["onto.tsv", "/abs/extra.tsv"]
profile_path = "out/profile.json"
workers = 2
[providers.sae]
school = "edu:sae"
base_iri = "https://sae.edu"
[linker_weights]
cluster_type = 2.0
"#,
            Path::new("/data/run/config.toml"),
        )
        .unwrap();
        assert_eq!(cfg.input_dir, PathBuf::from("/data/run/html"));
        assert_eq!(cfg.ontology_paths[1], PathBuf::from("/abs/extra.tsv"));
        assert_eq!(cfg.output.dir, PathBuf::from("/data/run/out"));
        assert_eq!(cfg.linker_weights.cluster_type, 2.0);
        assert_eq!(cfg.linker_weights.cluster_context, 0.5);
        assert_eq!(cfg.providers["sae"].school.as_deref(), Some("edu:sae"));
        assert_eq!(cfg.output.graph_path(RdfFormat::Turtle), PathBuf::from("/data/run/out/kg.ttl"));
    }

    #[test]
    fn rejects_unknown_keys_and_zero_workers() {
        let p = Path::new("c.toml");
        assert!(PipelineConfig::parse("input_dir='a'\nprofile_path='b'\nbogus=1", p).is_err());
        let cfg = PipelineConfig::parse("input_dir='.'\nprofile_path='.'\nworkers=0", p).unwrap();
        assert!(matches!(cfg.validate_for_extract(), Err(ConfigError::Invalid(_))));
    }
}

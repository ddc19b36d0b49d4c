use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tracing::{debug, info};

use super::embed::{Embedder, EmbedderSpec};
use super::scan::{score_all, top_k};
use super::summary::generate_functional_summary;
use super::KnowledgeError;
use crate::llm::LlmSession;
use crate::model::{canonical_text, TestCase};

pub const ENTRIES_FILE: &str = "entries.jsonl";
pub const META_FILE: &str = "store.meta.json";

const NORM_TOLERANCE: f64 = 1e-6;

/// One stored test case: category is the primary key, the summary embedding
/// the secondary key, the case itself the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub category: String,
    pub summary: String,
    pub embedding: Vec<f64>,
    pub app_id: String,
    pub case: TestCase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub dimension: usize,
    pub embedder: String,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalResult {
    pub entry: KnowledgeEntry,
    pub score: f64,
}

/// In-memory entry list, optionally mirrored to a store directory
/// (`entries.jsonl` appended per ingest, `store.meta.json` rewritten when
/// the category set changes).
pub struct KnowledgeStore {
    meta: StoreMeta,
    entries: Vec<KnowledgeEntry>,
    embedder: Arc<dyn Embedder>,
    dir: Option<PathBuf>,
}

impl std::fmt::Debug for KnowledgeStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnowledgeStore")
            .field("meta", &self.meta)
            .field("entries", &self.entries.len())
            .field("dir", &self.dir)
            .finish()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> KnowledgeError + '_ {
    move |e| KnowledgeError::Io(path.to_path_buf(), e)
}

impl KnowledgeStore {
    /// Empty store whose dimension is probed from the embedder.
    pub fn in_memory(embedder: Arc<dyn Embedder>) -> Result<Self, KnowledgeError> {
        let dimension = embedder.embed("probe")?.len();
        Ok(Self {
            meta: StoreMeta {
                dimension,
                embedder: embedder.name(),
                categories: Vec::new(),
            },
            entries: Vec::new(),
            embedder,
            dir: None,
        })
    }

    /// Creates (or truncates) a store directory.
    pub fn create(dir: &Path, embedder: Arc<dyn Embedder>) -> Result<Self, KnowledgeError> {
        let mut store = Self::in_memory(embedder)?;
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let entries = dir.join(ENTRIES_FILE);
        fs::write(&entries, b"").map_err(io_err(&entries))?;
        store.dir = Some(dir.to_path_buf());
        store.write_meta()?;
        Ok(store)
    }

    /// Loads a store directory, reconnecting the embedder named in its metadata.
    pub fn open(dir: &Path) -> Result<Self, KnowledgeError> {
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: StoreMeta = serde_json::from_str(&text)?;
        let embedder = meta.embedder.parse::<EmbedderSpec>()?.build();
        Self::open_with(dir, embedder)
    }

    pub fn open_with(dir: &Path, embedder: Arc<dyn Embedder>) -> Result<Self, KnowledgeError> {
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: StoreMeta = serde_json::from_str(&text)?;
        let mut store = Self {
            meta,
            entries: Vec::new(),
            embedder,
            dir: None,
        };
        let entries_path = dir.join(ENTRIES_FILE);
        let file = fs::File::open(&entries_path).map_err(io_err(&entries_path))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(io_err(&entries_path))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: KnowledgeEntry = serde_json::from_str(&line)?;
            store.check_entry(&entry)?;
            store.entries.push(entry);
        }
        store.dir = Some(dir.to_path_buf());
        info!(dir = %dir.display(), entries = store.entries.len(), "knowledge store loaded");
        Ok(store)
    }

    /// Writes a full copy of the store to `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), KnowledgeError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let meta_path = dir.join(META_FILE);
        fs::write(&meta_path, serde_json::to_string_pretty(&self.meta)? + "\n")
            .map_err(io_err(&meta_path))?;
        let mut body = String::new();
        for e in &self.entries {
            body.push_str(&serde_json::to_string(e)?);
            body.push('\n');
        }
        let entries_path = dir.join(ENTRIES_FILE);
        fs::write(&entries_path, body).map_err(io_err(&entries_path))
    }

    fn write_meta(&self) -> Result<(), KnowledgeError> {
        if let Some(dir) = &self.dir {
            let path = dir.join(META_FILE);
            fs::write(&path, serde_json::to_string_pretty(&self.meta)? + "\n")
                .map_err(io_err(&path))?;
        }
        Ok(())
    }

    pub fn meta(&self) -> &StoreMeta {
        &self.meta
    }

    pub fn entries(&self) -> &[KnowledgeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    /// Registered spelling of `category`, matched case-insensitively.
    pub fn resolve_category(&self, category: &str) -> Option<&str> {
        let key = canonical_text(category);
        self.meta
            .categories
            .iter()
            .find(|c| canonical_text(c) == key)
            .map(String::as_str)
    }

    pub fn register_category(&mut self, category: &str) -> Result<(), KnowledgeError> {
        if canonical_text(category).is_empty() {
            return Err(KnowledgeError::UnknownCategory(category.to_string()));
        }
        if self.resolve_category(category).is_none() {
            self.meta.categories.push(category.trim().to_string());
            self.write_meta()?;
        }
        Ok(())
    }

    /// Entry counts per registered category, in registration order.
    pub fn category_counts(&self) -> Vec<(String, usize)> {
        self.meta
            .categories
            .iter()
            .map(|c| {
                let key = canonical_text(c);
                let n = self
                    .entries
                    .iter()
                    .filter(|e| canonical_text(&e.category) == key)
                    .count();
                (c.clone(), n)
            })
            .collect()
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, KnowledgeError> {
        if text.trim().is_empty() {
            return Err(KnowledgeError::EmptyText);
        }
        let v = self.embedder.embed(text)?;
        if v.len() != self.meta.dimension {
            return Err(KnowledgeError::EmbeddingDimensionMismatch {
                expected: self.meta.dimension,
                actual: v.len(),
            });
        }
        Ok(v)
    }

    fn check_entry(&self, entry: &KnowledgeEntry) -> Result<(), KnowledgeError> {
        if entry.embedding.len() != self.meta.dimension {
            return Err(KnowledgeError::EmbeddingDimensionMismatch {
                expected: self.meta.dimension,
                actual: entry.embedding.len(),
            });
        }
        let norm = entry.embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(KnowledgeError::NotNormalized(norm));
        }
        if self.resolve_category(&entry.category).is_none() {
            return Err(KnowledgeError::UnknownCategory(entry.category.clone()));
        }
        entry.case.validate()?;
        Ok(())
    }

    /// Appends a prepared entry after checking the store invariants.
    pub fn insert(&mut self, entry: KnowledgeEntry) -> Result<&KnowledgeEntry, KnowledgeError> {
        self.check_entry(&entry)?;
        if let Some(dir) = &self.dir {
            let path = dir.join(ENTRIES_FILE);
            let mut f = OpenOptions::new()
                .append(true)
                .create(true)
                .open(&path)
                .map_err(io_err(&path))?;
            let line = serde_json::to_string(&entry)? + "\n";
            f.write_all(line.as_bytes()).map_err(io_err(&path))?;
        }
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Summarizes `case` through the provider, embeds the summary and stores it.
    pub fn ingest(
        &mut self,
        case: &TestCase,
        session: &mut LlmSession,
    ) -> Result<&KnowledgeEntry, KnowledgeError> {
        case.validate()?;
        let category = self
            .resolve_category(&case.category)
            .ok_or_else(|| KnowledgeError::UnknownCategory(case.category.clone()))?
            .to_string();
        let summary = generate_functional_summary(case, &category, session)?;
        let embedding = self.embed(&summary)?;
        debug!(app = %case.app_id, %summary, "ingested");
        self.insert(KnowledgeEntry {
            category,
            summary,
            embedding,
            app_id: case.app_id.clone(),
            case: case.clone(),
        })
    }

    /// Top `top_sim` entries of `category` by cosine similarity to the
    /// requirement, excluding `exclude_app`. Ties keep insertion order.
    pub fn retrieve(
        &self,
        requirement: &str,
        category: &str,
        exclude_app: Option<&str>,
        top_sim: usize,
    ) -> Result<Vec<RetrievalResult>, KnowledgeError> {
        if self.entries.is_empty() {
            return Ok(Vec::new());
        }
        let key = self
            .resolve_category(category)
            .map(canonical_text)
            .ok_or_else(|| KnowledgeError::UnknownCategory(category.to_string()))?;
        self.search(requirement, Some(&key), exclude_app, top_sim)
    }

    /// Same ranking over every category.
    pub fn retrieve_any(
        &self,
        requirement: &str,
        exclude_app: Option<&str>,
        top_sim: usize,
    ) -> Result<Vec<RetrievalResult>, KnowledgeError> {
        if self.entries.is_empty() {
            return Ok(Vec::new());
        }
        self.search(requirement, None, exclude_app, top_sim)
    }

    /// [`retrieve`](Self::retrieve), widening to all categories when the
    /// category is not registered. The flag reports whether it widened.
    pub fn retrieve_with_fallback(
        &self,
        requirement: &str,
        category: &str,
        exclude_app: Option<&str>,
        top_sim: usize,
    ) -> Result<(Vec<RetrievalResult>, bool), KnowledgeError> {
        match self.retrieve(requirement, category, exclude_app, top_sim) {
            Err(KnowledgeError::UnknownCategory(c)) => {
                info!(category = %c, "unknown category, searching all categories");
                Ok((self.retrieve_any(requirement, exclude_app, top_sim)?, true))
            }
            other => other.map(|r| (r, false)),
        }
    }

    fn search(
        &self,
        requirement: &str,
        category_key: Option<&str>,
        exclude_app: Option<&str>,
        top_sim: usize,
    ) -> Result<Vec<RetrievalResult>, KnowledgeError> {
        if top_sim == 0 {
            return Err(KnowledgeError::InvalidTopSim);
        }
        let query = self.embed(requirement)?;
        let scored = score_all(&self.entries, &query, |e| {
            category_key.is_none_or(|k| canonical_text(&e.category) == k)
                && exclude_app != Some(e.app_id.as_str())
        });
        Ok(top_k(scored, top_sim)
            .into_iter()
            .map(|s| RetrievalResult {
                entry: self.entries[s.index].clone(),
                score: s.score,
            })
            .collect())
    }
}

//! Loading a test-case corpus from disk and ingesting it into a store.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use tracing::info;

use super::{Embedder, KnowledgeError, KnowledgeStore};
use crate::llm::LlmSession;
use crate::model::TestCase;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Deserialize)]
struct Manifest {
    cases: Vec<ManifestCase>,
}

#[derive(Debug, Deserialize)]
struct ManifestCase {
    file: PathBuf,
}

/// Reads a corpus: a manifest file, a directory holding `manifest.json`, or
/// a directory of case files (read in file-name order).
pub fn load_corpus(path: &Path) -> Result<Vec<TestCase>, KnowledgeError> {
    let manifest = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    if manifest.is_file() {
        let text =
            fs::read_to_string(&manifest).map_err(|e| KnowledgeError::Io(manifest.clone(), e))?;
        let parsed: Manifest = serde_json::from_str(&text)?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        return parsed
            .cases
            .iter()
            .map(|c| Ok(TestCase::load(&base.join(&c.file))?))
            .collect();
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| KnowledgeError::Io(path.to_path_buf(), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files.iter().map(|f| Ok(TestCase::load(f)?)).collect()
}

/// Creates a store at `dir` (or in memory when `dir` is `None`), registers
/// every category in first-seen order and ingests each case.
pub fn build_store(
    dir: Option<&Path>,
    cases: &[TestCase],
    embedder: Arc<dyn Embedder>,
    session: &mut LlmSession,
) -> Result<KnowledgeStore, KnowledgeError> {
    let mut store = match dir {
        Some(d) => KnowledgeStore::create(d, embedder)?,
        None => KnowledgeStore::in_memory(embedder)?,
    };
    for case in cases {
        store.register_category(&case.category)?;
    }
    for case in cases {
        store.ingest(case, session)?;
    }
    info!(
        entries = store.len(),
        categories = store.meta().categories.len(),
        "knowledge store built"
    );
    Ok(store)
}

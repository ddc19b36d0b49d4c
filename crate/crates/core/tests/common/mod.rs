#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use logidroid_core::knowledge::{
    build_store, load_corpus, HashingEmbedder, HeuristicSummarizer, KnowledgeStore,
};
use logidroid_core::llm::LlmSession;

pub const REQUIREMENT: &str = "Add a todo item and delete it by swiping it away";
pub const CATEGORY: &str = "To-Do";

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

/// Builds the fixture corpus into a store directory with the offline summarizer.
pub fn fixture_store(dir: &Path) -> KnowledgeStore {
    let cases = load_corpus(&fixture("corpus")).expect("corpus loads");
    let mut session = LlmSession::new("summaries", Arc::new(HeuristicSummarizer));
    build_store(
        Some(dir),
        &cases,
        Arc::new(HashingEmbedder::default()),
        &mut session,
    )
    .expect("store builds")
}

//! Exhaustive similarity scan over the store. With the `parallel` feature
//! scoring fans out over rayon; the sequential path is always available and
//! both produce identical rankings.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::similarity::cosine_similarity;
use super::store::KnowledgeEntry;

/// Position of an entry in insertion order together with its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub index: usize,
    pub score: f64,
}

fn score(entry: &KnowledgeEntry, query: &[f64]) -> f64 {
    cosine_similarity(&entry.embedding, query).unwrap_or(f64::NEG_INFINITY)
}

pub fn score_sequential<F>(entries: &[KnowledgeEntry], query: &[f64], keep: F) -> Vec<Scored>
where
    F: Fn(&KnowledgeEntry) -> bool,
{
    entries
        .iter()
        .enumerate()
        .filter(|(_, e)| keep(e))
        .map(|(index, e)| Scored {
            index,
            score: score(e, query),
        })
        .collect()
}

#[cfg(feature = "parallel")]
pub fn score_parallel<F>(entries: &[KnowledgeEntry], query: &[f64], keep: F) -> Vec<Scored>
where
    F: Fn(&KnowledgeEntry) -> bool + Sync,
{
    entries
        .par_iter()
        .enumerate()
        .filter(|(_, e)| keep(e))
        .map(|(index, e)| Scored {
            index,
            score: score(e, query),
        })
        .collect()
}

/// Scores every kept entry using the build's default execution path.
pub fn score_all<F>(entries: &[KnowledgeEntry], query: &[f64], keep: F) -> Vec<Scored>
where
    F: Fn(&KnowledgeEntry) -> bool + Sync,
{
    #[cfg(feature = "parallel")]
    {
        score_parallel(entries, query, keep)
    }
    #[cfg(not(feature = "parallel"))]
    {
        score_sequential(entries, query, keep)
    }
}

/// Highest `k` scores, descending; equal scores keep insertion order.
pub fn top_k(mut scored: Vec<Scored>, k: usize) -> Vec<Scored> {
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    scored.truncate(k);
    scored
}

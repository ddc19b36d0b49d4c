use std::sync::Arc;
use std::time::{Duration, Instant};

use logidroid_core::knowledge::scan::{score_sequential, top_k};
use logidroid_core::knowledge::{HashingEmbedder, KnowledgeEntry, KnowledgeStore};
use logidroid_core::model::{TestCase, TestStep, WidgetAttrs};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: [&str; 40] = [
    "add", "delete", "edit", "task", "note", "search", "bookmark", "page", "settings", "theme",
    "dark", "login", "account", "password", "share", "photo", "album", "play", "pause", "song",
    "playlist", "alarm", "timer", "city", "weather", "forecast", "recipe", "cart", "checkout",
    "message", "contact", "call", "filter", "sort", "archive", "restore", "title", "list", "item",
    "reminder",
];
const CATEGORIES: [&str; 5] = ["To-Do", "Browser", "Music", "Weather", "Shopping"];

fn sentence(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n)
        .map(|_| *VOCAB.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// 300 entries over 5 categories and 30 apps.
fn synthetic_store(rng: &mut ChaCha8Rng) -> KnowledgeStore {
    let mut store = KnowledgeStore::in_memory(Arc::new(HashingEmbedder::default())).unwrap();
    for c in CATEGORIES {
        store.register_category(c).unwrap();
    }
    for i in 0..300 {
        let category = CATEGORIES[i % CATEGORIES.len()].to_string();
        let app_id = format!("app-{:02}", rng.gen_range(0..30));
        let summary = sentence(rng, 5, 12);
        let embedding = store.embed(&summary).unwrap();
        let case = TestCase::new(
            &app_id,
            &category,
            vec![TestStep::click(WidgetAttrs::text(format!("w{i}")))],
        );
        store
            .insert(KnowledgeEntry {
                category,
                summary,
                embedding,
                app_id,
                case,
            })
            .unwrap();
    }
    store
}

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Exhaustive scan: score everything admissible, sort by score then position.
fn brute_force(
    store: &KnowledgeStore,
    query: &[f64],
    category: &str,
    exclude: Option<&str>,
    k: usize,
) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = store
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            e.category.eq_ignore_ascii_case(category) && Some(e.app_id.as_str()) != exclude
        })
        .map(|(i, e)| (i, oracle_cosine(&e.embedding, query)))
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

#[test]
fn retrieval_equals_brute_force_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(294);
    let store = synthetic_store(&mut rng);
    assert_eq!(store.len(), 300);
    for trial in 0..100 {
        let requirement = sentence(&mut rng, 3, 10);
        let category = *CATEGORIES.choose(&mut rng).unwrap();
        let exclude = rng
            .gen_bool(0.7)
            .then(|| format!("app-{:02}", rng.gen_range(0..30)));
        let query = store.embed(&requirement).unwrap();
        for top_sim in 1..=3 {
            let started = Instant::now();
            let got = store
                .retrieve(&requirement, category, exclude.as_deref(), top_sim)
                .unwrap();
            assert!(started.elapsed() < Duration::from_secs(1));
            let want = brute_force(&store, &query, category, exclude.as_deref(), top_sim);
            assert_eq!(got.len(), want.len(), "trial {trial}");
            for (g, (i, score)) in got.iter().zip(&want) {
                assert_eq!(
                    &g.entry,
                    &store.entries()[*i],
                    "trial {trial}, top {top_sim}"
                );
                assert!((g.score - score).abs() < 1e-12);
            }
            assert!(got
                .iter()
                .all(|r| Some(r.entry.app_id.as_str()) != exclude.as_deref()));
            assert!(got.iter().all(|r| r.entry.category == category));
        }
    }
}

#[test]
fn persisted_store_ranks_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let store = synthetic_store(&mut rng);
    let tmp = tempfile::tempdir().unwrap();
    store.save(tmp.path()).unwrap();
    let reopened = KnowledgeStore::open(tmp.path()).unwrap();
    for _ in 0..20 {
        let requirement = sentence(&mut rng, 3, 8);
        let a = store.retrieve(&requirement, "Music", None, 3).unwrap();
        let b = reopened.retrieve(&requirement, "music", None, 3).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn unknown_category_widens_the_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let store = synthetic_store(&mut rng);
    let (results, widened) = store
        .retrieve_with_fallback("add task title", "Finance", None, 3)
        .unwrap();
    assert!(widened);
    assert_eq!(results.len(), 3);
    assert!(store.retrieve("add task", "Finance", None, 3).is_err());
    assert!(store.retrieve("add task", "Music", None, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parallel_and_sequential_scans_agree(seed in any::<u64>(), k in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = synthetic_store(&mut rng);
        let query = store.embed(&sentence(&mut rng, 2, 8)).unwrap();
        let seq = top_k(score_sequential(store.entries(), &query, |_| true), k);
        #[cfg(feature = "parallel")]
        {
            let par = top_k(logidroid_core::knowledge::scan::score_parallel(store.entries(), &query, |_| true), k);
            prop_assert_eq!(&seq, &par);
        }
        prop_assert!(seq.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn excluded_app_never_returned(seed in any::<u64>(), app in 0usize..30, k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = synthetic_store(&mut rng);
        let excluded = format!("app-{app:02}");
        for category in CATEGORIES {
            let got = store.retrieve(&sentence(&mut rng, 2, 6), category, Some(&excluded), k).unwrap();
            prop_assert!(got.iter().all(|r| r.entry.app_id != excluded));
        }
    }
}

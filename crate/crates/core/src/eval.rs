//! Case-level metrics: exact agreement with the ground truth, and an
//! automated essential-step proxy for the human-judged success rate.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{steps_equal, ActionKind, ModelError, StepKind, TestCase, TestStep};

pub const PROXY_NOTE: &str =
    "essential_rate is an automated proxy: every essential ground-truth step must appear, in order, in the generated case";

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("case `{0}` has no essential steps annotated")]
    NoAnnotations(String),
    #[error("case `{case_id}`: essential step {index} is out of range for {len} steps")]
    AnnotationOutOfRange {
        case_id: String,
        index: usize,
        len: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    pub first_divergence: Option<usize>,
}

/// Exact agreement: same length and pairwise-equal steps in order.
pub fn perfect_match(generated: &TestCase, ground_truth: &TestCase) -> MatchResult {
    let first_divergence = generated
        .steps
        .iter()
        .zip(&ground_truth.steps)
        .position(|(g, t)| !steps_equal(g, t))
        .or_else(|| {
            (generated.steps.len() != ground_truth.steps.len())
                .then(|| generated.steps.len().min(ground_truth.steps.len()))
        });
    MatchResult {
        matched: first_divergence.is_none(),
        first_divergence,
    }
}

/// Default essential steps when a case has no annotation: every assertion
/// and every edit event, or every step when the case has neither.
pub fn default_essential(ground_truth: &TestCase) -> Vec<usize> {
    let picked: Vec<usize> = ground_truth
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| match s {
            TestStep::Assertion { .. } => true,
            TestStep::Event { action, .. } => *action == ActionKind::Edit,
        })
        .map(|(i, _)| i)
        .collect();
    if picked.is_empty() {
        (0..ground_truth.steps.len()).collect()
    } else {
        picked
    }
}

/// True when the essential ground-truth steps occur in `generated` as an
/// order-preserving subsequence. Greedy earliest matching is optimal for
/// subsequence containment.
pub fn essential_coverage(
    generated: &TestCase,
    ground_truth: &TestCase,
    essential: &[usize],
) -> Result<bool, EvalError> {
    if essential.is_empty() {
        return Err(EvalError::NoAnnotations(ground_truth.app_id.clone()));
    }
    let mut pos = 0;
    for &i in essential {
        let want = ground_truth
            .steps
            .get(i)
            .ok_or_else(|| EvalError::AnnotationOutOfRange {
                case_id: ground_truth.app_id.clone(),
                index: i,
                len: ground_truth.steps.len(),
            })?;
        match generated.steps[pos..]
            .iter()
            .position(|g| steps_equal(g, want))
        {
            Some(off) => pos += off + 1,
            None => return Ok(false),
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub essential: Vec<usize>,
}

/// `{"<case-id>": {"essential": [..]}}`
pub type Annotations = BTreeMap<String, Annotation>;

pub fn load_annotations(path: &Path) -> Result<Annotations, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io(path.to_path_buf(), e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CasePair {
    pub case_id: String,
    /// `None` when no case was generated; such pairs fail.
    pub generated: Option<TestCase>,
    pub ground_truth: TestCase,
    /// Essential step indices; `None` selects [`default_essential`].
    pub essential: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Perfect,
    EssentialOnly,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_divergence: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub perfect: usize,
    pub perfect_rate: f64,
    pub essential_pass: usize,
    pub essential_rate: f64,
    pub note: String,
    /// Sorted by case id.
    pub per_case: Vec<CaseResult>,
}

fn rate(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    }
}

impl EvalReport {
    pub fn from_cases(mut per_case: Vec<CaseResult>) -> Self {
        per_case.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let total = per_case.len();
        let perfect = per_case
            .iter()
            .filter(|c| c.verdict == Verdict::Perfect)
            .count();
        let essential_pass = per_case
            .iter()
            .filter(|c| c.verdict != Verdict::Fail)
            .count();
        Self {
            total,
            perfect,
            perfect_rate: rate(perfect, total),
            essential_pass,
            essential_rate: rate(essential_pass, total),
            note: PROXY_NOTE.to_string(),
            per_case,
        }
    }
}

pub fn evaluate_pair(pair: &CasePair) -> Result<CaseResult, EvalError> {
    let Some(generated) = &pair.generated else {
        return Ok(CaseResult {
            case_id: pair.case_id.clone(),
            verdict: Verdict::Fail,
            first_divergence: Some(0),
        });
    };
    let m = perfect_match(generated, &pair.ground_truth);
    let essential = pair
        .essential
        .clone()
        .unwrap_or_else(|| default_essential(&pair.ground_truth));
    let covered =
        essential_coverage(generated, &pair.ground_truth, &essential).map_err(|e| match e {
            EvalError::NoAnnotations(_) => EvalError::NoAnnotations(pair.case_id.clone()),
            EvalError::AnnotationOutOfRange { index, len, .. } => EvalError::AnnotationOutOfRange {
                case_id: pair.case_id.clone(),
                index,
                len,
            },
            other => other,
        })?;
    let verdict = if m.matched {
        Verdict::Perfect
    } else if covered {
        Verdict::EssentialOnly
    } else {
        Verdict::Fail
    };
    Ok(CaseResult {
        case_id: pair.case_id.clone(),
        verdict,
        first_divergence: m.first_divergence,
    })
}

pub fn evaluate_corpus_sequential(pairs: &[CasePair]) -> Result<EvalReport, EvalError> {
    let cases = pairs
        .iter()
        .map(evaluate_pair)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_cases(cases))
}

#[cfg(feature = "parallel")]
pub fn evaluate_corpus_parallel(pairs: &[CasePair]) -> Result<EvalReport, EvalError> {
    let cases = pairs
        .par_iter()
        .map(evaluate_pair)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_cases(cases))
}

/// Scores every pair; parallel over pairs when the `parallel` feature is on.
pub fn evaluate_corpus(pairs: &[CasePair]) -> Result<EvalReport, EvalError> {
    #[cfg(feature = "parallel")]
    {
        evaluate_corpus_parallel(pairs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        evaluate_corpus_sequential(pairs)
    }
}

/// Loads test cases keyed by file stem from a single file or from every
/// `*.json` file directly inside a directory.
pub fn load_cases(path: &Path) -> Result<BTreeMap<String, TestCase>, EvalError> {
    let mut out = BTreeMap::new();
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| EvalError::Io(path.to_path_buf(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    for f in files {
        let id = f
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.insert(id, TestCase::load(&f)?);
    }
    Ok(out)
}

/// Pairs generated and ground-truth cases by id. When both sides hold a
/// single case they are paired regardless of file names.
pub fn pair_cases(
    generated: BTreeMap<String, TestCase>,
    ground_truth: BTreeMap<String, TestCase>,
    annotations: &Annotations,
) -> Vec<CasePair> {
    let single = generated.len() == 1 && ground_truth.len() == 1;
    let mut generated = generated;
    ground_truth
        .into_iter()
        .map(|(id, gt)| {
            let g = if single {
                generated.pop_first().map(|(_, c)| c)
            } else {
                generated.remove(&id)
            };
            CasePair {
                essential: annotations.get(&id).map(|a| a.essential.clone()),
                case_id: id,
                generated: g,
                ground_truth: gt,
            }
        })
        .collect()
}

/// Event and assertion counts of a case, for summaries.
pub fn step_counts(case: &TestCase) -> (usize, usize) {
    let events = case
        .steps
        .iter()
        .filter(|s| s.kind() == StepKind::Event)
        .count();
    (events, case.steps.len() - events)
}

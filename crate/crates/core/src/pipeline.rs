//! End-to-end wiring: retrieve, fuse, drive the device, synthesize, and
//! persist every artifact of the run under one directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::decision::{
    run_decision_loop, DecisionConfig, DecisionError, DecisionReport, DecisionRun,
};
use crate::device::{synthesize_case, BackendSpec, DeviceBackend, DeviceError, DeviceSession};
use crate::fusion::{fuse, FusionError};
use crate::knowledge::{EmbedderSpec, KnowledgeError, KnowledgeStore};
use crate::llm::{LlmError, LlmProvider, LlmSession, ProviderSpec, TranscriptSink};
use crate::model::{BusinessLogic, ModelError, TestCase};

pub const LOGIC_FILE: &str = "logic.json";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const CASE_FILE: &str = "case.json";
pub const HISTORY_FILE: &str = "history.json";
pub const META_FILE: &str = "run.meta.json";

pub const FUSION_SESSION: &str = "fusion";
pub const DECISION_SESSION: &str = "decision";

pub const DEFAULT_TOP_SIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Knowledge store directory; unused with `no_retrieval`.
    pub store_dir: Option<PathBuf>,
    pub requirement: String,
    pub category: String,
    pub exclude_app: Option<String>,
    pub top_sim: usize,
    pub step_num: usize,
    pub attempt_limit: usize,
    #[serde(with = "display_fromstr")]
    pub llm_spec: ProviderSpec,
    /// Overrides the embedder recorded in the store metadata.
    #[serde(with = "display_fromstr::option")]
    pub embedder_spec: Option<EmbedderSpec>,
    #[serde(with = "display_fromstr")]
    pub backend_spec: BackendSpec,
    pub run_dir: PathBuf,
    pub call_budget_multiplier: usize,
    /// Fuse from the requirement alone, skipping the store.
    pub no_retrieval: bool,
}

impl RunConfig {
    pub fn new(
        requirement: impl Into<String>,
        category: impl Into<String>,
        llm_spec: ProviderSpec,
        backend_spec: BackendSpec,
        run_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            store_dir: None,
            requirement: requirement.into(),
            category: category.into(),
            exclude_app: None,
            top_sim: DEFAULT_TOP_SIM,
            step_num: crate::decision::DEFAULT_STEP_NUM,
            attempt_limit: crate::decision::DEFAULT_ATTEMPT_LIMIT,
            llm_spec,
            embedder_spec: None,
            backend_spec,
            run_dir: run_dir.into(),
            call_budget_multiplier: crate::decision::DEFAULT_BUDGET_MULTIPLIER,
            no_retrieval: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.top_sim == 0 {
            return Err("top_sim must be at least 1".into());
        }
        if self.step_num == 0 {
            return Err("step_num must be at least 1".into());
        }
        if self.attempt_limit == 0 {
            return Err("attempt_limit must be at least 1".into());
        }
        if self.requirement.trim().is_empty() {
            return Err("requirement is empty".into());
        }
        if self.store_dir.is_none() && !self.no_retrieval {
            return Err("a knowledge store is required unless retrieval is disabled".into());
        }
        Ok(())
    }

    /// The same configuration with every path made absolute, so the
    /// recorded metadata is usable from any working directory.
    pub fn absolutized(&self) -> Self {
        let mut c = self.clone();
        c.store_dir = c.store_dir.as_deref().map(absolute);
        c.run_dir = absolute(&c.run_dir);
        if let ProviderSpec::Scripted(p) = &c.llm_spec {
            c.llm_spec = ProviderSpec::Scripted(absolute(p));
        }
        if let BackendSpec::Simulator(p) = &c.backend_spec {
            c.backend_spec = BackendSpec::Simulator(absolute(p));
        }
        c
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Serde adapter for the spec types, which round-trip through their
/// `sim:...`/`scripted:...` string forms.
mod display_fromstr {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<T: Display, S: Serializer>(
            v: &Option<T>,
            s: S,
        ) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.collect_str(v),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
        where
            T: FromStr,
            T::Err: Display,
            D: Deserializer<'de>,
        {
            Option::<String>::deserialize(d)?
                .map(|s| s.parse().map_err(de::Error::custom))
                .transpose()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Config,
    Retrieval,
    Fusion,
    Perception,
    Decision,
    Synthesis,
    Artifacts,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Config => "config",
            Phase::Retrieval => "retrieval",
            Phase::Fusion => "fusion",
            Phase::Perception => "perception",
            Phase::Decision => "decision",
            Phase::Synthesis => "synthesis",
            Phase::Artifacts => "artifacts",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PhaseError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

#[derive(Debug, thiserror::Error)]
#[error("{phase} phase failed: {source}")]
pub struct PipelineError {
    pub phase: Phase,
    #[source]
    pub source: PhaseError,
}

impl PipelineError {
    fn at(phase: Phase) -> impl FnOnce(PhaseError) -> Self {
        move |source| Self { phase, source }
    }

    /// The decision run recorded before an abort, if the loop aborted.
    pub fn partial(&self) -> Option<&DecisionRun> {
        match &self.source {
            PhaseError::Decision(DecisionError::SessionAborted { partial, .. }) => Some(partial),
            _ => None,
        }
    }
}

trait InPhase<T> {
    fn in_phase(self, phase: Phase) -> Result<T, PipelineError>;
}

impl<T, E: Into<PhaseError>> InPhase<T> for Result<T, E> {
    fn in_phase(self, phase: Phase) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::at(phase)(e.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Every logic step completed.
    Perfect,
    /// Finished, but some steps were skipped or never matched.
    CompletedWithSkips,
    Aborted,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Perfect => 0,
            RunStatus::CompletedWithSkips => 2,
            RunStatus::Aborted => 1,
        }
    }
}

/// What fusion was fed: the provenance of the business logic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedCase {
    pub app_id: String,
    pub category: String,
    pub score: f64,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: RunConfig,
    pub embedder: Option<String>,
    pub retrieved: Vec<RetrievedCase>,
    /// Retrieval widened to all categories because the category was unknown.
    pub category_fallback: bool,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app_id: Option<String>,
    pub fusion_calls: usize,
    pub decision_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DecisionReport>,
}

impl RunMeta {
    pub fn load(run_dir: &Path) -> Result<Self, PipelineError> {
        let path = run_dir.join(META_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| PhaseError::Io(path.clone(), e))
            .in_phase(Phase::Config)?;
        serde_json::from_str(&text)
            .map_err(|e| PhaseError::Invalid(format!("{}: {e}", path.display())))
            .in_phase(Phase::Config)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub case: TestCase,
    pub logic: BusinessLogic,
    pub status: RunStatus,
    pub report: DecisionReport,
    pub retrieved: Vec<RetrievedCase>,
    pub run_dir: PathBuf,
}

/// Runs the pipeline with the provider and backend named in `config`.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutcome, PipelineError> {
    let provider = config.llm_spec.connect().in_phase(Phase::Config)?;
    run_pipeline_with(config, provider, || config.backend_spec.connect())
}

/// Runs the pipeline with an explicit provider; `connect` is called once,
/// after fusion, to reach the device.
pub fn run_pipeline_with<F>(
    config: &RunConfig,
    provider: Arc<dyn LlmProvider>,
    connect: F,
) -> Result<PipelineOutcome, PipelineError>
where
    F: FnOnce() -> Result<Box<dyn DeviceBackend>, DeviceError>,
{
    config
        .validate()
        .map_err(PhaseError::Invalid)
        .in_phase(Phase::Config)?;
    let config = config.absolutized();
    let run_dir = config.run_dir.clone();
    fs::create_dir_all(&run_dir)
        .map_err(|e| PhaseError::Io(run_dir.clone(), e))
        .in_phase(Phase::Artifacts)?;

    let mut meta = RunMeta {
        config: config.clone(),
        embedder: None,
        retrieved: Vec::new(),
        category_fallback: false,
        status: RunStatus::Aborted,
        error: None,
        app_id: None,
        fusion_calls: 0,
        decision_calls: 0,
        report: None,
    };
    let result = run_stages(&config, provider, connect, &mut meta);
    match &result {
        Ok(outcome) => {
            meta.status = outcome.status;
            meta.report = Some(outcome.report.clone());
        }
        Err(e) => {
            warn!(phase = %e.phase, error = %e.source, "pipeline aborted");
            meta.status = RunStatus::Aborted;
            meta.error = Some(e.to_string());
            if let Some(partial) = e.partial() {
                meta.report = Some(partial.report.clone());
                meta.decision_calls = partial.report.provider_calls;
            }
        }
    }
    write_json(&run_dir.join(META_FILE), &meta)?;
    result
}

fn run_stages<F>(
    config: &RunConfig,
    provider: Arc<dyn LlmProvider>,
    connect: F,
    meta: &mut RunMeta,
) -> Result<PipelineOutcome, PipelineError>
where
    F: FnOnce() -> Result<Box<dyn DeviceBackend>, DeviceError>,
{
    let run_dir = &config.run_dir;
    let transcript = run_dir.join(TRANSCRIPT_FILE);
    fs::write(&transcript, b"")
        .map_err(|e| PhaseError::Io(transcript.clone(), e))
        .in_phase(Phase::Artifacts)?;
    let sink = TranscriptSink::create(&transcript).in_phase(Phase::Artifacts)?;

    let related: Vec<TestCase> = if config.no_retrieval {
        info!("retrieval disabled, fusing from the requirement alone");
        Vec::new()
    } else {
        let dir = config.store_dir.as_deref().expect("validated");
        let store = match &config.embedder_spec {
            Some(spec) => KnowledgeStore::open_with(dir, spec.build()),
            None => KnowledgeStore::open(dir),
        }
        .in_phase(Phase::Retrieval)?;
        meta.embedder = Some(store.embedder().name());
        let (results, widened) = store
            .retrieve_with_fallback(
                &config.requirement,
                &config.category,
                config.exclude_app.as_deref(),
                config.top_sim,
            )
            .in_phase(Phase::Retrieval)?;
        meta.category_fallback = widened;
        meta.retrieved = results
            .iter()
            .map(|r| RetrievedCase {
                app_id: r.entry.app_id.clone(),
                category: r.entry.category.clone(),
                score: r.score,
                summary: r.entry.summary.clone(),
            })
            .collect();
        info!(
            retrieved = results.len(),
            apps = ?meta.retrieved.iter().map(|r| r.app_id.as_str()).collect::<Vec<_>>(),
            "related cases retrieved"
        );
        results.into_iter().map(|r| r.entry.case).collect()
    };

    let mut fusion_llm = LlmSession::new(FUSION_SESSION, provider.clone()).with_sink(sink.clone());
    let fused = fuse(
        &config.requirement,
        &related,
        &config.category,
        &mut fusion_llm,
    );
    meta.fusion_calls = fusion_llm.calls();
    let logic = fused.in_phase(Phase::Fusion)?;
    logic
        .save(&run_dir.join(LOGIC_FILE))
        .in_phase(Phase::Artifacts)?;
    info!(steps = logic.len(), "business logic fused");

    let backend = connect().in_phase(Phase::Perception)?;
    let mut device = DeviceSession::new(backend)
        .with_artifacts(run_dir)
        .in_phase(Phase::Artifacts)?;
    device.perceive_with_retry().in_phase(Phase::Perception)?;

    let mut decision_llm = LlmSession::new(DECISION_SESSION, provider).with_sink(sink);
    let decision_config = DecisionConfig {
        step_num: config.step_num,
        attempt_limit: config.attempt_limit,
        budget_multiplier: config.call_budget_multiplier,
        trace_path: Some(run_dir.join(TRACE_FILE)),
    };
    let run = run_decision_loop(
        &config.requirement,
        &logic,
        &mut device,
        &mut decision_llm,
        &decision_config,
    );
    meta.decision_calls = decision_llm.calls();
    let run = match run {
        Ok(run) => run,
        Err(e) => {
            if let DecisionError::SessionAborted { partial, .. } = &e {
                write_json(&run_dir.join(HISTORY_FILE), &partial.history)?;
            }
            return Err(e).in_phase(Phase::Decision);
        }
    };
    write_json(&run_dir.join(HISTORY_FILE), &run.history)?;

    let app_id = device.current_app().in_phase(Phase::Synthesis)?;
    meta.app_id = Some(app_id.clone());
    let case =
        synthesize_case(&run.history, &app_id, &config.category).in_phase(Phase::Synthesis)?;
    case.save(&run_dir.join(CASE_FILE))
        .in_phase(Phase::Artifacts)?;

    let status = if run.report.all_completed() {
        RunStatus::Perfect
    } else {
        RunStatus::CompletedWithSkips
    };
    info!(
        ?status,
        events = case.event_count(),
        assertions = case.assertion_count(),
        "test case generated"
    );
    Ok(PipelineOutcome {
        case,
        logic,
        status,
        report: run.report,
        retrieved: meta.retrieved.clone(),
        run_dir: run_dir.clone(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("artifacts serialize") + "\n";
    fs::write(path, text)
        .map_err(|e| PhaseError::Io(path.to_path_buf(), e))
        .in_phase(Phase::Artifacts)
}

/// Re-runs a finished run from its directory: same parameters, with the
/// recorded transcript standing in for the provider. The new artifacts go
/// to `out_dir`.
pub fn rerun_from_transcript(
    run_dir: &Path,
    out_dir: &Path,
) -> Result<PipelineOutcome, PipelineError> {
    let meta = RunMeta::load(run_dir)?;
    let records = TranscriptSink::read(&run_dir.join(TRANSCRIPT_FILE)).in_phase(Phase::Config)?;
    let provider: Arc<dyn LlmProvider> = Arc::new(crate::llm::ScriptedProvider::new(
        crate::llm::ScriptedTranscript::from_records(&records),
    ));
    let mut config = meta.config;
    config.run_dir = out_dir.to_path_buf();
    let backend = config.backend_spec.clone();
    run_pipeline_with(&config, provider, move || backend.connect())
}

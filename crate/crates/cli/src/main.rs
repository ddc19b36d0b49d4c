use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tracing::info;
use tracing_subscriber::EnvFilter;

use logidroid_core::device::BackendSpec;
use logidroid_core::eval::{
    evaluate_corpus, load_annotations, load_cases, pair_cases, Annotations,
};
use logidroid_core::fusion::fuse;
use logidroid_core::knowledge::{
    build_store, load_corpus, EmbedderSpec, HeuristicSummarizer, KnowledgeStore,
};
use logidroid_core::llm::{LlmProvider, LlmSession, ProviderSpec, TranscriptSink};
use logidroid_core::pipeline::{
    rerun_from_transcript, run_pipeline, RunConfig, RunStatus, CASE_FILE, DEFAULT_TOP_SIM,
    TRANSCRIPT_FILE,
};

#[derive(Parser)]
#[command(
    name = "logidroid",
    version,
    about = "Generate functional GUI tests from retrieved test knowledge"
)]
struct Cli {
    /// Directory for run artifacts (default: runs/run-<unix time>).
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,

    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize, embed and store a corpus of test cases.
    BuildDb(BuildDbArgs),
    /// Show the cases retrieved for a requirement.
    Query(QueryArgs),
    /// Fuse retrieved cases into business logic.
    Fuse(FuseArgs),
    /// Run the full pipeline against a device and write the generated case.
    Generate(GenerateArgs),
    /// Score generated cases against ground truth.
    Eval(EvalArgs),
    /// Re-run a finished run from its recorded transcript and compare cases.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct BuildDbArgs {
    /// Corpus directory (with manifest.json or bare case files) or manifest file.
    #[arg(long)]
    cases: PathBuf,
    /// Store directory to create.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "deterministic")]
    embedder: EmbedderSpec,
    /// Summary provider; the built-in heuristic summarizer when omitted.
    #[arg(long)]
    llm: Option<ProviderSpec>,
}

#[derive(Args)]
struct RetrievalArgs {
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long)]
    category: String,
    #[arg(long)]
    requirement: String,
    #[arg(long, default_value_t = DEFAULT_TOP_SIM)]
    top: usize,
    #[arg(long)]
    exclude_app: Option<String>,
    /// Override the embedder recorded in the store.
    #[arg(long)]
    embedder: Option<EmbedderSpec>,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    retrieval: RetrievalArgs,
}

#[derive(Args)]
struct FuseArgs {
    #[command(flatten)]
    retrieval: RetrievalArgs,
    #[arg(long)]
    llm: ProviderSpec,
    #[arg(long)]
    out: PathBuf,
    /// Fuse from the requirement alone.
    #[arg(long)]
    no_retrieval: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    retrieval: RetrievalArgs,
    /// Simulated app model.
    #[arg(long, conflicts_with = "device", required_unless_present = "device")]
    app_model: Option<PathBuf>,
    /// Real device, as adb:<serial>.
    #[arg(long)]
    device: Option<BackendSpec>,
    #[arg(long)]
    llm: ProviderSpec,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = logidroid_core::decision::DEFAULT_STEP_NUM)]
    step_num: usize,
    #[arg(long, default_value_t = logidroid_core::decision::DEFAULT_ATTEMPT_LIMIT)]
    attempt_limit: usize,
    /// Provider calls allowed per logic step.
    #[arg(long, default_value_t = logidroid_core::decision::DEFAULT_BUDGET_MULTIPLIER)]
    call_budget_multiplier: usize,
    #[arg(long)]
    no_retrieval: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    generated: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// The finished run to reproduce.
    from: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level)),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let run_dir = cli.run_dir;
    match cli.command {
        Command::BuildDb(a) => build_db(a),
        Command::Query(a) => query(a.retrieval),
        Command::Fuse(a) => fuse_cmd(a, run_dir),
        Command::Generate(a) => generate(a, run_dir),
        Command::Eval(a) => eval(a),
        Command::Replay(a) => replay(a, run_dir),
    }
}

fn default_run_dir() -> PathBuf {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    PathBuf::from("runs").join(format!("run-{secs}"))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn build_db(a: BuildDbArgs) -> Result<ExitCode> {
    let cases =
        load_corpus(&a.cases).with_context(|| format!("loading corpus {}", a.cases.display()))?;
    let provider: Arc<dyn LlmProvider> = match &a.llm {
        Some(spec) => spec.connect()?,
        None => Arc::new(HeuristicSummarizer),
    };
    let mut session = LlmSession::new("summaries", provider);
    let store = build_store(Some(&a.out), &cases, a.embedder.build(), &mut session)?;
    for (category, n) in store.category_counts() {
        println!("{category}\t{n}");
    }
    println!("{} entries written to {}", store.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn open_store(r: &RetrievalArgs) -> Result<KnowledgeStore> {
    let Some(dir) = &r.db else {
        bail!("--db is required");
    };
    let store = match &r.embedder {
        Some(spec) => KnowledgeStore::open_with(dir, spec.build()),
        None => KnowledgeStore::open(dir),
    };
    store.with_context(|| format!("opening store {}", dir.display()))
}

fn query(r: RetrievalArgs) -> Result<ExitCode> {
    let store = open_store(&r)?;
    let (results, widened) = store.retrieve_with_fallback(
        &r.requirement,
        &r.category,
        r.exclude_app.as_deref(),
        r.top,
    )?;
    if widened {
        eprintln!(
            "category `{}` is not in the store; searched every category",
            r.category
        );
    }
    let rows: Vec<serde_json::Value> = results
        .iter()
        .map(|res| {
            serde_json::json!({
                "app_id": res.entry.app_id,
                "category": res.entry.category,
                "score": res.score,
                "summary": res.entry.summary,
            })
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(ExitCode::SUCCESS)
}

fn fuse_cmd(a: FuseArgs, run_dir: Option<PathBuf>) -> Result<ExitCode> {
    let r = &a.retrieval;
    let related = if a.no_retrieval {
        Vec::new()
    } else {
        let store = open_store(r)?;
        let (results, _) = store.retrieve_with_fallback(
            &r.requirement,
            &r.category,
            r.exclude_app.as_deref(),
            r.top,
        )?;
        for res in &results {
            info!(app = %res.entry.app_id, score = res.score, "related case");
        }
        results.into_iter().map(|res| res.entry.case).collect()
    };
    let mut session = LlmSession::new(logidroid_core::pipeline::FUSION_SESSION, a.llm.connect()?);
    if let Some(dir) = &run_dir {
        fs::create_dir_all(dir)?;
        let path = dir.join(TRANSCRIPT_FILE);
        fs::write(&path, b"")?;
        session = session.with_sink(TranscriptSink::create(&path)?);
    }
    let logic = fuse(&r.requirement, &related, &r.category, &mut session)?;
    write_json(&a.out, &logic)?;
    println!("{}", logic.render());
    Ok(ExitCode::SUCCESS)
}

fn generate(a: GenerateArgs, run_dir: Option<PathBuf>) -> Result<ExitCode> {
    let backend = match (a.app_model, a.device) {
        (Some(model), None) => BackendSpec::Simulator(model),
        (None, Some(device)) => device,
        _ => bail!("exactly one of --app-model or --device is required"),
    };
    let r = a.retrieval;
    let mut config = RunConfig::new(
        r.requirement,
        r.category,
        a.llm,
        backend,
        run_dir.unwrap_or_else(default_run_dir),
    );
    config.store_dir = r.db;
    config.exclude_app = r.exclude_app;
    config.top_sim = r.top;
    config.embedder_spec = r.embedder;
    config.step_num = a.step_num;
    config.attempt_limit = a.attempt_limit;
    config.call_budget_multiplier = a.call_budget_multiplier;
    config.no_retrieval = a.no_retrieval;

    let outcome = match run_pipeline(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("artifacts kept in {}", config.run_dir.display());
            return Ok(ExitCode::from(RunStatus::Aborted.exit_code() as u8));
        }
    };
    outcome
        .case
        .save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!("{}", outcome.case.render_steps());
    eprintln!(
        "{:?}: {} events, {} assertions; run directory {}",
        outcome.status,
        outcome.case.event_count(),
        outcome.case.assertion_count(),
        outcome.run_dir.display()
    );
    Ok(ExitCode::from(outcome.status.exit_code() as u8))
}

fn eval(a: EvalArgs) -> Result<ExitCode> {
    let generated =
        load_cases(&a.generated).with_context(|| format!("loading {}", a.generated.display()))?;
    let truth = load_cases(&a.ground_truth)
        .with_context(|| format!("loading {}", a.ground_truth.display()))?;
    let annotations = match &a.annotations {
        Some(p) => load_annotations(p).with_context(|| format!("loading {}", p.display()))?,
        None => Annotations::new(),
    };
    let report = evaluate_corpus(&pair_cases(generated, truth, &annotations))?;
    write_json(&a.out, &report)?;
    println!(
        "perfect {}/{} ({:.2}), essential {}/{} ({:.2})",
        report.perfect,
        report.total,
        report.perfect_rate,
        report.essential_pass,
        report.total,
        report.essential_rate
    );
    Ok(ExitCode::SUCCESS)
}

fn replay(a: ReplayArgs, run_dir: Option<PathBuf>) -> Result<ExitCode> {
    let out = run_dir.unwrap_or_else(|| {
        a.from.with_file_name(format!(
            "{}-replay",
            a.from
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into())
        ))
    });
    if out == a.from {
        bail!("the replay needs its own run directory");
    }
    let outcome = rerun_from_transcript(&a.from, &out)?;
    let original = fs::read(a.from.join(CASE_FILE))
        .with_context(|| format!("reading {}", a.from.join(CASE_FILE).display()))?;
    let replayed = fs::read(out.join(CASE_FILE))?;
    if original == replayed {
        println!("identical case reproduced in {}", outcome.run_dir.display());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "replayed case differs from {}",
            a.from.join(CASE_FILE).display()
        );
        Ok(ExitCode::from(1))
    }
}

//! Experiment commands behind the `policy-debate` binary.

mod config;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use policy_debate::agents::{
    LiveBackend, LiveSettings, ReplayBackend, ReplayStore, SyntheticBackend, SyntheticSettings,
};
use policy_debate::eval::{evaluate, EvalError, EvaluationReport};
use policy_debate::ingest::{self, IngestError};
use policy_debate::transcript::{assemble, read_records, transcript_records, RecordKey, TranscriptError, TranscriptRecord};
use policy_debate::{
    Agent, AgentConfig, AgentError, AgentResponse, BackendSettings, BeliefError, BeliefName, BeliefParameters,
    DebateConfig, DebateContext, DebateTranscript, EngineError, MeetingInstance, PolicyLabel, TieBreak,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    AgentSpec, BackendKind, DataPaths, DebateSettings, ExperimentConfig, LiveSection, ReplaySection, Source,
    SyntheticSection,
};

/// Timestamp written by the deterministic backends.
pub const LOGICAL_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const SUMMARY_FILE: &str = "summary.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

impl From<AgentError> for CliError {
    fn from(e: AgentError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn required(p: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    p.clone()
        .ok_or_else(|| CliError::Config(format!("missing data path for {what}")))
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOutcome {
    pub store: PathBuf,
    pub slices: usize,
    pub excluded: usize,
}

pub fn write_store(path: &Path, slices: &[MeetingInstance]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for s in slices {
        serde_json::to_writer(&mut w, s).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?);
    }
    Ok(out)
}

pub fn read_store(path: &Path) -> Result<Vec<MeetingInstance>, CliError> {
    let slices: Vec<MeetingInstance> = read_jsonl(path)?;
    for s in &slices {
        s.validate(false)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(slices)
}

/// Builds slices from the configured CSVs and writes the store.
pub fn cmd_ingest(cfg: &ExperimentConfig) -> Result<IngestOutcome, CliError> {
    let beige = ingest::load_beige_book(&cfg.path(&required(&cfg.data.beige_book, "beige_book")?))?;
    let indicators = ingest::load_indicators(&cfg.path(&required(&cfg.data.indicators, "indicators")?))?;
    let rates = ingest::load_rates(&cfg.path(&required(&cfg.data.rates, "rates")?))?;
    let series: Vec<&str> = cfg.data.series.iter().map(String::as_str).collect();
    let built = ingest::build_slices(&beige, &indicators, &series, &rates);
    let slices = match cfg.sampling {
        Some(quota) => ingest::sample_against_history(&built.slices, &rates, quota, cfg.seed)?,
        None => built.slices,
    };
    let store = cfg.store_path();
    write_store(&store, &slices)?;
    Ok(IngestOutcome {
        store,
        slices: slices.len(),
        excluded: built.excluded.len(),
    })
}

// ---------------------------------------------------------------- run

/// One line of `summary.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeetingSummary {
    pub meeting_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_label: Option<PolicyLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_round: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus_reached: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MeetingSummary {
    fn completed(t: &DebateTranscript) -> Self {
        Self {
            meeting_id: t.meeting_id.clone(),
            final_label: Some(t.final_label),
            terminal_round: Some(t.terminal_round),
            consensus_reached: Some(t.consensus_reached),
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub meetings: usize,
    pub completed: usize,
    pub skipped: usize,
    /// (meeting_id, error) per aborted meeting.
    pub aborted: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep existing output and skip work already recorded.
    pub resume: bool,
}

/// Serves recorded responses first, then falls through to `inner`.
struct ResumeLayer<'a> {
    store: ReplayStore,
    inner: &'a dyn Agent,
}

impl Agent for ResumeLayer<'_> {
    fn respond(&self, config: &AgentConfig, ctx: &DebateContext<'_>) -> Result<AgentResponse, AgentError> {
        match self.store.get(&ctx.meeting.meeting_id, config.agent_index, ctx.round) {
            Some(r) => Ok(r.clone()),
            None => self.inner.respond(config, ctx),
        }
    }
}

fn build_agents(cfg: &ExperimentConfig) -> Result<Vec<AgentConfig>, CliError> {
    let roster = cfg.roster()?;
    let settings_for: Box<dyn Fn(BeliefName) -> Result<BackendSettings, CliError>> = match cfg.backend {
        BackendKind::Replay => Box::new(|_| Ok(BackendSettings::Replay)),
        BackendKind::Live => {
            let live = cfg
                .live
                .as_ref()
                .ok_or_else(|| CliError::Config("backend live needs a `live` section".into()))?;
            let settings = LiveSettings {
                endpoint: live.endpoint.clone(),
                model: live.model.clone(),
                temperature: live.temperature,
            };
            Box::new(move |_| Ok(BackendSettings::Live(settings.clone())))
        }
        BackendKind::Synthetic => {
            let syn = cfg
                .synthetic
                .as_ref()
                .ok_or_else(|| CliError::Config("backend synthetic needs a `synthetic` section".into()))?;
            let evidence = Arc::new(syn.evidence.resolve(&cfg.base_dir)?);
            let mut params: BTreeMap<BeliefName, Arc<BeliefParameters>> = BTreeMap::new();
            for b in roster.iter().map(|p| p.name).collect::<BTreeSet<_>>() {
                let src = syn
                    .parameters
                    .get(&b)
                    .ok_or_else(|| CliError::Config(format!("no synthetic parameters for {b}")))?;
                let p = match src {
                    Source::Inline(p) => p.clone(),
                    Source::Path(path) => BeliefParameters::load(&cfg.path(path))?,
                };
                params.insert(b, Arc::new(p));
            }
            Box::new(move |b| {
                Ok(BackendSettings::Synthetic(SyntheticSettings {
                    params: params[&b].clone(),
                    evidence: evidence.clone(),
                }))
            })
        }
    };
    roster
        .into_iter()
        .enumerate()
        .map(|(i, belief)| {
            Ok(AgentConfig {
                agent_index: i + 1,
                backend: settings_for(belief.name)?,
                belief,
            })
        })
        .collect()
}

/// Debate settings resolved from the experiment config.
pub fn debate_config(cfg: &ExperimentConfig) -> Result<DebateConfig, CliError> {
    let d = &cfg.debate;
    let config = DebateConfig {
        max_rounds: d.max_rounds,
        rounds_include_initial: d.rounds_include_initial,
        consensus_at_initial: d.consensus_at_initial,
        peers_include_self: d.peers_include_self,
        tie_break: d.tie_break.clone(),
        ablation: cfg.ablation()?,
        seed: cfg.seed,
        agent_concurrency: d.agent_concurrency,
        ..DebateConfig::new(build_agents(cfg)?)
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn build_backend(cfg: &ExperimentConfig) -> Result<Box<dyn Agent>, CliError> {
    Ok(match cfg.backend {
        BackendKind::Synthetic => Box::new(SyntheticBackend),
        BackendKind::Replay => {
            let r = cfg
                .replay
                .as_ref()
                .ok_or_else(|| CliError::Config("backend replay needs a `replay` section".into()))?;
            Box::new(ReplayBackend::new(ReplayStore::load(&cfg.path(&r.transcript))?))
        }
        BackendKind::Live => {
            let live = cfg
                .live
                .as_ref()
                .ok_or_else(|| CliError::Config("backend live needs a `live` section".into()))?;
            let mut options = live.options.clone();
            if let Some(dir) = &options.cache_dir {
                options.cache_dir = Some(cfg.path(dir));
            }
            let transport = policy_debate::agents::HttpTransport::new(Duration::from_secs(live.timeout_secs));
            Box::new(LiveBackend::from_env(options, Box::new(transport))?)
        }
    })
}

fn open_output(path: &Path, append: bool) -> Result<BufWriter<File>, CliError> {
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(io_err(path))?;
    Ok(BufWriter::new(file))
}

fn write_line<T: Serialize>(w: &mut BufWriter<File>, path: &Path, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *w, value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Runs every meeting in the store and writes `transcript.jsonl` and
/// `summary.jsonl` under the output directory. Meetings run on a pool of
/// `workers` threads; one writer appends their records in store order.
pub fn cmd_run(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutcome, CliError> {
    if cfg.workers == 0 {
        return Err(CliError::Config("workers must be positive".into()));
    }
    let config = debate_config(cfg)?;
    let backend = build_backend(cfg)?;
    let meetings = read_store(&cfg.store_path())?;
    let beliefs: Vec<BeliefName> = config.agents.iter().map(|a| a.belief.name).collect();

    let out_dir = cfg.out_dir();
    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let transcript_path = out_dir.join(TRANSCRIPT_FILE);
    let summary_path = out_dir.join(SUMMARY_FILE);

    let mut existing: Vec<TranscriptRecord> = Vec::new();
    let mut done: Vec<MeetingSummary> = Vec::new();
    if opts.resume {
        if transcript_path.exists() {
            existing = read_records(&transcript_path)?;
        }
        if summary_path.exists() {
            done = read_jsonl::<MeetingSummary>(&summary_path)?
                .into_iter()
                .filter(|s| s.error.is_none())
                .collect();
        }
    }
    let done_ids: BTreeSet<String> = done.iter().map(|s| s.meeting_id.clone()).collect();
    let mut written: BTreeSet<RecordKey> = existing.iter().map(TranscriptRecord::key).collect();

    let mut transcript_out = open_output(&transcript_path, opts.resume)?;
    // Aborted summaries from an earlier attempt are dropped so retries do
    // not leave duplicates.
    let mut summary_out = open_output(&summary_path, false)?;
    for s in &done {
        write_line(&mut summary_out, &summary_path, s)?;
    }

    let layered = ResumeLayer {
        store: ReplayStore::from_records(&existing),
        inner: backend.as_ref(),
    };
    let todo: Vec<&MeetingInstance> = meetings.iter().filter(|m| !done_ids.contains(&m.meeting_id)).collect();
    let live_clock = cfg.backend == BackendKind::Live;
    let mut stamp = move || {
        if live_clock {
            chrono::Utc::now().to_rfc3339()
        } else {
            LOGICAL_TIMESTAMP.to_owned()
        }
    };

    let mut outcome = RunOutcome {
        out_dir: out_dir.clone(),
        meetings: meetings.len(),
        completed: 0,
        skipped: meetings.len() - todo.len(),
        aborted: Vec::new(),
    };

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<DebateTranscript, EngineError>)>();
    std::thread::scope(|s| -> Result<(), CliError> {
        for _ in 0..cfg.workers.min(todo.len().max(1)) {
            let tx = tx.clone();
            let (next, todo, config, layered) = (&next, &todo, &config, &layered);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(meeting) = todo.get(i) else { break };
                let result = policy_debate::run_debate(config, layered, meeting);
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: HashMap<usize, Result<DebateTranscript, EngineError>> = HashMap::new();
        let mut cursor = 0;
        for (i, result) in rx {
            pending.insert(i, result);
            while let Some(result) = pending.remove(&cursor) {
                let meeting_id = &todo[cursor].meeting_id;
                match result {
                    Ok(t) => {
                        for rec in transcript_records(&t, &beliefs, &mut stamp) {
                            if written.insert(rec.key()) {
                                write_line(&mut transcript_out, &transcript_path, &rec)?;
                            }
                        }
                        write_line(&mut summary_out, &summary_path, &MeetingSummary::completed(&t))?;
                        outcome.completed += 1;
                    }
                    Err(e) => {
                        log::error!("meeting {meeting_id} aborted: {e}");
                        write_line(
                            &mut summary_out,
                            &summary_path,
                            &MeetingSummary {
                                meeting_id: meeting_id.clone(),
                                final_label: None,
                                terminal_round: None,
                                consensus_reached: None,
                                error: Some(e.to_string()),
                            },
                        )?;
                        outcome.aborted.push((meeting_id.clone(), e.to_string()));
                    }
                }
                cursor += 1;
            }
        }
        Ok(())
    })?;
    Ok(outcome)
}

// ---------------------------------------------------------------- eval

#[derive(Deserialize)]
struct TruthLine {
    meeting_id: String,
    true_label: PolicyLabel,
}

/// Reads `meeting_id` and `true_label` from each JSONL line; other fields
/// are ignored, so a slice store works as a truths file.
pub fn read_truths(path: &Path) -> Result<HashMap<String, PolicyLabel>, CliError> {
    Ok(read_jsonl::<TruthLine>(path)?
        .into_iter()
        .map(|t| (t.meeting_id, t.true_label))
        .collect())
}

/// Evaluates a transcript against true labels and writes `report.json` and
/// `report.txt` into `out_dir`.
pub fn cmd_eval(
    transcript: &Path,
    truths: &Path,
    out_dir: &Path,
    tie_break: &TieBreak,
) -> Result<EvaluationReport, CliError> {
    let records = read_records(transcript)?;
    let assembled = assemble(&records, tie_break)?;
    let truth_map = read_truths(truths)?;
    let labels: Vec<PolicyLabel> = assembled
        .iter()
        .map(|a| {
            truth_map.get(&a.transcript.meeting_id).copied().ok_or_else(|| {
                CliError::Config(format!("no true label for meeting {} in {}", a.transcript.meeting_id, truths.display()))
            })
        })
        .collect::<Result<_, _>>()?;
    let report = evaluate(&assembled, &labels, tie_break)?;

    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let json_path = out_dir.join(REPORT_JSON);
    let mut json = serde_json::to_string_pretty(&report).map_err(|source| CliError::Json {
        path: json_path.clone(),
        source,
    })?;
    json.push('\n');
    std::fs::write(&json_path, json).map_err(io_err(&json_path))?;
    let text_path = out_dir.join(REPORT_TEXT);
    std::fs::write(&text_path, report.to_text()).map_err(io_err(&text_path))?;
    Ok(report)
}

/// Renders a saved `report.json` as text tables.
pub fn cmd_report(report: &Path) -> Result<String, CliError> {
    let r: EvaluationReport = config::read_json(report)?;
    Ok(r.to_text())
}

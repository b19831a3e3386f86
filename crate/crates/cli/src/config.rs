use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use policy_debate::agents::{EvidenceMap, LiveOptions};
use policy_debate::ingest::ClassQuota;
use policy_debate::{AblationConfig, BeliefName, BeliefParameters, BeliefProfile, TieBreak};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    #[default]
    Synthetic,
    Replay,
}

/// Either a path to a JSON file or the value inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn resolve(&self, base: &Path) -> Result<T, CliError> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => read_json(&resolve_path(base, p)),
        }
    }
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub beige_book: Option<PathBuf>,
    pub indicators: Option<PathBuf>,
    pub rates: Option<PathBuf>,
    /// Indicator series keys, in prompt order.
    pub series: Vec<String>,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self {
            beige_book: None,
            indicators: None,
            rates: None,
            series: policy_debate::ingest::DEFAULT_SERIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebateSettings {
    pub max_rounds: usize,
    pub rounds_include_initial: bool,
    pub consensus_at_initial: bool,
    pub peers_include_self: bool,
    pub tie_break: TieBreak,
    pub agent_concurrency: usize,
}

impl Default for DebateSettings {
    fn default() -> Self {
        Self {
            max_rounds: 10,
            rounds_include_initial: false,
            consensus_at_initial: true,
            peers_include_self: true,
            tie_break: TieBreak::default(),
            agent_concurrency: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub belief: BeliefName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl AgentSpec {
    pub fn profile(&self) -> Result<BeliefProfile, CliError> {
        match &self.description {
            None => Ok(BeliefProfile::standard(self.belief)),
            Some(d) => BeliefProfile::new(self.belief, d.clone()).map_err(|e| CliError::Config(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    /// Stance-model parameters per belief category.
    pub parameters: BTreeMap<BeliefName, Source<BeliefParameters>>,
    pub evidence: Source<EvidenceMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiveSection {
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub options: LiveOptions,
}

fn default_timeout() -> u64 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySection {
    pub transcript: PathBuf,
}

/// One experiment, as a single JSON document. Relative paths resolve
/// against the directory holding the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataPaths,
    /// When set, ingest draws this many slices per class.
    pub sampling: Option<ClassQuota>,
    /// Slice store; defaults to `<out_dir>/slices.jsonl`.
    pub store: Option<PathBuf>,
    /// JSONL with `meeting_id` and `true_label` per line; defaults to the store.
    pub truths: Option<PathBuf>,
    pub preset: u8,
    pub backend: BackendKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Meetings run concurrently.
    pub workers: usize,
    pub debate: DebateSettings,
    /// Defaults to the seven-member roster.
    pub agents: Option<Vec<AgentSpec>>,
    pub synthetic: Option<SyntheticSection>,
    pub live: Option<LiveSection>,
    pub replay: Option<ReplaySection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataPaths::default(),
            sampling: None,
            store: None,
            truths: None,
            preset: 1,
            backend: BackendKind::default(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            workers: 4,
            debate: DebateSettings::default(),
            agents: None,
            synthetic: None,
            live: None,
            replay: None,
            base_dir: PathBuf::from("."),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = read_json(path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if cfg.base_dir.as_os_str().is_empty() {
            cfg.base_dir = PathBuf::from(".");
        }
        Ok(cfg)
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        resolve_path(&self.base_dir, p)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.path(&self.out_dir)
    }

    pub fn store_path(&self) -> PathBuf {
        match &self.store {
            Some(p) => self.path(p),
            None => self.out_dir().join("slices.jsonl"),
        }
    }

    pub fn truths_path(&self) -> PathBuf {
        match &self.truths {
            Some(p) => self.path(p),
            None => self.store_path(),
        }
    }

    pub fn ablation(&self) -> Result<AblationConfig, CliError> {
        AblationConfig::preset(self.preset).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn roster(&self) -> Result<Vec<BeliefProfile>, CliError> {
        match &self.agents {
            None => Ok(BeliefProfile::default_roster()),
            Some(specs) if specs.is_empty() => Err(CliError::Config("agents list is empty".into())),
            Some(specs) => specs.iter().map(AgentSpec::profile).collect(),
        }
    }
}

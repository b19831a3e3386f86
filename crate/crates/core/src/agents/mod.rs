//! Agent backends: one `respond` call per agent per round.
//!
//! Three implementations share the [`Agent`] trait: a live chat-completion
//! client, a synthetic agent driven by the latent-stance model, and a replay
//! agent serving responses from a recorded transcript.

mod live;
mod replay;
mod synthetic;

pub use live::{
    cache_key, live_request_payload, parse_chat_reply, ChatMessage, ChatRequest, ChatTransport, LiveBackend,
    LiveOptions, LiveSettings, TransportError, DEFAULT_API_KEY_ENV, DEFAULT_TEMPERATURE,
};
#[cfg(feature = "http")]
pub use live::HttpTransport;
pub use replay::{ReplayBackend, ReplayStore};
pub use synthetic::{synthetic_evidence_of, EvidenceMap, EvidenceVariants, SyntheticBackend, SyntheticSettings};

use thiserror::Error;

use crate::belief::BeliefError;
use crate::domain::{AgentResponse, BeliefProfile, MeetingInstance};
use crate::prompts::AblationConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("could not extract a label: {0}")]
    Parse(String),
    #[error("no recorded response for meeting {meeting_id} agent {agent_index} round {round}")]
    ReplayMiss {
        meeting_id: String,
        agent_index: usize,
        round: usize,
    },
    #[error("no evidence mapping for meeting {0}")]
    UnknownMeeting(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// Backend-specific settings carried by each agent.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSettings {
    Live(LiveSettings),
    Synthetic(SyntheticSettings),
    Replay,
}

impl BackendSettings {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendSettings::Live(_) => "live",
            BackendSettings::Synthetic(_) => "synthetic",
            BackendSettings::Replay => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    /// 1-based, unique within a debate.
    pub agent_index: usize,
    pub belief: BeliefProfile,
    pub backend: BackendSettings,
}

/// Everything an agent conditions on for one call.
#[derive(Debug, Clone, Copy)]
pub struct DebateContext<'a> {
    pub meeting: &'a MeetingInstance,
    pub round: usize,
    /// All n previous-round responses with their agents' beliefs, in agent
    /// order. Present iff `round > 0`.
    pub previous_responses: Option<&'a [(AgentResponse, BeliefProfile)]>,
    pub own_previous: Option<&'a AgentResponse>,
    pub ablation: &'a AblationConfig,
    /// Whether the agent counts its own previous answer among the peers.
    pub peers_include_self: bool,
    /// Rendered prompt for this call.
    pub prompt: &'a str,
    /// Run seed; backends derive their own sub-streams from it.
    pub seed: u64,
}

impl DebateContext<'_> {
    pub fn check(&self) -> Result<(), AgentError> {
        let later = self.round > 0;
        if later != self.previous_responses.is_some() || later != self.own_previous.is_some() {
            return Err(AgentError::Config(format!(
                "round {} context has previous={} own_previous={}",
                self.round,
                self.previous_responses.is_some(),
                self.own_previous.is_some()
            )));
        }
        Ok(())
    }
}

pub trait Agent: Send + Sync {
    fn respond(&self, config: &AgentConfig, context: &DebateContext<'_>) -> Result<AgentResponse, AgentError>;
}

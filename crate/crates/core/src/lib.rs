//! Multi-agent debate for central-bank policy-rate prediction.
//!
//! Agents with distinct economic beliefs each predict Raise, Hold or Lower
//! for a meeting, then revise after reading one another's answers until they
//! agree or run out of rounds.

pub mod agents;
pub mod belief;
pub mod domain;
pub mod engine;
pub mod eval;
pub mod ingest;
pub mod prompts;
pub mod seed;
pub mod transcript;

pub use agents::{Agent, AgentConfig, AgentError, BackendSettings, DebateContext};
pub use belief::{BeliefError, BeliefParameters, EvidenceToken, StanceSpace};
pub use domain::{
    AgentResponse, BeliefName, BeliefProfile, DebateTranscript, DomainError, MeetingInstance, PolicyLabel, TieBreak,
};
pub use engine::{run_debate, DebateConfig, EngineError};
pub use eval::{ConfusionMatrix, EvalError, MetricsReport, TransitionMatrix};
pub use prompts::AblationConfig;

//! Round-based debate protocol.
//!
//! Round 0: every agent answers independently. Round t > 0: every agent sees
//! all round t-1 answers and updates. The debate stops at the first
//! unanimous round; otherwise the plurality of the last round decides.
//! Rounds are strict barriers; calls within a round may run concurrently.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::agents::{Agent, AgentConfig, AgentError, DebateContext};
use crate::domain::{
    consensus_check, majority_vote_with, AgentResponse, BeliefProfile, DebateTranscript, MeetingInstance, PolicyLabel,
    TieBreak,
};
use crate::prompts::{render_round0, render_round_t, AblationConfig, PeerView, PromptError};
use crate::seed::sha256_hex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("meeting {meeting_id} aborted at round {round}, agent {agent_index}: {source}")]
    MeetingAborted {
        meeting_id: String,
        round: usize,
        agent_index: usize,
        #[source]
        source: AgentError,
    },
    #[error("meeting {meeting_id}: {source}")]
    Prompt {
        meeting_id: String,
        #[source]
        source: PromptError,
    },
    #[error("invalid debate configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebateConfig {
    pub agents: Vec<AgentConfig>,
    /// Number of update rounds after round 0 (see `rounds_include_initial`).
    pub max_rounds: usize,
    /// When set, `max_rounds` counts round 0 too, so the last round index is
    /// `max_rounds - 1` instead of `max_rounds`.
    pub rounds_include_initial: bool,
    /// Stop on unanimity already at round 0.
    pub consensus_at_initial: bool,
    /// Whether each agent's peer block lists its own previous answer.
    pub peers_include_self: bool,
    pub tie_break: TieBreak,
    pub ablation: AblationConfig,
    pub seed: u64,
    /// Upper bound on concurrent agent calls within a round.
    pub agent_concurrency: usize,
}

impl DebateConfig {
    pub const DEFAULT_AGENTS: usize = 7;
    pub const DEFAULT_MAX_ROUNDS: usize = 10;

    /// Default protocol settings around the given agents.
    pub fn new(agents: Vec<AgentConfig>) -> Self {
        Self {
            agents,
            max_rounds: Self::DEFAULT_MAX_ROUNDS,
            rounds_include_initial: false,
            consensus_at_initial: true,
            peers_include_self: true,
            tie_break: TieBreak::default(),
            ablation: AblationConfig::full(),
            seed: 0,
            agent_concurrency: 1,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    /// Index of the last round a debate may reach.
    pub fn last_round(&self) -> usize {
        if self.rounds_include_initial {
            self.max_rounds.saturating_sub(1)
        } else {
            self.max_rounds
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.agents.is_empty() {
            return Err(EngineError::InvalidConfig("no agents".into()));
        }
        if self.rounds_include_initial && self.max_rounds == 0 {
            return Err(EngineError::InvalidConfig("max_rounds must be at least 1".into()));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if a.agent_index != i + 1 {
                return Err(EngineError::InvalidConfig(format!(
                    "agent at position {} has index {}; indices must be 1..=n in order",
                    i + 1,
                    a.agent_index
                )));
            }
        }
        if self.agent_concurrency == 0 {
            return Err(EngineError::InvalidConfig("agent_concurrency must be positive".into()));
        }
        if !self.peers_include_self && self.agents.len() < 2 {
            return Err(EngineError::InvalidConfig("excluding self leaves no peers".into()));
        }
        Ok(())
    }

    fn beliefs(&self) -> Vec<BeliefProfile> {
        self.agents.iter().map(|a| a.belief.clone()).collect()
    }
}

/// One round's answers and the hashes of the prompts that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutput {
    pub responses: Vec<AgentResponse>,
    pub prompt_hashes: Vec<String>,
}

impl RoundOutput {
    pub fn labels(&self) -> Vec<PolicyLabel> {
        self.responses.iter().map(|r| r.label).collect()
    }
}

/// One agent's answer and prompt hash, or why the meeting stops.
type CallResult = Result<(AgentResponse, String), EngineError>;

fn render_prompt(
    config: &DebateConfig,
    agent: &AgentConfig,
    meeting: &MeetingInstance,
    round: usize,
    previous: Option<&[(AgentResponse, BeliefProfile)]>,
) -> Result<String, PromptError> {
    match previous {
        None => render_round0(meeting, &agent.belief, &config.ablation),
        Some(prev) => {
            let peers: Vec<PeerView> = prev
                .iter()
                .enumerate()
                .filter(|(j, _)| config.peers_include_self || j + 1 != agent.agent_index)
                .map(|(j, (response, belief))| PeerView {
                    agent_number: j + 1,
                    response,
                    belief,
                })
                .collect();
            let expected = if config.peers_include_self { prev.len() } else { prev.len() - 1 };
            let own = &prev[agent.agent_index - 1].0;
            debug_assert!(round > 0);
            render_round_t(meeting, &agent.belief, own, &peers, expected, &config.ablation)
        }
    }
}

/// Runs one round. `previous` must be present iff `round > 0`.
///
/// A backend outage after round 0 carries the agent's previous answer
/// forward; any other failure aborts the meeting.
pub fn run_round(
    config: &DebateConfig,
    backend: &dyn Agent,
    meeting: &MeetingInstance,
    round: usize,
    previous: Option<&[AgentResponse]>,
) -> Result<RoundOutput, EngineError> {
    config.validate()?;
    let n = config.n_agents();
    if (round > 0) != previous.is_some() {
        return Err(EngineError::InvalidConfig(format!(
            "round {round} called with previous={}",
            previous.is_some()
        )));
    }
    if let Some(prev) = previous {
        if prev.len() != n {
            return Err(EngineError::InvalidConfig(format!("previous round has {} entries for {n} agents", prev.len())));
        }
    }
    let paired: Option<Vec<(AgentResponse, BeliefProfile)>> =
        previous.map(|prev| prev.iter().cloned().zip(config.beliefs()).collect());

    let call = |i: usize| -> CallResult {
        let agent = &config.agents[i];
        let prompt = render_prompt(config, agent, meeting, round, paired.as_deref()).map_err(|source| EngineError::Prompt {
            meeting_id: meeting.meeting_id.clone(),
            source,
        })?;
        let ctx = DebateContext {
            meeting,
            round,
            previous_responses: paired.as_deref(),
            own_previous: previous.map(|p| &p[i]),
            ablation: &config.ablation,
            peers_include_self: config.peers_include_self,
            prompt: &prompt,
            seed: config.seed,
        };
        let hash = sha256_hex(&prompt);
        match backend.respond(agent, &ctx) {
            Ok(resp) => Ok((resp, hash)),
            Err(AgentError::BackendUnavailable(msg)) if round > 0 => {
                log::warn!(
                    "meeting {} round {round} agent {}: backend unavailable ({msg}); carrying previous answer forward",
                    meeting.meeting_id,
                    agent.agent_index
                );
                Ok((previous.expect("round > 0")[i].clone(), hash))
            }
            Err(source) => Err(EngineError::MeetingAborted {
                meeting_id: meeting.meeting_id.clone(),
                round,
                agent_index: agent.agent_index,
                source,
            }),
        }
    };

    let results: Vec<CallResult> = if config.agent_concurrency <= 1 || n == 1 {
        (0..n).map(call).collect()
    } else {
        let slots: Mutex<Vec<Option<CallResult>>> = Mutex::new(vec![None; n]);
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..config.agent_concurrency.min(n) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let r = call(i);
                    slots.lock().expect("round slots")[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .expect("round slots")
            .into_iter()
            .map(|r| r.expect("every agent slot filled"))
            .collect()
    };

    let mut out = RoundOutput {
        responses: Vec::with_capacity(n),
        prompt_hashes: Vec::with_capacity(n),
    };
    for r in results {
        let (resp, hash) = r?;
        out.responses.push(resp);
        out.prompt_hashes.push(hash);
    }
    Ok(out)
}

/// Runs a full debate for one meeting.
pub fn run_debate(config: &DebateConfig, backend: &dyn Agent, meeting: &MeetingInstance) -> Result<DebateTranscript, EngineError> {
    config.validate()?;
    let last = if config.ablation.enable_debate { config.last_round() } else { 0 };
    let mut rounds: Vec<RoundOutput> = vec![run_round(config, backend, meeting, 0, None)?];
    loop {
        let t = rounds.len() - 1;
        let labels = rounds[t].labels();
        let unanimous = consensus_check(&labels).map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        let stop_on_consensus = unanimous && (t > 0 || config.consensus_at_initial);
        if stop_on_consensus || t >= last {
            let final_label = if unanimous {
                labels[0]
            } else {
                majority_vote_with(&labels, &config.tie_break).map_err(|e| EngineError::InvalidConfig(e.to_string()))?
            };
            let (responses, prompt_hashes) = rounds.into_iter().map(|r| (r.responses, r.prompt_hashes)).unzip();
            return Ok(DebateTranscript {
                meeting_id: meeting.meeting_id.clone(),
                rounds: responses,
                prompt_hashes,
                terminal_round: t,
                final_label,
                consensus_reached: unanimous,
            });
        }
        let next = run_round(config, backend, meeting, t + 1, Some(&rounds[t].responses))?;
        rounds.push(next);
    }
}

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Agent, AgentConfig, AgentError, BackendSettings, DebateContext};
use crate::belief::{sample_label, BeliefError, BeliefParameters, EvidenceToken};
use crate::domain::{AgentResponse, MeetingInstance, PolicyLabel};
use crate::prompts::AblationConfig;
use crate::seed::agent_seed;

/// Replacement tokens used when an input is withheld from the agents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceVariants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remove_text: Option<EvidenceToken>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remove_indicators: Option<EvidenceToken>,
}

/// Meeting id → evidence token, plus ablation variants keyed by token.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceMap {
    pub meetings: BTreeMap<String, EvidenceToken>,
    #[serde(default)]
    pub variants: BTreeMap<EvidenceToken, EvidenceVariants>,
}

/// Token for a meeting under an ablation. A withheld input switches to the
/// configured variant; without one the base token is kept. Text is
/// resolved before indicators.
pub fn synthetic_evidence_of(
    map: &EvidenceMap,
    meeting: &MeetingInstance,
    ablation: &AblationConfig,
) -> Result<EvidenceToken, AgentError> {
    let mut token = map
        .meetings
        .get(&meeting.meeting_id)
        .cloned()
        .ok_or_else(|| AgentError::UnknownMeeting(meeting.meeting_id.clone()))?;
    if !ablation.include_text {
        if let Some(v) = map.variants.get(&token).and_then(|v| v.remove_text.clone()) {
            token = v;
        }
    }
    if !ablation.include_indicators {
        if let Some(v) = map.variants.get(&token).and_then(|v| v.remove_indicators.clone()) {
            token = v;
        }
    }
    Ok(token)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSettings {
    pub params: Arc<BeliefParameters>,
    pub evidence: Arc<EvidenceMap>,
}

/// Draws labels from the stance model. Stateless; all randomness comes from
/// the per-call seed.
#[derive(Debug, Default, Clone, Copy)]
pub struct SyntheticBackend;

impl Agent for SyntheticBackend {
    fn respond(&self, config: &AgentConfig, ctx: &DebateContext<'_>) -> Result<AgentResponse, AgentError> {
        ctx.check()?;
        let BackendSettings::Synthetic(settings) = &config.backend else {
            return Err(AgentError::Config(format!(
                "agent {} is configured for {}, not synthetic",
                config.agent_index,
                config.backend.kind()
            )));
        };
        let token = synthetic_evidence_of(&settings.evidence, ctx.meeting, ctx.ablation)?;
        if !settings.params.has_evidence(&token) {
            return Err(BeliefError::UnknownEvidence(token.0).into());
        }
        let peers: Vec<PolicyLabel> = ctx
            .previous_responses
            .unwrap_or_default()
            .iter()
            .enumerate()
            .filter(|(j, _)| ctx.peers_include_self || j + 1 != config.agent_index)
            .map(|(_, (r, _))| r.label)
            .collect();
        let seed = agent_seed(ctx.seed, &ctx.meeting.meeting_id, config.agent_index, ctx.round);
        Ok(sample_label(&settings.params, &token, &peers, seed)?)
    }
}

use std::collections::HashMap;
use std::path::Path;

use super::{Agent, AgentConfig, AgentError, DebateContext};
use crate::domain::AgentResponse;
use crate::transcript::{read_records, TranscriptError, TranscriptRecord};

/// Recorded responses keyed by (meeting, agent, round).
#[derive(Debug, Clone, Default)]
pub struct ReplayStore {
    responses: HashMap<(String, usize, usize), AgentResponse>,
}

impl ReplayStore {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a TranscriptRecord>) -> Self {
        let responses = records
            .into_iter()
            .map(|r| ((r.meeting_id.clone(), r.agent_index, r.round), r.response()))
            .collect();
        Self { responses }
    }

    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        Ok(Self::from_records(&read_records(path)?))
    }

    pub fn get(&self, meeting_id: &str, agent_index: usize, round: usize) -> Option<&AgentResponse> {
        self.responses.get(&(meeting_id.to_owned(), agent_index, round))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

/// Serves recorded responses, ignoring the prompt.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    store: ReplayStore,
}

impl ReplayBackend {
    pub fn new(store: ReplayStore) -> Self {
        Self { store }
    }
}

impl Agent for ReplayBackend {
    fn respond(&self, config: &AgentConfig, ctx: &DebateContext<'_>) -> Result<AgentResponse, AgentError> {
        ctx.check()?;
        self.store
            .get(&ctx.meeting.meeting_id, config.agent_index, ctx.round)
            .cloned()
            .ok_or_else(|| AgentError::ReplayMiss {
                meeting_id: ctx.meeting.meeting_id.clone(),
                agent_index: config.agent_index,
                round: ctx.round,
            })
    }
}

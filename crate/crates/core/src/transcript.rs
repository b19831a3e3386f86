//! JSONL transcript records: one object per (meeting, round, agent).

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    consensus_check, majority_vote_with, AgentResponse, BeliefName, DebateTranscript, PolicyLabel, TieBreak,
};

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("{path}:{line}: {reason}")]
    Format { path: String, line: usize, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("incomplete transcript for {meeting_id}: {reason}")]
    IncompleteTranscript { meeting_id: String, reason: String },
    #[error("duplicate record for meeting {meeting_id} round {round} agent {agent_index}")]
    DuplicateRecord {
        meeting_id: String,
        round: usize,
        agent_index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub meeting_id: String,
    pub round: usize,
    /// 1-based.
    pub agent_index: usize,
    pub belief_name: BeliefName,
    pub label: PolicyLabel,
    pub justification: String,
    pub prompt_hash: String,
    pub timestamp: String,
}

impl TranscriptRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            meeting_id: self.meeting_id.clone(),
            round: self.round,
            agent_index: self.agent_index,
        }
    }

    pub fn response(&self) -> AgentResponse {
        AgentResponse::new(self.label, self.justification.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub meeting_id: String,
    pub round: usize,
    pub agent_index: usize,
}

/// Flattens a transcript into records, round-major then agent order.
pub fn transcript_records(
    transcript: &DebateTranscript,
    beliefs: &[BeliefName],
    timestamp: &mut dyn FnMut() -> String,
) -> Vec<TranscriptRecord> {
    let mut out = Vec::new();
    for (round, responses) in transcript.rounds.iter().enumerate() {
        for (i, resp) in responses.iter().enumerate() {
            let prompt_hash = transcript
                .prompt_hashes
                .get(round)
                .and_then(|r| r.get(i))
                .cloned()
                .unwrap_or_default();
            out.push(TranscriptRecord {
                meeting_id: transcript.meeting_id.clone(),
                round,
                agent_index: i + 1,
                belief_name: beliefs[i],
                label: resp.label,
                justification: resp.justification.clone(),
                prompt_hash,
                timestamp: timestamp(),
            });
        }
    }
    out
}

pub fn write_record<W: Write>(w: &mut W, record: &TranscriptRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, record)?;
    w.write_all(b"\n")
}

pub fn read_records(path: &Path) -> Result<Vec<TranscriptRecord>, TranscriptError> {
    let file = File::open(path).map_err(|source| TranscriptError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| TranscriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| TranscriptError::Format {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// A transcript rebuilt from records, with each agent's belief.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledTranscript {
    pub transcript: DebateTranscript,
    pub beliefs: Vec<BeliefName>,
}

/// Groups records by meeting (first-appearance order) and rebuilds each
/// debate. The terminal round is the last recorded round; the final label is
/// the unanimous label if there is one, else the plurality under `tie_break`.
pub fn assemble(records: &[TranscriptRecord], tie_break: &TieBreak) -> Result<Vec<AssembledTranscript>, TranscriptError> {
    let mut order: Vec<&str> = Vec::new();
    let mut grouped: HashMap<&str, BTreeMap<(usize, usize), &TranscriptRecord>> = HashMap::new();
    for rec in records {
        let slot = grouped.entry(rec.meeting_id.as_str()).or_insert_with(|| {
            order.push(rec.meeting_id.as_str());
            BTreeMap::new()
        });
        if slot.insert((rec.round, rec.agent_index), rec).is_some() {
            return Err(TranscriptError::DuplicateRecord {
                meeting_id: rec.meeting_id.clone(),
                round: rec.round,
                agent_index: rec.agent_index,
            });
        }
    }

    let mut out = Vec::with_capacity(order.len());
    for meeting_id in order {
        let cells = &grouped[meeting_id];
        let incomplete = |reason: String| TranscriptError::IncompleteTranscript {
            meeting_id: meeting_id.to_owned(),
            reason,
        };
        let n = cells.keys().filter(|(r, _)| *r == 0).count();
        if n == 0 {
            return Err(incomplete("no round 0 records".into()));
        }
        let terminal = cells.keys().map(|(r, _)| *r).max().unwrap_or(0);
        let mut rounds = Vec::with_capacity(terminal + 1);
        let mut hashes = Vec::with_capacity(terminal + 1);
        let mut beliefs = Vec::with_capacity(n);
        for round in 0..=terminal {
            let mut row = Vec::with_capacity(n);
            let mut hrow = Vec::with_capacity(n);
            for agent in 1..=n {
                let rec = cells
                    .get(&(round, agent))
                    .ok_or_else(|| incomplete(format!("missing round {round} agent {agent}")))?;
                if round == 0 {
                    beliefs.push(rec.belief_name);
                } else if beliefs[agent - 1] != rec.belief_name {
                    return Err(incomplete(format!("agent {agent} changes belief at round {round}")));
                }
                row.push(rec.response());
                hrow.push(rec.prompt_hash.clone());
            }
            rounds.push(row);
            hashes.push(hrow);
        }
        if cells.len() != n * (terminal + 1) {
            return Err(incomplete(format!("{} records for {n} agents x {} rounds", cells.len(), terminal + 1)));
        }
        let labels: Vec<PolicyLabel> = rounds[terminal].iter().map(|r| r.label).collect();
        let unanimous = consensus_check(&labels).map_err(|e| incomplete(e.to_string()))?;
        let final_label = if unanimous {
            labels[0]
        } else {
            majority_vote_with(&labels, tie_break).map_err(|e| incomplete(e.to_string()))?
        };
        out.push(AssembledTranscript {
            transcript: DebateTranscript {
                meeting_id: meeting_id.to_owned(),
                rounds,
                prompt_hashes: hashes,
                terminal_round: terminal,
                final_label,
                consensus_reached: unanimous,
            },
            beliefs,
        });
    }
    Ok(out)
}

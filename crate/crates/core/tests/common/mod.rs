#![allow(dead_code)]

use std::path::PathBuf;

use policy_debate::domain::{IndicatorWindow, RateHistoryEntry};
use policy_debate::{AgentResponse, BeliefName, BeliefProfile, MeetingInstance, PolicyLabel};

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(golden_dir().join(name)).unwrap()
}

pub fn meeting() -> MeetingInstance {
    MeetingInstance {
        meeting_id: "2007-09-18".into(),
        month: "September 2007".into(),
        text: "Economic activity continued to expand in July and early August. \
Residential real estate markets weakened further."
            .into(),
        indicators: vec![
            IndicatorWindow {
                series: "unemployment_rate".into(),
                values: vec![4.5, 4.6, 4.7],
            },
            IndicatorWindow {
                series: "inflation_rate".into(),
                values: vec![2.7, 2.4, 2.0],
            },
        ],
        rate_history: vec![
            RateHistoryEntry {
                date: "2007-06-28".into(),
                decision: PolicyLabel::Hold,
                target_lower: 5.25,
                target_upper: 5.25,
            },
            RateHistoryEntry {
                date: "2007-08-07".into(),
                decision: PolicyLabel::Hold,
                target_lower: 5.25,
                target_upper: 5.25,
            },
        ],
        true_label: PolicyLabel::Lower,
    }
}

pub fn three_beliefs() -> Vec<BeliefProfile> {
    [BeliefName::StrongHawkish, BeliefName::Neutral, BeliefName::StrongDovish]
        .into_iter()
        .map(BeliefProfile::standard)
        .collect()
}

pub fn three_responses() -> Vec<AgentResponse> {
    vec![
        AgentResponse::new(PolicyLabel::Raise, "Inflation pressures remain elevated."),
        AgentResponse::new(PolicyLabel::Hold, "Growth is moderating while prices are stable."),
        AgentResponse::new(PolicyLabel::Lower, "Housing weakness threatens the expansion."),
    ]
}

use std::collections::BTreeMap;
use std::sync::Arc;

use policy_debate::agents::{EvidenceMap, SyntheticSettings};
use policy_debate::belief::{BeliefParameters, EvidenceToken, StanceSpace};
use policy_debate::{AgentConfig, BackendSettings, DebateConfig};

/// Three-stance parameters whose prior leans toward `belief`.
pub fn stance_params(belief: BeliefName) -> BeliefParameters {
    let prior = match belief {
        BeliefName::StrongHawkish => vec![0.7, 0.2, 0.1],
        BeliefName::ModeratelyHawkish => vec![0.5, 0.35, 0.15],
        BeliefName::Neutral => vec![0.2, 0.6, 0.2],
        BeliefName::ModeratelyDovish => vec![0.15, 0.35, 0.5],
        BeliefName::StrongDovish => vec![0.1, 0.2, 0.7],
    };
    BeliefParameters::new(
        StanceSpace::new(vec!["hawk".into(), "centre".into(), "dove".into()]).unwrap(),
        prior,
        BTreeMap::from([
            ("tight".to_string(), vec![0.7, 0.25, 0.05]),
            ("mixed".to_string(), vec![0.3, 0.4, 0.3]),
            ("loose".to_string(), vec![0.05, 0.25, 0.7]),
        ]),
        vec![[0.8, 0.15, 0.05], [0.1, 0.8, 0.1], [0.05, 0.15, 0.8]],
        None,
    )
    .unwrap()
}

/// Evidence cycles tight, mixed, loose over the given meeting ids.
pub fn evidence_map(meeting_ids: &[String]) -> EvidenceMap {
    let tokens = ["tight", "mixed", "loose"];
    EvidenceMap {
        meetings: meeting_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), EvidenceToken::new(tokens[i % 3])))
            .collect(),
        variants: BTreeMap::new(),
    }
}

pub fn synthetic_agents(roster: &[BeliefProfile], evidence: EvidenceMap) -> Vec<AgentConfig> {
    let evidence = Arc::new(evidence);
    roster
        .iter()
        .enumerate()
        .map(|(i, b)| AgentConfig {
            agent_index: i + 1,
            belief: b.clone(),
            backend: BackendSettings::Synthetic(SyntheticSettings {
                params: Arc::new(stance_params(b.name)),
                evidence: evidence.clone(),
            }),
        })
        .collect()
}

pub fn synthetic_config(meeting_ids: &[String], seed: u64) -> DebateConfig {
    DebateConfig {
        seed,
        ..DebateConfig::new(synthetic_agents(&BeliefProfile::default_roster(), evidence_map(meeting_ids)))
    }
}

/// The fixture meeting under a fresh id.
pub fn meeting_with_id(id: &str) -> MeetingInstance {
    MeetingInstance {
        meeting_id: id.into(),
        ..meeting()
    }
}

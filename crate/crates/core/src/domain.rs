//! Core vocabulary: decision labels, belief profiles, meeting slices,
//! agent responses and debate transcripts, plus the label-extraction and
//! voting primitives every other module builds on.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A policy-rate decision class.
///
/// The derived `Ord` follows declaration order and exists only so labels can
/// key ordered maps; it carries no hawk/dove meaning. Tie-breaking in votes
/// uses [`TieBreak`], not this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyLabel {
    Raise,
    Hold,
    Lower,
}

impl PolicyLabel {
    /// All labels in canonical table order (Raise, Hold, Lower).
    pub const ALL: [PolicyLabel; 3] = [PolicyLabel::Raise, PolicyLabel::Hold, PolicyLabel::Lower];

    /// Position in canonical table order; used to index 3-column tables.
    pub fn index(self) -> usize {
        match self {
            PolicyLabel::Raise => 0,
            PolicyLabel::Hold => 1,
            PolicyLabel::Lower => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyLabel::Raise => "Raise",
            PolicyLabel::Hold => "Hold",
            PolicyLabel::Lower => "Lower",
        }
    }
}

impl fmt::Display for PolicyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyLabel {
    type Err = DomainError;

    /// Case-insensitive, surrounding whitespace ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        PolicyLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| DomainError::Parse(format!("unknown label {s:?}")))
    }
}

/// The five stance categories an agent can be assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BeliefName {
    StrongHawkish,
    ModeratelyHawkish,
    Neutral,
    ModeratelyDovish,
    StrongDovish,
}

impl BeliefName {
    pub const ALL: [BeliefName; 5] = [
        BeliefName::StrongHawkish,
        BeliefName::ModeratelyHawkish,
        BeliefName::Neutral,
        BeliefName::ModeratelyDovish,
        BeliefName::StrongDovish,
    ];

    /// Human-readable name, e.g. "Strong Hawkish".
    pub fn display_name(self) -> &'static str {
        match self {
            BeliefName::StrongHawkish => "Strong Hawkish",
            BeliefName::ModeratelyHawkish => "Moderately Hawkish",
            BeliefName::Neutral => "Neutral",
            BeliefName::ModeratelyDovish => "Moderately Dovish",
            BeliefName::StrongDovish => "Strong Dovish",
        }
    }

    /// Default prompt description for this stance.
    pub fn default_description(self) -> &'static str {
        match self {
            BeliefName::StrongHawkish => {
                "Prioritizes controlling inflation and supports aggressive interest rate hikes"
            }
            BeliefName::ModeratelyHawkish => {
                "Proposes tightening of inflation but is mindful of economic downturns"
            }
            BeliefName::Neutral => {
                "Makes careful decisions while monitoring the balance between prices and the economy"
            }
            BeliefName::ModeratelyDovish => {
                "Emphasizes supporting the economy while also paying a certain amount of attention to prices"
            }
            BeliefName::StrongDovish => {
                "Prioritizes economic recovery and actively supports interest rate cuts"
            }
        }
    }
}

impl fmt::Display for BeliefName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for BeliefName {
    type Err = DomainError;

    /// Accepts either the identifier ("StrongHawkish") or the display
    /// name ("Strong Hawkish"), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        BeliefName::ALL
            .into_iter()
            .find(|b| format!("{b:?}").eq_ignore_ascii_case(&squashed))
            .ok_or_else(|| DomainError::Parse(format!("unknown belief {s:?}")))
    }
}

/// An agent's stance together with the text injected into its prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefProfile {
    pub name: BeliefName,
    pub description: String,
}

impl BeliefProfile {
    pub fn new(name: BeliefName, description: impl Into<String>) -> Result<Self, DomainError> {
        let description = description.into();
        if description.trim().is_empty() {
            return Err(DomainError::Invalid(format!("empty description for {name}")));
        }
        Ok(Self { name, description })
    }

    /// Profile carrying the stock description for `name`.
    pub fn standard(name: BeliefName) -> Self {
        Self {
            name,
            description: name.default_description().to_owned(),
        }
    }

    /// The seven-member roster: one of each extreme/moderate stance and
    /// three neutral agents.
    pub fn default_roster() -> Vec<BeliefProfile> {
        use BeliefName::*;
        [
            StrongHawkish,
            ModeratelyHawkish,
            Neutral,
            Neutral,
            Neutral,
            ModeratelyDovish,
            StrongDovish,
        ]
        .into_iter()
        .map(BeliefProfile::standard)
        .collect()
    }
}

/// One agent's answer for one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub label: PolicyLabel,
    pub justification: String,
}

impl AgentResponse {
    pub fn new(label: PolicyLabel, justification: impl Into<String>) -> Self {
        Self {
            label,
            justification: justification.into(),
        }
    }
}

/// Last-three-months window of one indicator series, oldest first, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorWindow {
    pub series: String,
    pub values: Vec<f64>,
}

/// A past rate decision as shown to the agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateHistoryEntry {
    pub date: String,
    pub decision: PolicyLabel,
    pub target_lower: f64,
    pub target_upper: f64,
}

/// Everything known at one Beige Book release, paired with the decision
/// taken at the following meeting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingInstance {
    pub meeting_id: String,
    pub month: String,
    pub text: String,
    pub indicators: Vec<IndicatorWindow>,
    pub rate_history: Vec<RateHistoryEntry>,
    pub true_label: PolicyLabel,
}

impl MeetingInstance {
    pub const INDICATOR_WINDOW: usize = 3;
    pub const RATE_HISTORY_LEN: usize = 2;

    /// Checks shape invariants. Empty text is tolerated only when the
    /// caller says text is going to be omitted.
    pub fn validate(&self, allow_empty_text: bool) -> Result<(), DomainError> {
        if self.meeting_id.trim().is_empty() {
            return Err(DomainError::Invalid("empty meeting_id".into()));
        }
        for w in &self.indicators {
            if w.values.len() != Self::INDICATOR_WINDOW {
                return Err(DomainError::Invalid(format!(
                    "{}: series {} has {} values, expected {}",
                    self.meeting_id,
                    w.series,
                    w.values.len(),
                    Self::INDICATOR_WINDOW
                )));
            }
        }
        if self.rate_history.len() != Self::RATE_HISTORY_LEN {
            return Err(DomainError::Invalid(format!(
                "{}: rate history has {} entries, expected {}",
                self.meeting_id,
                self.rate_history.len(),
                Self::RATE_HISTORY_LEN
            )));
        }
        if !allow_empty_text && self.text.trim().is_empty() {
            return Err(DomainError::Invalid(format!("{}: empty text", self.meeting_id)));
        }
        Ok(())
    }
}

/// The full rounds-by-agents record of one debate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebateTranscript {
    pub meeting_id: String,
    /// `rounds[t][i]` is agent `i`'s response at round `t`.
    pub rounds: Vec<Vec<AgentResponse>>,
    /// Hex SHA-256 of the prompt each response was produced from; same shape as `rounds`.
    #[serde(default)]
    pub prompt_hashes: Vec<Vec<String>>,
    pub terminal_round: usize,
    pub final_label: PolicyLabel,
    pub consensus_reached: bool,
}

impl DebateTranscript {
    pub fn n_agents(&self) -> usize {
        self.rounds.first().map_or(0, Vec::len)
    }

    pub fn round_labels(&self, round: usize) -> Option<Vec<PolicyLabel>> {
        self.rounds
            .get(round)
            .map(|r| r.iter().map(|resp| resp.label).collect())
    }

    pub fn initial_labels(&self) -> Option<Vec<PolicyLabel>> {
        self.round_labels(0)
    }

    pub fn terminal_labels(&self) -> Option<Vec<PolicyLabel>> {
        self.round_labels(self.terminal_round)
    }

    /// Shape and consensus invariants.
    pub fn validate(&self, max_round: usize) -> Result<(), DomainError> {
        let n = self.n_agents();
        if n == 0 {
            return Err(DomainError::Invalid(format!("{}: no rounds", self.meeting_id)));
        }
        if self.rounds.iter().any(|r| r.len() != n) {
            return Err(DomainError::Invalid(format!(
                "{}: ragged rounds",
                self.meeting_id
            )));
        }
        if self.terminal_round + 1 != self.rounds.len() || self.terminal_round > max_round {
            return Err(DomainError::Invalid(format!(
                "{}: terminal round {} inconsistent with {} rounds",
                self.meeting_id,
                self.terminal_round,
                self.rounds.len()
            )));
        }
        if self.consensus_reached {
            let labels = self.terminal_labels().unwrap_or_default();
            if !consensus_check(&labels)? || labels[0] != self.final_label {
                return Err(DomainError::Invalid(format!(
                    "{}: consensus flag set without unanimity",
                    self.meeting_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("empty round")]
    EmptyRound,
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// A raw model reply, either already-structured or free text.
#[derive(Debug, Clone, PartialEq)]
pub enum RawResponse {
    Structured(serde_json::Value),
    Text(String),
}

impl RawResponse {
    /// Treats a body that parses as a JSON object as structured, anything
    /// else as free text.
    pub fn from_body(body: &str) -> Self {
        match serde_json::from_str::<serde_json::Value>(body) {
            Ok(v @ serde_json::Value::Object(_)) => RawResponse::Structured(v),
            _ => RawResponse::Text(body.to_owned()),
        }
    }
}

fn label_token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(raise|hold|lower)\b").expect("static regex"))
}

/// Maps a reply to its canonical label.
///
/// A structured record's `label` field wins. Otherwise the text is scanned
/// case-insensitively for whole-word label tokens and exactly one distinct
/// token must appear.
pub fn extract_label(response: &RawResponse) -> Result<PolicyLabel, DomainError> {
    match response {
        RawResponse::Structured(value) => match value.get("label") {
            Some(serde_json::Value::String(s)) => s.parse(),
            Some(other) => Err(DomainError::Parse(format!("label field is not a string: {other}"))),
            None => Err(DomainError::Parse("structured response has no label field".into())),
        },
        RawResponse::Text(text) => extract_label_from_text(text),
    }
}

pub fn extract_label_from_text(text: &str) -> Result<PolicyLabel, DomainError> {
    let mut found: Option<PolicyLabel> = None;
    for m in label_token_regex().find_iter(text) {
        let label: PolicyLabel = m.as_str().parse()?;
        match found {
            None => found = Some(label),
            Some(prev) if prev == label => {}
            Some(prev) => {
                return Err(DomainError::Parse(format!(
                    "ambiguous reply mentions both {prev} and {label}"
                )))
            }
        }
    }
    found.ok_or_else(|| DomainError::Parse("no label token in reply".into()))
}

/// True iff every label in the round is identical.
pub fn consensus_check(labels: &[PolicyLabel]) -> Result<bool, DomainError> {
    let first = labels.first().ok_or(DomainError::EmptyRound)?;
    Ok(labels.iter().all(|l| l == first))
}

/// Preference order used to resolve plurality ties; earlier wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PolicyLabel>", into = "Vec<PolicyLabel>")]
pub struct TieBreak([PolicyLabel; 3]);

impl TieBreak {
    pub fn new(order: [PolicyLabel; 3]) -> Result<Self, DomainError> {
        let mut seen = [false; 3];
        for l in order {
            if std::mem::replace(&mut seen[l.index()], true) {
                return Err(DomainError::Invalid(format!("tie-break order repeats {l}")));
            }
        }
        Ok(Self(order))
    }

    pub fn order(&self) -> &[PolicyLabel; 3] {
        &self.0
    }

    fn rank(&self, label: PolicyLabel) -> usize {
        self.0.iter().position(|l| *l == label).unwrap_or(usize::MAX)
    }
}

impl Default for TieBreak {
    /// Hold > Raise > Lower.
    fn default() -> Self {
        Self([PolicyLabel::Hold, PolicyLabel::Raise, PolicyLabel::Lower])
    }
}

impl TryFrom<Vec<PolicyLabel>> for TieBreak {
    type Error = DomainError;

    fn try_from(v: Vec<PolicyLabel>) -> Result<Self, Self::Error> {
        let arr: [PolicyLabel; 3] = v
            .try_into()
            .map_err(|v: Vec<_>| DomainError::Invalid(format!("tie-break needs 3 labels, got {}", v.len())))?;
        Self::new(arr)
    }
}

impl From<TieBreak> for Vec<PolicyLabel> {
    fn from(t: TieBreak) -> Self {
        t.0.to_vec()
    }
}

/// Per-label counts in canonical order.
pub fn label_counts(labels: &[PolicyLabel]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Plurality label of the round; ties resolved by `tie_break`.
pub fn majority_vote_with(labels: &[PolicyLabel], tie_break: &TieBreak) -> Result<PolicyLabel, DomainError> {
    if labels.is_empty() {
        return Err(DomainError::EmptyRound);
    }
    let counts = label_counts(labels);
    let best = *counts.iter().max().expect("three counts");
    Ok(*tie_break
        .order()
        .iter()
        .filter(|l| counts[l.index()] == best)
        .min_by_key(|l| tie_break.rank(**l))
        .expect("some label attains the maximum"))
}

/// [`majority_vote_with`] under the default Hold > Raise > Lower order.
pub fn majority_vote(labels: &[PolicyLabel]) -> Result<PolicyLabel, DomainError> {
    majority_vote_with(labels, &TieBreak::default())
}

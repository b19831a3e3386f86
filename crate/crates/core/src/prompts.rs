//! Round-0 and round-t prompt templates and their ablation variants.
//!
//! Rendering is a pure function of its inputs. Lines are joined with `\n`
//! and there is no trailing newline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AgentResponse, BeliefProfile, IndicatorWindow, MeetingInstance, RateHistoryEntry};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("slot {0} is included but has no data")]
    MissingSlot(&'static str),
    #[error("expected {expected} peer responses, got {got}")]
    PeerCountMismatch { expected: usize, got: usize },
    #[error("unknown ablation preset {0}; expected 1..=6")]
    UnknownPreset(u8),
}

/// Which pieces of information reach the agents, and whether they debate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub include_text: bool,
    pub include_indicators: bool,
    pub include_rates: bool,
    pub include_belief: bool,
    pub enable_debate: bool,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl AblationConfig {
    pub const fn full() -> Self {
        Self {
            include_text: true,
            include_indicators: true,
            include_rates: true,
            include_belief: true,
            enable_debate: true,
        }
    }

    /// Experiment presets:
    /// 1 full, 2 no text, 3 no indicators, 4 no rate history,
    /// 5 no belief (single round, majority of seven), 6 no debate.
    pub fn preset(id: u8) -> Result<Self, PromptError> {
        let full = Self::full();
        Ok(match id {
            1 => full,
            2 => Self { include_text: false, ..full },
            3 => Self { include_indicators: false, ..full },
            4 => Self { include_rates: false, ..full },
            5 => Self {
                include_belief: false,
                enable_debate: false,
                ..full
            },
            6 => Self { enable_debate: false, ..full },
            other => return Err(PromptError::UnknownPreset(other)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Round0,
    RoundT,
}

/// Data-carrying lines of a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Month,
    PeerBlock,
    Belief,
    CurrentPrediction,
    Text,
    Indicators,
    Rates,
}

/// Ordered slot list of a template under a given ablation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub slots: Vec<Slot>,
}

impl PromptTemplate {
    pub fn new(id: TemplateId, ablation: &AblationConfig) -> Self {
        let mut slots = vec![Slot::Month];
        if id == TemplateId::RoundT {
            slots.push(Slot::PeerBlock);
        }
        if ablation.include_belief {
            slots.push(Slot::Belief);
        }
        if id == TemplateId::RoundT {
            slots.push(Slot::CurrentPrediction);
        }
        if ablation.include_text {
            slots.push(Slot::Text);
        }
        if ablation.include_indicators {
            slots.push(Slot::Indicators);
        }
        if ablation.include_rates {
            slots.push(Slot::Rates);
        }
        Self { id, slots }
    }
}

/// One entry of the peer block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerView<'a> {
    /// 1-based agent number shown as `Model_<n>`.
    pub agent_number: usize,
    pub response: &'a AgentResponse,
    pub belief: &'a BeliefProfile,
}

const TASK_LINE: &str = "predict whether the central bank will Raise, Hold, or Lower the policy rate after two weeks. \
You should provide a brief justification for your answer, and you must output one of the three labels: Raise, Hold, or Lower.";
const SPEED_LINE: &str = "Please also note that policy rate changes should be implemented with appropriate speed, \
and that taking Hold is not necessarily always the best approach.";

/// Joins list items. The full four-item list uses a serial comma; when the
/// belief item is dropped the last pair is joined by a bare "and".
fn join_items(items: &[&str], serial_comma: bool) -> String {
    match items {
        [] => String::new(),
        [one] => (*one).to_owned(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => {
            let sep = if serial_comma { ", and " } else { " and " };
            format!("{}{sep}{last}", init.join(", "))
        }
    }
}

fn display_series(series: &str) -> String {
    match series {
        "unemployment_rate" => "Unemployment Rate (last 3 months)".to_owned(),
        "inflation_rate" => "Inflation Rate (YoY, last 3 months)".to_owned(),
        other => format!("{other} (last 3 months)"),
    }
}

/// `Unemployment Rate (last 3 months): 4.6%, 4.7%, 4.6%; Inflation Rate ...`
pub fn format_indicators(windows: &[IndicatorWindow]) -> String {
    windows
        .iter()
        .map(|w| {
            let values: Vec<String> = w.values.iter().map(|v| format!("{v:.1}%")).collect();
            format!("{}: {}", display_series(&w.series), values.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// `2007-08-07: Hold to 5.25%–5.25%; ...`, oldest first.
pub fn format_rates(history: &[RateHistoryEntry]) -> String {
    history
        .iter()
        .map(|r| format!("{}: {} to {:.2}%–{:.2}%", r.date, r.decision, r.target_lower, r.target_upper))
        .collect::<Vec<_>>()
        .join("; ")
}

struct DataLines {
    month: String,
    belief: Option<String>,
    text: Option<String>,
    indicators: Option<String>,
    rates: Option<String>,
}

fn collect_data(meeting: &MeetingInstance, belief: &BeliefProfile, ablation: &AblationConfig) -> Result<DataLines, PromptError> {
    if meeting.month.trim().is_empty() {
        return Err(PromptError::MissingSlot("Month"));
    }
    let belief = if ablation.include_belief {
        if belief.description.trim().is_empty() {
            return Err(PromptError::MissingSlot("Belief"));
        }
        Some(belief.description.clone())
    } else {
        None
    };
    let text = if ablation.include_text {
        if meeting.text.trim().is_empty() {
            return Err(PromptError::MissingSlot("Text"));
        }
        Some(meeting.text.clone())
    } else {
        None
    };
    let indicators = if ablation.include_indicators {
        if meeting.indicators.is_empty() {
            return Err(PromptError::MissingSlot("Indicators"));
        }
        Some(format_indicators(&meeting.indicators))
    } else {
        None
    };
    let rates = if ablation.include_rates {
        if meeting.rate_history.is_empty() {
            return Err(PromptError::MissingSlot("Rates"));
        }
        Some(format_rates(&meeting.rate_history))
    } else {
        None
    };
    Ok(DataLines {
        month: meeting.month.clone(),
        belief,
        text,
        indicators,
        rates,
    })
}

fn push_tail(lines: &mut Vec<String>, data: &DataLines, current_prediction: Option<&AgentResponse>) {
    lines.push(SPEED_LINE.to_owned());
    if let Some(b) = &data.belief {
        lines.push(format!("Belief: {b}"));
    }
    if let Some(p) = current_prediction {
        lines.push(format!("Current Prediction: {}", p.label));
    }
    if let Some(t) = &data.text {
        lines.push(format!("Beige Book Text Data: {t}"));
    }
    if let Some(i) = &data.indicators {
        lines.push(format!("Macroeconomic Numerical Data: {i}"));
    }
    if let Some(r) = &data.rates {
        lines.push(format!("Historical Policy Rate: {r}"));
    }
}

fn information_items(ablation: &AblationConfig) -> Vec<&'static str> {
    let mut items = Vec::new();
    if ablation.include_text {
        items.push("beige book text data");
    }
    if ablation.include_indicators {
        items.push("associated macroeconomic numerical data");
    }
    if ablation.include_rates {
        items.push("historical policy rate");
    }
    items
}

/// Initial independent-prediction prompt.
pub fn render_round0(meeting: &MeetingInstance, belief: &BeliefProfile, ablation: &AblationConfig) -> Result<String, PromptError> {
    let data = collect_data(meeting, belief, ablation)?;
    let mut items = information_items(ablation);
    if ablation.include_belief {
        items.push("a prior belief of central bank policy");
    }
    let mut lines = vec![format!("Today is {}.", data.month)];
    if !items.is_empty() {
        lines.push(format!("You will be given {}.", join_items(&items, ablation.include_belief)));
    }
    lines.push(format!("Based on these inputs, {TASK_LINE}"));
    push_tail(&mut lines, &data, None);
    Ok(lines.join("\n"))
}

/// Debate-round prompt. `peers` must hold exactly `expected_peers` entries
/// in agent order.
pub fn render_round_t(
    meeting: &MeetingInstance,
    belief: &BeliefProfile,
    own_previous: &AgentResponse,
    peers: &[PeerView<'_>],
    expected_peers: usize,
    ablation: &AblationConfig,
) -> Result<String, PromptError> {
    if peers.len() != expected_peers {
        return Err(PromptError::PeerCountMismatch {
            expected: expected_peers,
            got: peers.len(),
        });
    }
    let data = collect_data(meeting, belief, ablation)?;
    let mut lines = vec![format!("Today is {}.", data.month)];
    lines.push(if ablation.include_belief {
        "Several other models have already given their predictions and current beliefs:".to_owned()
    } else {
        "Several other models have already given their predictions:".to_owned()
    });
    for p in peers {
        let mut line = format!("Model_{}: Label is {}. {}", p.agent_number, p.response.label, p.response.justification);
        if ablation.include_belief {
            line.push_str(&format!(" ({})", p.belief.description));
        }
        lines.push(line);
    }
    lines.push(String::new());
    lines.push(if ablation.include_belief {
        "Now you should consider these responses and beliefs.".to_owned()
    } else {
        "Now you should consider these responses.".to_owned()
    });
    let mut items = information_items(ablation);
    items.push("your current prediction");
    if ablation.include_belief {
        items.push("your current belief");
    }
    lines.push(format!("You are again given {}.", join_items(&items, ablation.include_belief)));
    lines.push(format!("Use all of these to {TASK_LINE}"));
    push_tail(&mut lines, &data, Some(own_previous));
    Ok(lines.join("\n"))
}

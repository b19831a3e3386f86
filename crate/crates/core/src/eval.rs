//! Classification metrics and debate-dynamics tables.
//!
//! Label order on every axis is Raise, Hold, Lower.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{majority_vote_with, BeliefName, DebateTranscript, PolicyLabel, TieBreak};
use crate::transcript::AssembledTranscript;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("{transcripts} transcripts but {truths} true labels")]
    LengthMismatch { transcripts: usize, truths: usize },
    #[error("incomplete transcript {meeting_id}: {reason}")]
    IncompleteTranscript { meeting_id: String, reason: String },
}

/// Rows are actual labels, columns predicted labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        Self { counts }
    }

    pub fn add(&mut self, actual: PolicyLabel, predicted: PolicyLabel) {
        self.counts[actual.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: PolicyLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall and F1 and their unweighted means. A zero
/// denominator gives 0 for that class; every class counts in the means.
pub fn macro_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let per_class: Vec<ClassMetrics> = PolicyLabel::ALL
        .iter()
        .map(|&label| {
            let k = label.index();
            let tp = cm.counts[k][k];
            let predicted: u64 = (0..3).map(|r| cm.counts[r][k]).sum();
            let actual: u64 = cm.counts[k].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label,
                precision,
                recall,
                f1,
                support: actual,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    Ok(MetricsReport {
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        accuracy: ratio((0..3).map(|k| cm.counts[k][k]).sum(), total),
        per_class,
    })
}

/// Pairs each transcript's final label with the true label at the same
/// position.
pub fn confusion(transcripts: &[DebateTranscript], truths: &[PolicyLabel]) -> Result<ConfusionMatrix, EvalError> {
    if transcripts.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            transcripts: transcripts.len(),
            truths: truths.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (t, &truth) in transcripts.iter().zip(truths) {
        cm.add(truth, t.final_label);
    }
    Ok(cm)
}

/// Rows are round-0 labels, columns terminal-round labels, one count per
/// agent per meeting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl TransitionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Counts by round-0 label.
    pub fn row_sums(&self) -> [u64; 3] {
        self.counts.map(|r| r.iter().sum())
    }

    /// Counts by terminal label.
    pub fn col_sums(&self) -> [u64; 3] {
        std::array::from_fn(|c| (0..3).map(|r| self.counts[r][c]).sum())
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }
}

fn labels_at(t: &DebateTranscript, round: usize) -> Result<Vec<PolicyLabel>, EvalError> {
    let labels = t.round_labels(round).ok_or_else(|| EvalError::IncompleteTranscript {
        meeting_id: t.meeting_id.clone(),
        reason: format!("round {round} missing"),
    })?;
    if labels.is_empty() || labels.len() != t.n_agents() {
        return Err(EvalError::IncompleteTranscript {
            meeting_id: t.meeting_id.clone(),
            reason: format!("round {round} has {} of {} agents", labels.len(), t.n_agents()),
        });
    }
    Ok(labels)
}

/// Scores the round-0 plurality instead of the final label: what the same
/// agents would have decided without exchanging views.
pub fn initial_confusion(
    transcripts: &[DebateTranscript],
    truths: &[PolicyLabel],
    tie_break: &TieBreak,
) -> Result<ConfusionMatrix, EvalError> {
    if transcripts.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            transcripts: transcripts.len(),
            truths: truths.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (t, &truth) in transcripts.iter().zip(truths) {
        let labels = labels_at(t, 0)?;
        let vote = majority_vote_with(&labels, tie_break).map_err(|e| EvalError::IncompleteTranscript {
            meeting_id: t.meeting_id.clone(),
            reason: e.to_string(),
        })?;
        cm.add(truth, vote);
    }
    Ok(cm)
}

pub fn transition(transcripts: &[DebateTranscript]) -> Result<TransitionMatrix, EvalError> {
    let mut m = TransitionMatrix::default();
    for t in transcripts {
        let before = labels_at(t, 0)?;
        let after = labels_at(t, t.terminal_round)?;
        for (b, a) in before.iter().zip(&after) {
            m.counts[b.index()][a.index()] += 1;
        }
    }
    Ok(m)
}

/// Which round a belief aggregate counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Initial,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefRow {
    pub belief: BeliefName,
    pub counts: [u64; 3],
}

/// Label counts per belief category, rows in `BeliefName::ALL` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefAggregate {
    pub stage: Stage,
    pub rows: Vec<BeliefRow>,
}

impl BeliefAggregate {
    pub fn totals(&self) -> [u64; 3] {
        let mut out = [0; 3];
        for row in &self.rows {
            for (o, c) in out.iter_mut().zip(row.counts) {
                *o += c;
            }
        }
        out
    }

    pub fn row(&self, belief: BeliefName) -> Option<[u64; 3]> {
        self.rows.iter().find(|r| r.belief == belief).map(|r| r.counts)
    }
}

pub fn belief_aggregate(transcripts: &[AssembledTranscript], stage: Stage) -> Result<BeliefAggregate, EvalError> {
    let mut rows: Vec<BeliefRow> = BeliefName::ALL
        .iter()
        .map(|&belief| BeliefRow { belief, counts: [0; 3] })
        .collect();
    for a in transcripts {
        let t = &a.transcript;
        let round = match stage {
            Stage::Initial => 0,
            Stage::Terminal => t.terminal_round,
        };
        let labels = labels_at(t, round)?;
        if a.beliefs.len() != labels.len() {
            return Err(EvalError::IncompleteTranscript {
                meeting_id: t.meeting_id.clone(),
                reason: format!("{} beliefs for {} agents", a.beliefs.len(), labels.len()),
            });
        }
        for (belief, label) in a.beliefs.iter().zip(labels) {
            let row = rows.iter_mut().find(|r| r.belief == *belief).expect("all beliefs listed");
            row.counts[label.index()] += 1;
        }
    }
    Ok(BeliefAggregate { stage, rows })
}

/// Everything `eval` reports for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub meetings: usize,
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub transition: TransitionMatrix,
    pub beliefs_before: BeliefAggregate,
    pub beliefs_after: BeliefAggregate,
    /// Round-0 plurality scored the same way.
    pub initial_metrics: MetricsReport,
    pub initial_confusion: ConfusionMatrix,
}

pub fn evaluate(
    transcripts: &[AssembledTranscript],
    truths: &[PolicyLabel],
    tie_break: &TieBreak,
) -> Result<EvaluationReport, EvalError> {
    let plain: Vec<DebateTranscript> = transcripts.iter().map(|a| a.transcript.clone()).collect();
    let confusion = confusion(&plain, truths)?;
    let initial_confusion = initial_confusion(&plain, truths, tie_break)?;
    Ok(EvaluationReport {
        meetings: plain.len(),
        metrics: macro_metrics(&confusion)?,
        confusion,
        transition: transition(&plain)?,
        beliefs_before: belief_aggregate(transcripts, Stage::Initial)?,
        beliefs_after: belief_aggregate(transcripts, Stage::Terminal)?,
        initial_metrics: macro_metrics(&initial_confusion)?,
        initial_confusion,
    })
}

fn matrix_table(out: &mut String, title: &str, corner: &str, counts: &[[u64; 3]; 3]) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{corner:<10}{:>8}{:>8}{:>8}", "Raise", "Hold", "Lower");
    for label in PolicyLabel::ALL {
        let r = counts[label.index()];
        let _ = writeln!(out, "{:<10}{:>8}{:>8}{:>8}", label.as_str(), r[0], r[1], r[2]);
    }
}

fn belief_table(out: &mut String, agg_after: &BeliefAggregate, agg_before: &BeliefAggregate) {
    let _ = writeln!(out, "Policy decisions by belief");
    let _ = writeln!(
        out,
        "{:<20}{:>7}{:>7}{:>7}  |{:>7}{:>7}{:>7}",
        "", "After", "", "", "Before", "", ""
    );
    let _ = writeln!(
        out,
        "{:<20}{:>7}{:>7}{:>7}  |{:>7}{:>7}{:>7}",
        "Belief", "Raise", "Hold", "Lower", "Raise", "Hold", "Lower"
    );
    for (a, b) in agg_after.rows.iter().zip(&agg_before.rows) {
        let _ = writeln!(
            out,
            "{:<20}{:>7}{:>7}{:>7}  |{:>7}{:>7}{:>7}",
            a.belief.display_name(),
            a.counts[0],
            a.counts[1],
            a.counts[2],
            b.counts[0],
            b.counts[1],
            b.counts[2]
        );
    }
    let (ta, tb) = (agg_after.totals(), agg_before.totals());
    let _ = writeln!(
        out,
        "{:<20}{:>7}{:>7}{:>7}  |{:>7}{:>7}{:>7}",
        "Total", ta[0], ta[1], ta[2], tb[0], tb[1], tb[2]
    );
}

impl EvaluationReport {
    /// Aligned plain-text tables.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = &self.metrics;
        let _ = writeln!(out, "Meetings: {}", self.meetings);
        let _ = writeln!(out, "{:<10}{:>10}{:>10}{:>10}", "", "Precision", "Recall", "F1");
        let _ = writeln!(
            out,
            "{:<10}{:>10.3}{:>10.3}{:>10.3}",
            "Macro", m.macro_precision, m.macro_recall, m.macro_f1
        );
        for c in &m.per_class {
            let _ = writeln!(
                out,
                "{:<10}{:>10.3}{:>10.3}{:>10.3}",
                c.label.as_str(),
                c.precision,
                c.recall,
                c.f1
            );
        }
        let _ = writeln!(out, "Accuracy: {:.3}", m.accuracy);
        let i = &self.initial_metrics;
        let _ = writeln!(
            out,
            "{:<10}{:>10.3}{:>10.3}{:>10.3}",
            "Round 0", i.macro_precision, i.macro_recall, i.macro_f1
        );
        out.push('\n');
        matrix_table(&mut out, "Confusion matrix (rows actual, columns predicted)", "", &self.confusion.counts);
        out.push('\n');
        belief_table(&mut out, &self.beliefs_after, &self.beliefs_before);
        out.push('\n');
        matrix_table(
            &mut out,
            "Transition matrix (rows before debate, columns after)",
            "",
            &self.transition.counts,
        );
        out
    }
}

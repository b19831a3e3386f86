//! Builds meeting slices from three CSV sources.
//!
//! * Beige Book sentences: `date,topic,order,sentence`
//! * Indicator observations: `date,series,value` (one row per month and
//!   series; `value` in percent, dates `YYYY-MM-DD` or `YYYY-MM`)
//! * Policy-rate history: `meeting_date,target_lower,target_upper` (percent)
//!
//! A slice pairs a meeting with everything published up to the last Beige
//! Book release before it: the release's summary sentences, the last three
//! monthly indicator readings before the release month, and the two most
//! recent rate decisions taken before the release.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{IndicatorWindow, MeetingInstance, PolicyLabel, RateHistoryEntry};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}:{line}: {reason}")]
    Format { path: String, line: u64, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no summary text for release {0}")]
    NoTextForDate(NaiveDate),
    #[error("no Beige Book release before meeting {0}")]
    NoPriorRelease(NaiveDate),
    #[error("insufficient history for meeting {meeting}: {reason}")]
    InsufficientHistory { meeting: NaiveDate, reason: String },
    #[error("not enough {label} slices: {available} available, {requested} requested")]
    InsufficientClass {
        label: PolicyLabel,
        available: usize,
        requested: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeigeBookSentence {
    pub release_date: NaiveDate,
    pub topic: String,
    pub sentence: String,
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub name: String,
    /// First-of-month dates, strictly increasing.
    pub observations: Vec<(NaiveDate, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDecisionRecord {
    pub meeting_date: NaiveDate,
    pub target_lower: f64,
    pub target_upper: f64,
    /// `None` only for the first record, which has nothing to compare to.
    pub decision: Option<PolicyLabel>,
}

/// Topics whose sentences make up the meeting text.
pub const TEXT_TOPICS: [&str; 2] = ["overall economic activity", "summary"];

/// Indicator series keys used by default.
pub const DEFAULT_SERIES: [&str; 2] = ["unemployment_rate", "inflation_rate"];

fn format_err(path: &Path, line: u64, reason: impl Into<String>) -> IngestError {
    IngestError::Format {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn open_csv(path: &Path, required: &[&str]) -> Result<csv::Reader<std::fs::File>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => IngestError::Io {
                path: path.display().to_string(),
                source,
            },
            other => format_err(path, 1, format!("{other:?}")),
        })?;
    let headers = rdr.headers().map_err(|e| format_err(path, 1, e.to_string()))?.clone();
    for col in required {
        if !headers.iter().any(|h| h == *col) {
            return Err(format_err(
                path,
                1,
                format!("missing column {col:?}; expected header {}", required.join(",")),
            ));
        }
    }
    Ok(rdr)
}

fn rows<T: serde::de::DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<(u64, T)>, IngestError> {
    let mut rdr = open_csv(path, required)?;
    let mut out = Vec::new();
    for result in rdr.deserialize::<T>() {
        match result {
            Ok(row) => {
                // header is line 1
                out.push((out.len() as u64 + 2, row));
            }
            Err(e) => {
                let line = e.position().map_or(out.len() as u64 + 2, |p| p.line());
                return Err(format_err(path, line, e.to_string()));
            }
        }
    }
    Ok(out)
}

/// Accepts `YYYY-MM-DD` or `YYYY-MM` (taken as the first of the month).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d").ok())
}

fn first_of_month(d: NaiveDate) -> NaiveDate {
    d.with_day(1).expect("day 1 exists")
}

#[derive(Deserialize)]
struct BeigeRow {
    date: String,
    topic: String,
    order: u32,
    sentence: String,
}

pub fn load_beige_book(path: &Path) -> Result<Vec<BeigeBookSentence>, IngestError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, row) in rows::<BeigeRow>(path, &["date", "topic", "order", "sentence"])? {
        let release_date = parse_date(&row.date).ok_or_else(|| format_err(path, line, format!("bad date {:?}", row.date)))?;
        if row.topic.is_empty() {
            return Err(format_err(path, line, "empty topic"));
        }
        if !seen.insert((release_date, row.order)) {
            return Err(format_err(path, line, format!("duplicate order {} for release {release_date}", row.order)));
        }
        out.push(BeigeBookSentence {
            release_date,
            topic: row.topic,
            sentence: row.sentence,
            order: row.order,
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct IndicatorRow {
    date: String,
    series: String,
    value: f64,
}

/// Loads all series found in the file, keyed by name.
pub fn load_indicators(path: &Path) -> Result<BTreeMap<String, IndicatorSeries>, IngestError> {
    let mut out: BTreeMap<String, IndicatorSeries> = BTreeMap::new();
    for (line, row) in rows::<IndicatorRow>(path, &["date", "series", "value"])? {
        let date = parse_date(&row.date).ok_or_else(|| format_err(path, line, format!("bad date {:?}", row.date)))?;
        if date.day() != 1 {
            return Err(format_err(path, line, format!("{date} is not a monthly (first-of-month) date")));
        }
        if !row.value.is_finite() {
            return Err(format_err(path, line, "non-finite value"));
        }
        let series = out.entry(row.series.clone()).or_insert_with(|| IndicatorSeries {
            name: row.series.clone(),
            observations: Vec::new(),
        });
        if let Some((last, _)) = series.observations.last() {
            if *last >= date {
                return Err(format_err(path, line, format!("series {} dates not strictly increasing at {date}", row.series)));
            }
        }
        series.observations.push((date, row.value));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RateRow {
    meeting_date: String,
    target_lower: f64,
    target_upper: f64,
}

/// Loads the rate history, sorted by date, with decisions derived.
pub fn load_rates(path: &Path) -> Result<Vec<RateDecisionRecord>, IngestError> {
    let mut records = Vec::new();
    for (line, row) in rows::<RateRow>(path, &["meeting_date", "target_lower", "target_upper"])? {
        let meeting_date =
            parse_date(&row.meeting_date).ok_or_else(|| format_err(path, line, format!("bad date {:?}", row.meeting_date)))?;
        let ordered = row.target_lower.partial_cmp(&row.target_upper).is_some_and(|o| o.is_le());
        if !ordered {
            return Err(format_err(path, line, "target_lower exceeds target_upper"));
        }
        records.push((line, meeting_date, row.target_lower, row.target_upper));
    }
    records.sort_by_key(|r| r.1);
    if let Some(w) = records.windows(2).find(|w| w[0].1 == w[1].1) {
        return Err(format_err(path, w[1].0, format!("duplicate meeting date {}", w[1].1)));
    }
    let mut out: Vec<RateDecisionRecord> = Vec::with_capacity(records.len());
    for (_, meeting_date, lo, hi) in records {
        let mut rec = RateDecisionRecord {
            meeting_date,
            target_lower: lo,
            target_upper: hi,
            decision: None,
        };
        rec.decision = out.last().map(|prev| derive_decision(&rec, prev));
        out.push(rec);
    }
    Ok(out)
}

/// Compares target-range midpoints.
pub fn derive_decision(current: &RateDecisionRecord, previous: &RateDecisionRecord) -> PolicyLabel {
    let cur = (current.target_lower + current.target_upper) / 2.0;
    let prev = (previous.target_lower + previous.target_upper) / 2.0;
    if (cur - prev).abs() < 1e-9 {
        PolicyLabel::Hold
    } else if cur > prev {
        PolicyLabel::Raise
    } else {
        PolicyLabel::Lower
    }
}

/// Space-joined summary sentences of one release, in `order`.
pub fn select_text(sentences: &[BeigeBookSentence], release_date: NaiveDate) -> Result<String, IngestError> {
    let mut picked: Vec<&BeigeBookSentence> = sentences
        .iter()
        .filter(|s| s.release_date == release_date)
        .filter(|s| {
            let t = s.topic.trim().to_lowercase();
            TEXT_TOPICS.contains(&t.as_str())
        })
        .collect();
    if picked.is_empty() {
        return Err(IngestError::NoTextForDate(release_date));
    }
    picked.sort_by_key(|s| s.order);
    Ok(picked.iter().map(|s| s.sentence.trim()).collect::<Vec<_>>().join(" "))
}

/// `September 2007`.
pub fn month_label(date: NaiveDate) -> String {
    date.format("%B %Y").to_string()
}

#[derive(Debug)]
pub struct Exclusion {
    pub meeting_date: NaiveDate,
    pub reason: IngestError,
}

#[derive(Debug, Default)]
pub struct SliceBuild {
    pub slices: Vec<MeetingInstance>,
    pub excluded: Vec<Exclusion>,
}

/// Builds the slice for `rates[index]`.
pub fn build_slice(
    beige: &[BeigeBookSentence],
    releases: &BTreeSet<NaiveDate>,
    indicators: &BTreeMap<String, IndicatorSeries>,
    series: &[&str],
    rates: &[RateDecisionRecord],
    index: usize,
) -> Result<MeetingInstance, IngestError> {
    let meeting = &rates[index];
    let true_label = meeting.decision.ok_or_else(|| IngestError::InsufficientHistory {
        meeting: meeting.meeting_date,
        reason: "no previous meeting to derive the decision from".into(),
    })?;
    let release = *releases
        .range(..meeting.meeting_date)
        .next_back()
        .ok_or(IngestError::NoPriorRelease(meeting.meeting_date))?;
    let text = select_text(beige, release)?;

    let history: Vec<RateHistoryEntry> = rates[..index]
        .iter()
        .filter(|r| r.meeting_date < release)
        .filter_map(|r| {
            r.decision.map(|decision| RateHistoryEntry {
                date: r.meeting_date.to_string(),
                decision,
                target_lower: r.target_lower,
                target_upper: r.target_upper,
            })
        })
        .collect();
    if history.len() < MeetingInstance::RATE_HISTORY_LEN {
        return Err(IngestError::InsufficientHistory {
            meeting: meeting.meeting_date,
            reason: format!("{} prior decisions before release {release}", history.len()),
        });
    }
    let rate_history = history[history.len() - MeetingInstance::RATE_HISTORY_LEN..].to_vec();

    let cutoff = first_of_month(release);
    let mut windows = Vec::with_capacity(series.len());
    for name in series {
        let obs: Vec<f64> = indicators
            .get(*name)
            .map(|s| s.observations.iter().filter(|(d, _)| *d < cutoff).map(|(_, v)| *v).collect())
            .unwrap_or_default();
        if obs.len() < MeetingInstance::INDICATOR_WINDOW {
            return Err(IngestError::InsufficientHistory {
                meeting: meeting.meeting_date,
                reason: format!("{} months of {name} before {cutoff}", obs.len()),
            });
        }
        windows.push(IndicatorWindow {
            series: (*name).to_owned(),
            values: obs[obs.len() - MeetingInstance::INDICATOR_WINDOW..].to_vec(),
        });
    }

    Ok(MeetingInstance {
        meeting_id: meeting.meeting_date.to_string(),
        month: month_label(release),
        text,
        indicators: windows,
        rate_history,
        true_label,
    })
}

/// Builds every buildable slice in chronological order; the rest are
/// reported in `excluded` and logged.
pub fn build_slices(
    beige: &[BeigeBookSentence],
    indicators: &BTreeMap<String, IndicatorSeries>,
    series: &[&str],
    rates: &[RateDecisionRecord],
) -> SliceBuild {
    let releases: BTreeSet<NaiveDate> = beige.iter().map(|s| s.release_date).collect();
    let mut out = SliceBuild::default();
    for i in 0..rates.len() {
        match build_slice(beige, &releases, indicators, series, rates, i) {
            Ok(s) => out.slices.push(s),
            Err(reason) => {
                log::warn!("excluding meeting {}: {reason}", rates[i].meeting_date);
                out.excluded.push(Exclusion {
                    meeting_date: rates[i].meeting_date,
                    reason,
                });
            }
        }
    }
    out
}

/// Indices whose label differs from each existing neighbour's label.
pub fn exclusion_survivors(labels: &[PolicyLabel]) -> Vec<usize> {
    (0..labels.len())
        .filter(|&i| {
            let prev_differs = i == 0 || labels[i - 1] != labels[i];
            let next_differs = i + 1 >= labels.len() || labels[i + 1] != labels[i];
            prev_differs && next_differs
        })
        .collect()
}

/// Requested number of slices per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassQuota {
    pub raise: usize,
    pub hold: usize,
    pub lower: usize,
}

impl Default for ClassQuota {
    fn default() -> Self {
        Self {
            raise: 15,
            hold: 30,
            lower: 15,
        }
    }
}

impl ClassQuota {
    pub fn get(&self, label: PolicyLabel) -> usize {
        match label {
            PolicyLabel::Raise => self.raise,
            PolicyLabel::Hold => self.hold,
            PolicyLabel::Lower => self.lower,
        }
    }
}

/// Drops slices whose decision repeats a neighbouring decision, then draws
/// the quota per class uniformly without replacement. Neighbours are the
/// adjacent entries of `slices`. The result keeps chronological order.
pub fn sample_slices(slices: &[MeetingInstance], quota: ClassQuota, seed: u64) -> Result<Vec<MeetingInstance>, IngestError> {
    let labels: Vec<PolicyLabel> = slices.iter().map(|s| s.true_label).collect();
    sample_from(slices, &exclusion_survivors(&labels), quota, seed)
}

/// Like [`sample_slices`], but neighbours are the meetings just before and
/// after each slice in the full rate history, so meetings that produced no
/// slice still count.
pub fn sample_against_history(
    slices: &[MeetingInstance],
    rates: &[RateDecisionRecord],
    quota: ClassQuota,
    seed: u64,
) -> Result<Vec<MeetingInstance>, IngestError> {
    sample_from(slices, &survivors_in_history(slices, rates), quota, seed)
}

/// Indices of slices whose label differs from the decisions of the
/// adjacent meetings in `rates`. A neighbour without a decision, or a
/// missing neighbour, does not exclude.
pub fn survivors_in_history(slices: &[MeetingInstance], rates: &[RateDecisionRecord]) -> Vec<usize> {
    let position: BTreeMap<String, usize> = rates
        .iter()
        .enumerate()
        .map(|(i, r)| (r.meeting_date.to_string(), i))
        .collect();
    (0..slices.len())
        .filter(|&k| {
            let s = &slices[k];
            let Some(&i) = position.get(&s.meeting_id) else {
                return true;
            };
            let prev = i.checked_sub(1).and_then(|j| rates[j].decision);
            let next = rates.get(i + 1).and_then(|r| r.decision);
            prev != Some(s.true_label) && next != Some(s.true_label)
        })
        .collect()
}

fn sample_from(
    slices: &[MeetingInstance],
    survivors: &[usize],
    quota: ClassQuota,
    seed: u64,
) -> Result<Vec<MeetingInstance>, IngestError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["sampling"]));
    let mut chosen = BTreeSet::new();
    for label in PolicyLabel::ALL {
        let pool: Vec<usize> = survivors.iter().copied().filter(|&i| slices[i].true_label == label).collect();
        let want = quota.get(label);
        if pool.len() < want {
            return Err(IngestError::InsufficientClass {
                label,
                available: pool.len(),
                requested: want,
            });
        }
        chosen.extend(sample(&mut rng, pool.len(), want).into_iter().map(|k| pool[k]));
    }
    Ok(chosen.into_iter().map(|i| slices[i].clone()).collect())
}

mod common;

use std::collections::BTreeMap;
use std::io::Write;

use chrono::Datelike;
use common::fixtures_dir;
use policy_debate::ingest::{
    build_slices, exclusion_survivors, load_beige_book, load_indicators, load_rates, parse_date, sample_against_history,
    sample_slices, survivors_in_history, ClassQuota, IngestError, RateDecisionRecord, DEFAULT_SERIES,
};
use policy_debate::{MeetingInstance, PolicyLabel};
use PolicyLabel::*;

fn fixture_slices() -> (Vec<MeetingInstance>, usize) {
    let dir = fixtures_dir();
    let beige = load_beige_book(&dir.join("beige_book.csv")).unwrap();
    let indicators = load_indicators(&dir.join("indicators.csv")).unwrap();
    let rates = load_rates(&dir.join("rates.csv")).unwrap();
    let built = build_slices(&beige, &indicators, &DEFAULT_SERIES, &rates);
    (built.slices, built.excluded.len())
}

fn write_temp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn beige_book_loads_every_row_in_order() {
    let rows = load_beige_book(&fixtures_dir().join("beige_book.csv")).unwrap();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[1].topic, "manufacturing");
    assert_eq!(rows[8].order, 2);
}

#[test]
fn three_row_beige_book() {
    let f = write_temp("date,topic,order,sentence\n2020-01-15,summary,1,A.\n2020-01-15,summary,2,B.\n2020-01-15,labor,3,C.\n");
    let rows = load_beige_book(f.path()).unwrap();
    assert_eq!(rows.iter().map(|r| r.sentence.as_str()).collect::<Vec<_>>(), ["A.", "B.", "C."]);
}

#[test]
fn malformed_beige_book_reports_line() {
    let f = write_temp("date,order,sentence\n2020-01-15,1,A.\n");
    match load_beige_book(f.path()) {
        Err(IngestError::Format { line: 1, reason, .. }) => assert!(reason.contains("topic")),
        other => panic!("{other:?}"),
    }
    let f = write_temp("date,topic,order,sentence\n2020-01-15,summary,1,A.\n2020-13-40,summary,2,B.\n");
    assert!(matches!(load_beige_book(f.path()), Err(IngestError::Format { line: 3, .. })));
    let f = write_temp("date,topic,order,sentence\n2020-01-15,summary,1,A.\n2020-01-15,summary,1,B.\n");
    assert!(matches!(load_beige_book(f.path()), Err(IngestError::Format { line: 3, .. })));
    let f = write_temp("date,topic,order,sentence\n2020-01-15,,1,A.\n");
    assert!(matches!(load_beige_book(f.path()), Err(IngestError::Format { line: 2, .. })));
    let f = write_temp("date,topic,order,sentence\n2020-01-15,summary,first,A.\n");
    assert!(matches!(load_beige_book(f.path()), Err(IngestError::Format { line: 2, .. })));
}

#[test]
fn indicator_series_must_be_monthly_and_increasing() {
    let f = write_temp("date,series,value\n2020-02-01,u,3.5\n2020-01-01,u,3.6\n");
    assert!(matches!(load_indicators(f.path()), Err(IngestError::Format { line: 3, .. })));
    let f = write_temp("date,series,value\n2020-02-15,u,3.5\n");
    assert!(matches!(load_indicators(f.path()), Err(IngestError::Format { line: 2, .. })));
    let f = write_temp("date,series,value\n2020-01,u,3.5\n2020-02,u,3.6\n2020-01,v,1.0\n");
    let s = load_indicators(f.path()).unwrap();
    assert_eq!(s["u"].observations.len(), 2);
    assert_eq!(s["v"].observations.len(), 1);
}

#[test]
fn rate_records_derive_decisions() {
    let rates = load_rates(&fixtures_dir().join("rates.csv")).unwrap();
    let decisions: Vec<Option<PolicyLabel>> = rates.iter().map(|r| r.decision).collect();
    assert_eq!(decisions, [None, Some(Hold), Some(Lower), Some(Lower), Some(Lower)]);
    let f = write_temp("meeting_date,target_lower,target_upper\n2020-01-01,1.0,0.5\n");
    assert!(matches!(load_rates(f.path()), Err(IngestError::Format { line: 2, .. })));
}

#[test]
fn four_meetings_give_two_slices() {
    // Five rate records: a baseline plus four decided meetings. The first two
    // meetings have fewer than two earlier decisions.
    let (slices, excluded) = fixture_slices();
    assert_eq!(slices.len(), 2);
    assert_eq!(excluded, 3);

    let oct = &slices[0];
    assert_eq!(oct.meeting_id, "2007-10-31");
    assert_eq!(oct.month, "October 2007");
    assert_eq!(oct.text, "Economic activity expanded at a somewhat slower pace.");
    assert_eq!(oct.indicators[0].series, "unemployment_rate");
    // the October reading shares the release month and stays out
    assert_eq!(oct.indicators[0].values, [4.7, 4.6, 4.7]);
    assert_eq!(oct.indicators[1].values, [2.4, 2.0, 2.8]);
    let hist: Vec<(&str, PolicyLabel)> = oct.rate_history.iter().map(|r| (r.date.as_str(), r.decision)).collect();
    assert_eq!(hist, [("2007-08-07", Hold), ("2007-09-18", Lower)]);
    assert_eq!(oct.true_label, Lower);

    let dec = &slices[1];
    assert_eq!(dec.month, "November 2007");
    assert_eq!(
        dec.text,
        "Economic activity increased at a reduced pace. Consumer spending softened in several districts."
    );
    assert_eq!(dec.indicators[0].values, [4.6, 4.7, 4.8]);
    assert_eq!(dec.rate_history[1].date, "2007-10-31");
}

#[test]
fn selected_text_keeps_only_summary_topics() {
    let dir = fixtures_dir();
    let beige = load_beige_book(&dir.join("beige_book.csv")).unwrap();
    let text = policy_debate::ingest::select_text(&beige, parse_date("2007-09-05").unwrap()).unwrap();
    assert_eq!(
        text,
        "Economic activity continued to expand in July and early August. Financial market turmoil raised uncertainty."
    );
}

#[test]
fn no_input_postdates_the_release() {
    let (slices, _) = fixture_slices();
    let beige = load_beige_book(&fixtures_dir().join("beige_book.csv")).unwrap();
    let indicators = load_indicators(&fixtures_dir().join("indicators.csv")).unwrap();
    for s in &slices {
        s.validate(false).unwrap();
        let meeting = parse_date(&s.meeting_id).unwrap();
        let release = beige
            .iter()
            .map(|b| b.release_date)
            .filter(|d| *d < meeting)
            .max()
            .unwrap();
        for r in &s.rate_history {
            assert!(parse_date(&r.date).unwrap() < release);
        }
        for w in &s.indicators {
            let obs = &indicators[&w.series].observations;
            let first_of_release = release.with_day0(0).unwrap();
            let window: Vec<f64> = obs
                .iter()
                .filter(|(d, _)| *d < first_of_release)
                .map(|(_, v)| *v)
                .collect();
            assert_eq!(&window[window.len() - 3..], &w.values[..]);
        }
    }
}

#[test]
fn meeting_without_prior_release_is_excluded() {
    let dir = fixtures_dir();
    let beige = load_beige_book(&dir.join("beige_book.csv")).unwrap();
    let indicators = load_indicators(&dir.join("indicators.csv")).unwrap();
    let d = |s: &str| parse_date(s).unwrap();
    let rates = vec![
        RateDecisionRecord { meeting_date: d("2007-01-31"), target_lower: 5.25, target_upper: 5.25, decision: None },
        RateDecisionRecord { meeting_date: d("2007-03-21"), target_lower: 5.25, target_upper: 5.25, decision: Some(Hold) },
    ];
    let built = build_slices(&beige, &indicators, &DEFAULT_SERIES, &rates);
    assert!(built.slices.is_empty());
    assert!(matches!(built.excluded[1].reason, IngestError::NoPriorRelease(_)));
}

#[test]
fn missing_indicator_months_is_insufficient_history() {
    let dir = fixtures_dir();
    let beige = load_beige_book(&dir.join("beige_book.csv")).unwrap();
    let rates = load_rates(&dir.join("rates.csv")).unwrap();
    let built = build_slices(&beige, &BTreeMap::new(), &DEFAULT_SERIES, &rates);
    assert!(built.slices.is_empty());
    assert!(built
        .excluded
        .iter()
        .all(|e| matches!(e.reason, IngestError::InsufficientHistory { .. })));
}

fn synthetic_slice(i: usize, label: PolicyLabel) -> MeetingInstance {
    let mut m = common::meeting();
    m.meeting_id = format!("m{i:03}");
    m.true_label = label;
    m
}

#[test]
fn exclusion_example_by_brute_force() {
    let seq = [Hold, Hold, Raise, Hold];
    let brute: Vec<usize> = (0..seq.len())
        .filter(|&i| {
            let neighbours: Vec<PolicyLabel> = [i.checked_sub(1), Some(i + 1)]
                .into_iter()
                .flatten()
                .filter_map(|j| seq.get(j).copied())
                .collect();
            neighbours.iter().all(|n| *n != seq[i])
        })
        .collect();
    assert_eq!(brute, [2, 3]);
    assert_eq!(exclusion_survivors(&seq), brute);
}

#[test]
fn too_few_of_a_class() {
    // 10 isolated Lowers among alternating Raise/Hold
    let mut labels = Vec::new();
    for i in 0..200 {
        labels.push(match i % 4 {
            0 | 2 => Hold,
            1 => Raise,
            _ => if i < 40 { Lower } else { Raise },
        });
    }
    let slices: Vec<MeetingInstance> = labels.iter().enumerate().map(|(i, l)| synthetic_slice(i, *l)).collect();
    match sample_slices(&slices, ClassQuota::default(), 1) {
        Err(IngestError::InsufficientClass { label: Lower, available: 10, requested: 15 }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn history_neighbours_include_meetings_without_slices() {
    let d = |s: &str| parse_date(s).unwrap();
    let rec = |date: &str, decision| RateDecisionRecord {
        meeting_date: d(date),
        target_lower: 0.0,
        target_upper: 0.0,
        decision,
    };
    let rates = vec![
        rec("2020-01-01", None),
        rec("2020-02-01", Some(Lower)),
        rec("2020-03-01", Some(Raise)),
        rec("2020-04-01", Some(Lower)),
    ];
    // only the last two meetings produced slices
    let slices = vec![
        MeetingInstance { meeting_id: "2020-03-01".into(), ..synthetic_slice(0, Raise) },
        MeetingInstance { meeting_id: "2020-04-01".into(), ..synthetic_slice(1, Lower) },
    ];
    assert_eq!(survivors_in_history(&slices, &rates), [0, 1]);
    let repeat = vec![
        MeetingInstance { meeting_id: "2020-03-01".into(), ..synthetic_slice(0, Lower) },
    ];
    assert!(survivors_in_history(&repeat, &rates).is_empty());
    let quota = ClassQuota { raise: 1, hold: 0, lower: 1 };
    assert_eq!(sample_against_history(&slices, &rates, quota, 0).unwrap().len(), 2);
}

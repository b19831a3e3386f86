use std::path::{Path, PathBuf};
use std::process::Command;

use policy_debate::agents::LiveOptions;
use policy_debate::eval::EvalError;
use policy_debate_cli::{
    cmd_eval, cmd_ingest, cmd_report, cmd_run, read_store, BackendKind, CliError, ExperimentConfig, LiveSection,
    ReplaySection, RunOptions, REPORT_JSON, REPORT_TEXT, SUMMARY_FILE, TRANSCRIPT_FILE,
};
use policy_debate::ingest::IngestError;
use policy_debate::TieBreak;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn demo() -> PathBuf {
    repo().join("configs/demo")
}

/// The demo config writing everything under `out`.
fn config(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(&demo().join("experiment.json")).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn ingested(out: &Path) -> ExperimentConfig {
    let cfg = config(out);
    cmd_ingest(&cfg).unwrap();
    cfg
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn ingest_is_byte_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = cmd_ingest(&config(a.path())).unwrap();
    let ob = cmd_ingest(&config(b.path())).unwrap();
    assert_eq!(oa.slices, 37);
    assert_eq!(oa.excluded, 3);
    assert_eq!(read(&oa.store), read(&ob.store));
    let slices = read_store(&oa.store).unwrap();
    assert_eq!(slices.len(), 37);
    assert!(slices.iter().all(|s| s.rate_history.len() == 2 && s.indicators.len() == 2));
}

#[test]
fn ingest_sampling_reports_short_classes() {
    // every demo hike sits next to another hike, so exclusion leaves none
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.sampling = Some(Default::default());
    match cmd_ingest(&cfg).unwrap_err() {
        CliError::Ingest(IngestError::InsufficientClass {
            label,
            available,
            requested,
        }) => {
            assert_eq!(label, policy_debate::PolicyLabel::Raise);
            assert_eq!((available, requested), (0, 15));
        }
        other => panic!("unexpected {other}"),
    }
    assert!(!cfg.store_path().exists());
}

#[test]
fn malformed_csv_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("rates.csv");
    std::fs::write(&bad, "meeting_date,target_lower,target_upper\n2007-01-31,5.25,5.25\n2007-03-21,five,5.25\n").unwrap();
    let mut cfg = config(dir.path());
    cfg.data.rates = Some(bad);
    match cmd_ingest(&cfg).unwrap_err() {
        CliError::Ingest(IngestError::Format { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn synthetic_run_is_deterministic_across_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = ingested(a.path());
    ca.workers = 1;
    let mut cb = ingested(b.path());
    cb.workers = 6;
    let oa = cmd_run(&ca, RunOptions::default()).unwrap();
    let ob = cmd_run(&cb, RunOptions::default()).unwrap();
    assert_eq!((oa.completed, oa.aborted.len()), (37, 0));
    assert_eq!(ob.completed, 37);
    assert_eq!(read(&a.path().join(TRANSCRIPT_FILE)), read(&b.path().join(TRANSCRIPT_FILE)));
    assert_eq!(read(&a.path().join(SUMMARY_FILE)), read(&b.path().join(SUMMARY_FILE)));
}

#[test]
fn seed_changes_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = ingested(a.path());
    let mut cb = ingested(b.path());
    cb.seed += 1;
    cmd_run(&ca, RunOptions::default()).unwrap();
    cmd_run(&cb, RunOptions::default()).unwrap();
    assert_ne!(read(&a.path().join(TRANSCRIPT_FILE)), read(&b.path().join(TRANSCRIPT_FILE)));
}

#[test]
fn no_debate_preset_records_one_round() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ingested(dir.path());
    cfg.preset = 6;
    cmd_run(&cfg, RunOptions::default()).unwrap();
    let text = read(&dir.path().join(TRANSCRIPT_FILE));
    assert_eq!(text.lines().count(), 37 * 7);
    assert!(text.lines().all(|l| l.contains("\"round\":0")));
}

#[test]
fn live_without_credentials_fails_before_any_request() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ingested(dir.path());
    cfg.backend = BackendKind::Live;
    cfg.live = Some(LiveSection {
        // nothing listens here; the run must stop before connecting
        endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
        model: "m".into(),
        temperature: None,
        timeout_secs: 1,
        options: LiveOptions {
            api_key_env: "POLICY_DEBATE_TEST_UNSET_KEY".into(),
            ..LiveOptions::default()
        },
    });
    let err = cmd_run(&cfg, RunOptions::default()).unwrap_err();
    assert!(matches!(&err, CliError::Config(m) if m.contains("POLICY_DEBATE_TEST_UNSET_KEY")), "{err}");
    assert!(!dir.path().join(TRANSCRIPT_FILE).exists());
}

#[test]
fn resume_completes_an_interrupted_run() {
    let full = tempfile::tempdir().unwrap();
    let cut = tempfile::tempdir().unwrap();
    let cfg_full = ingested(full.path());
    cmd_run(&cfg_full, RunOptions::default()).unwrap();
    let expected = read(&full.path().join(TRANSCRIPT_FILE));

    // keep the first 10 meetings and part of the 11th
    let cfg_cut = ingested(cut.path());
    let summary = read(&full.path().join(SUMMARY_FILE));
    let kept: Vec<&str> = summary.lines().take(10).collect();
    let ids: Vec<String> = summary
        .lines()
        .take(11)
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["meeting_id"].as_str().unwrap().to_string())
        .collect();
    let mut partial = String::new();
    let mut extra = 0;
    for line in expected.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let id = v["meeting_id"].as_str().unwrap();
        if ids[..10].iter().any(|x| x == id) || (id == ids[10] && extra < 5) {
            if id == ids[10] {
                extra += 1;
            }
            partial.push_str(line);
            partial.push('\n');
        }
    }
    std::fs::write(cut.path().join(TRANSCRIPT_FILE), &partial).unwrap();
    std::fs::write(cut.path().join(SUMMARY_FILE), kept.join("\n") + "\n").unwrap();

    let o = cmd_run(&cfg_cut, RunOptions { resume: true }).unwrap();
    assert_eq!((o.skipped, o.completed), (10, 27));
    assert_eq!(read(&cut.path().join(TRANSCRIPT_FILE)), expected);
    assert_eq!(read(&cut.path().join(SUMMARY_FILE)), summary);
}

#[test]
fn eval_on_reconstructed_fixture() {
    let fixtures = repo().join("crates/core/tests/fixtures/debate");
    let out = tempfile::tempdir().unwrap();
    let report = cmd_eval(
        &fixtures.join("transcript.jsonl"),
        &fixtures.join("truths.jsonl"),
        out.path(),
        &TieBreak::default(),
    )
    .unwrap();
    assert_eq!(report.confusion.counts, [[7, 8, 0], [8, 20, 2], [0, 11, 4]]);
    assert!((report.metrics.macro_f1 - 0.476).abs() <= 1e-3);
    assert_eq!(report.transition.total(), 420);
    let text = read(&out.path().join(REPORT_TEXT));
    assert_eq!(cmd_report(&out.path().join(REPORT_JSON)).unwrap(), text);
    assert!(text.contains("Confusion matrix"));
}

#[test]
fn eval_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let fixtures = repo().join("crates/core/tests/fixtures/debate");
    let err = cmd_eval(&empty, &fixtures.join("truths.jsonl"), dir.path(), &TieBreak::default()).unwrap_err();
    assert!(matches!(err, CliError::Eval(EvalError::EmptyMatrix)), "{err}");

    let truths = dir.path().join("truths.jsonl");
    std::fs::write(&truths, "{\"meeting_id\":\"m01\",\"true_label\":\"Hold\"}\n").unwrap();
    let err = cmd_eval(&fixtures.join("transcript.jsonl"), &truths, dir.path(), &TieBreak::default()).unwrap_err();
    assert!(matches!(&err, CliError::Config(m) if m.contains("m02")), "{err}");
}

#[test]
fn replay_reproduces_transcript_and_report() {
    let rec = tempfile::tempdir().unwrap();
    let rep = tempfile::tempdir().unwrap();
    let cfg = ingested(rec.path());
    cmd_run(&cfg, RunOptions::default()).unwrap();
    let tie = TieBreak::default();
    cmd_eval(&rec.path().join(TRANSCRIPT_FILE), &cfg.store_path(), rec.path(), &tie).unwrap();

    let mut replay = config(rep.path());
    replay.store = Some(cfg.store_path());
    replay.backend = BackendKind::Replay;
    replay.replay = Some(ReplaySection {
        transcript: rec.path().join(TRANSCRIPT_FILE),
    });
    replay.seed = 999; // ignored by replay
    cmd_run(&replay, RunOptions::default()).unwrap();
    cmd_eval(&rep.path().join(TRANSCRIPT_FILE), &cfg.store_path(), rep.path(), &tie).unwrap();

    for f in [TRANSCRIPT_FILE, SUMMARY_FILE, REPORT_JSON, REPORT_TEXT] {
        assert_eq!(read(&rec.path().join(f)), read(&rep.path().join(f)), "{f}");
    }
}

#[test]
fn binary_end_to_end() {
    let out = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_policy-debate");
    let cfg = demo().join("experiment.json");
    let run = |args: &[&str]| {
        let o = Command::new(bin)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out.path())
            .args(args)
            .env("RUST_LOG", "error")
            .output()
            .unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    assert!(run(&["ingest"]).contains("37 slices"));
    assert!(run(&["--preset", "3", "run", "--workers", "2"]).contains("37 completed"));
    let eval = run(&["eval"]);
    assert!(eval.starts_with("Meetings: 37"));
    assert_eq!(run(&["report"]), eval);

    let bad = Command::new(bin).args(["--preset", "9", "report"]).output().unwrap();
    assert!(!bad.status.success());
}

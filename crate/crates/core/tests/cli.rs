use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use metonymy::classify::read_traces;
use metonymy::data::read_predictions;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metonymy"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scripted() -> String {
    format!("scripted:{}", s(&fixture("annotated_script.json")))
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let o = bin(&[
        "--strategy",
        "cot3s",
        "classify",
        "--dataset",
        s(&fixture("annotated.jsonl")),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cot2s-sc"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "augment",
        "--seeds",
        s(&dir.path().join("nope.jsonl")),
        "--out",
        s(&dir.path().join("lex.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn classify_without_backend_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "classify",
        "--dataset",
        s(&fixture("annotated.jsonl")),
        "--out",
        s(&dir.path().join("p.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn augment_rerun_uses_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.jsonl");
    let script = format!("scripted:{}", s(&fixture("augment_script.json")));
    let o = bin(&[
        "--backend",
        &script,
        "augment",
        "--seeds",
        s(&fixture("seeds.jsonl")),
        "--out",
        s(&lex),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read(&lex).unwrap();
    assert!(dir.path().join("lex.checkpoint.json").exists());
    assert!(dir.path().join("lex.stats.json").exists());

    // An empty script fails any request, so this only succeeds if nothing is asked.
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"rules": []}"#).unwrap();
    let o = bin(&[
        "--backend",
        &format!("scripted:{}", s(&empty)),
        "augment",
        "--seeds",
        s(&fixture("seeds.jsonl")),
        "--out",
        s(&lex),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&lex).unwrap(), first);
}

#[test]
fn augment_without_backend_keeps_seeds_only() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.jsonl");
    let o = bin(&["augment", "--seeds", s(&fixture("seeds.jsonl")), "--out", s(&lex)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&lex).unwrap().lines().count(), 3);
}

#[test]
fn mine_then_sample() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.jsonl");
    let script = format!("scripted:{}", s(&fixture("augment_script.json")));
    assert!(bin(&[
        "--backend",
        &script,
        "augment",
        "--seeds",
        s(&fixture("seeds.jsonl")),
        "--out",
        s(&lex)
    ])
    .status
    .success());

    let mined = dir.path().join("mined.jsonl");
    let o = bin(&[
        "mine",
        "--lexicon",
        s(&lex),
        "--out",
        s(&mined),
        s(&fixture("sample.conllu")),
    ]);
    // the fixture has one malformed block, which is skipped and counted
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 malformed"));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mined.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["scan"]["malformed_blocks"], 1);
    let n_cands = stats["scan"]["candidates"].as_u64().unwrap() as usize;
    assert!(n_cands > 0);
    assert_eq!(std::fs::read_to_string(&mined).unwrap().lines().count(), n_cands);

    let cands = dir.path().join("mined.candidates.jsonl");
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        let o = bin(&[
            "--seed",
            "7",
            "sample",
            "--candidates",
            s(&cands),
            "-n",
            "3",
            "--out",
            s(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 3);
}

#[test]
fn mine_with_empty_lexicon_fails() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.jsonl");
    std::fs::write(&lex, "").unwrap();
    let o = bin(&[
        "mine",
        "--lexicon",
        s(&lex),
        "--out",
        s(&dir.path().join("m.jsonl")),
        s(&fixture("sample.conllu")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
}

#[test]
fn classify_is_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        let o = bin(&[
            "--backend",
            &scripted(),
            "--strategy",
            "cot2s",
            "--votes",
            "3",
            "classify",
            "--dataset",
            s(&fixture("annotated.jsonl")),
            "--out",
            s(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("a.traces.jsonl")).unwrap(),
        std::fs::read(dir.path().join("b.traces.jsonl")).unwrap()
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.manifest.json")).unwrap()).unwrap();
    assert!(manifest.get("config").is_some());

    // A rerun against a script that answers nothing resumes everything.
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"rules": []}"#).unwrap();
    let o = bin(&[
        "--backend",
        &format!("scripted:{}", s(&empty)),
        "--strategy",
        "cot2s",
        "--votes",
        "3",
        "classify",
        "--dataset",
        s(&fixture("annotated.jsonl")),
        "--out",
        s(&a),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("12 resumed"), "{}", stdout(&o));
}

#[test]
fn self_consistency_defaults_to_nine_votes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let o = bin(&[
        "--backend",
        &scripted(),
        "--strategy",
        "cot2s-sc",
        "classify",
        "--dataset",
        s(&fixture("annotated.jsonl")),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let preds = read_predictions(&out).unwrap();
    assert_eq!(preds.len(), 12);
    assert!(preds.iter().all(|p| p.votes.len() == 9));
    // every vote is a full two-step chain; ex10's category reply needs a retry
    let traces = read_traces(&dir.path().join("p.traces.jsonl")).unwrap();
    let first_calls = traces.iter().filter(|t| t.attempt == 0).count();
    assert_eq!(first_calls, 12 * 9 * 2);
    assert_eq!(traces.len() - first_calls, 9);
}

#[test]
fn replay_cache_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let live = dir.path().join("live.jsonl");
    let replay = dir.path().join("replay.jsonl");
    let args = |backend: &str, out: &Path| {
        bin(&[
            "--backend",
            backend,
            "--cache-dir",
            s(&cache),
            "--strategy",
            "cot2s",
            "classify",
            "--dataset",
            s(&fixture("annotated.jsonl")),
            "--out",
            s(out),
        ])
    };
    assert!(args(&scripted(), &live).status.success());
    let o = args("replay", &replay);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&live).unwrap(), std::fs::read(&replay).unwrap());
}

#[test]
fn evaluate_warns_about_missing_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.jsonl");
    assert!(bin(&[
        "--backend",
        &scripted(),
        "--strategy",
        "cot2s",
        "classify",
        "--dataset",
        s(&fixture("annotated.jsonl")),
        "--out",
        s(&preds)
    ])
    .status
    .success());
    let text = std::fs::read_to_string(&preds).unwrap();
    let partial = dir.path().join("partial.jsonl");
    std::fs::write(
        &partial,
        text.lines().take(10).map(|l| format!("{l}\n")).collect::<String>(),
    )
    .unwrap();
    let report = dir.path().join("r.json");
    let o = bin(&[
        "evaluate",
        "--predictions",
        s(&partial),
        "--dataset",
        s(&fixture("annotated.jsonl")),
        "--out",
        s(&report),
        "--per-category",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("2 of 12 instances have no prediction"),
        "{}",
        stdout(&o)
    );
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["coverage"]["scored"], 10);
    assert_eq!(r["coverage"]["missing"].as_array().unwrap().len(), 2);
}

#[test]
fn kappa_and_vote_curve() {
    let dir = tempfile::tempdir().unwrap();
    let ds = fixture("annotated.jsonl");
    let o = bin(&["kappa", s(&ds), s(&ds)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("kappa 1.0000"), "{}", stdout(&o));

    let p1 = dir.path().join("n1.jsonl");
    let p3 = dir.path().join("n3.jsonl");
    for (votes, out) in [("1", &p1), ("3", &p3)] {
        assert!(bin(&[
            "--backend",
            &scripted(),
            "--strategy",
            "cot2s",
            "--votes",
            votes,
            "classify",
            "--dataset",
            s(&ds),
            "--out",
            s(out)
        ])
        .status
        .success());
    }
    let csv = dir.path().join("curve.csv");
    let o = bin(&[
        "vote-curve",
        "--dataset",
        s(&ds),
        "--out",
        s(&csv),
        &format!("1={}", s(&p1)),
        &format!("3={}", s(&p3)),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n,met_f1,delta_vs_n1\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn stats_against_published_counts_flags_mismatch() {
    let o = bin(&["stats", "--dataset", s(&fixture("annotated.jsonl")), "--conmec"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("mismatch"));
}

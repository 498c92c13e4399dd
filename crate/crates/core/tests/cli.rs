use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn expertbench(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expertbench"))
        .args(args)
        .env("EXPERTBENCH_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(root: &Path) -> std::path::PathBuf {
    let data = root.join("data");
    let out = expertbench(
        &["synth", "--out", s(&data), "--topics", "3", "--experts-per-topic", "3",
          "--docs-per-expert", "4", "--noise", "5"],
        &root.join("cache"),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data
}

#[test]
fn evaluate_writes_reports_and_uses_cache_dir() {
    let root = tempfile::tempdir().unwrap();
    let data = synth(root.path());
    let cache = root.path().join("cache");
    let out_dir = root.path().join("out");
    let out = expertbench(
        &["evaluate", "--data", s(&data), "--rep", "tfidf", "--ranker", "vote", "--fusion",
          "combmnz", "--protocol", "document", "--k", "5", "--out", s(&out_dir)],
        &cache,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    for ext in ["json", "csv", "roc.jsonl"] {
        assert!(out_dir.join(format!("document__vote-combmnz__tfidf.{ext}")).is_file());
    }
    let cached: Vec<_> = fs::read_dir(&cache).unwrap().collect();
    assert_eq!(cached.len(), 1);
    assert!(!out_dir.join(".cache").exists());
    let csv = fs::read_to_string(out_dir.join("document__vote-combmnz__tfidf.csv")).unwrap();
    assert!(csv.starts_with("metric,mean,std,topic_std,count,excluded\n"));
    assert!(csv.contains("P@5,"));
}

#[test]
fn stale_cache_is_refit() {
    let root = tempfile::tempdir().unwrap();
    let data = synth(root.path());
    let cache = root.path().join("cache");
    let run = |out: &str| {
        let o = expertbench(
            &["evaluate", "--data", s(&data), "--rep", "lsi", "--lsi-rank", "8", "--ranker",
              "panoptic", "--out", s(&root.path().join(out))],
            &cache,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(root.path().join(out).join("topic__panoptic__lsi.json")).unwrap()
    };
    let first = run("a");
    let entry = fs::read_dir(&cache).unwrap().next().unwrap().unwrap().path();
    fs::write(&entry, b"garbage").unwrap();
    assert_eq!(run("b"), first);
    assert_ne!(fs::read(&entry).unwrap(), b"garbage");
}

#[test]
fn invalid_eta_fails() {
    let root = tempfile::tempdir().unwrap();
    let data = synth(root.path());
    let out = expertbench(
        &["evaluate", "--data", s(&data), "--eta", "1.5", "--out", s(&root.path().join("o"))],
        &root.path().join("cache"),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let root = tempfile::tempdir().unwrap();
    let data = synth(root.path());
    let cfg = root.path().join("run.json");
    fs::write(&cfg, r#"{"ranker": "propagation", "eta": 0.1, "rep": "tf", "k": 3}"#).unwrap();
    let out_dir = root.path().join("o");
    let out = expertbench(
        &["evaluate", "--config", s(&cfg), "--data", s(&data), "--rep", "tfidf", "--out",
          s(&out_dir)],
        &root.path().join("cache"),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("topic__propagation-eta0.1__tfidf.json")).unwrap())
            .unwrap();
    assert_eq!(report["k"], 3);
}

#[test]
fn report_merges_and_rejects_mixed_protocols() {
    let root = tempfile::tempdir().unwrap();
    let data = synth(root.path());
    let cache = root.path().join("cache");
    let out_dir = root.path().join("o");
    for (rep, ranker, protocol) in [
        ("tf", "panoptic", "topic"),
        ("tfidf", "panoptic", "topic"),
        ("tfidf", "vote", "topic"),
        ("tfidf", "vote", "document"),
    ] {
        let o = expertbench(
            &["evaluate", "--data", s(&data), "--rep", rep, "--ranker", ranker, "--protocol",
              protocol, "--out", s(&out_dir)],
            &cache,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let topic = [
        out_dir.join("topic__panoptic__tf.json"),
        out_dir.join("topic__panoptic__tfidf.json"),
        out_dir.join("topic__vote-rr__tfidf.json"),
    ];
    let mut args = vec!["report"];
    args.extend(topic.iter().map(|p| s(p)));
    let o = expertbench(&args, &cache);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let md = String::from_utf8(o.stdout).unwrap();
    assert!(md.contains("panoptic") && md.contains("vote-rr"));

    let tables = root.path().join("tables");
    args.extend(["--out", s(&tables)]);
    assert!(expertbench(&args, &cache).status.success());
    assert!(tables.join("table_topic.csv").is_file());
    assert!(tables.join("table_topic.md").is_file());

    let mixed = out_dir.join("document__vote-rr__tfidf.json");
    let o = expertbench(&["report", s(&topic[0]), s(&mixed)], &cache);
    assert!(!o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn convert_and_preprocess() {
    let root = tempfile::tempdir().unwrap();
    let dump = root.path().join("dump.txt");
    let long = "graph ranking of experts in bibliographic networks with random walks";
    fs::write(
        &dump,
        format!(
            "#*{long}\n#@Ann Lee;Bo Chen\n#t2010\n#cKDD\n#index1\n#%7\n#!abstract text\n\n\
             #*short\n#@Ann Lee\n#index2\n\n\
             #*no index here\n#@Cy Dunn\n\n\
             #*{long} again\n#@Bo Chen\n#index3\n"
        ),
    )
    .unwrap();
    let experts = root.path().join("experts.json");
    fs::write(&experts, r#"{"graphs": ["Ann Lee", "Nobody"], "empty": ["Ghost"]}"#).unwrap();
    let raw = root.path().join("raw");
    let cache = root.path().join("cache");
    let o = expertbench(
        &["convert", "--aminer", s(&dump), "--experts", s(&experts), "--out", s(&raw)],
        &cache,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("records: 3") && err.contains("rejected: 1"), "{err}");
    let docs = fs::read_to_string(raw.join("documents.jsonl")).unwrap();
    assert_eq!(docs.lines().count(), 3);

    let clean = root.path().join("clean");
    let o = expertbench(&["preprocess", "--input", s(&raw), "--out", s(&clean)], &cache);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let docs = fs::read_to_string(clean.join("documents.jsonl")).unwrap();
    assert_eq!(docs.lines().count(), 2);

    let o = expertbench(
        &["preprocess", "--input", s(&raw), "--out", s(&clean), "--max-docs", "1", "--min-docs", "1"],
        &cache,
    );
    assert!(!o.status.success());
}

#[test]
fn empty_dump_converts() {
    let root = tempfile::tempdir().unwrap();
    let dump = root.path().join("empty.txt");
    fs::write(&dump, "").unwrap();
    let o = expertbench(
        &["convert", "--aminer", s(&dump), "--out", s(&root.path().join("d"))],
        &root.path().join("cache"),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_data_dir_fails() {
    let root = tempfile::tempdir().unwrap();
    let o = expertbench(
        &["evaluate", "--data", s(&root.path().join("nope")), "--out", s(&root.path().join("o"))],
        &root.path().join("cache"),
    );
    assert!(!o.status.success());
}

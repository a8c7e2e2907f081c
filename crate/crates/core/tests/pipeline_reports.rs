use miniaudit::lexicon::{DataPractice, Operation};
use miniaudit::pipeline::{analyze_app, analyze_corpus, write_corpus, Analyzer, ReportFormat};
use miniaudit::{Analyzer64, Pattern, Strength};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn copy_tree(from: &Path, to: &Path) {
    for e in walkdir::WalkDir::new(from) {
        let e = e.unwrap();
        let dst = to.join(e.path().strip_prefix(from).unwrap());
        if e.file_type().is_dir() {
            fs::create_dir_all(&dst).unwrap();
        } else {
            fs::copy(e.path(), &dst).unwrap();
        }
    }
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            (
                e.path().strip_prefix(root).unwrap().to_path_buf(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn xiaomaqun_policy_is_silent_on_location() {
    let an = Analyzer64::bundled();
    let r = analyze_app(&an, &fixtures().join("apps/xiaomaqun"), None).unwrap();
    assert!(r
        .code_practices
        .contains(&DataPractice::new("location", Operation::Send)));
    assert!(r.consistency.strong_uninformed.contains("location"));
    assert!(r.policy_practices.iter().any(|p| p.data_type == "phone number"));
    assert!(r.policy_practices.iter().all(|p| p.data_type != "location"));
    assert_eq!(r.related_sentences, 1);
    let sinks: Vec<&str> = r
        .flows
        .iter()
        .filter_map(|f| f.sink.as_ref())
        .map(|s| s.api.as_str())
        .collect();
    assert_eq!(sinks, ["wx.request"]);
}

#[test]
fn broken_scripts_degrade_to_diagnostics() {
    let an = Analyzer64::bundled();
    let r = analyze_app(&an, &fixtures().join("apps/obfuscated"), None).unwrap();
    assert!(r.flows.is_empty());
    assert!(r.code_practices.is_empty());
    let files: Vec<&str> = r.diagnostics.iter().filter_map(|d| d.file.as_deref()).collect();
    assert!(files.contains(&"pages/index/index.js"), "{:#?}", r.diagnostics);
    assert!(files.contains(&"pages/detail/detail.js"), "{:#?}", r.diagnostics);
}

#[test]
fn comparator_corpus_patterns() {
    let an = Analyzer64::bundled();
    let (summary, entries) = analyze_corpus(&an, &fixtures().join("comparator"), 2).unwrap();
    let want = [
        (Pattern::OverlapUninformed, Strength::Strong),
        (Pattern::Separation, Strength::Strong),
        (Pattern::Separation, Strength::Strong),
        (Pattern::Intersection, Strength::StrongAndWeak),
        (Pattern::Intersection, Strength::Strong),
        (Pattern::OverlapConsistent, Strength::None),
    ];
    assert_eq!(entries.len(), 6);
    for (e, w) in entries.iter().zip(want) {
        let r = e.result.as_ref().unwrap();
        assert!(
            r.diagnostics.iter().all(|d| !d.message.contains("unknown")),
            "{}: {:?}",
            e.app_id,
            r.diagnostics
        );
        assert_eq!((r.consistency.pattern, r.consistency.strength), w, "{}", e.app_id);
    }
    assert_eq!(summary.patterns["Separation"], 2);
    assert_eq!(summary.patterns["Intersection"], 2);
    assert_eq!(summary.patterns.values().sum::<usize>(), 6);
}

#[test]
fn three_app_corpus_counts_sum() {
    let dir = tempfile::tempdir().unwrap();
    for app in ["courier", "share_location", "xiaomaqun"] {
        copy_tree(&fixtures().join("apps").join(app), &dir.path().join(app));
    }
    let an = Analyzer64::bundled();
    let (summary, _) = analyze_corpus(&an, dir.path(), 0).unwrap();
    assert_eq!(summary.apps, 3);
    assert_eq!(summary.analyzed, 3);
    assert_eq!(summary.patterns.values().sum::<usize>(), 3);
    assert_eq!(summary.strengths.values().sum::<usize>(), 3);
}

#[test]
fn failed_app_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(
        &fixtures().join("apps/share_location"),
        &dir.path().join("share_location"),
    );
    fs::create_dir_all(dir.path().join("empty")).unwrap();
    let an = Analyzer64::bundled();
    let (summary, entries) = analyze_corpus(&an, dir.path(), 1).unwrap();
    assert_eq!(summary.apps, 2);
    assert_eq!(summary.analyzed, 1);
    assert_eq!(summary.failed.len(), 1);
    assert_eq!(summary.failed[0].app_id, "empty");
    assert!(entries[1].result.is_ok());
}

#[test]
fn empty_app_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("app.json"), r#"{"pages": []}"#).unwrap();
    fs::write(dir.path().join("privacy_policy.txt"), "").unwrap();
    let an = Analyzer64::bundled();
    let r = analyze_app(&an, dir.path(), None).unwrap();
    assert!(r.flows.is_empty());
    assert_eq!(r.consistency.pattern, Pattern::OverlapConsistent);
    assert_eq!(r.consistency.strength, Strength::None);
}

#[test]
fn explicit_policy_overrides_package() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("policy.txt");
    fs::write(&policy, "We collect your location and send it to our server.").unwrap();
    let an = Analyzer64::bundled();
    let r = analyze_app(&an, &fixtures().join("apps/xiaomaqun"), Some(&policy)).unwrap();
    assert_eq!(r.policy_files, ["policy.txt"]);
    assert_eq!(r.consistency.pattern, Pattern::OverlapConsistent);
    let missing = analyze_app(
        &an,
        &fixtures().join("apps/xiaomaqun"),
        Some(&dir.path().join("nope.txt")),
    );
    assert!(missing.is_err());
}

#[test]
fn corpus_output_is_deterministic_and_recountable() {
    let corpus = fixtures().join("apps");
    let run = |jobs| {
        let out = tempfile::tempdir().unwrap();
        let an: Analyzer<f64> = Analyzer::bundled();
        let (summary, entries) = analyze_corpus(&an, &corpus, jobs).unwrap();
        write_corpus(out.path(), &summary, &entries, ReportFormat::Json).unwrap();
        let tree = read_tree(out.path());
        (out, tree)
    };
    let (out, a) = run(1);
    let (_, b) = run(4);
    assert_eq!(a, b);

    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out.path().join("summary.json")).unwrap()).unwrap();
    let mut recount: BTreeMap<String, u64> = BTreeMap::new();
    for e in fs::read_dir(out.path().join("reports")).unwrap() {
        let r: serde_json::Value = serde_json::from_slice(&fs::read(e.unwrap().path()).unwrap()).unwrap();
        let p = r["consistency"]["pattern"].as_str().unwrap().to_string();
        *recount.entry(p).or_default() += 1;
    }
    for (k, v) in summary["patterns"].as_object().unwrap() {
        assert_eq!(v.as_u64().unwrap(), recount.get(k).copied().unwrap_or(0), "{k}");
    }
    assert!(out.path().join("summary_patterns.csv").is_file());
}

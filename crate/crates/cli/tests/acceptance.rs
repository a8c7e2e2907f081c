#[path = "../../core/tests/support/mod.rs"]
mod support;

use anyhow::{ensure, Context, Result};
use miniaudit::consistency::{compare, Pattern};
use miniaudit::lexicon::{DataPractice, Lexicons, Operation};
use miniaudit::pipeline::{analyze_app, analyze_corpus, Analyzer};
use miniaudit::policy::{
    generate_corpus, rule_related, similarity, vectorize, CorpusConfig, Method, Mlp, SimilarityConfig, TrainConfig,
    Unit, Vocabulary,
};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

const SAMPLE_POLICY: &str = "We ask you to provide personal information such as mobile phone number, ID number, \
                    bank account number and third-party account number to ensure that you enjoy our full service.";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn share_location_flow() -> Result<String> {
    let t0 = Instant::now();
    let an = Analyzer::<f64>::bundled();
    let r = analyze_app(&an, &fixtures().join("apps/share_location"), None)?;
    let secs = t0.elapsed().as_secs_f64();
    ensure!(r.flows.len() == 1, "{} flows", r.flows.len());
    let f = &r.flows[0];
    ensure!(
        f.path == ["wx.chooseLocation", "t", "Page.data.location", "wx.request"],
        "path {:?}",
        f.path
    );
    let want: BTreeSet<_> = [Operation::Collect, Operation::Send]
        .into_iter()
        .map(|o| DataPractice::new("location", o))
        .collect();
    ensure!(r.code_practices == want, "practices {:?}", r.code_practices);
    ensure!(secs < 1.0, "took {secs:.3}s");
    Ok(format!("{} in {:.0} ms", f.path.join(" -> "), secs * 1e3))
}

fn comparator() -> Result<String> {
    for (i, (c, p, pattern, strength)) in support::COMPARATOR_CASES.iter().enumerate() {
        let r = compare(&support::practices(c), &support::practices(p));
        ensure!(
            (r.pattern, r.strength) == (*pattern, *strength),
            "case {}: {} {}",
            i + 1,
            r.pattern,
            r.strength
        );
    }
    let an = Analyzer::<f64>::bundled();
    let (summary, entries) = analyze_corpus(&an, &fixtures().join("comparator"), 1)?;
    ensure!(summary.failed.is_empty(), "failed apps");
    let mut labels = Vec::new();
    for (e, (_, _, pattern, strength)) in entries.iter().zip(support::COMPARATOR_CASES) {
        let r = e.result.as_ref().map_err(|s| anyhow::anyhow!("{}: {s}", e.app_id))?;
        ensure!(
            (r.consistency.pattern, r.consistency.strength) == (*pattern, *strength),
            "{}",
            e.app_id
        );
        labels.push(format!("{}/{}", r.consistency.pattern, r.consistency.strength));
    }
    ensure!(entries.len() == 6, "{} cases", entries.len());
    Ok(labels.join(", "))
}

fn mixed_fixture() -> Result<String> {
    let r = compare(
        &support::practices(support::MIXED_CODE),
        &support::practices(support::MIXED_POLICY),
    );
    ensure!(r.pattern == Pattern::Intersection, "{}", r.pattern);
    let strong: BTreeSet<String> = r.strong_uninformed.union(&r.strong_redundant).cloned().collect();
    let want = support::names(&[
        "location",
        "document",
        "ID number",
        "bank account",
        "third-party account",
    ]);
    ensure!(strong == want, "strong {strong:?}");
    ensure!(
        r.weak_uninformed == support::practices("phone number:S"),
        "weak {:?}",
        r.weak_uninformed
    );
    ensure!(r.weak_redundant.is_empty(), "weak redundant {:?}", r.weak_redundant);
    Ok(format!(
        "{}, {} strong, weak (phone number, Send)",
        r.pattern,
        strong.len()
    ))
}

fn reachability() -> Result<String> {
    let t0 = Instant::now();
    let mut pairs = 0;
    for seed in 0..100 {
        let (n, edges) = support::random_graph(seed, 20, 60);
        ensure!(n <= 20 && edges.len() <= 60);
        let bad = support::reachability_mismatches(n, &edges);
        ensure!(bad == 0, "seed {seed}: {bad} mismatched pairs");
        pairs += n * n;
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "took {secs:.2}s");
    Ok(format!("100 graphs, {pairs} pairs, {:.0} ms", secs * 1e3))
}

fn scope() -> Result<String> {
    let mut refs = 0;
    for seed in 0..50 {
        let fx = support::scope_fixture(seed);
        refs += support::check_scope_fixture(&fx).map_err(|e| anyhow::anyhow!("seed {seed}: {e}"))?;
    }
    use miniaudit::scope::EntityKind::*;
    let fx = support::scope_fixture(0);
    let kinds: Vec<_> = fx.refs.iter().map(|r| r.2.map(|b| b.0)).collect();
    ensure!(
        kinds
            == [
                Some(Variable),
                Some(Parameter),
                Some(Variable),
                Some(Variable),
                Some(Variable)
            ],
        "shadowing fixture {kinds:?}"
    );
    Ok(format!(
        "50 fixtures, {refs} references, shadowed t binds the callback parameter"
    ))
}

fn similarity_suite() -> Result<String> {
    let pairs = support::phrase_pairs(11, 1000);
    let thresholds = [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0];
    let cfg = |m, t| SimilarityConfig::<f64>::new(m, t, Unit::Auto).unwrap();
    for m in Method::ALL {
        for (a, b) in &pairs {
            let ab = similarity(a, b, &cfg(m, 1.0))?;
            let ba = similarity(b, a, &cfg(m, 1.0))?;
            ensure!((ab - ba).abs() <= 1e-12, "{m} not symmetric on {a:?} {b:?}");
            ensure!(similarity(a, a, &cfg(m, 1.0))? == 1.0, "{m} identity on {a:?}");
            let acc: Vec<bool> = thresholds.iter().map(|&t| cfg(m, t).accepts(ab)).collect();
            ensure!(acc.windows(2).all(|w| w[0] || !w[1]), "{m} not monotone on {a:?} {b:?}");
        }
    }
    let o = cfg(Method::Overlap, 1.0);
    let city = similarity("city", "currently living city", &o)?;
    let id = similarity("mobile phone number", "ID number", &o)?;
    ensure!(city == 1.0 && id == 0.5, "overlap values {city} {id}");
    Ok(format!("4 methods x 1000 pairs; overlap {city} and {id}"))
}

fn sample_policy_vector() -> Result<String> {
    let vocab = Vocabulary::new(["mobile number", "bank account", "location"]);
    let v = vectorize(SAMPLE_POLICY, &vocab);
    ensure!(v == [1, 1, 0], "{v:?}");
    Ok(format!("{v:?}"))
}

fn classifier() -> Result<String> {
    let lex = Lexicons::bundled();
    let vocab = Vocabulary::combined(&lex);
    let corpus = generate_corpus(&lex, &CorpusConfig::default());
    ensure!(corpus.len() == 2000, "{} sentences", corpus.len());
    let data: Vec<(Vec<u8>, bool)> = corpus.iter().map(|(y, s)| (vectorize(s, &vocab), *y)).collect();
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (v, y) in &data {
        match (rule_related(v, &vocab), *y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    ensure!(
        precision == 1.0 && recall == 1.0,
        "precision {precision} recall {recall}"
    );
    let (train, test) = data.split_at(1600);
    let t0 = Instant::now();
    let m = Mlp::<f64>::train(train, vocab.len(), &TrainConfig::default())?;
    let secs = t0.elapsed().as_secs_f64();
    let acc = m.accuracy(test)?;
    ensure!(acc >= 0.90, "held-out accuracy {acc}");
    ensure!(secs < 60.0, "training took {secs:.1}s");
    Ok(format!("rule P=R=1.0; mlp held-out {acc:.4} after {secs:.1}s"))
}

fn determinism() -> Result<String> {
    let an = Analyzer::<f64>::bundled();
    let render = |jobs| -> Result<String> {
        let (summary, entries) = analyze_corpus(&an, &fixtures().join("apps"), jobs)?;
        let mut out = summary.to_json();
        for e in &entries {
            out.push_str(&e.app_id);
            if let Ok(r) = &e.result {
                out.push_str(&r.to_json());
                out.push_str(&r.to_csv());
            }
        }
        for (name, body) in summary.csv_tables() {
            out.push_str(name);
            out.push_str(&body);
        }
        Ok(out)
    };
    let a = render(1)?;
    let b = render(1)?;
    let c = render(4)?;
    ensure!(a == b, "two sequential runs differ");
    ensure!(a == c, "parallel run differs");
    Ok(format!("{} bytes identical across runs", a.len()))
}

fn degradation() -> Result<String> {
    let out = Command::new(env!("CARGO_BIN_EXE_miniaudit"))
        .arg("analyze")
        .arg(fixtures().join("apps/obfuscated"))
        .output()
        .context("running miniaudit")?;
    ensure!(out.status.code() == Some(0), "exit {:?}", out.status.code());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).context("report is not JSON")?;
    let flows = report["flows"].as_array().context("flows")?.len();
    let diags = report["diagnostics"].as_array().context("diagnostics")?.len();
    ensure!(flows == 0, "{flows} flows");
    ensure!(diags > 0, "no diagnostics");
    Ok(format!("exit 0, {diags} diagnostics, 0 flows"))
}

type Check = fn() -> Result<String>;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("end-to-end location flow", share_location_flow),
        ("comparator table cases", comparator),
        ("intersection fixture findings", mixed_fixture),
        ("reachability vs closure", reachability),
        ("scope resolution vs simulator", scope),
        ("similarity properties", similarity_suite),
        ("bag-of-words vector", sample_policy_vector),
        ("sentence classifiers", classifier),
        ("corpus determinism", determinism),
        ("graceful degradation", degradation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check)
            .unwrap_or_else(|p| Err(anyhow::anyhow!("panicked: {:?}", p.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {e:#}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

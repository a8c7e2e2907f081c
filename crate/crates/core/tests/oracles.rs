mod support;

use miniaudit::ingest::parse_layout;
use miniaudit::lexicon::{DataPractice, Lexicons, Operation};
use miniaudit::policy::{
    extract_tuples, similarity, vectorize, ClauseWindowProvider, Method, SentenceRecord, SimilarityConfig, Unit,
    Vocabulary,
};
use miniaudit::taint::{find_flows, flows_to_practices, ApiTables, SinkCategory, SinkSpec, SourceCategory, SourceSpec};
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

#[test]
fn reachability_matches_closure() {
    let start = Instant::now();
    let mut pairs = 0;
    for seed in 0..100 {
        let (n, edges) = support::random_graph(seed, 20, 60);
        assert_eq!(support::reachability_mismatches(n, &edges), 0, "seed {seed}");
        pairs += n * n;
    }
    assert!(pairs > 0);
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn reachability_on_dense_cycles() {
    let n = 20;
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).chain([(5, 5), (7, 2)]).collect();
    assert_eq!(support::reachability_mismatches(n, &edges), 0);
    let g = support::graph_of(n, &edges);
    assert_eq!(g.reachable(0).len(), n);
}

fn tables(sources: usize, sinks: &[SinkCategory]) -> ApiTables {
    let mut t = ApiTables {
        sources: BTreeMap::new(),
        sinks: BTreeMap::new(),
    };
    for i in 0..sources {
        let api = format!("wx.src{i}");
        t.sources.insert(
            api.clone(),
            SourceSpec {
                api_name: api,
                category: SourceCategory::Location,
                data_type: format!("type{i}"),
                is_async: false,
            },
        );
    }
    for (k, &c) in sinks.iter().enumerate() {
        let api = format!("wx.sink{k}");
        t.sinks.insert(
            api.clone(),
            SinkSpec {
                api_name: api,
                category: c,
            },
        );
    }
    t
}

#[test]
fn flows_match_path_enumeration() {
    let cats = [SinkCategory::Usage, SinkCategory::Transmission, SinkCategory::Usage];
    for seed in 0..100 {
        let (g, edges) = support::flow_graph(seed, 2, 3);
        let n = g.entities.len();
        let flows = find_flows(&g, &tables(2, &cats), &[]);
        for src in 0..2 {
            let mut any = false;
            for k in 0..3 {
                let sink = n - 1 - k;
                let paths = support::simple_paths(n, &edges, src, sink);
                let api = format!("wx.sink{k}");
                let got: Vec<_> = flows
                    .iter()
                    .filter(|f| f.path[0] == src && f.sink.as_ref().is_some_and(|s| s.api == api))
                    .collect();
                assert_eq!(
                    got.len(),
                    usize::from(!paths.is_empty()),
                    "seed {seed} src {src} sink {k}"
                );
                if let Some(f) = got.first() {
                    any = true;
                    let shortest = paths.iter().map(Vec::len).min().unwrap();
                    assert_eq!(f.path.len(), shortest, "seed {seed}");
                    assert_eq!(*f.path.last().unwrap(), sink);
                    for w in f.path.windows(2) {
                        assert!(g.has_edge(w[0], w[1]), "seed {seed}: {w:?} is not an edge");
                    }
                }
            }
            let sinkless = flows.iter().filter(|f| f.path == [src] && f.sink.is_none()).count();
            assert_eq!(sinkless, usize::from(!any), "seed {seed} src {src}");
        }
    }
}

#[test]
fn adding_a_sink_never_removes_a_flow() {
    let key = |f: &miniaudit::taint::TaintFlow| (f.path[0], f.sink.as_ref().map(|s| s.api.clone()));
    for seed in 0..100 {
        let (g, _) = support::flow_graph(seed, 2, 3);
        let fewer = find_flows(&g, &tables(2, &[SinkCategory::Usage, SinkCategory::Transmission]), &[]);
        let more = find_flows(
            &g,
            &tables(
                2,
                &[
                    SinkCategory::Usage,
                    SinkCategory::Transmission,
                    SinkCategory::Transmission,
                ],
            ),
            &[],
        );
        let more_keys: BTreeSet<_> = more.iter().map(key).collect();
        for f in fewer.iter().filter(|f| f.sink.is_some()) {
            assert!(more_keys.contains(&key(f)), "seed {seed}");
        }
        for set in [flows_to_practices(&fewer), flows_to_practices(&more)] {
            for p in &set {
                assert!(set.contains(&DataPractice::new(p.data_type.clone(), Operation::Collect)));
            }
        }
        let pf = flows_to_practices(&fewer);
        assert!(pf.is_subset(&flows_to_practices(&more)), "seed {seed}");
    }
}

#[test]
fn scope_resolution_matches_simulator() {
    use miniaudit::scope::EntityKind;
    let mut checked = 0;
    let mut kinds = BTreeSet::new();
    let mut unbound = 0;
    for seed in 0..50 {
        let fx = support::scope_fixture(seed);
        checked += support::check_scope_fixture(&fx).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        for r in &fx.refs {
            match r.2 {
                Some((k, _)) => {
                    kinds.insert(k);
                }
                None => unbound += 1,
            }
        }
    }
    assert!(checked >= 100, "only {checked} references");
    assert!(unbound > 0);
    for k in [EntityKind::Variable, EntityKind::Parameter, EntityKind::Function] {
        assert!(kinds.contains(&k), "{k:?} never exercised");
    }
}

#[test]
fn shadowing_fixture_binds_callback_parameter() {
    let fx = support::scope_fixture(0);
    use miniaudit::scope::EntityKind::*;
    let kinds: Vec<_> = fx.refs.iter().map(|r| r.2.map(|b| b.0)).collect();
    assert_eq!(
        kinds,
        [
            Some(Variable),
            Some(Parameter),
            Some(Variable),
            Some(Variable),
            Some(Variable)
        ]
    );
    support::check_scope_fixture(&fx).unwrap();
}

fn cfg(m: Method, t: f64) -> SimilarityConfig<f64> {
    SimilarityConfig::new(m, t, Unit::Auto).unwrap()
}

#[test]
fn similarity_properties_on_random_pairs() {
    let pairs = support::phrase_pairs(11, 1000);
    let thresholds = [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0];
    for m in Method::ALL {
        let c = cfg(m, 1.0);
        for (a, b) in &pairs {
            let ab = similarity(a, b, &c).unwrap();
            let ba = similarity(b, a, &c).unwrap();
            assert!((ab - ba).abs() <= 1e-12, "{m}: {a:?} {b:?} {ab} {ba}");
            assert!((0.0..=1.0).contains(&ab));
            assert_eq!(similarity(a, a, &c).unwrap(), 1.0, "{m}: {a:?}");
            let accepted: Vec<bool> = thresholds.iter().map(|&t| cfg(m, t).accepts(ab)).collect();
            assert!(accepted.windows(2).all(|w| w[0] || !w[1]), "{m}: {a:?} {b:?}");
        }
    }
}

#[test]
fn overlap_reference_values() {
    let c = cfg(Method::Overlap, 1.0);
    assert_eq!(similarity("city", "currently living city", &c).unwrap(), 1.0);
    assert_eq!(similarity("mobile phone number", "ID number", &c).unwrap(), 0.5);
}

#[test]
fn extraction_is_monotone_in_threshold() {
    let lex = Lexicons::bundled();
    let mut rng_pairs = support::phrase_pairs(5, 200).into_iter();
    let ops = ["collect", "share", "use", "store", "send"];
    for m in Method::ALL {
        for i in 0..40 {
            let (a, b) = rng_pairs.next().unwrap();
            let text = format!("we {} your {a} and {b}", ops[i % ops.len()]);
            let record = SentenceRecord {
                index: 0,
                text,
                vector: Vec::new(),
                related: true,
            };
            let mut prev: Option<BTreeSet<DataPractice>> = None;
            for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let got = extract_tuples(&record, &lex, &cfg(m, t), &ClauseWindowProvider);
                if let Some(p) = &prev {
                    assert!(got.is_subset(p), "{m} {t}: {:?}", record.text);
                }
                prev = Some(got);
            }
        }
    }
}

#[test]
fn lexicon_round_trip() {
    let lex = Lexicons::bundled();
    let dir = tempfile::tempdir().unwrap();
    lex.to_files().write_dir(dir.path()).unwrap();
    let back = Lexicons::load(dir.path()).unwrap();
    assert_eq!(back.types, lex.types);
    assert_eq!(back.operations, lex.operations);
    assert_eq!(back.policy_keywords, lex.policy_keywords);
}

#[test]
fn source_table_types_resolve() {
    let lex = Lexicons::bundled();
    let t = ApiTables::bundled().resolve_types(&lex.types).unwrap();
    for s in t.sources.values() {
        assert!(lex.types.secondary(&s.data_type).is_some(), "{}", s.api_name);
    }
}

fn vocab_phrase() -> impl Strategy<Value = String> {
    let lex = Lexicons::bundled();
    let words: Vec<String> = Vocabulary::combined(&lex).words().map(str::to_string).collect();
    let filler = ["we", "may", "your", "for", "service", "please", "的", "我们"];
    let items: Vec<String> = words.into_iter().chain(filler.iter().map(|s| s.to_string())).collect();
    proptest::collection::vec(proptest::sample::select(items), 0..6).prop_map(|v| v.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn vectorization_is_linear(a in vocab_phrase(), b in vocab_phrase()) {
        let vocab = Vocabulary::combined(&Lexicons::bundled());
        let va = vectorize(&a, &vocab);
        let vb = vectorize(&b, &vocab);
        let both = vectorize(&format!("{a}\n{b}"), &vocab);
        let or: Vec<u8> = va.iter().zip(&vb).map(|(x, y)| x | y).collect();
        prop_assert_eq!(both, or);
    }

    #[test]
    fn layout_attributes_round_trip(tree in layout_tree()) {
        let first = parse_layout(&tree).unwrap();
        let second = parse_layout(&first.to_markup()).unwrap();
        prop_assert_eq!(attrs(&first), attrs(&second));
        prop_assert_eq!(attrs(&first).len(), tree.matches("=\"").count());
    }
}

fn attrs(t: &miniaudit::ingest::LayoutTree) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    t.walk(&mut |n, _| {
        for (k, v) in &n.attrs {
            out.push((n.tag.clone(), k.clone(), v.clone()));
        }
    });
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('"', "&quot;")
}

fn layout_tree() -> impl Strategy<Value = String> {
    let key = proptest::sample::select(vec![
        "class",
        "id",
        "bindtap",
        "catch:input",
        "placeholder",
        "data-x",
        "wx:if",
    ]);
    let value = "[a-z &<\"{}]{0,8}";
    let attrs = proptest::collection::btree_map(key, value, 0..3).prop_map(|m| {
        m.into_iter()
            .map(|(k, v)| format!(" {k}=\"{}\"", escape(&v)))
            .collect::<String>()
    });
    let text = "[a-z ]{0,6}";
    let leaf = (proptest::sample::select(vec!["input", "image", "icon"]), attrs.clone())
        .prop_map(|(t, a)| format!("<{t}{a}/>"));
    leaf.prop_recursive(3, 24, 4, move |inner| {
        (
            proptest::sample::select(vec!["view", "text", "button", "label"]),
            attrs.clone(),
            text,
            proptest::collection::vec(inner, 0..4),
        )
            .prop_map(|(t, a, s, kids)| format!("<{t}{a}>{}{}</{t}>", escape(&s), kids.concat()))
    })
}

//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use miniaudit::consistency::{Pattern, Strength};
use miniaudit::ddg::{ApiCall, DataDependencyGraph, DepEdge, DepKind, Via};
use miniaudit::js::{parse_js, AstNode, NodeKind, Span};
use miniaudit::lexicon::{DataPractice, Operation};
use miniaudit::scope::{build_scope_chain, CodeEntity, EntityKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

// ---------------------------------------------------------------- graphs

/// Random directed graph with up to `max_n` nodes and `max_m` edges;
/// self-loops and cycles allowed.
pub fn random_graph(seed: u64, max_n: usize, max_m: usize) -> (usize, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(0..=max_m);
    let edges = (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    (n, edges)
}

/// Reflexive transitive closure by Warshall's algorithm.
pub fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        let via = r[k].clone();
        for row in r.iter_mut().filter(|row| row[k]) {
            for (cell, &reach) in row.iter_mut().zip(&via) {
                *cell |= reach;
            }
        }
    }
    r
}

fn entity(id: usize, kind: EntityKind, name: String) -> CodeEntity {
    CodeEntity {
        id,
        kind,
        name,
        decl_span: Span::default(),
        owner_scope: 0,
        owner_entity: None,
        node: None,
        implicit: false,
    }
}

pub fn graph_of(n: usize, edges: &[(usize, usize)]) -> DataDependencyGraph {
    let entities = (0..n)
        .map(|i| entity(i, EntityKind::Variable, format!("v{i}")))
        .collect();
    let edges = edges
        .iter()
        .map(|&(src, dst)| DepEdge {
            src,
            dst,
            kind: DepKind::Set,
            site: Span::default(),
            via: Via::Assignment,
        })
        .collect();
    DataDependencyGraph::from_parts("g.js", entities, edges)
}

/// Number of node pairs where `reachable` disagrees with the closure.
pub fn reachability_mismatches(n: usize, edges: &[(usize, usize)]) -> usize {
    let g = graph_of(n, edges);
    let c = closure(n, edges);
    let mut bad = 0;
    for (u, row) in c.iter().enumerate() {
        let r = g.reachable(u);
        bad += row
            .iter()
            .enumerate()
            .filter(|&(v, &want)| r.contains(&v) != want)
            .count();
    }
    bad
}

/// A graph whose first `sources` nodes are source-call return endpoints and
/// last `sinks` nodes are sink-call argument endpoints.
pub fn flow_graph(seed: u64, sources: usize, sinks: usize) -> (DataDependencyGraph, Vec<(usize, usize)>) {
    let (n, edges) = random_graph(seed, 20, 60);
    let n = n.max(sources + sinks + 1);
    let edges: Vec<(usize, usize)> = edges.into_iter().filter(|&(a, b)| a < n && b < n).collect();
    let mut g = graph_of(n, &edges);
    for i in 0..sources {
        g.entities[i].kind = EntityKind::ApiReturn;
        g.api_calls.push(ApiCall {
            api: format!("wx.src{i}"),
            site: Span::default(),
            ret: i,
            arg: i,
        });
    }
    for k in 0..sinks {
        let i = n - 1 - k;
        g.entities[i].kind = EntityKind::ApiArgument;
        g.api_calls.push(ApiCall {
            api: format!("wx.sink{k}"),
            site: Span::default(),
            ret: i,
            arg: i,
        });
    }
    (g, edges)
}

/// All simple paths from `from` to `to`, by exhaustive DFS.
pub fn simple_paths(n: usize, edges: &[(usize, usize)], from: usize, to: usize) -> Vec<Vec<usize>> {
    fn go(
        u: usize,
        to: usize,
        adj: &[Vec<usize>],
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if u == to && path.len() > 1 {
            out.push(path.clone());
            return;
        }
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                path.push(v);
                go(v, to, adj, seen, path, out);
                path.pop();
                seen[v] = false;
            }
        }
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if !adj[a].contains(&b) {
            adj[a].push(b);
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; n];
    seen[from] = true;
    go(from, to, &adj, &mut seen, &mut vec![from], &mut out);
    out
}

// ---------------------------------------------------------------- scopes

const VARS: &[&str] = &["a", "b", "t", "x", "e"];
const FUNCS: &[&str] = &["f", "g", "h", "k"];

enum Item {
    Var(String),
    Func(String, Vec<String>, Vec<Item>),
    Callback(Vec<String>, Vec<Item>),
    Ref(String),
}

/// Where a reference should resolve: declaring kind and line.
pub type Expected = Option<(EntityKind, u32)>;

pub struct ScopeFixture {
    pub source: String,
    /// Marker callee, referenced name, expected binding.
    pub refs: Vec<(String, String, Expected)>,
}

fn gen_params(rng: &mut ChaCha8Rng) -> Vec<String> {
    let k = rng.gen_range(0..=2);
    let mut p: Vec<String> = VARS.choose_multiple(rng, k).map(|s| s.to_string()).collect();
    p.sort();
    p
}

fn gen_body(rng: &mut ChaCha8Rng, depth: usize, funcs: &mut Vec<String>) -> Vec<Item> {
    let len = rng.gen_range(1..=5);
    (0..len)
        .map(|_| match rng.gen_range(0..10) {
            0..=2 => Item::Var(VARS.choose(rng).unwrap().to_string()),
            3 if depth < 4 && funcs.len() < FUNCS.len() => {
                let name = FUNCS[funcs.len()].to_string();
                funcs.push(name.clone());
                let params = gen_params(rng);
                Item::Func(name, params, gen_body(rng, depth + 1, funcs))
            }
            4 if depth < 4 => {
                let params = gen_params(rng);
                Item::Callback(params, gen_body(rng, depth + 1, funcs))
            }
            _ => {
                let pool: Vec<&str> = VARS.iter().chain(FUNCS).chain(&["zz"]).copied().collect();
                Item::Ref(pool.choose(rng).unwrap().to_string())
            }
        })
        .collect()
}

struct Emitter {
    lines: Vec<String>,
    markers: usize,
}

/// A binding frame: name -> (kind, line).
type Frame = Vec<(String, (EntityKind, u32))>;

impl Emitter {
    fn line(&mut self, indent: usize, s: String) -> u32 {
        self.lines.push(format!("{}{}", "  ".repeat(indent), s));
        self.lines.len() as u32
    }

    /// Emits `items` and returns, per reference, its marker and name, plus
    /// per declaration its line, in emission order.
    fn emit(&mut self, items: &[Item], indent: usize) -> Vec<Emitted> {
        let mut out = Vec::new();
        for it in items {
            match it {
                Item::Var(n) => {
                    let l = self.line(indent, format!("var {n} = 0;"));
                    out.push(Emitted::Var(n.clone(), l));
                }
                Item::Ref(n) => {
                    let m = format!("ref{}", self.markers);
                    self.markers += 1;
                    self.line(indent, format!("{m}({n});"));
                    out.push(Emitted::Ref(m, n.clone()));
                }
                Item::Func(name, params, body) => {
                    let l = self.line(indent, format!("function {name}({}) {{", params.join(", ")));
                    let inner = self.emit(body, indent + 1);
                    self.line(indent, "}".into());
                    out.push(Emitted::Func(Some(name.clone()), params.clone(), l, inner));
                }
                Item::Callback(params, body) => {
                    let l = self.line(indent, format!("call(function ({}) {{", params.join(", ")));
                    let inner = self.emit(body, indent + 1);
                    self.line(indent, "});".into());
                    out.push(Emitted::Func(None, params.clone(), l, inner));
                }
            }
        }
        out
    }
}

enum Emitted {
    Var(String, u32),
    Ref(String, String),
    Func(Option<String>, Vec<String>, u32, Vec<Emitted>),
}

/// Function-level environments: parameters, then hoisted `var` and
/// function declarations of the same body; a name already bound in the
/// frame keeps its first binding. Lookup walks frames innermost first.
fn simulate(
    body: &[Emitted],
    params: &[(String, u32)],
    env: &mut Vec<Frame>,
    out: &mut Vec<(String, String, Expected)>,
) {
    let mut frame: Frame = Vec::new();
    let bind = |frame: &mut Frame, n: &str, b: (EntityKind, u32)| {
        if !frame.iter().any(|(k, _)| k == n) {
            frame.push((n.to_string(), b));
        }
    };
    for (p, l) in params {
        bind(&mut frame, p, (EntityKind::Parameter, *l));
    }
    for e in body {
        match e {
            Emitted::Var(n, l) => bind(&mut frame, n, (EntityKind::Variable, *l)),
            Emitted::Func(Some(n), _, l, _) => bind(&mut frame, n, (EntityKind::Function, *l)),
            _ => {}
        }
    }
    env.push(frame);
    for e in body {
        match e {
            Emitted::Ref(m, n) => {
                let found = env
                    .iter()
                    .rev()
                    .find_map(|f| f.iter().find(|(k, _)| k == n).map(|(_, b)| *b));
                out.push((m.clone(), n.clone(), found));
            }
            Emitted::Func(_, ps, l, inner) => {
                let ps: Vec<(String, u32)> = ps.iter().map(|p| (p.clone(), *l)).collect();
                simulate(inner, &ps, env, out);
            }
            Emitted::Var(..) => {}
        }
    }
    env.pop();
}

/// Program from `seed`; seed 0 is the callback-parameter shadowing case.
pub fn scope_fixture(seed: u64) -> ScopeFixture {
    let items = if seed == 0 {
        vec![
            Item::Var("t".into()),
            Item::Func(
                "f".into(),
                vec![],
                vec![
                    Item::Var("e".into()),
                    Item::Ref("t".into()),
                    Item::Callback(vec!["t".into()], vec![Item::Ref("t".into()), Item::Ref("e".into())]),
                    Item::Ref("t".into()),
                ],
            ),
            Item::Ref("t".into()),
        ]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        gen_body(&mut rng, 0, &mut Vec::new())
    };
    let mut em = Emitter {
        lines: Vec::new(),
        markers: 0,
    };
    let emitted = em.emit(&items, 0);
    let mut refs = Vec::new();
    simulate(&emitted, &[], &mut Vec::new(), &mut refs);
    ScopeFixture {
        source: em.lines.join("\n") + "\n",
        refs,
    }
}

/// Checks every marked reference; returns the number checked.
pub fn check_scope_fixture(fx: &ScopeFixture) -> Result<usize, String> {
    let parsed = parse_js(&fx.source).map_err(|e| e.to_string())?;
    let chain = build_scope_chain("s.js", &parsed.ast);
    let mut nodes: Vec<&AstNode> = Vec::new();
    parsed.ast.walk(&mut |n| nodes.push(n));
    for (marker, name, want) in &fx.refs {
        let i = nodes
            .iter()
            .position(|n| {
                n.kind == NodeKind::CallExpression && n.children.first().and_then(|c| c.name()) == Some(marker.as_str())
            })
            .ok_or_else(|| format!("{marker} not found"))?;
        let arg = i + 2;
        if nodes[arg].name() != Some(name.as_str()) {
            return Err(format!("{marker}: argument node is not {name}"));
        }
        let got = chain
            .resolve(name, chain.node_scope[arg])
            .map(|e| (e.kind, e.decl_span.start.line));
        if got != *want {
            return Err(format!(
                "{marker}({name}): resolved {got:?}, simulator {want:?}\n{}",
                fx.source
            ));
        }
    }
    Ok(fx.refs.len())
}

// ---------------------------------------------------------------- text

const WORDS: &[&str] = &[
    "phone",
    "number",
    "mobile",
    "id",
    "card",
    "bank",
    "account",
    "city",
    "living",
    "currently",
    "location",
    "address",
    "email",
    "photo",
    "album",
    "name",
    "nick",
    "device",
    "record",
    "browsing",
    "the",
    "your",
];
const HANZI: &[&str] = &[
    "手", "机", "号", "码", "地", "址", "位", "置", "银", "行", "卡", "账", "户", "身", "份", "证",
];

/// Random non-empty phrase: 1-4 English words or 1-5 Chinese characters.
pub fn random_phrase(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.25) {
        (0..rng.gen_range(1..=5)).map(|_| *HANZI.choose(rng).unwrap()).collect()
    } else {
        (0..rng.gen_range(1..=4))
            .map(|_| *WORDS.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn phrase_pairs(seed: u64, n: usize) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (random_phrase(&mut rng), random_phrase(&mut rng)))
        .collect()
}

// ---------------------------------------------------------------- practice sets

pub fn parse_ops(ops: &str) -> Vec<Operation> {
    ops.split('&').map(|o| o.parse().expect("operation")).collect()
}

/// Parses `type:C&U, type:U` lists.
pub fn practices(spec: &str) -> BTreeSet<DataPractice> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .flat_map(|item| {
            let (t, ops) = item.rsplit_once(':').expect("type:ops");
            parse_ops(ops).into_iter().map(move |o| DataPractice::new(t.trim(), o))
        })
        .collect()
}

pub fn names(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub const COMPARATOR_CASES: &[(&str, &str, Pattern, Strength)] = &[
    (
        "camera:C&U&S, request return:C&U&S, login credentials:C&U&S, location:C&U, photo:C&S, \
         phone number:C&U, sms:C&U, password:C&U, browsing records:C&U, address:C&U",
        "",
        Pattern::OverlapUninformed,
        Strength::Strong,
    ),
    (
        "location:C&U, phone number:C&U",
        "account:U, password:U, express:U",
        Pattern::Separation,
        Strength::Strong,
    ),
    (
        "location:C&U",
        "account:U, password:U",
        Pattern::Separation,
        Strength::Strong,
    ),
    (
        "request return:C&U, address:C&U, click record:C&U",
        "account:U, password:U, address:U, e-mail:U",
        Pattern::Intersection,
        Strength::StrongAndWeak,
    ),
    (
        "request return:C&U, setting:C&U, browsing records:C&U, phone number:C&U",
        "phone number:C&U, e-mail:C&U, nick name:U, icon:U, app list:U, menstruation:C&U, \
         browsing records:C&U, personal name:U",
        Pattern::Intersection,
        Strength::Strong,
    ),
    ("", "", Pattern::OverlapConsistent, Strength::None),
];

pub const MIXED_CODE: &str = "location:C&U&S, document:C&S, phone number:C&S";
pub const MIXED_POLICY: &str = "phone number:C, ID number:C&U&S, bank account:C&U, third-party account:C&U";

//! Data dependency graph over code entities.
//!
//! Expressions evaluate to carriers: the entities whose values the
//! expression may hold. A carrier marked `whole` stands for an object
//! together with every property slot below it; whole carriers are expanded
//! when the graph is frozen, so slots created later in the walk are covered.
//!
//! Member reads `o.a.b` carry the leaf slot plus every owner on the chain.
//! Computed access falls back to the owner. Platform calls (`wx.*`,
//! `console.*`) get an `ApiReturn` and an `ApiArgument` endpoint each.

use crate::diag::{Diagnostic, Stage};
use crate::js::{AstNode, NodeKind, Span};
use crate::scope::{CodeEntity, EntityId, EntityKind, ScopeChain, ScopeId, CONTAINER_METHOD_GROUPS};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DepKind {
    Set,
    Use,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Via {
    Assignment,
    Call,
    Property,
    Return,
    SetData,
    BuiltinPropagation,
    /// Operand of a binary, logical or template expression.
    Operand,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DepEdge {
    pub src: EntityId,
    pub dst: EntityId,
    pub kind: DepKind,
    pub site: Span,
    pub via: Via,
}

/// One platform API call site and its two endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiCall {
    pub api: String,
    pub site: Span,
    pub ret: EntityId,
    pub arg: EntityId,
}

#[derive(Debug, Clone)]
pub struct DataDependencyGraph {
    pub file: String,
    pub entities: Vec<CodeEntity>,
    pub edges: Vec<DepEdge>,
    pub api_calls: Vec<ApiCall>,
    pub diagnostics: Vec<Diagnostic>,
    succ: Vec<Vec<usize>>,
}

/// Built-in methods that move data without user code.
#[derive(Debug, Clone)]
pub struct BuiltinTable {
    /// Arguments flow into the receiver (`a.push(b)`).
    pub into_receiver: Vec<String>,
    /// Receiver and arguments flow into the result (`a.concat(b)`).
    pub into_result: Vec<String>,
    /// Receiver flows into the first parameter of a callback argument.
    pub into_callback: Vec<String>,
    /// Global functions whose arguments flow into the result.
    pub global_into_result: Vec<String>,
}

impl Default for BuiltinTable {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        BuiltinTable {
            into_receiver: v(&["push", "unshift"]),
            into_result: v(&["concat", "join", "slice", "split", "toString"]),
            into_callback: v(&["forEach", "map", "filter", "find", "then"]),
            global_into_result: v(&["JSON.stringify", "JSON.parse"]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DdgOptions {
    pub builtins: BuiltinTable,
    /// Global roots whose member calls are platform APIs.
    pub api_roots: Vec<String>,
    /// Callback properties of an API's object argument that receive its data.
    pub callback_keys: Vec<String>,
}

impl Default for DdgOptions {
    fn default() -> Self {
        DdgOptions {
            builtins: BuiltinTable::default(),
            api_roots: vec!["wx".into(), "console".into()],
            callback_keys: vec!["success".into(), "complete".into()],
        }
    }
}

impl DataDependencyGraph {
    /// Assembles a graph from parts; edges must reference existing entities.
    pub fn from_parts(file: &str, entities: Vec<CodeEntity>, edges: Vec<DepEdge>) -> Self {
        let mut g = DataDependencyGraph {
            file: file.to_string(),
            entities,
            edges,
            api_calls: Vec::new(),
            diagnostics: Vec::new(),
            succ: Vec::new(),
        };
        g.index();
        g
    }

    fn index(&mut self) {
        let mut succ = vec![Vec::new(); self.entities.len()];
        for e in &self.edges {
            if !succ[e.src].contains(&e.dst) {
                succ[e.src].push(e.dst);
            }
        }
        self.succ = succ;
    }

    pub fn successors(&self, id: EntityId) -> &[EntityId] {
        &self.succ[id]
    }

    pub fn has_edge(&self, src: EntityId, dst: EntityId) -> bool {
        self.succ.get(src).is_some_and(|s| s.contains(&dst))
    }

    /// Forward closure from `from`, including `from` itself.
    pub fn reachable(&self, from: EntityId) -> BTreeSet<EntityId> {
        self.bfs(from).into_keys().collect()
    }

    /// Breadth-first predecessor map from `from`; the root maps to `None`.
    pub fn bfs(&self, from: EntityId) -> HashMap<EntityId, Option<EntityId>> {
        let mut pred = HashMap::new();
        pred.insert(from, None);
        let mut q = VecDeque::from([from]);
        while let Some(u) = q.pop_front() {
            for &v in &self.succ[u] {
                if let std::collections::hash_map::Entry::Vacant(e) = pred.entry(v) {
                    e.insert(Some(u));
                    q.push_back(v);
                }
            }
        }
        pred
    }

    /// Shortest path `from .. to` given a predecessor map from [`Self::bfs`].
    pub fn path_from(pred: &HashMap<EntityId, Option<EntityId>>, to: EntityId) -> Option<Vec<EntityId>> {
        let mut path = vec![to];
        let mut cur = *pred.get(&to)?;
        while let Some(p) = cur {
            path.push(p);
            cur = pred[&p];
        }
        path.reverse();
        Some(path)
    }

    pub fn entity(&self, id: EntityId) -> &CodeEntity {
        &self.entities[id]
    }

    /// Line-oriented export: `src<TAB>dst<TAB>kind<TAB>via<TAB>file:line`.
    pub fn export_edges(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{}\t{}\t{:?}\t{:?}\t{}:{}",
                e.src, e.dst, e.kind, e.via, self.file, e.site.start.line
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Carrier {
    entity: EntityId,
    whole: bool,
}

fn plain(entity: EntityId) -> Carrier {
    Carrier { entity, whole: false }
}

fn whole(entity: EntityId) -> Carrier {
    Carrier { entity, whole: true }
}

struct Builder<'a> {
    chain: &'a ScopeChain,
    opts: &'a DdgOptions,
    entities: Vec<CodeEntity>,
    slots: HashMap<(EntityId, String), EntityId>,
    slot_children: HashMap<EntityId, Vec<EntityId>>,
    temps: HashMap<usize, EntityId>,
    api: HashMap<usize, usize>,
    api_calls: Vec<ApiCall>,
    return_slots: HashMap<EntityId, EntityId>,
    fn_value: HashMap<EntityId, usize>,
    alias: HashMap<EntityId, EntityId>,
    pending: Vec<(Carrier, EntityId, DepKind, Via, Span)>,
    emit: bool,
    diagnostics: Vec<Diagnostic>,
}

pub fn build_ddg(chain: &ScopeChain) -> DataDependencyGraph {
    build_ddg_with(chain, &DdgOptions::default())
}

/// Two walks over the AST: the first learns aliases and function values,
/// the second emits edges. Entity creation is keyed, so both walks agree.
pub fn build_ddg_with(chain: &ScopeChain, opts: &DdgOptions) -> DataDependencyGraph {
    let mut b = Builder {
        chain,
        opts,
        entities: chain.entities.clone(),
        slots: HashMap::new(),
        slot_children: HashMap::new(),
        temps: HashMap::new(),
        api: HashMap::new(),
        api_calls: Vec::new(),
        return_slots: HashMap::new(),
        fn_value: HashMap::new(),
        alias: HashMap::new(),
        pending: Vec::new(),
        emit: false,
        diagnostics: Vec::new(),
    };
    for (&node, &fe) in &chain.function_entity {
        b.fn_value.insert(fe, node);
    }
    b.eval(&chain.ast, 0);
    b.emit = true;
    b.eval(&chain.ast, 0);
    b.freeze()
}

impl<'a> Builder<'a> {
    // ---- entities ----

    fn push_entity(
        &mut self,
        kind: EntityKind,
        name: String,
        span: Span,
        scope: ScopeId,
        node: Option<usize>,
    ) -> EntityId {
        let id = self.entities.len();
        self.entities.push(CodeEntity {
            id,
            kind,
            name,
            decl_span: span,
            owner_scope: scope,
            owner_entity: None,
            node,
            implicit: false,
        });
        id
    }

    fn slot(&mut self, owner: EntityId, prop: &str, span: Span) -> EntityId {
        if let Some(&s) = self.slots.get(&(owner, prop.to_string())) {
            return s;
        }
        let name = format!("{}.{}", self.entities[owner].name, prop);
        let scope = self.entities[owner].owner_scope;
        let s = self.push_entity(EntityKind::PropertySlot, name, span, scope, None);
        self.entities[s].owner_entity = Some(owner);
        self.slots.insert((owner, prop.to_string()), s);
        self.slot_children.entry(owner).or_default().push(s);
        s
    }

    fn temp(&mut self, node: &AstNode, idx: usize) -> EntityId {
        if let Some(&t) = self.temps.get(&idx) {
            return t;
        }
        let name = format!("{:?}@{}:{}", node.kind, node.span.start.line, node.span.start.column);
        let t = self.push_entity(
            EntityKind::Temporary,
            name,
            node.span,
            self.chain.node_scope[idx],
            Some(idx),
        );
        self.temps.insert(idx, t);
        t
    }

    fn return_slot(&mut self, func: EntityId) -> EntityId {
        if let Some(&r) = self.return_slots.get(&func) {
            return r;
        }
        let f = &self.entities[func];
        let name = format!("{}.return", f.name);
        let (span, node) = (f.decl_span, f.node);
        let scope = node
            .and_then(|n| self.chain.function_scope.get(&n).copied())
            .unwrap_or(f.owner_scope);
        let r = self.push_entity(EntityKind::ReturnSlot, name, span, scope, node);
        self.return_slots.insert(func, r);
        r
    }

    fn api_endpoints(&mut self, api: &str, node: &AstNode, idx: usize) -> (EntityId, EntityId) {
        if let Some(&k) = self.api.get(&idx) {
            let c = &self.api_calls[k];
            return (c.ret, c.arg);
        }
        let scope = self.chain.node_scope[idx];
        let ret = self.push_entity(EntityKind::ApiReturn, api.to_string(), node.span, scope, Some(idx));
        let arg = self.push_entity(EntityKind::ApiArgument, api.to_string(), node.span, scope, Some(idx));
        self.api.insert(idx, self.api_calls.len());
        self.api_calls.push(ApiCall {
            api: api.to_string(),
            site: node.span,
            ret,
            arg,
        });
        (ret, arg)
    }

    // ---- edges ----

    fn edge(&mut self, src: Carrier, dst: EntityId, kind: DepKind, via: Via, site: Span) {
        if self.emit {
            self.pending.push((src, dst, kind, via, site));
        }
    }

    fn edges(&mut self, srcs: &[Carrier], dst: EntityId, kind: DepKind, via: Via, site: Span) {
        for &c in srcs {
            self.edge(c, dst, kind, via, site);
        }
    }

    fn diag(&mut self, message: String, span: Span) {
        if self.emit {
            self.diagnostics.push(
                Diagnostic::new(Stage::Ddg, message)
                    .in_file(self.chain.file.clone())
                    .at(span.start.line, span.start.column),
            );
        }
    }

    fn descendants(&self, root: EntityId, out: &mut Vec<EntityId>) {
        let mut stack = vec![root];
        let mut seen = HashSet::new();
        while let Some(e) = stack.pop() {
            if !seen.insert(e) {
                continue;
            }
            out.push(e);
            if let Some(kids) = self.slot_children.get(&e) {
                stack.extend(kids.iter().rev());
            }
        }
    }

    fn freeze(self) -> DataDependencyGraph {
        let mut seen = HashSet::new();
        let mut edges = Vec::new();
        for &(c, dst, kind, via, site) in &self.pending {
            let mut srcs = Vec::new();
            if c.whole {
                self.descendants(c.entity, &mut srcs);
            } else {
                srcs.push(c.entity);
            }
            for src in srcs {
                if src == dst && via != Via::BuiltinPropagation {
                    continue;
                }
                let e = DepEdge {
                    src,
                    dst,
                    kind,
                    site,
                    via,
                };
                if seen.insert(e.clone()) {
                    edges.push(e);
                }
            }
        }
        let mut g = DataDependencyGraph::from_parts(&self.chain.file, self.entities, edges);
        g.api_calls = self.api_calls;
        g.diagnostics = self.diagnostics;
        g
    }

    // ---- name resolution ----

    fn scope_of(&self, idx: usize) -> ScopeId {
        self.chain.node_scope[idx]
    }

    fn follow(&self, mut e: EntityId) -> EntityId {
        let mut hops = 0;
        while let Some(&a) = self.alias.get(&e) {
            if a == e || hops > 16 {
                break;
            }
            e = a;
            hops += 1;
        }
        e
    }

    fn resolve(&self, name: &str, idx: usize) -> Option<EntityId> {
        self.chain.resolve_id(name, self.scope_of(idx)).map(|e| self.follow(e))
    }

    fn this_entity(&self, idx: usize) -> Option<EntityId> {
        self.chain.this_of(self.scope_of(idx))
    }

    /// Entity written by or read from a static reference, with the owners
    /// on its member chain (outermost first).
    fn target(&mut self, node: &AstNode, idx: usize) -> Option<(EntityId, Vec<EntityId>)> {
        match node.kind {
            NodeKind::Identifier => self.resolve(node.name()?, idx).map(|e| (e, Vec::new())),
            NodeKind::ThisExpression => self.this_entity(idx).map(|e| (e, Vec::new())),
            NodeKind::MemberExpression if node.children.len() == 2 => {
                let kids = self.chain.child_indices(node, idx);
                let (base, mut owners) = self.target(&node.children[0], kids[0])?;
                if node.value.is_some() {
                    self.eval(&node.children[1], kids[1]);
                    return Some((base, owners));
                }
                let prop = node.children[1].name()?;
                let s = self.slot(base, prop, node.span);
                owners.push(base);
                Some((s, owners))
            }
            _ => None,
        }
    }

    fn function_node_of(&self, e: EntityId) -> Option<usize> {
        self.fn_value.get(&e).copied()
    }

    // ---- evaluation ----

    fn eval_children(&mut self, node: &AstNode, idx: usize) {
        let kids = self.chain.child_indices(node, idx);
        for (c, i) in node.children.iter().zip(kids) {
            self.eval(c, i);
        }
    }

    fn eval(&mut self, node: &AstNode, idx: usize) -> Vec<Carrier> {
        match node.kind {
            NodeKind::Opaque | NodeKind::Literal => Vec::new(),
            NodeKind::Identifier => match node.name().and_then(|n| self.resolve(n, idx)) {
                Some(e) => vec![whole(e)],
                None => Vec::new(),
            },
            NodeKind::ThisExpression => self.this_entity(idx).map(whole).into_iter().collect(),
            NodeKind::FunctionDeclaration | NodeKind::FunctionExpression | NodeKind::ArrowFunctionExpression => {
                self.function(node, idx)
            }
            NodeKind::VariableDeclarator => {
                self.declarator(node, idx);
                Vec::new()
            }
            NodeKind::AssignmentExpression => self.assignment(node, idx),
            NodeKind::ReturnStatement => {
                if let Some(arg) = node.children.first() {
                    let ai = idx + 1;
                    let c = self.eval(arg, ai);
                    if let Some(f) = self.chain.scopes[self.scope_of(idx)].function {
                        let r = self.return_slot(f);
                        self.edges(&c, r, DepKind::Set, Via::Return, node.span);
                    }
                }
                Vec::new()
            }
            NodeKind::ForInStatement | NodeKind::ForOfStatement => {
                let kids = self.chain.child_indices(node, idx);
                self.eval(&node.children[0], kids[0]);
                let c = self.eval(&node.children[1], kids[1]);
                let left = &node.children[0];
                let target = if left.kind == NodeKind::VariableDeclaration {
                    left.children
                        .first()
                        .and_then(|d| d.children.first())
                        .and_then(AstNode::name)
                        .and_then(|n| self.resolve(n, kids[0]))
                } else {
                    self.target(left, kids[0]).map(|t| t.0)
                };
                if let Some(t) = target {
                    self.edges(&c, t, DepKind::Set, Via::Assignment, node.span);
                }
                self.eval(&node.children[2], kids[2]);
                Vec::new()
            }
            NodeKind::MemberExpression => self.member_read(node, idx),
            NodeKind::CallExpression => self.call(node, idx),
            NodeKind::NewExpression => {
                let kids = self.chain.child_indices(node, idx);
                let callee_fn = self.callee_function(&node.children[0], kids[0]);
                let args: Vec<Vec<Carrier>> = node.children[1..]
                    .iter()
                    .zip(&kids[1..])
                    .map(|(a, &i)| self.eval(a, i))
                    .collect();
                if let Some(f) = callee_fn {
                    self.bind_args(f, &args, node.span);
                }
                Vec::new()
            }
            NodeKind::ObjectExpression => {
                let mut out = Vec::new();
                let kids = self.chain.child_indices(node, idx);
                for (p, pi) in node.children.iter().zip(kids) {
                    if p.kind == NodeKind::Property && p.children.len() == 2 {
                        let pk = self.chain.child_indices(p, pi);
                        if p.value.is_none() {
                            self.eval(&p.children[0], pk[0]);
                        }
                        out.extend(self.eval(&p.children[1], pk[1]));
                    }
                }
                dedup(out)
            }
            NodeKind::ArrayExpression => {
                let kids = self.chain.child_indices(node, idx);
                let mut out = Vec::new();
                for (c, i) in node.children.iter().zip(kids) {
                    out.extend(self.eval(c, i));
                }
                dedup(out)
            }
            NodeKind::BinaryExpression | NodeKind::LogicalExpression | NodeKind::TemplateLiteral => {
                let kids = self.chain.child_indices(node, idx);
                let mut ops = Vec::new();
                for (c, i) in node.children.iter().zip(kids) {
                    ops.extend(self.eval(c, i));
                }
                if ops.is_empty() {
                    return ops;
                }
                let t = self.temp(node, idx);
                self.edges(&ops, t, DepKind::Use, Via::Operand, node.span);
                vec![plain(t)]
            }
            NodeKind::ConditionalExpression => {
                let kids = self.chain.child_indices(node, idx);
                self.eval(&node.children[0], kids[0]);
                let mut out = self.eval(&node.children[1], kids[1]);
                out.extend(self.eval(&node.children[2], kids[2]));
                dedup(out)
            }
            NodeKind::SequenceExpression => {
                let kids = self.chain.child_indices(node, idx);
                let mut last = Vec::new();
                for (c, i) in node.children.iter().zip(kids) {
                    last = self.eval(c, i);
                }
                last
            }
            NodeKind::UnaryExpression => {
                let c = self.eval(&node.children[0], idx + 1);
                match node.value.as_deref() {
                    Some("+" | "-" | "~") => c,
                    _ => Vec::new(),
                }
            }
            NodeKind::UpdateExpression => self.eval(&node.children[0], idx + 1),
            _ => {
                self.eval_children(node, idx);
                Vec::new()
            }
        }
    }

    fn function(&mut self, node: &AstNode, idx: usize) -> Vec<Carrier> {
        if let Some(parts) = node.function_parts() {
            let bi = *self.chain.child_indices(node, idx).last().expect("function body");
            self.eval(parts.body, bi);
        }
        self.chain
            .function_entity
            .get(&idx)
            .map(|&f| vec![plain(f)])
            .unwrap_or_default()
    }

    fn declarator(&mut self, node: &AstNode, idx: usize) {
        let kids = self.chain.child_indices(node, idx);
        let id = &node.children[0];
        let Some(init) = node.children.get(1) else {
            return;
        };
        let target = id.name().and_then(|n| self.chain.resolve_id(n, self.scope_of(kids[0])));
        match target {
            Some(t) => {
                self.assign_value(t, init, kids[1], Via::Assignment, node.span);
            }
            None => {
                self.eval(init, kids[1]);
            }
        }
    }

    fn assignment(&mut self, node: &AstNode, idx: usize) -> Vec<Carrier> {
        let kids = self.chain.child_indices(node, idx);
        let left = &node.children[0];
        let right = &node.children[1];
        let target = match left.kind {
            NodeKind::Identifier => left
                .name()
                .and_then(|n| self.chain.resolve_id(n, self.scope_of(kids[0]))),
            _ => self.target(left, kids[0]).map(|t| t.0),
        };
        match target {
            Some(t) => {
                self.assign_value(t, right, kids[1], Via::Assignment, node.span);
                vec![whole(self.follow(t))]
            }
            None => {
                self.eval(left, kids[0]);
                self.eval(right, kids[1])
            }
        }
    }

    /// Writes `value` into `target`; object literals populate slots.
    fn assign_value(&mut self, target: EntityId, value: &AstNode, vidx: usize, via: Via, site: Span) {
        if value.kind == NodeKind::ThisExpression {
            if let Some(page) = self.this_entity(vidx) {
                if target != page {
                    self.alias.insert(target, page);
                }
                return;
            }
        }
        let target = self.follow(target);
        if value.kind == NodeKind::ObjectExpression {
            self.assign_object(target, value, vidx, Via::Property);
            return;
        }
        let c = self.eval(value, vidx);
        if value.kind.is_function() {
            self.fn_value.insert(target, vidx);
        } else if let [single] = c.as_slice() {
            if let Some(f) = self.function_node_of(single.entity) {
                self.fn_value.entry(target).or_insert(f);
            }
        }
        self.edges(&c, target, DepKind::Set, via, site);
    }

    fn assign_object(&mut self, target: EntityId, obj: &AstNode, oidx: usize, via: Via) {
        let kids = self.chain.child_indices(obj, oidx);
        for (p, pi) in obj.children.iter().zip(kids) {
            if p.kind != NodeKind::Property || p.children.len() != 2 {
                let c = self.eval(p, pi);
                self.edges(&c, target, DepKind::Set, via, p.span);
                continue;
            }
            let pk = self.chain.child_indices(p, pi);
            let value = &p.children[1];
            match &p.value {
                Some(key) => {
                    let s = self.slot(target, key, p.span);
                    self.assign_value(s, value, pk[1], via, p.span);
                }
                None => {
                    self.eval(&p.children[0], pk[0]);
                    let c = self.eval(value, pk[1]);
                    self.edges(&c, target, DepKind::Set, via, p.span);
                }
            }
        }
    }

    fn member_read(&mut self, node: &AstNode, idx: usize) -> Vec<Carrier> {
        if let Some((leaf, owners)) = self.target(node, idx) {
            let mut out = vec![whole(leaf)];
            out.extend(owners.into_iter().map(plain));
            return dedup(out);
        }
        let kids = self.chain.child_indices(node, idx);
        let c = self.eval(&node.children[0], kids[0]);
        if node.value.is_some() {
            self.eval(&node.children[1], kids[1]);
        }
        c
    }

    fn callee_function(&mut self, callee: &AstNode, cidx: usize) -> Option<usize> {
        if callee.kind.is_function() {
            return Some(cidx);
        }
        let (t, _) = self.target(callee, cidx)?;
        self.function_node_of(t)
    }

    fn bind_args(&mut self, fnode: usize, args: &[Vec<Carrier>], site: Span) {
        let params = self.chain.params.get(&fnode).cloned().unwrap_or_default();
        for (a, p) in args.iter().zip(params) {
            if let Some(p) = p {
                self.edges(a, p, DepKind::Use, Via::Call, site);
            }
        }
    }

    fn first_param(&self, fnode: usize) -> Option<EntityId> {
        self.chain.params.get(&fnode).and_then(|p| p.first().copied().flatten())
    }

    fn platform_root(&self, callee: &AstNode, cidx: usize) -> Option<String> {
        let name = callee.dotted_name()?;
        let root = name.split('.').next()?;
        if !name.contains('.') || !self.opts.api_roots.iter().any(|r| r == root) {
            return None;
        }
        if self.chain.resolve_id(root, self.scope_of(cidx)).is_some() {
            return None;
        }
        Some(name)
    }

    fn call(&mut self, node: &AstNode, idx: usize) -> Vec<Carrier> {
        let kids = self.chain.child_indices(node, idx);
        let callee = &node.children[0];
        let (args, arg_idx) = (&node.children[1..], &kids[1..]);

        if let Some(&page) = self.chain.containers.get(&idx) {
            self.container(page, &args[0], arg_idx[0]);
            for (a, &i) in args.iter().zip(arg_idx).skip(1) {
                self.eval(a, i);
            }
            return Vec::new();
        }
        if let Some(api) = self.platform_root(callee, kids[0]) {
            return self.platform_call(&api, node, idx, args, arg_idx);
        }
        if let Some(name) = callee.dotted_name() {
            if self.opts.builtins.global_into_result.contains(&name)
                && self
                    .chain
                    .resolve_id(name.split('.').next().unwrap_or(""), self.scope_of(kids[0]))
                    .is_none()
            {
                let mut c = Vec::new();
                for (a, &i) in args.iter().zip(arg_idx) {
                    c.extend(self.eval(a, i));
                }
                if c.is_empty() {
                    return c;
                }
                let t = self.temp(node, idx);
                self.edges(&c, t, DepKind::Set, Via::BuiltinPropagation, node.span);
                return vec![plain(t)];
            }
        }
        let method = if callee.kind == NodeKind::MemberExpression && callee.value.is_none() {
            callee.children[1].name().map(str::to_string)
        } else {
            None
        };
        if method.as_deref() == Some("setData") {
            self.set_data(node, &kids);
            return Vec::new();
        }
        if let Some(f) = self.callee_function(callee, kids[0]) {
            if callee.kind.is_function() {
                self.eval(callee, kids[0]);
            }
            let a: Vec<Vec<Carrier>> = args.iter().zip(arg_idx).map(|(a, &i)| self.eval(a, i)).collect();
            self.bind_args(f, &a, node.span);
            return match self.chain.function_entity.get(&f) {
                Some(&fe) => vec![whole(self.return_slot(fe))],
                None => Vec::new(),
            };
        }
        if let Some(m) = method {
            let ci = self.chain.child_indices(callee, kids[0]);
            let recv_node = &callee.children[0];
            let b = &self.opts.builtins;
            let (to_recv, to_res, to_cb) = (
                b.into_receiver.contains(&m),
                b.into_result.contains(&m),
                b.into_callback.contains(&m),
            );
            let rc = self.eval(recv_node, ci[0]);
            if to_recv {
                let a: Vec<Carrier> = args.iter().zip(arg_idx).flat_map(|(a, &i)| self.eval(a, i)).collect();
                if let Some((r, _)) = self.target(recv_node, ci[0]) {
                    self.edges(&a, r, DepKind::Set, Via::BuiltinPropagation, node.span);
                }
                return Vec::new();
            }
            if to_res {
                let mut c = rc;
                for (a, &i) in args.iter().zip(arg_idx) {
                    c.extend(self.eval(a, i));
                }
                if c.is_empty() {
                    return c;
                }
                let t = self.temp(node, idx);
                self.edges(&c, t, DepKind::Set, Via::BuiltinPropagation, node.span);
                return vec![plain(t)];
            }
            for (a, &i) in args.iter().zip(arg_idx) {
                let c = self.eval(a, i);
                if to_cb {
                    let cb = if a.kind.is_function() {
                        Some(i)
                    } else {
                        c.first().and_then(|c| self.function_node_of(c.entity))
                    };
                    if let Some(p) = cb.and_then(|f| self.first_param(f)) {
                        self.edges(&rc, p, DepKind::Set, Via::BuiltinPropagation, node.span);
                    }
                }
            }
            return if m == "forEach" { Vec::new() } else { rc };
        }
        // Bare callee that is not a known function.
        if let Some(n) = callee.name() {
            if let Some(e) = self.resolve(n, kids[0]) {
                let kind = self.entities[e].kind;
                self.diag(format!("unresolved callee '{n}' ({})", kind.as_str()), node.span);
                for (a, &i) in args.iter().zip(arg_idx) {
                    self.eval(a, i);
                }
                return Vec::new();
            }
            let mut c = Vec::new();
            for (a, &i) in args.iter().zip(arg_idx) {
                c.extend(self.eval(a, i));
            }
            return dedup(c);
        }
        let c = self.eval(callee, kids[0]);
        for (a, &i) in args.iter().zip(arg_idx) {
            self.eval(a, i);
        }
        c
    }

    fn platform_call(
        &mut self,
        api: &str,
        node: &AstNode,
        idx: usize,
        args: &[AstNode],
        arg_idx: &[usize],
    ) -> Vec<Carrier> {
        let (ret, arg) = self.api_endpoints(api, node, idx);
        for (a, &ai) in args.iter().zip(arg_idx) {
            if a.kind == NodeKind::ObjectExpression {
                let pks = self.chain.child_indices(a, ai);
                for (p, pi) in a.children.iter().zip(pks) {
                    if p.kind != NodeKind::Property || p.children.len() != 2 {
                        let c = self.eval(p, pi);
                        self.edges(&c, arg, DepKind::Use, Via::Call, node.span);
                        continue;
                    }
                    let k = self.chain.child_indices(p, pi);
                    let v = &p.children[1];
                    let is_cb = p
                        .value
                        .as_deref()
                        .is_some_and(|key| self.opts.callback_keys.iter().any(|c| c == key));
                    let is_fail = p.value.as_deref() == Some("fail");
                    let c = self.eval(v, k[1]);
                    let fnode = if v.kind.is_function() {
                        Some(k[1])
                    } else {
                        c.first().and_then(|c| self.function_node_of(c.entity))
                    };
                    match fnode {
                        Some(f) => {
                            if is_cb {
                                if let Some(param) = self.first_param(f) {
                                    self.edge(plain(ret), param, DepKind::Set, Via::Call, p.span);
                                }
                            } else if !is_fail {
                                self.edges(&c, arg, DepKind::Use, Via::Call, node.span);
                            }
                        }
                        None => self.edges(&c, arg, DepKind::Use, Via::Call, node.span),
                    }
                }
            } else {
                let c = self.eval(a, ai);
                let fnode = if a.kind.is_function() {
                    Some(ai)
                } else {
                    c.first().and_then(|c| self.function_node_of(c.entity))
                };
                match fnode {
                    Some(f) => {
                        if let Some(param) = self.first_param(f) {
                            self.edge(plain(ret), param, DepKind::Set, Via::Call, a.span);
                        }
                    }
                    None => self.edges(&c, arg, DepKind::Use, Via::Call, node.span),
                }
            }
        }
        vec![plain(ret)]
    }

    fn set_data(&mut self, node: &AstNode, kids: &[usize]) {
        let callee = &node.children[0];
        let ci = self.chain.child_indices(callee, kids[0]);
        let receiver = self.target(&callee.children[0], ci[0]).map(|t| t.0);
        let Some(arg) = node.children.get(1) else { return };
        let ai = kids[1];
        for (a, &i) in node.children[2..].iter().zip(&kids[2..]) {
            self.eval(a, i);
        }
        let Some(r) = receiver else {
            self.eval(arg, ai);
            return;
        };
        let data = self.slot(r, "data", node.span);
        if arg.kind != NodeKind::ObjectExpression {
            let c = self.eval(arg, ai);
            self.edges(&c, data, DepKind::Set, Via::SetData, node.span);
            return;
        }
        let pks = self.chain.child_indices(arg, ai);
        for (p, pi) in arg.children.iter().zip(pks) {
            if p.kind != NodeKind::Property || p.children.len() != 2 {
                let c = self.eval(p, pi);
                self.edges(&c, data, DepKind::Set, Via::SetData, p.span);
                continue;
            }
            let k = self.chain.child_indices(p, pi);
            if p.value.is_none() {
                self.eval(&p.children[0], k[0]);
            }
            let c = self.eval(&p.children[1], k[1]);
            let mut slot = data;
            if let Some(key) = &p.value {
                for seg in key.split('.') {
                    let name = seg.split('[').next().unwrap_or("");
                    if name.is_empty() {
                        break;
                    }
                    slot = self.slot(slot, name, p.span);
                    if seg.contains('[') {
                        break;
                    }
                }
            }
            self.edges(&c, slot, DepKind::Set, Via::SetData, p.span);
        }
    }

    fn container(&mut self, page: EntityId, obj: &AstNode, oidx: usize) {
        if obj.kind != NodeKind::ObjectExpression {
            self.eval(obj, oidx);
            return;
        }
        self.assign_object(page, obj, oidx, Via::Property);
        let kids = self.chain.child_indices(obj, oidx);
        for (p, pi) in obj.children.iter().zip(kids) {
            let group = p.value.as_deref().is_some_and(|k| CONTAINER_METHOD_GROUPS.contains(&k));
            if p.kind != NodeKind::Property || !group || p.children[1].kind != NodeKind::ObjectExpression {
                continue;
            }
            let g = &p.children[1];
            let gi = self.chain.child_indices(p, pi)[1];
            for (m, mi) in g.children.iter().zip(self.chain.child_indices(g, gi)) {
                if m.kind == NodeKind::Property && m.children.len() == 2 && m.children[1].kind.is_function() {
                    let vi = self.chain.child_indices(m, mi)[1];
                    if let Some(key) = &m.value {
                        let s = self.slot(page, key, m.span);
                        self.fn_value.insert(s, vi);
                    }
                }
            }
        }
    }
}

fn dedup(v: Vec<Carrier>) -> Vec<Carrier> {
    let mut seen = HashSet::new();
    v.into_iter().filter(|c| seen.insert(*c)).collect()
}

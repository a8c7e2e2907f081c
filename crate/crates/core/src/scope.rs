//! Entities and lexical scopes.
//!
//! Scopes are created by the program root and by every function-like node.
//! Declarations are function-scoped (`let` and `const` behave like `var`)
//! and resolution is flow-insensitive, so hoisting needs no special
//! treatment. Nodes are addressed by their preorder index in the AST.

use crate::js::{AstNode, NodeKind, Span};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

pub type ScopeId = usize;
pub type EntityId = usize;

/// Callees whose object argument defines a page-like container.
pub const CONTAINER_CALLS: &[&str] = &["Page", "App", "Component", "Behavior"];

/// Nested container properties whose functions are also methods on `this`.
pub const CONTAINER_METHOD_GROUPS: &[&str] = &["methods", "lifetimes", "pageLifetimes"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EntityKind {
    Variable,
    Function,
    File,
    Parameter,
    PropertySlot,
    /// The `this` object of a Page/App/Component container.
    PageObject,
    /// Value produced by a platform API call (return value or callback data).
    ApiReturn,
    /// Data passed into a platform API call.
    ApiArgument,
    ReturnSlot,
    Temporary,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Variable => "Variable",
            EntityKind::Function => "Function",
            EntityKind::File => "File",
            EntityKind::Parameter => "Parameter",
            EntityKind::PropertySlot => "PropertySlot",
            EntityKind::PageObject => "PageObject",
            EntityKind::ApiReturn => "ApiReturn",
            EntityKind::ApiArgument => "ApiArgument",
            EntityKind::ReturnSlot => "ReturnSlot",
            EntityKind::Temporary => "Temporary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeEntity {
    pub id: EntityId,
    pub kind: EntityKind,
    /// Qualified for slots (`Page.data.location`), API name for endpoints.
    pub name: String,
    pub decl_span: Span,
    pub owner_scope: ScopeId,
    /// Owning object for property slots.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub owner_entity: Option<EntityId>,
    /// Preorder index of the declaring node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    /// Created by a write to an undeclared name.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub implicit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scope {
    pub id: ScopeId,
    pub origin_kind: NodeKind,
    /// Preorder index of the node that created the scope.
    pub origin_node: usize,
    pub span: Span,
    pub parent: Option<ScopeId>,
    pub depth: usize,
    pub entities: Vec<EntityId>,
    pub node_list: Vec<usize>,
    /// Function entity for function scopes.
    pub function: Option<EntityId>,
    /// PageObject bound to `this`, when known.
    pub this_entity: Option<EntityId>,
}

#[derive(Debug, Clone)]
pub struct ScopeChain {
    pub file: String,
    pub ast: AstNode,
    pub scopes: Vec<Scope>,
    pub entities: Vec<CodeEntity>,
    bindings: HashMap<(ScopeId, String), EntityId>,
    /// Scope of every node, by preorder index.
    pub node_scope: Vec<ScopeId>,
    /// Subtree size of every node, by preorder index.
    pub subtree_size: Vec<usize>,
    /// Function node index to its Function entity.
    pub function_entity: HashMap<usize, EntityId>,
    /// Function node index to the scope it creates.
    pub function_scope: HashMap<usize, ScopeId>,
    /// Parameter entities per function node, positionally; `None` for patterns.
    pub params: HashMap<usize, Vec<Option<EntityId>>>,
    /// Container call node index to its PageObject.
    pub containers: BTreeMap<usize, EntityId>,
    /// Method name to Function entity, over every container in the file.
    pub container_methods: BTreeMap<String, EntityId>,
}

impl ScopeChain {
    pub fn root(&self) -> ScopeId {
        0
    }

    pub fn entity(&self, id: EntityId) -> &CodeEntity {
        &self.entities[id]
    }

    pub fn scope(&self, id: ScopeId) -> &Scope {
        &self.scopes[id]
    }

    /// Nearest binding of `name` walking from `from` up the parent chain.
    pub fn resolve(&self, name: &str, from: ScopeId) -> Option<&CodeEntity> {
        self.resolve_id(name, from).map(|id| &self.entities[id])
    }

    pub fn resolve_id(&self, name: &str, from: ScopeId) -> Option<EntityId> {
        let mut cur = Some(from);
        while let Some(s) = cur {
            if let Some(&e) = self.bindings.get(&(s, name.to_string())) {
                return Some(e);
            }
            cur = self.scopes.get(s)?.parent;
        }
        None
    }

    /// Enclosing function scope's `this` object, following arrow functions.
    pub fn this_of(&self, scope: ScopeId) -> Option<EntityId> {
        self.scopes[scope].this_entity
    }

    pub fn max_depth(&self) -> usize {
        self.scopes.iter().map(|s| s.depth).max().unwrap_or(0) + 1
    }

    /// Preorder index of each child of the node at `idx`.
    pub fn child_indices(&self, node: &AstNode, idx: usize) -> Vec<usize> {
        let mut next = idx + 1;
        node.children
            .iter()
            .map(|_| {
                let i = next;
                next += self.subtree_size[i];
                i
            })
            .collect()
    }

    /// Text dump: one scope per block, nested blocks indented by depth.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut children: BTreeMap<ScopeId, Vec<ScopeId>> = BTreeMap::new();
        for s in &self.scopes {
            if let Some(p) = s.parent {
                children.entry(p).or_default().push(s.id);
            }
        }
        let mut stack = vec![0usize];
        while let Some(sid) = stack.pop() {
            let s = &self.scopes[sid];
            let pad = "  ".repeat(s.depth);
            let label = s
                .function
                .map(|f| format!(" {}", self.entities[f].name))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{pad}scope {} {:?}{label} [{}:{}-{}:{}] nodes={}",
                s.id,
                s.origin_kind,
                s.span.start.line,
                s.span.start.column,
                s.span.end.line,
                s.span.end.column,
                s.node_list.len()
            );
            for &e in &s.entities {
                let ent = &self.entities[e];
                let _ = writeln!(
                    out,
                    "{pad}  {} #{} {} @{}:{}{}",
                    ent.kind.as_str(),
                    ent.id,
                    ent.name,
                    ent.decl_span.start.line,
                    ent.decl_span.start.column,
                    if ent.implicit { " implicit" } else { "" }
                );
            }
            if let Some(kids) = children.get(&sid) {
                stack.extend(kids.iter().rev());
            }
        }
        out
    }
}

fn sizes(node: &AstNode, out: &mut Vec<usize>) -> usize {
    let idx = out.len();
    out.push(0);
    let mut n = 1;
    for c in &node.children {
        n += sizes(c, out);
    }
    out[idx] = n;
    n
}

struct Builder {
    chain: ScopeChain,
    /// Function node index to the PageObject its `this` refers to.
    method_this: HashMap<usize, EntityId>,
}

/// Builds entities and scopes for one file.
pub fn build_scope_chain(file: &str, ast: &AstNode) -> ScopeChain {
    let mut subtree_size = Vec::with_capacity(ast.node_count());
    sizes(ast, &mut subtree_size);
    let n = subtree_size.len();
    let chain = ScopeChain {
        file: file.to_string(),
        ast: ast.clone(),
        scopes: Vec::new(),
        entities: Vec::new(),
        bindings: HashMap::new(),
        node_scope: vec![0; n],
        subtree_size,
        function_entity: HashMap::new(),
        function_scope: HashMap::new(),
        params: HashMap::new(),
        containers: BTreeMap::new(),
        container_methods: BTreeMap::new(),
    };
    let mut b = Builder {
        chain,
        method_this: HashMap::new(),
    };
    b.chain.scopes.push(Scope {
        id: 0,
        origin_kind: ast.kind,
        origin_node: 0,
        span: ast.span,
        parent: None,
        depth: 0,
        entities: Vec::new(),
        node_list: Vec::new(),
        function: None,
        this_entity: None,
    });
    b.new_entity(EntityKind::File, file, ast.span, 0, Some(0));
    b.chain.node_scope[0] = 0;
    b.chain.scopes[0].node_list.push(0);
    let kids: Vec<usize> = b.chain.child_indices(ast, 0);
    for (c, i) in ast.children.iter().zip(kids) {
        b.visit(c, i, 0, None);
    }
    b.implicit_globals(ast);
    b.chain
}

impl Builder {
    fn new_entity(
        &mut self,
        kind: EntityKind,
        name: &str,
        span: Span,
        scope: ScopeId,
        node: Option<usize>,
    ) -> EntityId {
        let id = self.chain.entities.len();
        self.chain.entities.push(CodeEntity {
            id,
            kind,
            name: name.to_string(),
            decl_span: span,
            owner_scope: scope,
            owner_entity: None,
            node,
            implicit: false,
        });
        self.chain.scopes[scope].entities.push(id);
        id
    }

    /// Binds `name` in `scope` unless already bound there; returns the binding.
    fn declare(&mut self, kind: EntityKind, name: &str, span: Span, scope: ScopeId, node: usize) -> EntityId {
        if let Some(&e) = self.chain.bindings.get(&(scope, name.to_string())) {
            return e;
        }
        let e = self.new_entity(kind, name, span, scope, Some(node));
        self.chain.bindings.insert((scope, name.to_string()), e);
        e
    }

    fn assign_subtree(&mut self, idx: usize, scope: ScopeId) {
        for i in idx..idx + self.chain.subtree_size[idx] {
            self.chain.node_scope[i] = scope;
            self.chain.scopes[scope].node_list.push(i);
        }
    }

    fn visit(&mut self, node: &AstNode, idx: usize, scope: ScopeId, hint: Option<&str>) {
        if node.kind == NodeKind::Opaque {
            self.assign_subtree(idx, scope);
            return;
        }
        if node.kind.is_function() {
            self.function(node, idx, scope, hint);
            return;
        }
        self.chain.node_scope[idx] = scope;
        self.chain.scopes[scope].node_list.push(idx);
        let kids = self.chain.child_indices(node, idx);
        match node.kind {
            NodeKind::VariableDeclarator => {
                let id = &node.children[0];
                let name = id.name().map(str::to_string);
                if let Some(n) = &name {
                    self.declare(EntityKind::Variable, n, id.span, scope, kids[0]);
                }
                for (k, (c, i)) in node.children.iter().zip(kids).enumerate() {
                    let h = if k == 1 { name.as_deref() } else { None };
                    self.visit(c, i, scope, h);
                }
            }
            NodeKind::CatchClause => {
                if let Some(n) = node
                    .children
                    .first()
                    .filter(|_| node.children.len() == 2)
                    .and_then(AstNode::name)
                {
                    self.declare(EntityKind::Variable, n, node.children[0].span, scope, kids[0]);
                }
                for (c, i) in node.children.iter().zip(kids) {
                    self.visit(c, i, scope, None);
                }
            }
            NodeKind::Property => {
                let key = node.value.clone();
                for (k, (c, i)) in node.children.iter().zip(kids).enumerate() {
                    self.visit(c, i, scope, if k == 1 { key.as_deref() } else { None });
                }
            }
            NodeKind::AssignmentExpression => {
                let target = node.children[0].dotted_name();
                let h = target.as_deref().map(|t| t.rsplit('.').next().unwrap_or(t));
                for (k, (c, i)) in node.children.iter().zip(kids).enumerate() {
                    self.visit(c, i, scope, if k == 1 { h } else { None });
                }
            }
            NodeKind::CallExpression => {
                self.maybe_container(node, idx, scope, &kids);
                for (c, i) in node.children.iter().zip(kids) {
                    self.visit(c, i, scope, None);
                }
            }
            _ => {
                for (c, i) in node.children.iter().zip(kids) {
                    self.visit(c, i, scope, None);
                }
            }
        }
    }

    fn maybe_container(&mut self, node: &AstNode, idx: usize, scope: ScopeId, kids: &[usize]) {
        let Some(callee) = node.children[0].name() else { return };
        if !CONTAINER_CALLS.contains(&callee) || node.children.len() < 2 {
            return;
        }
        let obj = &node.children[1];
        if obj.kind != NodeKind::ObjectExpression {
            return;
        }
        let page = self.new_entity(EntityKind::PageObject, callee, node.span, scope, Some(idx));
        self.chain.containers.insert(idx, page);
        self.mark_methods(obj, kids[1], page, true);
    }

    fn mark_methods(&mut self, obj: &AstNode, idx: usize, page: EntityId, top: bool) {
        let kids = self.chain.child_indices(obj, idx);
        for (p, pi) in obj.children.iter().zip(kids) {
            if p.kind != NodeKind::Property || p.children.len() != 2 {
                continue;
            }
            let vi = self.chain.child_indices(p, pi)[1];
            let v = &p.children[1];
            match v.kind {
                NodeKind::FunctionExpression => {
                    self.method_this.insert(vi, page);
                }
                NodeKind::ObjectExpression
                    if top && p.value.as_deref().is_some_and(|k| CONTAINER_METHOD_GROUPS.contains(&k)) =>
                {
                    self.mark_methods(v, vi, page, false);
                }
                _ => {}
            }
        }
    }

    fn function(&mut self, node: &AstNode, idx: usize, scope: ScopeId, hint: Option<&str>) {
        self.chain.node_scope[idx] = scope;
        self.chain.scopes[scope].node_list.push(idx);
        let Some(parts) = node.function_parts() else {
            return;
        };
        let name = parts
            .id
            .and_then(AstNode::name)
            .map(str::to_string)
            .or_else(|| hint.map(str::to_string))
            .unwrap_or_else(|| format!("<anonymous@{}:{}>", node.span.start.line, node.span.start.column));
        let fe = if node.kind == NodeKind::FunctionDeclaration {
            let e = self.new_entity(EntityKind::Function, &name, node.span, scope, Some(idx));
            self.chain.bindings.entry((scope, name.clone())).or_insert(e);
            e
        } else {
            self.new_entity(EntityKind::Function, &name, node.span, scope, Some(idx))
        };
        self.chain.function_entity.insert(idx, fe);
        if self.method_this.contains_key(&idx) {
            self.chain.container_methods.entry(name.clone()).or_insert(fe);
        }
        let this_entity = match node.kind {
            NodeKind::ArrowFunctionExpression => self.chain.scopes[scope].this_entity,
            _ => self.method_this.get(&idx).copied(),
        };
        let sid = self.chain.scopes.len();
        let depth = self.chain.scopes[scope].depth + 1;
        self.chain.scopes.push(Scope {
            id: sid,
            origin_kind: node.kind,
            origin_node: idx,
            span: node.span,
            parent: Some(scope),
            depth,
            entities: Vec::new(),
            node_list: Vec::new(),
            function: Some(fe),
            this_entity,
        });
        self.chain.function_scope.insert(idx, sid);
        let kids = self.chain.child_indices(node, idx);
        let mut k = 0;
        if let Some(id) = parts.id {
            // The name node sits in the enclosing scope.
            self.chain.node_scope[kids[0]] = scope;
            self.chain.scopes[scope].node_list.push(kids[0]);
            if node.kind == NodeKind::FunctionExpression {
                self.chain
                    .bindings
                    .entry((sid, id.name().unwrap_or_default().to_string()))
                    .or_insert(fe);
            }
            k = 1;
        }
        let mut params = Vec::new();
        for (p, &pi) in parts.params.iter().zip(&kids[k..]) {
            match p.name() {
                Some(pn) => {
                    self.chain.node_scope[pi] = sid;
                    self.chain.scopes[sid].node_list.push(pi);
                    params.push(Some(self.declare(EntityKind::Parameter, pn, p.span, sid, pi)));
                }
                None => {
                    self.assign_subtree(pi, sid);
                    params.push(None);
                }
            }
        }
        self.chain.params.insert(idx, params);
        let bi = *kids.last().expect("function body");
        self.visit(parts.body, bi, sid, None);
    }

    /// Writes to names that resolve nowhere create file-scope variables.
    fn implicit_globals(&mut self, ast: &AstNode) {
        let mut writes: Vec<(String, Span, usize)> = Vec::new();
        let mut idx = 0usize;
        collect_writes(ast, &mut idx, &mut writes);
        for (name, span, i) in writes {
            let scope = self.chain.node_scope[i];
            if self.chain.resolve_id(&name, scope).is_none() {
                let e = self.new_entity(EntityKind::Variable, &name, span, 0, Some(i));
                self.chain.entities[e].implicit = true;
                self.chain.bindings.insert((0, name), e);
            }
        }
    }
}

fn collect_writes(node: &AstNode, idx: &mut usize, out: &mut Vec<(String, Span, usize)>) {
    let my = *idx;
    *idx += 1;
    if node.kind == NodeKind::Opaque {
        let mut skip = 0;
        node.walk(&mut |_| skip += 1);
        *idx += skip - 1;
        return;
    }
    let target = match node.kind {
        NodeKind::AssignmentExpression | NodeKind::ForInStatement | NodeKind::ForOfStatement => node.children.first(),
        NodeKind::UpdateExpression => node.children.first(),
        _ => None,
    };
    if let Some(n) = target.and_then(AstNode::name) {
        out.push((n.to_string(), target.map(|t| t.span).unwrap_or_default(), my + 1));
    }
    for c in &node.children {
        collect_writes(c, idx, out);
    }
}

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Node kinds, named after their ESTree counterparts.
///
/// Constructs outside the supported subset (classes, generators, async
/// functions, destructuring patterns, modules, spread, optional chaining)
/// are represented as [`NodeKind::Opaque`] with the original construct name
/// in [`AstNode::value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NodeKind {
    Program,
    VariableDeclaration,
    VariableDeclarator,
    FunctionDeclaration,
    FunctionExpression,
    ArrowFunctionExpression,
    AssignmentExpression,
    CallExpression,
    NewExpression,
    MemberExpression,
    ObjectExpression,
    Property,
    ReturnStatement,
    Identifier,
    Literal,
    ThisExpression,
    LogicalExpression,
    BinaryExpression,
    UnaryExpression,
    UpdateExpression,
    ConditionalExpression,
    SequenceExpression,
    ArrayExpression,
    TemplateLiteral,
    IfStatement,
    ForStatement,
    ForInStatement,
    ForOfStatement,
    WhileStatement,
    DoWhileStatement,
    BlockStatement,
    ExpressionStatement,
    EmptyStatement,
    BreakStatement,
    ContinueStatement,
    ThrowStatement,
    TryStatement,
    CatchClause,
    SwitchStatement,
    SwitchCase,
    LabeledStatement,
    DebuggerStatement,
    Opaque,
}

impl NodeKind {
    pub fn from_estree(name: &str) -> Option<NodeKind> {
        use NodeKind::*;
        Some(match name {
            "Program" => Program,
            "VariableDeclaration" => VariableDeclaration,
            "VariableDeclarator" => VariableDeclarator,
            "FunctionDeclaration" => FunctionDeclaration,
            "FunctionExpression" => FunctionExpression,
            "ArrowFunctionExpression" => ArrowFunctionExpression,
            "AssignmentExpression" => AssignmentExpression,
            "CallExpression" => CallExpression,
            "NewExpression" => NewExpression,
            "MemberExpression" => MemberExpression,
            "ObjectExpression" => ObjectExpression,
            "Property" => Property,
            "ReturnStatement" => ReturnStatement,
            "Identifier" => Identifier,
            "Literal" => Literal,
            "ThisExpression" => ThisExpression,
            "LogicalExpression" => LogicalExpression,
            "BinaryExpression" => BinaryExpression,
            "UnaryExpression" => UnaryExpression,
            "UpdateExpression" => UpdateExpression,
            "ConditionalExpression" => ConditionalExpression,
            "SequenceExpression" => SequenceExpression,
            "ArrayExpression" => ArrayExpression,
            "TemplateLiteral" => TemplateLiteral,
            "IfStatement" => IfStatement,
            "ForStatement" => ForStatement,
            "ForInStatement" => ForInStatement,
            "ForOfStatement" => ForOfStatement,
            "WhileStatement" => WhileStatement,
            "DoWhileStatement" => DoWhileStatement,
            "BlockStatement" => BlockStatement,
            "ExpressionStatement" => ExpressionStatement,
            "EmptyStatement" => EmptyStatement,
            "BreakStatement" => BreakStatement,
            "ContinueStatement" => ContinueStatement,
            "ThrowStatement" => ThrowStatement,
            "TryStatement" => TryStatement,
            "CatchClause" => CatchClause,
            "SwitchStatement" => SwitchStatement,
            "SwitchCase" => SwitchCase,
            "LabeledStatement" => LabeledStatement,
            "DebuggerStatement" => DebuggerStatement,
            _ => return None,
        })
    }

    pub fn is_function(self) -> bool {
        matches!(
            self,
            NodeKind::FunctionDeclaration | NodeKind::FunctionExpression | NodeKind::ArrowFunctionExpression
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Line is 1-based, column is 0-based (ESTree convention), offset in bytes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Position {
    pub line: u32,
    pub column: u32,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Span {
    pub start: Position,
    pub end: Position,
}

impl Span {
    pub fn new(start: Position, end: Position) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start.offset <= other.start.offset && other.end.offset <= self.end.offset
    }

    /// The raw source text covered by this span.
    pub fn slice<'s>(&self, source: &'s str) -> &'s str {
        source.get(self.start.offset..self.end.offset).unwrap_or("")
    }
}

/// A syntax tree node.
///
/// Child layout follows ESTree field order with absent optional fields
/// skipped. `value` carries the kind-specific payload:
///
/// | kind | value |
/// |------|-------|
/// | Identifier | the name |
/// | Literal | cooked string value, or the raw token for other literals |
/// | operator expressions | the operator |
/// | MemberExpression | `Some("computed")` for `a[b]`, `None` for `a.b` |
/// | Property | the static key name, `None` when computed |
/// | FunctionDeclaration / FunctionExpression | the name; when set, `children[0]` is the name Identifier |
/// | VariableDeclaration | `var`, `let` or `const` |
/// | Opaque | the original construct name |
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AstNode {
    pub kind: NodeKind,
    pub span: Span,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AstNode>,
}

/// Parts of a function-like node.
pub struct FunctionParts<'a> {
    pub id: Option<&'a AstNode>,
    pub params: &'a [AstNode],
    pub body: &'a AstNode,
}

impl AstNode {
    pub fn new(kind: NodeKind, span: Span) -> Self {
        AstNode {
            kind,
            span,
            value: None,
            children: Vec::new(),
        }
    }

    pub fn with_value(mut self, v: impl Into<String>) -> Self {
        self.value = Some(v.into());
        self
    }

    pub fn with_children(mut self, children: Vec<AstNode>) -> Self {
        self.children = children;
        self
    }

    pub fn name(&self) -> Option<&str> {
        match self.kind {
            NodeKind::Identifier => self.value.as_deref(),
            _ => None,
        }
    }

    /// Splits a function-like node into id, params and body.
    pub fn function_parts(&self) -> Option<FunctionParts<'_>> {
        if !self.kind.is_function() || self.children.is_empty() {
            return None;
        }
        let has_id = self.kind != NodeKind::ArrowFunctionExpression && self.value.is_some();
        let (id, rest) = if has_id {
            (Some(&self.children[0]), &self.children[1..])
        } else {
            (None, &self.children[..])
        };
        let (body, params) = rest.split_last()?;
        Some(FunctionParts { id, params, body })
    }

    /// Preorder traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a AstNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(AstNode::node_count).sum::<usize>()
    }

    /// Number of nodes of each kind in the subtree.
    pub fn kind_multiset(&self) -> BTreeMap<NodeKind, usize> {
        let mut m = BTreeMap::new();
        self.walk(&mut |n| *m.entry(n.kind).or_insert(0) += 1);
        m
    }

    /// Static dotted name for identifier/member chains: `wx.request`,
    /// `this.setData`, `a.b.c`. `None` if any link is computed or not a name.
    pub fn dotted_name(&self) -> Option<String> {
        match self.kind {
            NodeKind::Identifier => self.value.clone(),
            NodeKind::ThisExpression => Some("this".into()),
            NodeKind::MemberExpression if self.value.is_none() && self.children.len() == 2 => {
                let obj = self.children[0].dotted_name()?;
                let prop = self.children[1].name()?;
                Some(format!("{obj}.{prop}"))
            }
            _ => None,
        }
    }

    /// Compact s-expression rendering used in tests and debug dumps:
    /// `Program[VariableDeclaration[VariableDeclarator[Identifier(a) Literal(1)]]]`.
    pub fn sexpr(&self) -> String {
        let mut s = format!("{:?}", self.kind);
        if let Some(v) = &self.value {
            if matches!(self.kind, NodeKind::Identifier | NodeKind::Literal | NodeKind::Opaque) {
                s.push_str(&format!("({v})"));
            }
        }
        if !self.children.is_empty() {
            let inner: Vec<String> = self.children.iter().map(AstNode::sexpr).collect();
            s.push_str(&format!("[{}]", inner.join(" ")));
        }
        s
    }
}

use super::ast::{AstNode, NodeKind, Position, Span};
use super::lexer::{Lexer, TokKind, Token};
use super::{JsError, ParseDiagnostic, Parsed};
use std::collections::BTreeMap;

struct SyntaxError {
    message: String,
    at: Position,
}

type PResult<T> = Result<T, SyntaxError>;

const RESERVED: &[&str] = &[
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "debugger",
    "default",
    "delete",
    "do",
    "else",
    "enum",
    "export",
    "extends",
    "false",
    "finally",
    "for",
    "function",
    "if",
    "import",
    "in",
    "instanceof",
    "new",
    "null",
    "return",
    "super",
    "switch",
    "this",
    "throw",
    "true",
    "try",
    "typeof",
    "var",
    "void",
    "while",
    "with",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=", "&=", "|=", "^=", "&&=", "||=", "??=",
];

const MAX_DEPTH: usize = 600;

fn is_reserved(n: &str) -> bool {
    RESERVED.contains(&n)
}

pub(crate) fn parse_program(src: &str) -> Result<Parsed, JsError> {
    let (tokens, lex_diags) = Lexer::new(src).tokenize()?;
    let mut p = Parser::new(src, tokens, 0);
    p.diagnostics = lex_diags;
    let body = p.statement_list(false, false);
    let end = p.toks.last().map(|t| t.end).unwrap_or_default();
    let start = Position {
        line: 1,
        column: 0,
        offset: 0,
    };
    let ast = AstNode::new(NodeKind::Program, Span::new(start, end)).with_children(body);
    Ok(Parsed {
        ast,
        diagnostics: p.diagnostics,
        opaque: p.opaque,
    })
}

struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    i: usize,
    prev_end: Position,
    depth: usize,
    diagnostics: Vec<ParseDiagnostic>,
    opaque: BTreeMap<String, usize>,
}

impl<'s> Parser<'s> {
    fn new(src: &'s str, toks: Vec<Token>, depth: usize) -> Self {
        let prev_end = toks.first().map(|t| t.start).unwrap_or_default();
        Parser {
            src,
            toks,
            i: 0,
            prev_end,
            depth,
            diagnostics: Vec::new(),
            opaque: BTreeMap::new(),
        }
    }

    // ---- token helpers ----

    fn peek(&self) -> &Token {
        &self.toks[self.i]
    }

    fn peek_n(&self, n: usize) -> &Token {
        let last = self.toks.len() - 1;
        &self.toks[(self.i + n).min(last)]
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokKind::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if !matches!(t.kind, TokKind::Eof) {
            self.i += 1;
            self.prev_end = t.end;
        }
        t
    }

    fn at(&self, p: &str) -> bool {
        self.peek().is_punct(p)
    }

    fn at_name(&self, n: &str) -> bool {
        self.peek().is_name(n)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.at(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_name(&mut self, n: &str) -> bool {
        if self.at_name(n) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError {
            message: message.into(),
            at: self.peek().start,
        })
    }

    fn unexpected<T>(&self) -> PResult<T> {
        let what = match &self.peek().kind {
            TokKind::Eof => "end of input".to_string(),
            TokKind::Name(n) => format!("'{n}'"),
            TokKind::Punct(p) => format!("'{p}'"),
            TokKind::Num(n) => format!("number {n}"),
            TokKind::Str(_) => "string".to_string(),
            TokKind::Template { .. } => "template".to_string(),
            TokKind::Regex(_) => "regular expression".to_string(),
        };
        self.err(format!("unexpected {what}"))
    }

    fn expect(&mut self, p: &str) -> PResult<Token> {
        if self.at(p) {
            Ok(self.advance())
        } else {
            let found = self.unexpected::<()>().err().map(|e| e.message).unwrap_or_default();
            self.err(format!("expected '{p}', {found}"))
        }
    }

    fn start(&self) -> Position {
        self.peek().start
    }

    fn node(&self, kind: NodeKind, start: Position) -> AstNode {
        AstNode::new(kind, Span::new(start, self.prev_end))
    }

    fn opaque(&mut self, name: &str, start: Position, children: Vec<AstNode>) -> AstNode {
        *self.opaque.entry(name.to_string()).or_insert(0) += 1;
        self.diagnostics.push(ParseDiagnostic {
            message: format!("unsupported construct {name}"),
            line: start.line,
            column: start.column,
        });
        self.node(NodeKind::Opaque, start)
            .with_value(name)
            .with_children(children)
    }

    fn guarded<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        if self.depth >= MAX_DEPTH {
            return self.err("nesting too deep");
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }

    fn semicolon(&mut self) -> PResult<()> {
        if self.eat(";") || self.at("}") || self.at_eof() || self.peek().newline_before {
            Ok(())
        } else {
            let found = self.unexpected::<()>().err().map(|e| e.message).unwrap_or_default();
            self.err(format!("expected ';', {found}"))
        }
    }

    fn identifier(&mut self) -> PResult<AstNode> {
        let start = self.start();
        match &self.peek().kind {
            TokKind::Name(n) if !is_reserved(n) => {
                let n = n.clone();
                self.advance();
                Ok(self.node(NodeKind::Identifier, start).with_value(n))
            }
            _ => self.unexpected(),
        }
    }

    // ---- statements ----

    fn statement_list(&mut self, in_block: bool, in_switch: bool) -> Vec<AstNode> {
        let mut out = Vec::new();
        loop {
            if self.at_eof() || (in_block && self.at("}")) {
                break;
            }
            if in_switch && (self.at_name("case") || self.at_name("default")) {
                break;
            }
            let begin = self.i;
            match self.statement() {
                Ok(n) => out.push(n),
                Err(e) => out.push(self.recover(e, begin, in_block)),
            }
        }
        out
    }

    fn recover(&mut self, e: SyntaxError, begin: usize, in_block: bool) -> AstNode {
        self.diagnostics.push(ParseDiagnostic {
            message: e.message,
            line: e.at.line,
            column: e.at.column,
        });
        *self.opaque.entry("Error".into()).or_insert(0) += 1;
        // Brackets opened by the failed statement are closed before stopping.
        let mut depth = 0i32;
        for t in &self.toks[begin..self.i] {
            if t.is_punct("{") || t.is_punct("(") || t.is_punct("[") {
                depth += 1;
            } else if t.is_punct("}") || t.is_punct(")") || t.is_punct("]") {
                depth = (depth - 1).max(0);
            }
        }
        loop {
            let t = self.peek();
            if matches!(t.kind, TokKind::Eof) {
                break;
            }
            if t.is_punct(";") && depth <= 0 {
                self.advance();
                break;
            }
            if t.is_punct("}") && depth <= 0 {
                if in_block {
                    break;
                }
                self.advance();
                continue;
            }
            if t.is_punct("{") || t.is_punct("(") || t.is_punct("[") {
                depth += 1;
            } else if t.is_punct("}") || t.is_punct(")") || t.is_punct("]") {
                depth -= 1;
            }
            self.advance();
        }
        if self.i == begin && !self.at_eof() {
            self.advance();
        }
        let start = self.toks[begin].start;
        let end = if self.i > begin { self.prev_end } else { start };
        AstNode::new(NodeKind::Opaque, Span::new(start, end)).with_value("Error")
    }

    fn statement(&mut self) -> PResult<AstNode> {
        self.guarded(|p| p.statement_inner())
    }

    fn statement_inner(&mut self) -> PResult<AstNode> {
        let start = self.start();
        let kw = match &self.peek().kind {
            TokKind::Punct("{") => return self.block(),
            TokKind::Punct(";") => {
                self.advance();
                return Ok(self.node(NodeKind::EmptyStatement, start));
            }
            TokKind::Name(n) => n.clone(),
            _ => return self.expression_statement(),
        };
        let next = self.peek_n(1).clone();
        match kw.as_str() {
            "var" | "const" => self.var_statement(),
            "let" if matches!(next.kind, TokKind::Name(_)) || next.is_punct("[") || next.is_punct("{") => {
                self.var_statement()
            }
            "function" => self.function(true),
            "async" if next.is_name("function") && !next.newline_before => {
                self.advance();
                let f = self.function(true)?;
                Ok(self.opaque("AsyncFunction", start, vec![f]))
            }
            "class" => self.class("ClassDeclaration"),
            "if" => {
                self.advance();
                self.expect("(")?;
                let test = self.expression(false)?;
                self.expect(")")?;
                let mut kids = vec![test, self.statement()?];
                if self.eat_name("else") {
                    kids.push(self.statement()?);
                }
                Ok(self.node(NodeKind::IfStatement, start).with_children(kids))
            }
            "for" => self.for_statement(),
            "while" => {
                self.advance();
                self.expect("(")?;
                let test = self.expression(false)?;
                self.expect(")")?;
                let body = self.statement()?;
                Ok(self
                    .node(NodeKind::WhileStatement, start)
                    .with_children(vec![test, body]))
            }
            "do" => {
                self.advance();
                let body = self.statement()?;
                if !self.eat_name("while") {
                    return self.err("expected 'while'");
                }
                self.expect("(")?;
                let test = self.expression(false)?;
                self.expect(")")?;
                self.eat(";");
                Ok(self
                    .node(NodeKind::DoWhileStatement, start)
                    .with_children(vec![body, test]))
            }
            "return" => {
                self.advance();
                let mut kids = Vec::new();
                if !(self.at(";") || self.at("}") || self.at_eof() || self.peek().newline_before) {
                    kids.push(self.expression(false)?);
                }
                self.semicolon()?;
                Ok(self.node(NodeKind::ReturnStatement, start).with_children(kids))
            }
            "break" | "continue" => {
                self.advance();
                let mut kids = Vec::new();
                if matches!(&self.peek().kind, TokKind::Name(n) if !is_reserved(n)) && !self.peek().newline_before {
                    kids.push(self.identifier()?);
                }
                self.semicolon()?;
                let kind = if kw == "break" {
                    NodeKind::BreakStatement
                } else {
                    NodeKind::ContinueStatement
                };
                Ok(self.node(kind, start).with_children(kids))
            }
            "throw" => {
                self.advance();
                let arg = self.expression(false)?;
                self.semicolon()?;
                Ok(self.node(NodeKind::ThrowStatement, start).with_children(vec![arg]))
            }
            "try" => self.try_statement(),
            "switch" => self.switch_statement(),
            "debugger" => {
                self.advance();
                self.semicolon()?;
                Ok(self.node(NodeKind::DebuggerStatement, start))
            }
            "with" => {
                self.advance();
                self.expect("(")?;
                let obj = self.expression(false)?;
                self.expect(")")?;
                let body = self.statement()?;
                Ok(self.opaque("WithStatement", start, vec![obj, body]))
            }
            "import" | "export" if !(next.is_punct("(") || next.is_punct(".")) => {
                self.skip_module_statement();
                let name = if kw == "import" {
                    "ImportDeclaration"
                } else {
                    "ExportDeclaration"
                };
                Ok(self.opaque(name, start, Vec::new()))
            }
            _ if next.is_punct(":") && !is_reserved(&kw) => {
                let label = self.identifier()?;
                self.advance();
                let body = self.statement()?;
                Ok(self
                    .node(NodeKind::LabeledStatement, start)
                    .with_children(vec![label, body]))
            }
            _ => self.expression_statement(),
        }
    }

    fn expression_statement(&mut self) -> PResult<AstNode> {
        let start = self.start();
        let e = self.expression(false)?;
        self.semicolon()?;
        Ok(self.node(NodeKind::ExpressionStatement, start).with_children(vec![e]))
    }

    fn block(&mut self) -> PResult<AstNode> {
        let start = self.start();
        self.expect("{")?;
        let body = self.statement_list(true, false);
        self.expect("}")?;
        Ok(self.node(NodeKind::BlockStatement, start).with_children(body))
    }

    fn var_statement(&mut self) -> PResult<AstNode> {
        let start = self.start();
        let mut d = self.var_declaration(false)?;
        self.semicolon()?;
        d.span = Span::new(start, self.prev_end);
        Ok(d)
    }

    fn var_declaration(&mut self, no_in: bool) -> PResult<AstNode> {
        let start = self.start();
        let kind = match self.advance().kind {
            TokKind::Name(n) => n,
            _ => unreachable!("caller checked declaration keyword"),
        };
        let mut decls = Vec::new();
        loop {
            let dstart = self.start();
            let mut kids = vec![self.binding_target()?];
            if self.eat("=") {
                kids.push(self.assign(no_in)?);
            }
            decls.push(self.node(NodeKind::VariableDeclarator, dstart).with_children(kids));
            if !self.eat(",") {
                break;
            }
        }
        Ok(self
            .node(NodeKind::VariableDeclaration, start)
            .with_value(kind)
            .with_children(decls))
    }

    fn binding_target(&mut self) -> PResult<AstNode> {
        let start = self.start();
        if self.at("{") {
            let o = self.object()?;
            return Ok(self.opaque("ObjectPattern", start, vec![o]));
        }
        if self.at("[") {
            let a = self.array()?;
            return Ok(self.opaque("ArrayPattern", start, vec![a]));
        }
        self.identifier()
    }

    fn for_statement(&mut self) -> PResult<AstNode> {
        let start = self.start();
        self.advance();
        if self.at_name("await") {
            return self.err("for await is not supported");
        }
        self.expect("(")?;
        let mut init = None;
        if !self.at(";") {
            let is_decl = self.at_name("var")
                || self.at_name("const")
                || (self.at_name("let")
                    && (matches!(self.peek_n(1).kind, TokKind::Name(_))
                        || self.peek_n(1).is_punct("[")
                        || self.peek_n(1).is_punct("{")));
            init = Some(if is_decl {
                self.var_declaration(true)?
            } else {
                self.expression(true)?
            });
        }
        if let Some(left) = init.take() {
            if self.at_name("in") || self.at_name("of") {
                let of = self.at_name("of");
                self.advance();
                let right = if of {
                    self.assign(false)?
                } else {
                    self.expression(false)?
                };
                self.expect(")")?;
                let body = self.statement()?;
                let kind = if of {
                    NodeKind::ForOfStatement
                } else {
                    NodeKind::ForInStatement
                };
                return Ok(self.node(kind, start).with_children(vec![left, right, body]));
            }
            init = Some(left);
        }
        let mut kids: Vec<AstNode> = init.into_iter().collect();
        self.expect(";")?;
        if !self.at(";") {
            kids.push(self.expression(false)?);
        }
        self.expect(";")?;
        if !self.at(")") {
            kids.push(self.expression(false)?);
        }
        self.expect(")")?;
        kids.push(self.statement()?);
        Ok(self.node(NodeKind::ForStatement, start).with_children(kids))
    }

    fn try_statement(&mut self) -> PResult<AstNode> {
        let start = self.start();
        self.advance();
        let mut kids = vec![self.block()?];
        if self.at_name("catch") {
            let cstart = self.start();
            self.advance();
            let mut ckids = Vec::new();
            if self.eat("(") {
                ckids.push(self.binding_target()?);
                self.expect(")")?;
            }
            ckids.push(self.block()?);
            kids.push(self.node(NodeKind::CatchClause, cstart).with_children(ckids));
        }
        if self.eat_name("finally") {
            kids.push(self.block()?);
        }
        if kids.len() == 1 {
            return self.err("expected 'catch' or 'finally'");
        }
        Ok(self.node(NodeKind::TryStatement, start).with_children(kids))
    }

    fn switch_statement(&mut self) -> PResult<AstNode> {
        let start = self.start();
        self.advance();
        self.expect("(")?;
        let mut kids = vec![self.expression(false)?];
        self.expect(")")?;
        self.expect("{")?;
        while !self.at("}") {
            let cstart = self.start();
            let mut ckids = Vec::new();
            if self.eat_name("case") {
                ckids.push(self.expression(false)?);
            } else if !self.eat_name("default") {
                return self.unexpected();
            }
            self.expect(":")?;
            ckids.extend(self.statement_list(true, true));
            kids.push(self.node(NodeKind::SwitchCase, cstart).with_children(ckids));
        }
        self.expect("}")?;
        Ok(self.node(NodeKind::SwitchStatement, start).with_children(kids))
    }

    fn skip_module_statement(&mut self) {
        self.advance();
        let mut depth = 0i32;
        loop {
            let t = self.peek();
            if matches!(t.kind, TokKind::Eof) || (depth <= 0 && t.newline_before) {
                break;
            }
            if depth <= 0 && t.is_punct(";") {
                self.advance();
                break;
            }
            if t.is_punct("{") || t.is_punct("(") || t.is_punct("[") {
                depth += 1;
            } else if t.is_punct("}") || t.is_punct(")") || t.is_punct("]") {
                depth -= 1;
            }
            self.advance();
        }
    }

    fn class(&mut self, name: &str) -> PResult<AstNode> {
        let start = self.start();
        self.advance();
        if matches!(&self.peek().kind, TokKind::Name(n) if n != "extends" && !is_reserved(n)) {
            self.advance();
        }
        let mut kids = Vec::new();
        if self.eat_name("extends") {
            kids.push(self.lhs()?);
        }
        self.expect("{")?;
        let mut depth = 1usize;
        while depth > 0 {
            if self.at_eof() {
                return self.err("unterminated class body");
            }
            if self.at("{") {
                depth += 1;
            } else if self.at("}") {
                depth -= 1;
            }
            self.advance();
        }
        Ok(self.opaque(name, start, kids))
    }

    // ---- functions ----

    fn function(&mut self, is_decl: bool) -> PResult<AstNode> {
        let start = self.start();
        self.advance();
        let generator = self.eat("*");
        let mut kids = Vec::new();
        let mut name = None;
        if matches!(&self.peek().kind, TokKind::Name(n) if !is_reserved(n)) {
            let id = self.identifier()?;
            name = id.value.clone();
            kids.push(id);
        } else if is_decl {
            return self.err("function declaration requires a name");
        }
        kids.extend(self.params()?);
        kids.push(self.function_body()?);
        let kind = if is_decl {
            NodeKind::FunctionDeclaration
        } else {
            NodeKind::FunctionExpression
        };
        let mut f = self.node(kind, start).with_children(kids);
        f.value = name;
        if generator {
            return Ok(self.opaque("GeneratorFunction", start, vec![f]));
        }
        Ok(f)
    }

    fn params(&mut self) -> PResult<Vec<AstNode>> {
        self.expect("(")?;
        let mut out = Vec::new();
        while !self.at(")") {
            let start = self.start();
            if self.eat("...") {
                let t = self.binding_target()?;
                out.push(self.opaque("RestElement", start, vec![t]));
            } else {
                let t = self.binding_target()?;
                if self.eat("=") {
                    let d = self.assign(false)?;
                    out.push(self.opaque("AssignmentPattern", start, vec![t, d]));
                } else {
                    out.push(t);
                }
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(out)
    }

    fn function_body(&mut self) -> PResult<AstNode> {
        self.block()
    }

    /// `(a, b) =>` lookahead starting at the token index of `(`.
    fn is_arrow_params_at(&self, idx: usize) -> bool {
        if !self.toks.get(idx).is_some_and(|t| t.is_punct("(")) {
            return false;
        }
        let mut depth = 0usize;
        for j in idx..self.toks.len() {
            let t = &self.toks[j];
            match &t.kind {
                TokKind::Punct("(" | "[" | "{") => depth += 1,
                TokKind::Punct(")" | "]" | "}") => {
                    depth -= 1;
                    if depth == 0 {
                        return self
                            .toks
                            .get(j + 1)
                            .is_some_and(|n| n.is_punct("=>") && !n.newline_before);
                    }
                }
                TokKind::Eof => return false,
                _ => {}
            }
        }
        false
    }

    fn arrow(&mut self) -> PResult<AstNode> {
        let start = self.start();
        let mut kids = if self.at("(") {
            self.params()?
        } else {
            vec![self.identifier()?]
        };
        self.expect("=>")?;
        kids.push(if self.at("{") {
            self.function_body()?
        } else {
            self.assign(false)?
        });
        Ok(self.node(NodeKind::ArrowFunctionExpression, start).with_children(kids))
    }

    // ---- expressions ----

    fn expression(&mut self, no_in: bool) -> PResult<AstNode> {
        let start = self.start();
        let first = self.assign(no_in)?;
        if !self.at(",") {
            return Ok(first);
        }
        let mut kids = vec![first];
        while self.eat(",") {
            kids.push(self.assign(no_in)?);
        }
        Ok(self.node(NodeKind::SequenceExpression, start).with_children(kids))
    }

    fn assign(&mut self, no_in: bool) -> PResult<AstNode> {
        self.guarded(|p| p.assign_inner(no_in))
    }

    fn assign_inner(&mut self, no_in: bool) -> PResult<AstNode> {
        let start = self.start();
        let t0 = self.peek().clone();
        let t1 = self.peek_n(1).clone();
        if let TokKind::Name(n) = &t0.kind {
            if !is_reserved(n) && t1.is_punct("=>") && !t1.newline_before {
                return self.arrow();
            }
            if n == "async" && !t1.newline_before {
                let t2 = self.peek_n(2);
                let simple = matches!(&t1.kind, TokKind::Name(m) if !is_reserved(m)) && t2.is_punct("=>");
                if simple || self.is_arrow_params_at(self.i + 1) {
                    self.advance();
                    let a = self.arrow()?;
                    return Ok(self.opaque("AsyncArrowFunction", start, vec![a]));
                }
            }
        }
        if t0.is_punct("(") && self.is_arrow_params_at(self.i) {
            return self.arrow();
        }
        let left = self.conditional(no_in)?;
        let op = match &self.peek().kind {
            TokKind::Punct(p) if ASSIGN_OPS.contains(p) => *p,
            _ => return Ok(left),
        };
        let left = match left.kind {
            NodeKind::Identifier | NodeKind::MemberExpression | NodeKind::Opaque => left,
            NodeKind::ObjectExpression if op == "=" => self.opaque("ObjectPattern", start, vec![left]),
            NodeKind::ArrayExpression if op == "=" => self.opaque("ArrayPattern", start, vec![left]),
            _ => return self.err("invalid assignment target"),
        };
        self.advance();
        let right = self.assign(no_in)?;
        Ok(self
            .node(NodeKind::AssignmentExpression, start)
            .with_value(op)
            .with_children(vec![left, right]))
    }

    fn conditional(&mut self, no_in: bool) -> PResult<AstNode> {
        let start = self.start();
        let test = self.binary(1, no_in)?;
        if !self.eat("?") {
            return Ok(test);
        }
        let cons = self.assign(false)?;
        self.expect(":")?;
        let alt = self.assign(no_in)?;
        Ok(self
            .node(NodeKind::ConditionalExpression, start)
            .with_children(vec![test, cons, alt]))
    }

    fn binop(&self, no_in: bool) -> Option<(u8, &'static str, bool)> {
        let (prec, op) = match &self.peek().kind {
            TokKind::Punct(p) => (
                match *p {
                    "??" => 1,
                    "||" => 2,
                    "&&" => 3,
                    "|" => 4,
                    "^" => 5,
                    "&" => 6,
                    "==" | "!=" | "===" | "!==" => 7,
                    "<" | ">" | "<=" | ">=" => 8,
                    "<<" | ">>" | ">>>" => 9,
                    "+" | "-" => 10,
                    "*" | "/" | "%" => 11,
                    "**" => 12,
                    _ => return None,
                },
                *p,
            ),
            TokKind::Name(n) if n == "instanceof" => (8, "instanceof"),
            TokKind::Name(n) if n == "in" && !no_in => (8, "in"),
            _ => return None,
        };
        Some((prec, op, matches!(op, "??" | "||" | "&&")))
    }

    fn binary(&mut self, min_prec: u8, no_in: bool) -> PResult<AstNode> {
        let start = self.start();
        let mut left = self.unary()?;
        while let Some((prec, op, logical)) = self.binop(no_in) {
            if prec < min_prec {
                break;
            }
            self.advance();
            let next_min = if op == "**" { prec } else { prec + 1 };
            let right = self.guarded(|p| p.binary(next_min, no_in))?;
            let kind = if logical {
                NodeKind::LogicalExpression
            } else {
                NodeKind::BinaryExpression
            };
            left = self.node(kind, start).with_value(op).with_children(vec![left, right]);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<AstNode> {
        self.guarded(|p| p.unary_inner())
    }

    fn unary_inner(&mut self) -> PResult<AstNode> {
        let start = self.start();
        let op: Option<&'static str> = match &self.peek().kind {
            TokKind::Punct(p @ ("!" | "~" | "+" | "-")) => Some(*p),
            TokKind::Name(n) if n == "typeof" => Some("typeof"),
            TokKind::Name(n) if n == "void" => Some("void"),
            TokKind::Name(n) if n == "delete" => Some("delete"),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let arg = self.unary()?;
            return Ok(self
                .node(NodeKind::UnaryExpression, start)
                .with_value(op)
                .with_children(vec![arg]));
        }
        if self.at("++") || self.at("--") {
            let op = if self.at("++") { "++" } else { "--" };
            self.advance();
            let arg = self.unary()?;
            return Ok(self
                .node(NodeKind::UpdateExpression, start)
                .with_value(op)
                .with_children(vec![arg]));
        }
        if self.at_name("await") {
            let n = self.peek_n(1);
            let operand = matches!(
                n.kind,
                TokKind::Name(_) | TokKind::Num(_) | TokKind::Str(_) | TokKind::Template { .. }
            );
            if operand && !n.newline_before {
                self.advance();
                let arg = self.unary()?;
                return Ok(self.opaque("AwaitExpression", start, vec![arg]));
            }
        }
        let e = self.lhs()?;
        if (self.at("++") || self.at("--")) && !self.peek().newline_before {
            let op = if self.at("++") { "++" } else { "--" };
            self.advance();
            return Ok(self
                .node(NodeKind::UpdateExpression, start)
                .with_value(op)
                .with_children(vec![e]));
        }
        Ok(e)
    }

    fn lhs(&mut self) -> PResult<AstNode> {
        let start = self.start();
        let base = if self.at_name("new") {
            self.new_expression()?
        } else {
            self.primary()?
        };
        self.member_tail(base, start, true)
    }

    fn new_expression(&mut self) -> PResult<AstNode> {
        self.guarded(|p| {
            let start = p.start();
            p.advance();
            if p.eat(".") {
                p.identifier()?;
                return Ok(p.opaque("MetaProperty", start, Vec::new()));
            }
            let cstart = p.start();
            let base = if p.at_name("new") {
                p.new_expression()?
            } else {
                p.primary()?
            };
            let callee = p.member_tail(base, cstart, false)?;
            let mut kids = vec![callee];
            if p.at("(") {
                kids.extend(p.arguments()?);
            }
            Ok(p.node(NodeKind::NewExpression, start).with_children(kids))
        })
    }

    fn property_name(&mut self) -> PResult<AstNode> {
        let start = self.start();
        match &self.peek().kind {
            TokKind::Name(n) => {
                let n = n.clone();
                self.advance();
                Ok(self.node(NodeKind::Identifier, start).with_value(n))
            }
            _ => self.unexpected(),
        }
    }

    fn member_tail(&mut self, mut e: AstNode, start: Position, allow_call: bool) -> PResult<AstNode> {
        let mut optional = false;
        loop {
            if self.eat(".") {
                let prop = self.property_name()?;
                e = self
                    .node(NodeKind::MemberExpression, start)
                    .with_children(vec![e, prop]);
            } else if allow_call && self.at("?.") {
                self.advance();
                optional = true;
                if self.at("(") {
                    let mut kids = vec![e];
                    kids.extend(self.arguments()?);
                    e = self.node(NodeKind::CallExpression, start).with_children(kids);
                } else if self.eat("[") {
                    let prop = self.expression(false)?;
                    self.expect("]")?;
                    e = self
                        .node(NodeKind::MemberExpression, start)
                        .with_value("computed")
                        .with_children(vec![e, prop]);
                } else {
                    let prop = self.property_name()?;
                    e = self
                        .node(NodeKind::MemberExpression, start)
                        .with_children(vec![e, prop]);
                }
            } else if self.eat("[") {
                let prop = self.expression(false)?;
                self.expect("]")?;
                e = self
                    .node(NodeKind::MemberExpression, start)
                    .with_value("computed")
                    .with_children(vec![e, prop]);
            } else if allow_call && self.at("(") {
                let mut kids = vec![e];
                kids.extend(self.arguments()?);
                e = self.node(NodeKind::CallExpression, start).with_children(kids);
            } else if matches!(self.peek().kind, TokKind::Template { .. }) {
                self.advance();
                e = self.opaque("TaggedTemplateExpression", start, vec![e]);
            } else {
                break;
            }
        }
        if optional {
            e = self.opaque("ChainExpression", start, vec![e]);
        }
        Ok(e)
    }

    fn arguments(&mut self) -> PResult<Vec<AstNode>> {
        self.expect("(")?;
        let mut out = Vec::new();
        while !self.at(")") {
            out.push(self.spread_or_assign()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(out)
    }

    fn spread_or_assign(&mut self) -> PResult<AstNode> {
        let start = self.start();
        if self.eat("...") {
            let a = self.assign(false)?;
            return Ok(self.opaque("SpreadElement", start, vec![a]));
        }
        self.assign(false)
    }

    fn primary(&mut self) -> PResult<AstNode> {
        let start = self.start();
        let tok = self.peek().clone();
        match tok.kind {
            TokKind::Name(n) => match n.as_str() {
                "function" => self.function(false),
                "async" if self.peek_n(1).is_name("function") && !self.peek_n(1).newline_before => {
                    self.advance();
                    let f = self.function(false)?;
                    Ok(self.opaque("AsyncFunction", start, vec![f]))
                }
                "class" => self.class("ClassExpression"),
                "this" => {
                    self.advance();
                    Ok(self.node(NodeKind::ThisExpression, start))
                }
                "null" | "true" | "false" => {
                    self.advance();
                    Ok(self.node(NodeKind::Literal, start).with_value(n))
                }
                "super" => {
                    self.advance();
                    Ok(self.opaque("Super", start, Vec::new()))
                }
                _ if is_reserved(&n) => self.unexpected(),
                _ => {
                    self.advance();
                    Ok(self.node(NodeKind::Identifier, start).with_value(n))
                }
            },
            TokKind::Num(raw) | TokKind::Regex(raw) => {
                self.advance();
                Ok(self.node(NodeKind::Literal, start).with_value(raw))
            }
            TokKind::Str(s) => {
                self.advance();
                Ok(self.node(NodeKind::Literal, start).with_value(s))
            }
            TokKind::Template { exprs } => {
                self.advance();
                let mut kids = Vec::new();
                for (s, e, at) in exprs {
                    kids.push(self.template_expression(s, e, at));
                }
                Ok(self.node(NodeKind::TemplateLiteral, start).with_children(kids))
            }
            TokKind::Punct("(") => {
                self.advance();
                let e = self.expression(false)?;
                self.expect(")")?;
                Ok(e)
            }
            TokKind::Punct("[") => self.array(),
            TokKind::Punct("{") => self.object(),
            _ => self.unexpected(),
        }
    }

    fn template_expression(&mut self, s: usize, e: usize, at: Position) -> AstNode {
        let error_node = |this: &mut Self, message: String, pos: Position| {
            this.diagnostics.push(ParseDiagnostic {
                message,
                line: pos.line,
                column: pos.column,
            });
            *this.opaque.entry("Error".into()).or_insert(0) += 1;
            AstNode::new(NodeKind::Opaque, Span::new(at, at)).with_value("Error")
        };
        let (toks, diags) = match Lexer::new_range(self.src, s, e, at).tokenize() {
            Ok(r) => r,
            Err(err) => return error_node(self, err.to_string(), at),
        };
        self.diagnostics.extend(diags);
        let mut sub = Parser::new(self.src, toks, self.depth);
        let result = sub
            .expression(false)
            .and_then(|n| if sub.at_eof() { Ok(n) } else { sub.unexpected() });
        self.diagnostics.append(&mut sub.diagnostics);
        for (k, v) in std::mem::take(&mut sub.opaque) {
            *self.opaque.entry(k).or_insert(0) += v;
        }
        match result {
            Ok(n) => n,
            Err(err) => error_node(self, err.message, err.at),
        }
    }

    fn array(&mut self) -> PResult<AstNode> {
        let start = self.start();
        self.expect("[")?;
        let mut kids = Vec::new();
        while !self.at("]") {
            if self.eat(",") {
                continue;
            }
            kids.push(self.spread_or_assign()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("]")?;
        Ok(self.node(NodeKind::ArrayExpression, start).with_children(kids))
    }

    fn object(&mut self) -> PResult<AstNode> {
        let start = self.start();
        self.expect("{")?;
        let mut kids = Vec::new();
        while !self.at("}") {
            kids.push(self.guarded(|p| p.property())?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(self.node(NodeKind::ObjectExpression, start).with_children(kids))
    }

    /// Returns the key node and its static name.
    fn property_key(&mut self) -> PResult<(AstNode, Option<String>)> {
        let start = self.start();
        match self.peek().kind.clone() {
            TokKind::Name(n) => {
                self.advance();
                Ok((self.node(NodeKind::Identifier, start).with_value(n.clone()), Some(n)))
            }
            TokKind::Str(s) => {
                self.advance();
                Ok((self.node(NodeKind::Literal, start).with_value(s.clone()), Some(s)))
            }
            TokKind::Num(raw) => {
                self.advance();
                let name = raw
                    .parse::<f64>()
                    .map(|v| v.to_string())
                    .unwrap_or_else(|_| raw.clone());
                Ok((self.node(NodeKind::Literal, start).with_value(raw), Some(name)))
            }
            TokKind::Punct("[") => {
                self.advance();
                let k = self.assign(false)?;
                self.expect("]")?;
                Ok((k, None))
            }
            _ => self.unexpected(),
        }
    }

    fn is_key_start(t: &Token) -> bool {
        matches!(t.kind, TokKind::Name(_) | TokKind::Str(_) | TokKind::Num(_)) || t.is_punct("[")
    }

    fn method(&mut self) -> PResult<AstNode> {
        let start = self.start();
        let mut kids = self.params()?;
        kids.push(self.function_body()?);
        Ok(self.node(NodeKind::FunctionExpression, start).with_children(kids))
    }

    fn property(&mut self) -> PResult<AstNode> {
        let start = self.start();
        if self.eat("...") {
            let a = self.assign(false)?;
            return Ok(self.opaque("SpreadElement", start, vec![a]));
        }
        if self.eat("*") {
            let (key, _) = self.property_key()?;
            let m = self.method()?;
            return Ok(self.opaque("GeneratorMethod", start, vec![key, m]));
        }
        let next = self.peek_n(1).clone();
        if self.at_name("async") && Self::is_key_start(&next) && !next.newline_before {
            self.advance();
            let (key, _) = self.property_key()?;
            let m = self.method()?;
            return Ok(self.opaque("AsyncMethod", start, vec![key, m]));
        }
        if (self.at_name("get") || self.at_name("set")) && Self::is_key_start(&next) {
            self.advance();
            let (key, name) = self.property_key()?;
            let m = self.method()?;
            let mut p = self.node(NodeKind::Property, start).with_children(vec![key, m]);
            p.value = name;
            return Ok(p);
        }
        let ident_key = matches!(self.peek().kind, TokKind::Name(_));
        let (key, name) = self.property_key()?;
        let value = if self.eat(":") {
            self.assign(false)?
        } else if self.at("(") {
            self.method()?
        } else if ident_key && (self.at(",") || self.at("}")) {
            key.clone()
        } else if ident_key && self.at("=") {
            let vstart = key.span.start;
            self.advance();
            let d = self.assign(false)?;
            self.opaque("AssignmentPattern", vstart, vec![key.clone(), d])
        } else {
            return self.unexpected();
        };
        let mut p = self.node(NodeKind::Property, start).with_children(vec![key, value]);
        p.value = name;
        Ok(p)
    }
}

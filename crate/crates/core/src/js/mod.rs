//! JavaScript front end: tokenizer, recovering parser and ESTree importer.
//!
//! The parser covers ES5 plus arrow functions, shorthand properties and
//! template literals. Anything else parses into [`NodeKind::Opaque`] nodes
//! and is counted in [`Parsed::opaque`].

pub mod ast;
mod estree;
mod lexer;
mod parser;

use serde::Serialize;
use std::collections::BTreeMap;

pub use ast::{AstNode, FunctionParts, NodeKind, Position, Span};
pub use estree::import_estree;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JsError {
    #[error("fatal syntax error at {line}:{column}: {message}")]
    FatalSyntax { message: String, line: u32, column: u32 },
    #[error("not an ESTree document: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub message: String,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub ast: AstNode,
    pub diagnostics: Vec<ParseDiagnostic>,
    /// Opaque node counts by construct name; `Error` counts recovered
    /// statement-level syntax errors.
    pub opaque: BTreeMap<String, usize>,
}

impl Parsed {
    pub fn error_count(&self) -> usize {
        self.opaque.get("Error").copied().unwrap_or(0)
    }
}

/// Parses a script. Only unterminated comments, templates and regular
/// expressions are fatal; other errors are recovered at statement level.
pub fn parse_js(source: &str) -> Result<Parsed, JsError> {
    // Deeply nested inputs recurse; give the parser a roomy stack.
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(64 << 20)
            .spawn_scoped(s, || parser::parse_program(source))
            .expect("spawn parser thread")
            .join()
            .unwrap_or_else(|_| {
                Err(JsError::FatalSyntax {
                    message: "parser aborted".into(),
                    line: 0,
                    column: 0,
                })
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sx(src: &str) -> String {
        parse_js(src).unwrap().ast.sexpr()
    }

    #[test]
    fn var_declaration() {
        assert_eq!(
            sx("var a = 1"),
            "Program[VariableDeclaration[VariableDeclarator[Identifier(a) Literal(1)]]]"
        );
    }

    #[test]
    fn push_call() {
        assert_eq!(
            sx("a.push(b)"),
            "Program[ExpressionStatement[CallExpression[MemberExpression[Identifier(a) Identifier(push)] Identifier(b)]]]"
        );
    }

    #[test]
    fn callback_is_property_function() {
        let p = parse_js("wx.chooseLocation({success: function(t){ e.setData({location: t}) }})").unwrap();
        let call = &p.ast.children[0].children[0];
        assert_eq!(call.kind, NodeKind::CallExpression);
        let obj = &call.children[1];
        assert_eq!(obj.kind, NodeKind::ObjectExpression);
        assert_eq!(obj.children[0].kind, NodeKind::Property);
        assert_eq!(obj.children[0].value.as_deref(), Some("success"));
        assert_eq!(obj.children[0].children[1].kind, NodeKind::FunctionExpression);
        assert!(p.diagnostics.is_empty());
    }

    #[test]
    fn arrow_and_template() {
        let s = sx("const f = (a, b) => `${a}-${b + 1}`;");
        assert!(s.contains(
            "ArrowFunctionExpression[Identifier(a) Identifier(b) TemplateLiteral[Identifier(a) BinaryExpression"
        ));
    }

    #[test]
    fn unsupported_constructs_are_opaque() {
        let p = parse_js("class A { m() {} }\nasync function f() { await g(); }\nvar x = 1;").unwrap();
        assert_eq!(p.opaque.get("ClassDeclaration"), Some(&1));
        assert_eq!(p.opaque.get("AsyncFunction"), Some(&1));
        assert_eq!(p.ast.children.len(), 3);
    }

    #[test]
    fn recovers_from_statement_errors() {
        let p = parse_js("var a = ;\nfunction f(){ x y; return 1 }\nvar b = 2;").unwrap();
        assert_eq!(p.error_count(), 2);
        let last = p.ast.children.last().unwrap();
        assert_eq!(last.kind, NodeKind::VariableDeclaration);
        assert!(!p.diagnostics.is_empty());
    }

    #[test]
    fn truncated_input_does_not_panic() {
        let p = parse_js("Page({ onLoad: function() { wx.getLocation({ success: function(r) {").unwrap();
        assert!(p.error_count() >= 1);
        assert!(matches!(parse_js("var s = `abc"), Err(JsError::FatalSyntax { .. })));
    }

    #[test]
    fn asi_and_regex() {
        let p = parse_js("var a = b\nvar r = /re/g.test(c)\nx = a / 2 / r").unwrap();
        assert_eq!(p.error_count(), 0);
        assert_eq!(p.ast.children.len(), 3);
        let q = parse_js("x = 1\n++y").unwrap();
        assert_eq!(q.ast.children.len(), 2);
    }

    #[test]
    fn spans_nest() {
        let p = parse_js("function f(a){ return {k: [a, 2], m: () => a + 1}; }").unwrap();
        fn check(n: &AstNode) {
            for c in &n.children {
                assert!(n.span.contains(&c.span), "{:?} !⊇ {:?}", n.kind, c.kind);
                check(c);
            }
        }
        check(&p.ast);
    }

    #[test]
    fn deep_nesting_is_bounded() {
        let src = format!("x = {}1{};", "(".repeat(5000), ")".repeat(5000));
        let p = parse_js(&src).unwrap();
        assert!(p.error_count() >= 1);
    }
}

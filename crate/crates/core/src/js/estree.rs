use super::ast::{AstNode, NodeKind, Position, Span};
use super::JsError;
use serde_json::Value;

/// Child fields in ESTree order for each supported kind.
fn fields(kind: NodeKind) -> &'static [&'static str] {
    use NodeKind::*;
    match kind {
        Program | BlockStatement => &["body"],
        VariableDeclaration => &["declarations"],
        VariableDeclarator => &["id", "init"],
        FunctionDeclaration | FunctionExpression => &["id", "params", "body"],
        ArrowFunctionExpression => &["params", "body"],
        AssignmentExpression | LogicalExpression | BinaryExpression => &["left", "right"],
        CallExpression | NewExpression => &["callee", "arguments"],
        MemberExpression => &["object", "property"],
        ObjectExpression => &["properties"],
        Property => &["key", "value"],
        ReturnStatement | ThrowStatement | UnaryExpression | UpdateExpression => &["argument"],
        ConditionalExpression | IfStatement => &["test", "consequent", "alternate"],
        SequenceExpression | TemplateLiteral => &["expressions"],
        ArrayExpression => &["elements"],
        ForStatement => &["init", "test", "update", "body"],
        ForInStatement | ForOfStatement => &["left", "right", "body"],
        WhileStatement => &["test", "body"],
        DoWhileStatement => &["body", "test"],
        ExpressionStatement => &["expression"],
        BreakStatement | ContinueStatement => &["label"],
        TryStatement => &["block", "handler", "finalizer"],
        CatchClause => &["param", "body"],
        SwitchStatement => &["discriminant", "cases"],
        SwitchCase => &["test", "consequent"],
        LabeledStatement => &["label", "body"],
        Identifier | Literal | ThisExpression | EmptyStatement | DebuggerStatement | Opaque => &[],
    }
}

fn schema(msg: impl Into<String>) -> JsError {
    JsError::Schema(msg.into())
}

fn position(v: &Value, which: &str, range_idx: usize) -> Position {
    let loc = &v["loc"][which];
    Position {
        line: loc["line"].as_u64().unwrap_or(0) as u32,
        column: loc["column"].as_u64().unwrap_or(0) as u32,
        offset: v["range"][range_idx].as_u64().unwrap_or(0) as usize,
    }
}

fn literal_text(v: &Value) -> Option<String> {
    match &v["value"] {
        Value::String(s) => Some(s.clone()),
        _ => v["raw"].as_str().map(str::to_string),
    }
}

fn key_name(key: &Value) -> Option<String> {
    match key["type"].as_str()? {
        "Identifier" => key["name"].as_str().map(str::to_string),
        "Literal" => match &key["value"] {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => n.as_f64().map(|f| f.to_string()),
            other => Some(other.to_string()),
        },
        _ => None,
    }
}

fn convert(v: &Value) -> Result<AstNode, JsError> {
    let ty = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("node without a string \"type\""))?;
    let span = Span::new(position(v, "start", 0), position(v, "end", 1));
    let Some(kind) = NodeKind::from_estree(ty) else {
        return Ok(AstNode::new(NodeKind::Opaque, span).with_value(ty));
    };
    let mut children = Vec::new();
    for f in fields(kind) {
        match &v[*f] {
            Value::Null => {}
            Value::Array(items) => {
                for it in items.iter().filter(|it| !it.is_null()) {
                    children.push(convert(it)?);
                }
            }
            obj @ Value::Object(_) => children.push(convert(obj)?),
            other => return Err(schema(format!("{ty}.{f}: unexpected {other}"))),
        }
    }
    let value = match kind {
        NodeKind::Identifier => {
            let n = v["name"].as_str().filter(|n| !n.is_empty());
            Some(n.ok_or_else(|| schema("Identifier without a name"))?.to_string())
        }
        NodeKind::Literal => literal_text(v),
        NodeKind::AssignmentExpression
        | NodeKind::LogicalExpression
        | NodeKind::BinaryExpression
        | NodeKind::UnaryExpression
        | NodeKind::UpdateExpression => v["operator"].as_str().map(str::to_string),
        NodeKind::MemberExpression => v["computed"].as_bool().filter(|c| *c).map(|_| "computed".into()),
        NodeKind::Property => {
            if v["computed"].as_bool() == Some(true) {
                None
            } else {
                key_name(&v["key"])
            }
        }
        NodeKind::FunctionDeclaration | NodeKind::FunctionExpression => v["id"]["name"].as_str().map(str::to_string),
        NodeKind::VariableDeclaration => v["kind"].as_str().map(str::to_string),
        _ => None,
    };
    let node = AstNode {
        kind,
        span,
        value,
        children,
    };
    let wrapper = if v["generator"].as_bool() == Some(true) {
        Some("GeneratorFunction")
    } else if v["async"].as_bool() == Some(true) {
        Some(if kind == NodeKind::ArrowFunctionExpression {
            "AsyncArrowFunction"
        } else {
            "AsyncFunction"
        })
    } else {
        None
    };
    Ok(match wrapper {
        Some(w) => AstNode::new(NodeKind::Opaque, span)
            .with_value(w)
            .with_children(vec![node]),
        None => node,
    })
}

/// Maps an ESTree JSON document onto [`AstNode`]. Unknown node kinds become
/// childless `Opaque` nodes named after the ESTree type. Template quasis are
/// dropped; a `TemplateLiteral` keeps only its expressions.
pub fn import_estree(json_text: &str) -> Result<AstNode, JsError> {
    let v: Value = serde_json::from_str(json_text).map_err(|e| schema(e.to_string()))?;
    if v.get("type").and_then(Value::as_str) != Some("Program") {
        return Err(schema("root node is not a Program"));
    }
    convert(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn program_with_var() {
        let doc = r#"{"type":"Program","body":[{"type":"VariableDeclaration","kind":"var",
            "declarations":[{"type":"VariableDeclarator","id":{"type":"Identifier","name":"a"},
            "init":{"type":"Literal","value":1,"raw":"1"}}]}],"sourceType":"script"}"#;
        let ast = import_estree(doc).unwrap();
        assert_eq!(
            ast.sexpr(),
            "Program[VariableDeclaration[VariableDeclarator[Identifier(a) Literal(1)]]]"
        );
    }

    #[test]
    fn non_program_root_is_schema_error() {
        assert!(matches!(
            import_estree(r#"{"type":"Identifier","name":"x"}"#),
            Err(JsError::Schema(_))
        ));
        assert!(matches!(import_estree("[1,2]"), Err(JsError::Schema(_))));
        assert!(matches!(import_estree("not json"), Err(JsError::Schema(_))));
    }

    #[test]
    fn unknown_kind_is_opaque() {
        let doc = r#"{"type":"Program","body":[{"type":"ClassDeclaration","id":null,"body":{}}]}"#;
        let ast = import_estree(doc).unwrap();
        assert_eq!(ast.children[0].kind, NodeKind::Opaque);
        assert_eq!(ast.children[0].value.as_deref(), Some("ClassDeclaration"));
    }
}

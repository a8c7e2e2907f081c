use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed markup at {line}:{column}: {message}")]
pub struct MalformedMarkup {
    pub message: String,
    pub line: u32,
    pub column: u32,
}

/// A component in a layout file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayoutNode {
    pub tag: String,
    /// Attributes in source order. A repeated name keeps its first value.
    pub attrs: Vec<(String, String)>,
    /// Direct text children, whitespace-collapsed and joined by a space.
    pub text: String,
    pub children: Vec<LayoutNode>,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LayoutTree {
    pub roots: Vec<LayoutNode>,
    /// Recovered problems (stray closing tags, unclosed elements).
    pub warnings: Vec<String>,
}

/// Event binding attribute prefixes, longest first.
const BINDING_PREFIXES: &[&str] = &[
    "capture-catch:",
    "capture-bind:",
    "mut-bind:",
    "catch:",
    "bind:",
    "catch",
    "bind",
];

/// Elements that never have content.
const VOID_TAGS: &[&str] = &[
    "input", "image", "icon", "import", "include", "img", "br", "hr", "meta", "link",
];

/// Elements whose content is not markup.
const RAW_TAGS: &[&str] = &["wxs", "script", "style"];

impl LayoutNode {
    fn new(tag: String, line: u32, column: u32) -> Self {
        LayoutNode {
            tag,
            attrs: Vec::new(),
            text: String::new(),
            children: Vec::new(),
            line,
            column,
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    /// Event name to handler name, e.g. `bindtap="f"` gives `("tap", "f")`.
    /// Bindings whose value is an expression (`{{...}}`) are skipped.
    pub fn bindings(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (k, v) in &self.attrs {
            let Some(event) = BINDING_PREFIXES
                .iter()
                .find_map(|p| k.strip_prefix(p))
                .filter(|e| !e.is_empty())
            else {
                continue;
            };
            let handler = v.trim();
            if handler.is_empty() || handler.contains("{{") {
                continue;
            }
            out.push((event.to_string(), handler.to_string()));
        }
        out
    }

    /// Own text followed by every descendant's text in document order.
    pub fn subtree_text(&self) -> String {
        let mut parts = Vec::new();
        self.collect_text(&mut parts);
        parts.join(" ")
    }

    fn collect_text<'a>(&'a self, out: &mut Vec<&'a str>) {
        if !self.text.is_empty() {
            out.push(&self.text);
        }
        for c in &self.children {
            c.collect_text(out);
        }
    }

    fn write_markup(&self, out: &mut String, depth: usize) {
        out.push_str(&"  ".repeat(depth));
        out.push('<');
        out.push_str(&self.tag);
        for (k, v) in &self.attrs {
            out.push(' ');
            out.push_str(k);
            out.push_str("=\"");
            out.push_str(&escape(v, true));
            out.push('"');
        }
        if self.text.is_empty() && self.children.is_empty() {
            out.push_str("/>\n");
            return;
        }
        out.push('>');
        if self.children.is_empty() {
            out.push_str(&escape(&self.text, false));
        } else {
            out.push('\n');
            if !self.text.is_empty() {
                out.push_str(&"  ".repeat(depth + 1));
                out.push_str(&escape(&self.text, false));
                out.push('\n');
            }
            for c in &self.children {
                c.write_markup(out, depth + 1);
            }
            out.push_str(&"  ".repeat(depth));
        }
        out.push_str("</");
        out.push_str(&self.tag);
        out.push_str(">\n");
    }
}

impl LayoutTree {
    /// Preorder traversal with each node's ancestor chain (nearest last).
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a LayoutNode, &[&'a LayoutNode])) {
        fn go<'a>(
            n: &'a LayoutNode,
            anc: &mut Vec<&'a LayoutNode>,
            f: &mut dyn FnMut(&'a LayoutNode, &[&'a LayoutNode]),
        ) {
            f(n, anc);
            anc.push(n);
            for c in &n.children {
                go(c, anc, f);
            }
            anc.pop();
        }
        let mut anc = Vec::new();
        for r in &self.roots {
            go(r, &mut anc, f);
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_, _| n += 1);
        n
    }

    pub fn to_markup(&self) -> String {
        let mut out = String::new();
        for r in &self.roots {
            r.write_markup(&mut out, 0);
        }
        out
    }

    /// Text of the whole document, in order.
    pub fn text(&self) -> String {
        self.roots
            .iter()
            .map(LayoutNode::subtree_text)
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn escape(s: &str, attr: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' if !attr => out.push_str("&gt;"),
            '"' if attr => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let end = rest[1..]
            .find(|c: char| c == ';' || c == '&' || c.is_whitespace())
            .map(|j| j + 1);
        let decoded = end.filter(|&j| rest.as_bytes()[j] == b';').and_then(|j| {
            let name = &rest[1..j];
            let c = match name {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ => name
                    .strip_prefix("#x")
                    .or_else(|| name.strip_prefix("#X"))
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| name.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32),
            };
            c.map(|c| (c, j + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn advance_to(&mut self, end: usize) {
        while self.pos < end {
            self.bump();
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error(&self, line: u32, column: u32, message: &str) -> MalformedMarkup {
        MalformedMarkup {
            message: message.to_string(),
            line,
            column,
        }
    }
}

fn is_name_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '<' | '>' | '/' | '=' | '"' | '\'')
}

/// Parses WXML-style markup. Unknown tags are accepted, stray closing tags
/// are dropped, unclosed elements are closed at end of input, and a bare `<`
/// that does not start a tag is treated as text. An unterminated tag,
/// comment or quoted attribute value is an error.
pub fn parse_layout(src: &str) -> Result<LayoutTree, MalformedMarkup> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut stack: Vec<LayoutNode> = Vec::new();
    let mut tree = LayoutTree::default();
    let mut text = String::new();

    fn attach(stack: &mut [LayoutNode], tree: &mut LayoutTree, node: LayoutNode) {
        match stack.last_mut() {
            Some(parent) => parent.children.push(node),
            None => tree.roots.push(node),
        }
    }
    fn flush(stack: &mut [LayoutNode], text: &mut String) {
        let t = collapse_ws(&decode_entities(text));
        text.clear();
        if t.is_empty() {
            return;
        }
        if let Some(top) = stack.last_mut() {
            if !top.text.is_empty() {
                top.text.push(' ');
            }
            top.text.push_str(&t);
        }
    }

    while let Some(c) = cur.peek() {
        if c != '<' {
            text.push(c);
            cur.bump();
            continue;
        }
        let (line, col) = (cur.line, cur.col);
        if cur.starts_with("<!--") {
            let Some(end) = src[cur.pos + 4..].find("-->") else {
                return Err(cur.error(line, col, "unterminated comment"));
            };
            flush(&mut stack, &mut text);
            cur.advance_to(cur.pos + 4 + end + 3);
            continue;
        }
        if cur.starts_with("</") {
            let start = cur.pos + 2;
            let Some(end) = src[start..].find('>') else {
                return Err(cur.error(line, col, "unterminated closing tag"));
            };
            let name = src[start..start + end].trim().to_string();
            flush(&mut stack, &mut text);
            cur.advance_to(start + end + 1);
            match stack.iter().rposition(|n| n.tag == name) {
                Some(i) => {
                    while stack.len() > i {
                        let node = stack.pop().expect("non-empty");
                        if stack.len() > i {
                            tree.warnings.push(format!(
                                "{}:{}: <{}> closed implicitly by </{}>",
                                node.line, node.column, node.tag, name
                            ));
                        }
                        attach(&mut stack, &mut tree, node);
                    }
                }
                None => tree.warnings.push(format!("{line}:{col}: stray </{name}> ignored")),
            }
            continue;
        }
        let after = src[cur.pos + 1..].chars().next();
        if !after.is_some_and(|a| a.is_alphabetic() || a == '_' || a == '!' || a == '?') {
            text.push('<');
            cur.bump();
            continue;
        }
        if matches!(after, Some('!') | Some('?')) {
            let Some(end) = src[cur.pos..].find('>') else {
                return Err(cur.error(line, col, "unterminated declaration"));
            };
            cur.advance_to(cur.pos + end + 1);
            continue;
        }

        flush(&mut stack, &mut text);
        cur.bump();
        let name_start = cur.pos;
        while cur.peek().is_some_and(is_name_char) {
            cur.bump();
        }
        let mut node = LayoutNode::new(src[name_start..cur.pos].to_string(), line, col);
        let mut self_closing = false;
        loop {
            cur.skip_ws();
            match cur.peek() {
                None => return Err(cur.error(line, col, "unterminated tag")),
                Some('>') => {
                    cur.bump();
                    break;
                }
                Some('/') => {
                    cur.bump();
                    if cur.peek() == Some('>') {
                        cur.bump();
                        self_closing = true;
                        break;
                    }
                }
                Some('<') => {
                    tree.warnings.push(format!("{line}:{col}: <{}> missing '>'", node.tag));
                    break;
                }
                Some(_) => {
                    let k_start = cur.pos;
                    while cur.peek().is_some_and(is_name_char) {
                        cur.bump();
                    }
                    if cur.pos == k_start {
                        // a lone quote or '=': skip it
                        cur.bump();
                        continue;
                    }
                    let key = src[k_start..cur.pos].to_string();
                    cur.skip_ws();
                    let mut value = String::new();
                    if cur.peek() == Some('=') {
                        cur.bump();
                        cur.skip_ws();
                        match cur.peek() {
                            Some(q @ ('"' | '\'')) => {
                                let (vl, vc) = (cur.line, cur.col);
                                cur.bump();
                                let Some(end) = src[cur.pos..].find(q) else {
                                    return Err(cur.error(vl, vc, "unterminated attribute value"));
                                };
                                value = decode_entities(&src[cur.pos..cur.pos + end]);
                                cur.advance_to(cur.pos + end + 1);
                            }
                            _ => {
                                let v_start = cur.pos;
                                while cur.peek().is_some_and(|c| !c.is_whitespace() && c != '>') {
                                    if cur.starts_with("/>") {
                                        break;
                                    }
                                    cur.bump();
                                }
                                value = decode_entities(&src[v_start..cur.pos]);
                            }
                        }
                    }
                    if node.attr(&key).is_none() {
                        node.attrs.push((key, value));
                    }
                }
            }
        }

        let lower = node.tag.to_ascii_lowercase();
        if self_closing || VOID_TAGS.contains(&lower.as_str()) {
            attach(&mut stack, &mut tree, node);
        } else if RAW_TAGS.contains(&lower.as_str()) {
            let close = format!("</{}", node.tag);
            let body_end = src[cur.pos..].find(&close).map(|i| cur.pos + i);
            let end = body_end.unwrap_or(src.len());
            cur.advance_to(end);
            if body_end.is_some() {
                let gt = src[cur.pos..].find('>').map_or(src.len(), |i| cur.pos + i + 1);
                cur.advance_to(gt);
            } else {
                tree.warnings
                    .push(format!("{}:{}: <{}> never closed", node.line, node.column, node.tag));
            }
            attach(&mut stack, &mut tree, node);
        } else {
            stack.push(node);
        }
    }
    flush(&mut stack, &mut text);
    while let Some(node) = stack.pop() {
        tree.warnings
            .push(format!("{}:{}: <{}> never closed", node.line, node.column, node.tag));
        attach(&mut stack, &mut tree, node);
    }
    Ok(tree)
}

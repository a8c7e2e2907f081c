use super::ast::Position;
use super::{JsError, ParseDiagnostic};

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    /// Identifiers and keywords.
    Name(String),
    Num(String),
    /// Cooked string value.
    Str(String),
    /// Template literal: cooked quasis plus byte ranges of the `${}` bodies.
    Template {
        exprs: Vec<(usize, usize, Position)>,
    },
    Regex(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub start: Position,
    pub end: Position,
    pub newline_before: bool,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.kind, TokKind::Punct(q) if *q == p)
    }

    pub fn is_name(&self, n: &str) -> bool {
        matches!(&self.kind, TokKind::Name(m) if m == n)
    }
}

const PUNCTS: &[&str] = &[
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "??=", "=>", "==", "!=", "<=", ">=", "&&",
    "||", "??", "?.", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "**", "<<", ">>", "{", "}", "(", ")",
    "[", "]", ";", ",", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "!", "~", "?", ":", "=", ".", "@", "#",
];

/// Keywords after which a `/` starts a regular expression.
const REGEX_PREFIX_KEYWORDS: &[&str] = &[
    "return",
    "typeof",
    "instanceof",
    "in",
    "of",
    "new",
    "delete",
    "void",
    "throw",
    "case",
    "do",
    "else",
    "yield",
    "await",
];

pub struct Lexer<'s> {
    src: &'s str,
    pos: usize,
    end: usize,
    line: u32,
    line_start: usize,
    pub diagnostics: Vec<ParseDiagnostic>,
}

fn is_id_start(c: char) -> bool {
    c == '$' || c == '_' || c.is_alphabetic()
}

fn is_id_part(c: char) -> bool {
    is_id_start(c) || c.is_ascii_digit() || c == '\u{200c}' || c == '\u{200d}' || c.is_numeric()
}

impl<'s> Lexer<'s> {
    pub fn new(src: &'s str) -> Self {
        Self::new_range(
            src,
            0,
            src.len(),
            Position {
                line: 1,
                column: 0,
                offset: 0,
            },
        )
    }

    /// Lexes `src[start..end]`; positions stay absolute within `src`.
    pub fn new_range(src: &'s str, start: usize, end: usize, at: Position) -> Self {
        Lexer {
            src,
            pos: start,
            end,
            line: at.line,
            line_start: start - at.column as usize,
            diagnostics: Vec::new(),
        }
    }

    fn position(&self) -> Position {
        Position {
            line: self.line,
            column: self.src[self.line_start..self.pos].chars().count() as u32,
            offset: self.pos,
        }
    }

    fn peek_char(&self) -> Option<char> {
        if self.pos >= self.end {
            return None;
        }
        self.src[self.pos..self.end].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src.get(self.pos..self.end)?.chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        let crlf = c == '\r' && self.peek_char() == Some('\n');
        if matches!(c, '\n' | '\r' | '\u{2028}' | '\u{2029}') && !crlf {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    fn diag(&mut self, msg: impl Into<String>, at: Position) {
        self.diagnostics.push(ParseDiagnostic {
            message: msg.into(),
            line: at.line,
            column: at.column,
        });
    }

    /// Skips whitespace and comments; returns whether a line break was seen.
    fn skip_trivia(&mut self) -> Result<bool, JsError> {
        let mut newline = false;
        loop {
            match self.peek_char() {
                Some(c) if c == '\n' || c == '\r' || c == '\u{2028}' || c == '\u{2029}' => {
                    newline = true;
                    self.bump();
                }
                Some(c) if c.is_whitespace() || c == '\u{feff}' => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek_char() {
                        if c == '\n' || c == '\r' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('/') if self.peek_at(1) == Some('*') => {
                    let at = self.position();
                    self.bump();
                    self.bump();
                    loop {
                        match self.peek_char() {
                            None => {
                                return Err(JsError::FatalSyntax {
                                    message: "unterminated block comment".into(),
                                    line: at.line,
                                    column: at.column,
                                })
                            }
                            Some('*') if self.peek_at(1) == Some('/') => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            Some(c) => {
                                if c == '\n' || c == '\r' {
                                    newline = true;
                                }
                                self.bump();
                            }
                        }
                    }
                }
                _ => return Ok(newline),
            }
        }
    }

    fn regex_allowed(prev: Option<&Token>) -> bool {
        match prev.map(|t| &t.kind) {
            None => true,
            Some(TokKind::Num(_) | TokKind::Str(_) | TokKind::Template { .. } | TokKind::Regex(_)) => false,
            Some(TokKind::Name(n)) => REGEX_PREFIX_KEYWORDS.contains(&n.as_str()),
            Some(TokKind::Punct(p)) => !matches!(*p, ")" | "]" | "}" | "++" | "--"),
            Some(TokKind::Eof) => true,
        }
    }

    pub fn tokenize(mut self) -> Result<(Vec<Token>, Vec<ParseDiagnostic>), JsError> {
        let mut out: Vec<Token> = Vec::new();
        loop {
            let newline_before = self.skip_trivia()?;
            let start = self.position();
            let Some(c) = self.peek_char() else {
                out.push(Token {
                    kind: TokKind::Eof,
                    start,
                    end: start,
                    newline_before: true,
                });
                return Ok((out, self.diagnostics));
            };
            let kind = if is_id_start(c) || c == '\\' {
                self.name()
            } else if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
                self.number()
            } else if c == '"' || c == '\'' {
                self.string(c)
            } else if c == '`' {
                self.template()?
            } else if c == '/' && Self::regex_allowed(out.last()) {
                self.regex()?
            } else if let Some(p) = PUNCTS.iter().find(|p| self.src[self.pos..self.end].starts_with(**p)) {
                // `?.` followed by a digit is a conditional, not optional chaining.
                if *p == "?." && self.peek_at(2).is_some_and(|d| d.is_ascii_digit()) {
                    self.bump();
                    TokKind::Punct("?")
                } else {
                    for _ in 0..p.len() {
                        self.bump();
                    }
                    TokKind::Punct(p)
                }
            } else {
                self.bump();
                self.diag(format!("unexpected character {c:?}"), start);
                continue;
            };
            out.push(Token {
                kind,
                start,
                end: self.position(),
                newline_before,
            });
        }
    }

    fn name(&mut self) -> TokKind {
        let mut s = String::new();
        while let Some(c) = self.peek_char() {
            if c == '\\' && self.peek_at(1) == Some('u') {
                self.bump();
                self.bump();
                if let Some(ch) = self.unicode_escape() {
                    s.push(ch);
                }
            } else if is_id_part(c) {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        TokKind::Name(s)
    }

    fn number(&mut self) -> TokKind {
        let start = self.pos;
        if self.peek_char() == Some('0') && matches!(self.peek_at(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B')) {
            self.bump();
            self.bump();
            while self.peek_char().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                self.bump();
            }
        } else {
            while self.peek_char().is_some_and(|c| c.is_ascii_digit() || c == '_') {
                self.bump();
            }
            if self.peek_char() == Some('.') {
                self.bump();
                while self.peek_char().is_some_and(|c| c.is_ascii_digit() || c == '_') {
                    self.bump();
                }
            }
            if matches!(self.peek_char(), Some('e' | 'E')) {
                self.bump();
                if matches!(self.peek_char(), Some('+' | '-')) {
                    self.bump();
                }
                while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
            if self.peek_char() == Some('n') {
                self.bump();
            }
        }
        TokKind::Num(self.src[start..self.pos].to_string())
    }

    fn unicode_escape(&mut self) -> Option<char> {
        if self.peek_char() == Some('{') {
            self.bump();
            let mut hex = String::new();
            while let Some(c) = self.peek_char() {
                self.bump();
                if c == '}' {
                    break;
                }
                hex.push(c);
            }
            return u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32);
        }
        let mut hex = String::new();
        for _ in 0..4 {
            match self.peek_char() {
                Some(c) if c.is_ascii_hexdigit() => {
                    hex.push(c);
                    self.bump();
                }
                _ => break,
            }
        }
        let code = u32::from_str_radix(&hex, 16).ok()?;
        // Combine surrogate pairs written as two escapes.
        if (0xD800..0xDC00).contains(&code) && self.peek_char() == Some('\\') && self.peek_at(1) == Some('u') {
            let save = (self.pos, self.line, self.line_start);
            self.bump();
            self.bump();
            let mut lo = String::new();
            for _ in 0..4 {
                if let Some(c) = self.peek_char().filter(char::is_ascii_hexdigit) {
                    lo.push(c);
                    self.bump();
                }
            }
            if let Ok(low) = u32::from_str_radix(&lo, 16) {
                if (0xDC00..0xE000).contains(&low) {
                    return char::from_u32(0x10000 + ((code - 0xD800) << 10) + (low - 0xDC00));
                }
            }
            (self.pos, self.line, self.line_start) = save;
        }
        char::from_u32(code).or(Some('\u{fffd}'))
    }

    /// Handles the escape after a backslash; pushes the cooked char(s).
    fn escape(&mut self, out: &mut String) {
        let Some(c) = self.bump() else { return };
        match c {
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            'b' => out.push('\u{8}'),
            'f' => out.push('\u{c}'),
            'v' => out.push('\u{b}'),
            '0' if !self.peek_char().is_some_and(|d| d.is_ascii_digit()) => out.push('\0'),
            'x' => {
                let mut hex = String::new();
                for _ in 0..2 {
                    if let Some(h) = self.peek_char().filter(char::is_ascii_hexdigit) {
                        hex.push(h);
                        self.bump();
                    }
                }
                if let Some(ch) = u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    out.push(ch);
                }
            }
            'u' => {
                if let Some(ch) = self.unicode_escape() {
                    out.push(ch);
                }
            }
            '\r' => {
                if self.peek_char() == Some('\n') {
                    self.bump();
                }
            }
            '\n' | '\u{2028}' | '\u{2029}' => {}
            other => out.push(other),
        }
    }

    fn string(&mut self, quote: char) -> TokKind {
        let at = self.position();
        self.bump();
        let mut s = String::new();
        loop {
            match self.peek_char() {
                None | Some('\n') | Some('\r') => {
                    self.diag("unterminated string literal", at);
                    break;
                }
                Some(c) if c == quote => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    self.bump();
                    self.escape(&mut s);
                }
                Some(c) => {
                    s.push(c);
                    self.bump();
                }
            }
        }
        TokKind::Str(s)
    }

    fn template(&mut self) -> Result<TokKind, JsError> {
        let at = self.position();
        self.bump();
        let mut exprs = Vec::new();
        loop {
            match self.peek_char() {
                None => {
                    return Err(JsError::FatalSyntax {
                        message: "unterminated template literal".into(),
                        line: at.line,
                        column: at.column,
                    })
                }
                Some('`') => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    self.bump();
                    self.bump();
                }
                Some('$') if self.peek_at(1) == Some('{') => {
                    self.bump();
                    self.bump();
                    let inner_at = self.position();
                    let start = self.pos;
                    self.skip_balanced_braces(at)?;
                    // skip_balanced_braces stops after the closing brace
                    exprs.push((start, self.pos - 1, inner_at));
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
        Ok(TokKind::Template { exprs })
    }

    /// Advances past the `}` matching an already-consumed `{`, skipping
    /// nested strings, templates and comments.
    fn skip_balanced_braces(&mut self, at: Position) -> Result<(), JsError> {
        let mut depth = 1usize;
        loop {
            match self.peek_char() {
                None => {
                    return Err(JsError::FatalSyntax {
                        message: "unterminated template substitution".into(),
                        line: at.line,
                        column: at.column,
                    })
                }
                Some('{') => {
                    depth += 1;
                    self.bump();
                }
                Some('}') => {
                    self.bump();
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                Some(q @ ('"' | '\'')) => {
                    self.string(q);
                }
                Some('`') => {
                    self.template()?;
                }
                Some('/') if matches!(self.peek_at(1), Some('/' | '*')) => {
                    self.skip_trivia()?;
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
    }

    fn regex(&mut self) -> Result<TokKind, JsError> {
        let at = self.position();
        let start = self.pos;
        self.bump();
        let mut in_class = false;
        loop {
            match self.peek_char() {
                None | Some('\n') | Some('\r') => {
                    return Err(JsError::FatalSyntax {
                        message: "unterminated regular expression".into(),
                        line: at.line,
                        column: at.column,
                    })
                }
                Some('\\') => {
                    self.bump();
                    self.bump();
                }
                Some('[') => {
                    in_class = true;
                    self.bump();
                }
                Some(']') => {
                    in_class = false;
                    self.bump();
                }
                Some('/') if !in_class => {
                    self.bump();
                    break;
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
        while self.peek_char().is_some_and(is_id_part) {
            self.bump();
        }
        Ok(TokKind::Regex(self.src[start..self.pos].to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokKind> {
        Lexer::new(src)
            .tokenize()
            .unwrap()
            .0
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn strings_are_cooked() {
        assert_eq!(
            kinds(r#"'a\'b' "\x41B""#)[..2],
            [TokKind::Str("a'b".into()), TokKind::Str("AB".into())]
        );
    }

    #[test]
    fn regex_vs_division() {
        let k = kinds("a = b / c; d = /x+/g.test(e)");
        assert!(k.contains(&TokKind::Punct("/")));
        assert!(k.contains(&TokKind::Regex("/x+/g".into())));
    }

    #[test]
    fn template_substitutions_recorded() {
        let k = kinds("`a${b + `c${d}`}e`");
        match &k[0] {
            TokKind::Template { exprs } => assert_eq!(exprs.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unterminated_comment_is_fatal() {
        assert!(matches!(
            Lexer::new("a /* b").tokenize(),
            Err(JsError::FatalSyntax { .. })
        ));
    }

    #[test]
    fn newline_flag_and_positions() {
        let (toks, _) = Lexer::new("a\n  b").tokenize().unwrap();
        assert!(toks[1].newline_before);
        assert_eq!((toks[1].start.line, toks[1].start.column), (2, 2));
    }
}

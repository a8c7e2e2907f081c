//! Text normalization and tokenization shared by the lexicon, the UI label
//! matcher and the policy pipeline.
//!
//! Normalization folds full-width ASCII forms to half-width, maps the
//! ideographic space to a plain space and lowercases ASCII letters. Other
//! characters are kept verbatim.

/// Returns true for characters written without word separators (CJK
/// ideographs, kana, hangul). These are tokenized one character at a time.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF     // hiragana, katakana
        | 0x3400..=0x4DBF   // CJK extension A
        | 0x4E00..=0x9FFF   // CJK unified ideographs
        | 0xAC00..=0xD7AF   // hangul syllables
        | 0xF900..=0xFAFF   // compatibility ideographs
        | 0x20000..=0x2FA1F)
}

pub fn contains_cjk(s: &str) -> bool {
    s.chars().any(is_cjk)
}

fn fold_char(c: char) -> char {
    match c as u32 {
        0xFF01..=0xFF5E => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        0x3000 => ' ',
        _ => c,
    }
}

/// Full-width folding plus ASCII lowercasing.
pub fn normalize(s: &str) -> String {
    s.chars().map(|c| fold_char(c).to_ascii_lowercase()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    /// A single CJK character.
    Cjk,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Byte range in the normalized string.
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    (c.is_alphanumeric() && !is_cjk(c)) || c == '_'
}

/// Tokenizes already-normalized text. Words are runs of alphanumerics where
/// a single inner `-` or `'` joins two runs ("third-party", "driver's").
pub fn tokenize_normalized(s: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if is_cjk(c) {
            out.push(Token {
                text: c.to_string(),
                kind: TokenKind::Cjk,
                start,
                end: start + c.len_utf8(),
            });
            i += 1;
        } else if is_word_char(c) {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                if is_word_char(cj) {
                    j += 1;
                } else if (cj == '-' || cj == '\'' || cj == '\u{2019}')
                    && j + 1 < chars.len()
                    && is_word_char(chars[j + 1].1)
                {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(s.len(), |&(o, _)| o);
            out.push(Token {
                text: s[start..end].to_string(),
                kind: TokenKind::Word,
                start,
                end,
            });
            i = j;
        } else {
            out.push(Token {
                text: c.to_string(),
                kind: TokenKind::Punct,
                start,
                end: start + c.len_utf8(),
            });
            i += 1;
        }
    }
    out
}

pub fn tokenize(s: &str) -> Vec<Token> {
    tokenize_normalized(&normalize(s))
}

/// Word and CJK tokens only, as strings.
pub fn words(s: &str) -> Vec<String> {
    tokenize(s)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Punct)
        .map(|t| t.text)
        .collect()
}

/// Splits a camelCase / snake_case / kebab-case identifier into lowercase
/// words joined by spaces: `getPhoneNumber` -> `get phone number`,
/// `uploadIDCard` -> `upload id card`.
pub fn split_identifier(name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let mut words: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' || c == '-' || c == '$' || c.is_whitespace() {
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if c.is_uppercase() && !cur.is_empty() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                words.push(std::mem::take(&mut cur));
            }
        } else if c.is_ascii_digit() && cur.chars().last().is_some_and(|p| p.is_alphabetic()) {
            words.push(std::mem::take(&mut cur));
        }
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words.join(" ")
}

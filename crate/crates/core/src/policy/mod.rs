//! Privacy-policy analysis: sentence splitting, bag-of-words vectors,
//! relatedness classification and (type, operation) extraction.

mod classifier;
mod extract;
mod similarity;
mod synth;

pub use classifier::{
    read_corpus, write_corpus, Classifier, ClassifierError, Mlp, TrainConfig, MODEL_MAGIC, MODEL_VERSION,
};
pub use extract::{extract_tuples, CandidateProvider, Clause, ClauseWindowProvider};
pub use similarity::{similarity, Method, SimilarityConfig, SimilarityError, Unit};
pub use synth::{generate_corpus, CorpusConfig};

use crate::lexicon::{DataPractice, Lexicons};
use crate::scalar::Scalar;
use crate::text::{self, TokenKind};
use serde::Serialize;
use std::collections::{BTreeSet, HashSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceRecord {
    pub index: usize,
    pub text: String,
    #[serde(skip)]
    pub vector: Vec<u8>,
    pub related: bool,
}

const CJK_STOPS: &[char] = &['。', '！', '？', '；'];
const ASCII_STOPS: &[char] = &['!', '?', ';'];

fn strip_list_marker(line: &str) -> Option<&str> {
    let t = line.trim_start();
    for m in ["- ", "* ", "• ", "· ", "● ", "◆ ", "■ "] {
        if let Some(rest) = t.strip_prefix(m) {
            return Some(rest);
        }
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 && digits <= 3 {
        let rest = &t[digits..];
        for m in [". ", ") ", "、", "．"] {
            if let Some(r) = rest.strip_prefix(m) {
                return Some(r);
            }
        }
    }
    if let Some(rest) = t.strip_prefix('(').or_else(|| t.strip_prefix('（')) {
        let n = rest.chars().take_while(|c| c.is_ascii_alphanumeric()).count();
        if n > 0 && n <= 3 {
            let after = &rest[n..];
            if let Some(r) = after.strip_prefix(')').or_else(|| after.strip_prefix('）')) {
                return Some(r);
            }
        }
    }
    const CN_NUM: &str = "一二三四五六七八九十";
    let cn = t.chars().take_while(|c| CN_NUM.contains(*c)).count();
    if cn > 0 {
        let skip: usize = t.chars().take(cn).map(char::len_utf8).sum();
        if let Some(r) = t[skip..].strip_prefix('、') {
            return Some(r);
        }
    }
    None
}

/// Splits policy text into sentences. Boundaries are `。！？；`, `!?;`, a
/// `.` followed by whitespace or end of text, blank lines and list items.
/// Other line breaks inside a paragraph are joined with a space.
pub fn split_sentences(policy_text: &str) -> Vec<SentenceRecord> {
    let mut blocks: Vec<String> = Vec::new();
    let mut cur = String::new();
    for line in policy_text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            blocks.push(std::mem::take(&mut cur));
            continue;
        }
        if let Some(item) = strip_list_marker(trimmed) {
            blocks.push(std::mem::take(&mut cur));
            cur.push_str(item.trim());
            continue;
        }
        if !cur.is_empty() {
            cur.push(' ');
        }
        cur.push_str(trimmed);
    }
    blocks.push(cur);

    let mut out = Vec::new();
    for block in blocks {
        let chars: Vec<char> = block.chars().collect();
        let mut s = String::new();
        for (i, &c) in chars.iter().enumerate() {
            s.push(c);
            let stop = CJK_STOPS.contains(&c)
                || ASCII_STOPS.contains(&c)
                || (c == '.' && chars.get(i + 1).is_none_or(|n| n.is_whitespace()));
            if stop {
                push_sentence(&mut out, &mut s);
            }
        }
        push_sentence(&mut out, &mut s);
    }
    out
}

fn push_sentence(out: &mut Vec<SentenceRecord>, s: &mut String) {
    let t = s.trim();
    if t.chars().any(char::is_alphanumeric) {
        out.push(SentenceRecord {
            index: out.len(),
            text: t.to_string(),
            vector: Vec::new(),
            related: false,
        });
    }
    s.clear();
}

#[derive(Debug, Clone)]
struct VocabEntry {
    word: String,
    /// Word tokens for space-delimited entries, empty for CJK entries.
    tokens: Vec<String>,
    /// Normalized form for CJK entries.
    cjk: Option<String>,
}

/// An ordered word list that sentences are vectorized against. Entries
/// before `split` are type words, the rest operation words.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    split: usize,
}

impl Vocabulary {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries: Vec<VocabEntry> = words.into_iter().map(|w| entry(w.as_ref())).collect();
        let split = entries.len();
        Vocabulary { entries, split }
    }

    /// Type phrases and secondary names, then operation words.
    pub fn combined(lex: &Lexicons) -> Self {
        let types = lex.types.vocabulary();
        let ops = lex.operations.vocabulary();
        let split = types.len();
        let entries = types.iter().chain(&ops).map(|w| entry(w)).collect();
        Vocabulary { entries, split }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of leading type entries.
    pub fn type_len(&self) -> usize {
        self.split
    }

    pub fn word(&self, i: usize) -> &str {
        &self.entries[i].word
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }
}

fn entry(w: &str) -> VocabEntry {
    let norm = text::normalize(w.trim());
    if text::contains_cjk(&norm) {
        VocabEntry {
            word: w.to_string(),
            tokens: Vec::new(),
            cjk: Some(norm.split_whitespace().collect()),
        }
    } else {
        VocabEntry {
            word: w.to_string(),
            tokens: text::words(&norm),
            cjk: None,
        }
    }
}

/// Sentence segments used for containment.
fn segments(sentence: &str) -> Vec<(HashSet<String>, String)> {
    let norm = text::normalize(sentence);
    let mut out = Vec::new();
    let mut push = |part: &str| {
        let toks: HashSet<String> = text::tokenize_normalized(part)
            .into_iter()
            .filter(|t| t.kind == TokenKind::Word)
            .map(|t| t.text)
            .collect();
        let squeezed: String = part.split_whitespace().collect();
        out.push((toks, squeezed));
    };
    let mut start = 0;
    let chars: Vec<(usize, char)> = norm.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        let stop = CJK_STOPS.contains(&c)
            || ASCII_STOPS.contains(&c)
            || c == '\n'
            || (c == '.' && chars.get(k + 1).is_none_or(|&(_, n)| n.is_whitespace()));
        if stop {
            push(&norm[start..i]);
            start = i + c.len_utf8();
        }
    }
    push(&norm[start..]);
    out
}

/// Binary bag-of-words vector: entry `i` is 1 when some sentence segment
/// contains every token of vocabulary word `i` (CJK words: as a substring).
pub fn vectorize(sentence: &str, vocab: &Vocabulary) -> Vec<u8> {
    let segs = segments(sentence);
    vocab
        .entries
        .iter()
        .map(|e| {
            let hit = segs.iter().any(|(toks, squeezed)| match &e.cjk {
                Some(w) => squeezed.contains(w.as_str()),
                None => !e.tokens.is_empty() && e.tokens.iter().all(|t| toks.contains(t)),
            });
            u8::from(hit)
        })
        .collect()
}

/// Rule-mode relatedness: at least one type word and one operation word.
pub fn rule_related(vector: &[u8], vocab: &Vocabulary) -> bool {
    let (types, ops) = vector.split_at(vocab.split.min(vector.len()));
    types.iter().any(|&b| b != 0) && ops.iter().any(|&b| b != 0)
}

/// Trains the MLP on labelled sentences vectorized over `vocab`.
pub fn train_mlp<T: Scalar>(
    rows: &[(bool, String)],
    vocab: &Vocabulary,
    cfg: &TrainConfig<T>,
) -> Result<Mlp<T>, ClassifierError> {
    let data: Vec<(Vec<u8>, bool)> = rows.iter().map(|(y, s)| (vectorize(s, vocab), *y)).collect();
    Mlp::train(&data, vocab.len(), cfg)
}

/// Everything the policy side needs, shared read-only across apps.
pub struct PolicyEngine<T: Scalar> {
    pub lexicons: Lexicons,
    pub vocab: Vocabulary,
    pub classifier: Classifier<T>,
    pub similarity: SimilarityConfig<T>,
    pub provider: Box<dyn CandidateProvider + Send + Sync>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolicyAnalysis {
    pub sentences: Vec<SentenceRecord>,
    pub practices: BTreeSet<DataPractice>,
}

impl PolicyAnalysis {
    pub fn related_count(&self) -> usize {
        self.sentences.iter().filter(|s| s.related).count()
    }
}

impl<T: Scalar> PolicyEngine<T> {
    /// Rule classifier, default similarity and the clause-window extractor.
    pub fn new(lexicons: Lexicons) -> Self {
        let vocab = Vocabulary::combined(&lexicons);
        PolicyEngine {
            lexicons,
            vocab,
            classifier: Classifier::Rule,
            similarity: SimilarityConfig::default(),
            provider: Box::new(ClauseWindowProvider),
        }
    }

    pub fn analyze(&self, policy_text: &str) -> Result<PolicyAnalysis, ClassifierError> {
        let mut sentences = split_sentences(policy_text);
        let mut practices = BTreeSet::new();
        for s in &mut sentences {
            s.vector = vectorize(&s.text, &self.vocab);
            s.related = self.classifier.classify(&s.vector, &self.vocab)?;
            if s.related {
                practices.extend(extract_tuples(
                    s,
                    &self.lexicons,
                    &self.similarity,
                    self.provider.as_ref(),
                ));
            }
        }
        Ok(PolicyAnalysis { sentences, practices })
    }
}

use super::{similarity, SentenceRecord, SimilarityConfig};
use crate::lexicon::{DataPractice, Lexicons, Operation};
use crate::scalar::Scalar;
use crate::text::{self, TokenKind};
use std::cmp::Ordering;
use std::collections::BTreeSet;

/// Candidate spans inside one clause.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clause {
    pub text: String,
    /// Spans that may name a data type.
    pub entities: Vec<String>,
    /// Spans that may name a data operation.
    pub relations: Vec<String>,
}

/// Source of (entity, relation) candidates for a sentence.
pub trait CandidateProvider {
    fn clauses(&self, sentence: &str, lex: &Lexicons) -> Vec<Clause>;
}

/// Splits a sentence into clauses at inner full stops and semicolons.
/// Entities are the maximal type-phrase matches plus the chunks between
/// commas and coordinating conjunctions; relations are operation-word
/// occurrences.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClauseWindowProvider;

const CLAUSE_STOPS: &[char] = &['。', '；', '！', '？', ';', '!', '?'];
const CHUNK_STOPS: &[char] = &[',', '，', '、', ':', '：', '(', ')', '（', '）', '"', '“', '”', '/'];
const CONJUNCTIONS: &[&str] = &[" and ", " or ", " as well as ", " such as ", " including "];
const CJK_CONJUNCTIONS: &[&str] = &["以及", "和", "及", "或", "与"];

fn split_clauses(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let stop = CLAUSE_STOPS.contains(&c) || (c == '.' && chars.get(i + 1).is_none_or(|n| n.is_whitespace()));
        if stop {
            out.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    out.push(cur);
    out.into_iter()
        .map(|c| c.trim().to_string())
        .filter(|c| c.chars().any(char::is_alphanumeric))
        .collect()
}

fn chunks(clause: &str) -> Vec<String> {
    let mut parts = vec![format!(" {} ", text::normalize(clause))];
    for sep in CONJUNCTIONS.iter().chain(CJK_CONJUNCTIONS) {
        parts = parts
            .iter()
            .flat_map(|p| p.split(sep).map(|s| format!(" {s} ")).collect::<Vec<_>>())
            .collect();
    }
    parts
        .iter()
        .flat_map(|p| p.split(CHUNK_STOPS))
        .map(|s| s.trim().to_string())
        .filter(|s| s.chars().any(char::is_alphanumeric))
        .collect()
}

fn relation_spans(clause: &str, lex: &Lexicons) -> Vec<String> {
    let norm = text::normalize(clause);
    let toks: Vec<String> = text::tokenize_normalized(&norm)
        .into_iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.text)
        .collect();
    let squeezed: String = norm.split_whitespace().collect();
    let mut out = Vec::new();
    for w in lex.operations.vocabulary() {
        let hit = if text::contains_cjk(&w) {
            squeezed.contains(w.as_str())
        } else {
            let wt = text::words(&w);
            !wt.is_empty() && toks.windows(wt.len()).any(|win| win == wt.as_slice())
        };
        if hit {
            out.push(w);
        }
    }
    out
}

impl CandidateProvider for ClauseWindowProvider {
    fn clauses(&self, sentence: &str, lex: &Lexicons) -> Vec<Clause> {
        split_clauses(sentence)
            .into_iter()
            .map(|c| {
                let mut entities: Vec<String> = lex.types.maximal_matches(&c).into_iter().map(|h| h.phrase).collect();
                for ch in chunks(&c) {
                    if !entities.contains(&ch) {
                        entities.push(ch);
                    }
                }
                let relations = relation_spans(&c, lex);
                Clause {
                    text: c,
                    entities,
                    relations,
                }
            })
            .collect()
    }
}

fn unit_len(s: &str) -> usize {
    if text::contains_cjk(s) {
        s.chars().filter(|c| c.is_alphanumeric()).count()
    } else {
        text::words(s).len()
    }
}

/// Best-scoring vocabulary word for `span`: highest score, then the longer
/// word, then the lexicographically smaller one.
fn best<'a, T: Scalar>(span: &str, vocab: &'a [String], cfg: &SimilarityConfig<T>) -> Option<(&'a str, T)> {
    let mut top: Option<(&str, T, usize)> = None;
    for w in vocab {
        let Ok(s) = similarity(span, w, cfg) else {
            continue;
        };
        let len = unit_len(w);
        let better = match &top {
            None => true,
            Some((bw, bs, bl)) => match s.partial_cmp(bs) {
                Some(Ordering::Greater) => true,
                Some(Ordering::Equal) => len > *bl || (len == *bl && w.as_str() < *bw),
                _ => false,
            },
        };
        if better {
            top = Some((w, s, len));
        }
    }
    top.filter(|(_, s, _)| cfg.accepts(*s)).map(|(w, s, _)| (w, s))
}

/// Tuples from one related sentence: within each clause, every accepted
/// entity type is paired with every accepted relation operation.
pub fn extract_tuples<T: Scalar>(
    record: &SentenceRecord,
    lex: &Lexicons,
    cfg: &SimilarityConfig<T>,
    provider: &dyn CandidateProvider,
) -> BTreeSet<DataPractice> {
    let type_vocab = lex.types.vocabulary();
    let op_vocab = lex.operations.vocabulary();
    let mut out = BTreeSet::new();
    for clause in provider.clauses(&record.text, lex) {
        let ops: BTreeSet<Operation> = clause
            .relations
            .iter()
            .filter_map(|r| best(r, &op_vocab, cfg))
            .filter_map(|(w, _)| lex.operations.operation_of(w))
            .collect();
        if ops.is_empty() {
            continue;
        }
        let types: BTreeSet<String> = clause
            .entities
            .iter()
            .filter_map(|e| best(e, &type_vocab, cfg))
            .filter_map(|(w, _)| lex.types.resolve_type(w).map(str::to_string))
            .collect();
        for t in &types {
            for &o in &ops {
                out.insert(DataPractice::new(t.clone(), o));
            }
        }
    }
    out
}

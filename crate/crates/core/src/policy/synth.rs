//! Deterministic synthetic policy sentences labelled by lexicon
//! co-occurrence: a sentence is related exactly when it contains a type
//! phrase and an operation word.

use crate::lexicon::Lexicons;
use crate::text;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub size: usize,
    pub seed: u64,
    /// Share of related sentences.
    pub related_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            size: 2000,
            seed: 42,
            related_fraction: 0.5,
        }
    }
}

const SUBJECTS: &[&str] = &[
    "we",
    "our company",
    "the operator",
    "this mini program",
    "the developer",
    "our team",
    "the platform operator",
    "our partners and we",
];
const MODALS: &[&str] = &["may", "will", "might", "can", "shall", "will only", "may sometimes"];
const PURPOSES: &[&str] = &[
    "to improve the experience",
    "for customer support",
    "in order to complete your order",
    "to keep the product secure",
    "when required by law",
    "with your consent",
    "for the purposes described here",
    "to prevent fraud",
    "during registration",
    "after you agree to these terms",
    "",
];
const NOUNS: &[&str] = &[
    "feedback",
    "requests",
    "updates",
    "announcements",
    "the terms",
    "notifications",
    "questions",
    "complaints",
    "suggestions",
    "reports",
    "the agreement",
    "invoices",
];
const DISTRACTORS: &[&str] = &[
    "this policy takes effect on the first day of next month",
    "please read the following terms carefully",
    "if you have questions please reach our team",
    "we reserve the right to revise this document",
    "the revised version will be published here",
    "minors should read this together with a guardian",
    "these terms are governed by local law",
    "thank you for your trust",
    "any disputes shall be settled through negotiation",
    "the latest version always prevails",
    "this section explains our commitments",
    "we value your trust very much",
];
const TYPE_ONLY: &[&str] = &[
    "{S} respects the confidentiality of your {T} {P}",
    "questions about your {T} can be directed to our team",
    "your {T} belongs to you",
    "{S} takes the protection of your {T} seriously",
];
const OP_ONLY: &[&str] = &["{S} {M} {O} {N} {P}", "{S} {M} {O} {N} from time to time"];
const RELATED: &[&str] = &[
    "{S} {M} {O} your {T} {P}",
    "{S} {M} {O} the {T} {P}",
    "{P} {S} {M} {O} your {T}",
    "{S} {M} {O} {N} and your {T} {P}",
];

struct Pools {
    types: Vec<String>,
    ops: Vec<String>,
    subjects: Vec<&'static str>,
    modals: Vec<&'static str>,
    purposes: Vec<&'static str>,
    nouns: Vec<&'static str>,
    distractors: Vec<&'static str>,
}

impl Pools {
    /// Drops filler text sharing any token with the vocabulary, and type
    /// phrases containing an operation word.
    fn new(lex: &Lexicons) -> Self {
        let types = lex.types.vocabulary();
        let ops = lex.operations.vocabulary();
        let mut vocab_tokens: HashSet<String> = HashSet::new();
        let mut cjk_words = Vec::new();
        for w in types.iter().chain(&ops) {
            if text::contains_cjk(w) {
                cjk_words.push(w.clone());
            }
            vocab_tokens.extend(text::words(w).into_iter().filter(|t| !text::contains_cjk(t)));
        }
        let clean = |s: &&str| text::words(s).iter().all(|t| !vocab_tokens.contains(t));
        let keep = |v: &[&'static str]| -> Vec<&'static str> { v.iter().copied().filter(clean).collect() };
        let op_tokens: Vec<Vec<String>> = ops.iter().map(|o| text::words(o)).collect();
        let types = types
            .into_iter()
            .filter(|t| {
                let tt = text::words(t);
                !op_tokens
                    .iter()
                    .any(|o| !o.is_empty() && o.iter().all(|x| tt.contains(x)))
                    && !ops.iter().any(|o| text::contains_cjk(o) && t.contains(o.as_str()))
            })
            .collect();
        Pools {
            types,
            ops,
            subjects: keep(SUBJECTS),
            modals: keep(MODALS),
            purposes: keep(PURPOSES),
            nouns: keep(NOUNS),
            distractors: keep(DISTRACTORS),
        }
    }
}

fn fill(template: &str, p: &Pools, rng: &mut ChaCha8Rng) -> String {
    let pick = |v: &[&'static str], rng: &mut ChaCha8Rng| v.choose(rng).copied().unwrap_or("");
    let mut s = template.to_string();
    s = s.replace("{S}", pick(&p.subjects, rng));
    s = s.replace("{M}", pick(&p.modals, rng));
    s = s.replace("{P}", pick(&p.purposes, rng));
    s = s.replace("{N}", pick(&p.nouns, rng));
    if s.contains("{T}") {
        s = s.replace("{T}", p.types.choose(rng).map_or("", String::as_str));
    }
    if s.contains("{O}") {
        s = s.replace("{O}", p.ops.choose(rng).map_or("", String::as_str));
    }
    let s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut c = s.chars();
    match c.next() {
        Some(f) => format!("{}{}.", f.to_uppercase(), c.as_str()),
        None => String::new(),
    }
}

/// `size` labelled sentences. Unrelated sentences are spread evenly over
/// plain distractors, type-only and operation-only sentences.
pub fn generate_corpus(lex: &Lexicons, cfg: &CorpusConfig) -> Vec<(bool, String)> {
    let pools = Pools::new(lex);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_related = (cfg.size as f64 * cfg.related_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut out = Vec::with_capacity(cfg.size);
    for i in 0..cfg.size {
        if i < n_related {
            let t = RELATED.choose(&mut rng).expect("templates");
            out.push((true, fill(t, &pools, &mut rng)));
            continue;
        }
        let s = match rng.gen_range(0..3) {
            0 => {
                let a = pools.distractors.choose(&mut rng).copied().unwrap_or("");
                if rng.gen_bool(0.5) {
                    fill(a, &pools, &mut rng)
                } else {
                    fill(&format!("{a} {{P}}"), &pools, &mut rng)
                }
            }
            1 => fill(TYPE_ONLY.choose(&mut rng).expect("templates"), &pools, &mut rng),
            _ => fill(OP_ONLY.choose(&mut rng).expect("templates"), &pools, &mut rng),
        };
        out.push((false, s));
    }
    out.shuffle(&mut rng);
    out
}

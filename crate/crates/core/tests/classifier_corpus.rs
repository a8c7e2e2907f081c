use miniaudit::lexicon::Lexicons;
use miniaudit::policy::{generate_corpus, rule_related, vectorize, CorpusConfig, Mlp, TrainConfig, Vocabulary};
use miniaudit::text;
use std::time::Instant;

/// Label by direct lookup: some type phrase occurs as a contiguous token
/// run (or CJK substring) and so does some operation word.
fn cooccurrence_oracle(lex: &Lexicons, sentence: &str) -> bool {
    let toks = text::words(sentence);
    let squeezed: String = text::normalize(sentence).split_whitespace().collect();
    let occurs = |w: &str| {
        if text::contains_cjk(w) {
            return squeezed.contains(&text::normalize(w).replace(' ', ""));
        }
        let wt = text::words(w);
        !wt.is_empty() && toks.windows(wt.len()).any(|win| win == wt.as_slice())
    };
    lex.types.vocabulary().iter().any(|w| occurs(w)) && lex.operations.vocabulary().iter().any(|w| occurs(w))
}

#[test]
fn generator_labels_match_cooccurrence() {
    let lex = Lexicons::bundled();
    for (y, s) in generate_corpus(&lex, &CorpusConfig::default()) {
        assert_eq!(cooccurrence_oracle(&lex, &s), y, "{s}");
    }
}

#[test]
fn rule_mode_is_exact_on_synthetic_corpus() {
    let lex = Lexicons::bundled();
    let vocab = Vocabulary::combined(&lex);
    let corpus = generate_corpus(&lex, &CorpusConfig::default());
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (y, s) in &corpus {
        let p = rule_related(&vectorize(s, &vocab), &vocab);
        match (p, *y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    assert_eq!((fp, fn_), (0, 0));
    assert_eq!(tp, 1000);
}

#[test]
fn mlp_held_out_accuracy() {
    let lex = Lexicons::bundled();
    let vocab = Vocabulary::combined(&lex);
    let corpus = generate_corpus(&lex, &CorpusConfig::default());
    let data: Vec<(Vec<u8>, bool)> = corpus.iter().map(|(y, s)| (vectorize(s, &vocab), *y)).collect();
    let (train, test) = data.split_at(1600);
    let t0 = Instant::now();
    let m = Mlp::<f64>::train(train, vocab.len(), &TrainConfig::default()).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let acc = m.accuracy(test).unwrap();
    eprintln!("mlp: held-out accuracy {acc:.4}, training {secs:.2}s");
    assert!(acc >= 0.90, "accuracy {acc}");
    assert!(secs < 60.0);
}

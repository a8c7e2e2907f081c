//! Data-type and data-operation vocabularies.
//!
//! A dictionary directory looks like this:
//!
//! ```text
//! primaries.txt          one primary category per line
//! types/*.tsv            one file per primary: "@primary<TAB>Name", then
//!                        "secondary<TAB>phrase1,phrase2,..." lines
//! operations.tsv         "Collect|Use|Send<TAB>word,word,..."
//! policy_keywords.txt    keywords locating attached privacy policies (optional)
//! ```
//!
//! Lines starting with `#` are comments. Phrases are matched on their
//! normalized form (see [`crate::text::normalize`]).

use crate::text::{self, TokenKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("phrase {phrase:?} listed under both {first:?} and {second:?}")]
    DuplicatePhrase {
        phrase: String,
        first: String,
        second: String,
    },
    #[error("secondary {secondary:?} references undeclared primary {primary:?}")]
    UnknownPrimary { secondary: String, primary: String },
    #[error("secondary category {0:?} declared twice")]
    DuplicateSecondary(String),
    #[error("operation word {word:?} listed under both {first} and {second}")]
    OverlappingOperation {
        word: String,
        first: Operation,
        second: Operation,
    },
    #[error("unknown data operation {0:?}")]
    UnknownOperation(String),
}

/// The three data operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operation {
    Collect,
    Use,
    Send,
}

impl Operation {
    pub const ALL: [Operation; 3] = [Operation::Collect, Operation::Use, Operation::Send];

    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Collect => "Collect",
            Operation::Use => "Use",
            Operation::Send => "Send",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Operation {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "collect" | "c" => Ok(Operation::Collect),
            "use" | "u" => Ok(Operation::Use),
            "send" | "s" => Ok(Operation::Send),
            _ => Err(LexiconError::UnknownOperation(s.to_string())),
        }
    }
}

/// A (data type, operation) tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataPractice {
    pub data_type: String,
    pub operation: Operation,
}

impl DataPractice {
    pub fn new(data_type: impl Into<String>, operation: Operation) -> Self {
        DataPractice {
            data_type: data_type.into(),
            operation,
        }
    }
}

impl fmt::Display for DataPractice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.data_type, self.operation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SecondaryCategory {
    pub name: String,
    pub primary: String,
    /// Phrases as written in the dictionary file.
    pub phrases: BTreeSet<String>,
}

/// Result of a phrase lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeLookup<'a> {
    pub secondary: &'a str,
    pub primary: &'a str,
}

/// A lexicon phrase found inside a piece of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseHit {
    pub secondary: String,
    /// Normalized phrase that matched.
    pub phrase: String,
    /// Index of the first matched token and number of tokens.
    pub token_start: usize,
    pub token_len: usize,
}

#[derive(Debug, Clone)]
struct MatchEntry {
    tokens: Vec<String>,
    normalized: String,
    secondary: String,
}

/// Two-level data-type taxonomy with an inverted phrase index.
#[derive(Debug, Clone, Default)]
pub struct TypeLexicon {
    primaries: Vec<String>,
    secondaries: BTreeMap<String, SecondaryCategory>,
    phrase_index: BTreeMap<String, String>,
    name_index: HashMap<String, String>,
    by_first_token: HashMap<String, Vec<MatchEntry>>,
}

impl PartialEq for TypeLexicon {
    fn eq(&self, other: &Self) -> bool {
        let a: BTreeSet<_> = self.primaries.iter().collect();
        let b: BTreeSet<_> = other.primaries.iter().collect();
        a == b && self.secondaries == other.secondaries
    }
}

fn phrase_tokens(normalized: &str) -> Vec<String> {
    text::tokenize_normalized(normalized)
        .into_iter()
        .map(|t| t.text)
        .collect()
}

impl TypeLexicon {
    /// Builds a lexicon from (primary, secondary, phrases) rows, enforcing
    /// the one-phrase-one-secondary rule.
    pub fn from_rows<I>(primaries: Vec<String>, rows: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (String, String, Vec<String>)>,
    {
        let declared: BTreeSet<&String> = primaries.iter().collect();
        let mut secondaries = BTreeMap::new();
        for (primary, secondary, phrases) in rows {
            if !declared.contains(&primary) {
                return Err(LexiconError::UnknownPrimary { secondary, primary });
            }
            if secondaries.contains_key(&secondary) {
                return Err(LexiconError::DuplicateSecondary(secondary));
            }
            let cat = SecondaryCategory {
                name: secondary.clone(),
                primary,
                phrases: phrases.into_iter().collect(),
            };
            secondaries.insert(secondary, cat);
        }

        let mut name_index = HashMap::new();
        for name in secondaries.keys() {
            name_index.insert(text::normalize(name), name.clone());
        }

        let mut phrase_index: BTreeMap<String, String> = BTreeMap::new();
        for cat in secondaries.values() {
            for phrase in &cat.phrases {
                let norm = text::normalize(phrase.trim());
                if let Some(other) = name_index.get(&norm) {
                    if other != &cat.name {
                        return Err(LexiconError::DuplicatePhrase {
                            phrase: phrase.clone(),
                            first: other.clone(),
                            second: cat.name.clone(),
                        });
                    }
                }
                if let Some(prev) = phrase_index.insert(norm, cat.name.clone()) {
                    return Err(LexiconError::DuplicatePhrase {
                        phrase: phrase.clone(),
                        first: prev,
                        second: cat.name.clone(),
                    });
                }
            }
        }

        let mut by_first_token: HashMap<String, Vec<MatchEntry>> = HashMap::new();
        let surface = phrase_index
            .iter()
            .map(|(p, s)| (p.clone(), s.clone()))
            .chain(name_index.iter().map(|(n, s)| (n.clone(), s.clone())));
        let mut seen = BTreeSet::new();
        for (normalized, secondary) in surface {
            if !seen.insert(normalized.clone()) {
                continue;
            }
            let tokens = phrase_tokens(&normalized);
            if let Some(first) = tokens.first().cloned() {
                by_first_token.entry(first).or_default().push(MatchEntry {
                    tokens,
                    normalized,
                    secondary,
                });
            }
        }
        for list in by_first_token.values_mut() {
            list.sort_by(|a, b| {
                b.tokens
                    .len()
                    .cmp(&a.tokens.len())
                    .then_with(|| a.normalized.cmp(&b.normalized))
            });
        }

        Ok(TypeLexicon {
            primaries,
            secondaries,
            phrase_index,
            name_index,
            by_first_token,
        })
    }

    pub fn primaries(&self) -> &[String] {
        &self.primaries
    }

    pub fn secondaries(&self) -> impl Iterator<Item = &SecondaryCategory> {
        self.secondaries.values()
    }

    pub fn secondary(&self, name: &str) -> Option<&SecondaryCategory> {
        self.secondaries.get(name)
    }

    pub fn phrase_count(&self) -> usize {
        self.phrase_index.len()
    }

    /// Looks a phrase up by phrase index first, then by secondary name.
    pub fn lookup(&self, phrase: &str) -> Option<TypeLookup<'_>> {
        let norm = text::normalize(phrase.trim());
        let secondary = self.phrase_index.get(&norm).or_else(|| self.name_index.get(&norm))?;
        let cat = &self.secondaries[secondary];
        Some(TypeLookup {
            secondary: &cat.name,
            primary: &cat.primary,
        })
    }

    /// Canonical secondary name for a phrase or secondary name.
    pub fn resolve_type(&self, phrase: &str) -> Option<&str> {
        self.lookup(phrase).map(|l| l.secondary)
    }

    /// Every normalized surface form (phrases and secondary names), sorted.
    pub fn vocabulary(&self) -> Vec<String> {
        let set: BTreeSet<String> = self
            .phrase_index
            .keys()
            .cloned()
            .chain(self.name_index.keys().cloned())
            .collect();
        set.into_iter().collect()
    }

    /// All contiguous phrase occurrences in `text`, in token order.
    pub fn find_in_text(&self, text: &str) -> Vec<PhraseHit> {
        let toks = text::tokenize(text);
        let words: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        let kinds: Vec<TokenKind> = toks.iter().map(|t| t.kind).collect();
        let mut hits = Vec::new();
        for i in 0..words.len() {
            if kinds[i] == TokenKind::Punct {
                continue;
            }
            if let Some(cands) = self.by_first_token.get(words[i]) {
                for entry in cands {
                    let n = entry.tokens.len();
                    if i + n <= words.len() && entry.tokens.iter().zip(&words[i..i + n]).all(|(a, b)| a == b) {
                        hits.push(PhraseHit {
                            secondary: entry.secondary.clone(),
                            phrase: entry.normalized.clone(),
                            token_start: i,
                            token_len: n,
                        });
                    }
                }
            }
        }
        hits
    }

    /// Leftmost-longest, non-overlapping phrase matches.
    pub fn maximal_matches(&self, text: &str) -> Vec<PhraseHit> {
        let mut all = self.find_in_text(text);
        all.sort_by(|a, b| {
            a.token_start
                .cmp(&b.token_start)
                .then(b.token_len.cmp(&a.token_len))
                .then_with(|| a.phrase.cmp(&b.phrase))
        });
        let mut out: Vec<PhraseHit> = Vec::new();
        let mut covered_until = 0;
        for hit in all {
            if hit.token_start < covered_until {
                continue;
            }
            covered_until = hit.token_start + hit.token_len;
            out.push(hit);
        }
        out
    }

    /// The single best secondary for a label: the longest matching phrase,
    /// earliest position on ties.
    pub fn best_match(&self, text: &str) -> Option<PhraseHit> {
        self.find_in_text(text).into_iter().min_by(|a, b| {
            b.phrase
                .chars()
                .count()
                .cmp(&a.phrase.chars().count())
                .then(a.token_start.cmp(&b.token_start))
                .then_with(|| a.secondary.cmp(&b.secondary))
        })
    }

    /// Renders the lexicon back into dictionary files: `primaries.txt`
    /// contents and one `types/NN_slug.tsv` per primary.
    pub fn to_files(&self) -> (String, Vec<(String, String)>) {
        let mut primaries = String::new();
        for p in &self.primaries {
            primaries.push_str(p);
            primaries.push('\n');
        }
        let mut files = Vec::new();
        for (i, p) in self.primaries.iter().enumerate() {
            let mut body = format!("@primary\t{p}\n");
            for cat in self.secondaries.values().filter(|c| &c.primary == p) {
                let phrases: Vec<&str> = cat.phrases.iter().map(String::as_str).collect();
                body.push_str(&format!("{}\t{}\n", cat.name, phrases.join(",")));
            }
            let slug: String = p
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() {
                        c.to_ascii_lowercase()
                    } else {
                        '_'
                    }
                })
                .collect();
            files.push((format!("{:02}_{slug}.tsv", i + 1), body));
        }
        (primaries, files)
    }
}

/// Collect / Use / Send word sets. The sets are pairwise disjoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OperationLexicon {
    words: BTreeMap<Operation, BTreeSet<String>>,
    index: BTreeMap<String, Operation>,
}

impl OperationLexicon {
    pub fn from_sets<I>(sets: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (Operation, Vec<String>)>,
    {
        let mut words: BTreeMap<Operation, BTreeSet<String>> = BTreeMap::new();
        let mut index = BTreeMap::new();
        for (op, list) in sets {
            for w in list {
                let norm = text::normalize(w.trim());
                if norm.is_empty() {
                    continue;
                }
                if let Some(prev) = index.insert(norm.clone(), op) {
                    if prev != op {
                        return Err(LexiconError::OverlappingOperation {
                            word: norm,
                            first: prev,
                            second: op,
                        });
                    }
                }
                words.entry(op).or_default().insert(norm);
            }
        }
        Ok(OperationLexicon { words, index })
    }

    pub fn words(&self, op: Operation) -> impl Iterator<Item = &str> {
        self.words.get(&op).into_iter().flatten().map(String::as_str)
    }

    /// Every operation word, sorted.
    pub fn vocabulary(&self) -> Vec<String> {
        self.index.keys().cloned().collect()
    }

    pub fn operation_of(&self, word: &str) -> Option<Operation> {
        self.index.get(&text::normalize(word.trim())).copied()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn to_file(&self) -> String {
        let mut out = String::new();
        for (op, set) in &self.words {
            let list: Vec<&str> = set.iter().map(String::as_str).collect();
            out.push_str(&format!("{op}\t{}\n", list.join(",")));
        }
        out
    }
}

/// Per-category counts produced while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub primaries: usize,
    pub secondaries: usize,
    pub phrases: usize,
    /// primary -> (secondary count, phrase count)
    pub per_primary: BTreeMap<String, (usize, usize)>,
    pub per_operation: BTreeMap<Operation, usize>,
    pub warnings: Vec<String>,
}

/// All vocabularies loaded from one dictionary directory.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub types: TypeLexicon,
    pub operations: OperationLexicon,
    pub policy_keywords: Vec<String>,
    pub report: LoadReport,
}

/// Raw dictionary file contents, independent of where they came from.
#[derive(Debug, Clone, Default)]
pub struct DictFiles {
    pub primaries: String,
    /// (file name, contents) for each types file
    pub types: Vec<(String, String)>,
    pub operations: String,
    pub policy_keywords: Option<String>,
}

fn content_lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::to_string)
        .collect()
}

fn read(path: &Path) -> Result<String, LexiconError> {
    fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl DictFiles {
    pub fn read_dir(dir: &Path) -> Result<Self, LexiconError> {
        let primaries = read(&dir.join("primaries.txt"))?;
        let operations = read(&dir.join("operations.tsv"))?;
        let kw_path = dir.join("policy_keywords.txt");
        let policy_keywords = if kw_path.exists() { Some(read(&kw_path)?) } else { None };
        let types_dir = dir.join("types");
        let entries = fs::read_dir(&types_dir).map_err(|source| LexiconError::Io {
            path: types_dir.clone(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "tsv"))
            .collect();
        paths.sort();
        let mut types = Vec::new();
        for p in paths {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            types.push((name, read(&p)?));
        }
        Ok(DictFiles {
            primaries,
            types,
            operations,
            policy_keywords,
        })
    }

    pub fn bundled() -> Self {
        macro_rules! types {
            ($($f:literal),*) => {
                vec![$(($f.to_string(), include_str!(concat!("../data/dict/types/", $f)).to_string())),*]
            };
        }
        DictFiles {
            primaries: include_str!("../data/dict/primaries.txt").to_string(),
            types: types!(
                "01_basic.tsv",
                "02_identify.tsv",
                "03_biometric.tsv",
                "04_network.tsv",
                "05_health.tsv",
                "06_work_education.tsv",
                "07_property.tsv",
                "08_communication.tsv",
                "09_web_log.tsv",
                "10_device.tsv",
                "11_location.tsv",
                "12_hardware.tsv",
                "13_other.tsv"
            ),
            operations: include_str!("../data/dict/operations.tsv").to_string(),
            policy_keywords: Some(include_str!("../data/dict/policy_keywords.txt").to_string()),
        }
    }

    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir.join("types"))?;
        fs::write(dir.join("primaries.txt"), &self.primaries)?;
        fs::write(dir.join("operations.tsv"), &self.operations)?;
        if let Some(kw) = &self.policy_keywords {
            fs::write(dir.join("policy_keywords.txt"), kw)?;
        }
        for (name, body) in &self.types {
            fs::write(dir.join("types").join(name), body)?;
        }
        Ok(())
    }

    pub fn parse(&self) -> Result<Lexicons, LexiconError> {
        let primaries: Vec<String> = content_lines(&self.primaries)
            .map(|(_, l)| l.trim().to_string())
            .collect();

        let mut rows = Vec::new();
        let mut warnings = Vec::new();
        for (file, body) in &self.types {
            let mut current: Option<String> = None;
            for (line, raw) in content_lines(body) {
                let (key, rest) = raw.split_once('\t').ok_or_else(|| LexiconError::Format {
                    file: file.clone(),
                    line,
                    message: "expected a tab-separated line".into(),
                })?;
                let key = key.trim();
                if key == "@primary" {
                    current = Some(rest.trim().to_string());
                    continue;
                }
                let primary = current.clone().ok_or_else(|| LexiconError::Format {
                    file: file.clone(),
                    line,
                    message: "secondary listed before @primary".into(),
                })?;
                let phrases = split_list(rest);
                if phrases.is_empty() {
                    warnings.push(format!("{file}:{line}: secondary {key:?} has no phrases"));
                }
                rows.push((primary, key.to_string(), phrases));
            }
        }
        let types = TypeLexicon::from_rows(primaries, rows)?;

        let mut sets = Vec::new();
        for (line, raw) in content_lines(&self.operations) {
            let (key, rest) = raw.split_once('\t').ok_or_else(|| LexiconError::Format {
                file: "operations.tsv".into(),
                line,
                message: "expected a tab-separated line".into(),
            })?;
            let op: Operation = key.parse()?;
            sets.push((op, split_list(rest)));
        }
        let operations = OperationLexicon::from_sets(sets)?;

        let policy_keywords = self
            .policy_keywords
            .as_deref()
            .map(|s| content_lines(s).map(|(_, l)| l.trim().to_string()).collect())
            .unwrap_or_default();

        let mut report = LoadReport {
            primaries: types.primaries.len(),
            secondaries: types.secondaries.len(),
            phrases: types.phrase_count(),
            warnings,
            ..Default::default()
        };
        for p in &types.primaries {
            let cats: Vec<_> = types.secondaries().filter(|c| &c.primary == p).collect();
            if cats.is_empty() {
                report
                    .warnings
                    .push(format!("primary {p:?} has no secondary categories"));
            }
            let phrases = cats.iter().map(|c| c.phrases.len()).sum();
            report.per_primary.insert(p.clone(), (cats.len(), phrases));
        }
        for op in Operation::ALL {
            let n = operations.words(op).count();
            if n == 0 {
                report.warnings.push(format!("operation {op} has no words"));
            }
            report.per_operation.insert(op, n);
        }

        Ok(Lexicons {
            types,
            operations,
            policy_keywords,
            report,
        })
    }
}

impl Lexicons {
    pub fn load(dir: &Path) -> Result<Self, LexiconError> {
        DictFiles::read_dir(dir)?.parse()
    }

    /// The dictionary shipped inside the crate.
    pub fn bundled() -> Self {
        DictFiles::bundled().parse().expect("bundled dictionary is valid")
    }

    /// Serializes back into dictionary files.
    pub fn to_files(&self) -> DictFiles {
        let (primaries, types) = self.types.to_files();
        let policy_keywords = if self.policy_keywords.is_empty() {
            None
        } else {
            Some(self.policy_keywords.join("\n") + "\n")
        };
        DictFiles {
            primaries,
            types,
            operations: self.operations.to_file(),
            policy_keywords,
        }
    }
}

/// Loads and validates the type and operation lexicons from `dir`.
pub fn load_lexicons(dir: &Path) -> Result<(TypeLexicon, OperationLexicon), LexiconError> {
    let lex = Lexicons::load(dir)?;
    Ok((lex.types, lex.operations))
}

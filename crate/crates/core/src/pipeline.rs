//! End-to-end analysis of one package or a directory of packages.

use crate::consistency::{compare, compare_projections, ConsistencyResult, Pattern, Projections, Strength};
use crate::ddg::{build_ddg_with, DdgOptions};
use crate::diag::{Diagnostic, Stage};
use crate::ingest::{load_package_with, parse_layout, IngestError, MiniAppPackage};
use crate::js::parse_js;
use crate::lexicon::{DataPractice, Lexicons, Operation};
use crate::policy::PolicyEngine;
use crate::scalar::Scalar;
use crate::scope::build_scope_chain;
use crate::taint::{
    find_flows, flows_to_practices, resolve_ui_sources, ApiTables, FlowSink, FlowSource, TableError, TaintFlow,
};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Package files holding transcribed practice sets that replace the
/// derived code or policy side.
pub const CODE_PRACTICES_FILE: &str = "practices.code.tsv";
pub const POLICY_PRACTICES_FILE: &str = "practices.policy.tsv";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl PipelineError {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

/// Shared, read-only analysis configuration.
pub struct Analyzer<T: Scalar> {
    pub policy: PolicyEngine<T>,
    pub tables: ApiTables,
    pub ddg: DdgOptions,
}

impl<T: Scalar> Analyzer<T> {
    /// Rewrites table data types to lexicon secondaries.
    pub fn new(lexicons: Lexicons, tables: ApiTables) -> Result<Self, TableError> {
        let tables = tables.resolve_types(&lexicons.types)?;
        Ok(Analyzer {
            policy: PolicyEngine::new(lexicons),
            tables,
            ddg: DdgOptions::default(),
        })
    }

    pub fn bundled() -> Self {
        Self::new(Lexicons::bundled(), ApiTables::bundled()).expect("bundled tables match bundled lexicon")
    }

    pub fn lexicons(&self) -> &Lexicons {
        &self.policy.lexicons
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowSummary {
    pub file: String,
    pub data_type: String,
    pub source: FlowSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sink: Option<FlowSink>,
    /// Entity names from source to sink.
    pub path: Vec<String>,
}

impl FlowSummary {
    fn sort_key(&self) -> (String, u32, String, u32, String, Vec<String>) {
        (
            self.file.clone(),
            self.source.line(),
            self.source.name().to_string(),
            self.sink.as_ref().map_or(0, |s| s.line),
            self.sink.as_ref().map_or_else(String::new, |s| s.api.clone()),
            self.path.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppReport {
    pub schema_version: u32,
    pub app_id: String,
    pub pages: Vec<String>,
    pub policy_files: Vec<String>,
    pub policy_sentences: usize,
    pub related_sentences: usize,
    pub code_practices: BTreeSet<DataPractice>,
    pub policy_practices: BTreeSet<DataPractice>,
    pub flows: Vec<FlowSummary>,
    pub consistency: ConsistencyResult,
    pub projections: Projections,
    pub diagnostics: Vec<Diagnostic>,
}

impl AppReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per practice or finding: `section,data_type,operation`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "data_type", "operation"])
            .expect("in-memory write");
        let c = &self.consistency;
        let practice_rows = [
            ("code", &self.code_practices),
            ("policy", &self.policy_practices),
            ("weak_uninformed", &c.weak_uninformed),
            ("weak_redundant", &c.weak_redundant),
        ];
        for (section, set) in practice_rows {
            for p in set {
                w.write_record([section, &p.data_type, p.operation.as_str()])
                    .expect("in-memory write");
            }
        }
        for (section, set) in [
            ("strong_uninformed", &c.strong_uninformed),
            ("strong_redundant", &c.strong_redundant),
        ] {
            for t in set {
                w.write_record([section, t.as_str(), ""]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Reads a transcribed practice set: `type<TAB>ops` per line, where ops is
/// a list of Collect/Use/Send (or C/U/S) joined by `&` or `,`. Types must
/// resolve in the lexicon.
pub fn read_practice_file(
    path: &Path,
    lex: &Lexicons,
) -> Result<(BTreeSet<DataPractice>, Vec<Diagnostic>), PipelineError> {
    let body = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let file = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut out = BTreeSet::new();
    let mut diags = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| {
            Diagnostic::new(Stage::Ingest, msg)
                .in_file(file.clone())
                .at(i as u32 + 1, 1)
        };
        let Some((t, ops)) = line.split_once('\t') else {
            diags.push(bad("expected type<TAB>operations".into()));
            continue;
        };
        let Some(ty) = lex.types.resolve_type(t.trim()) else {
            diags.push(bad(format!("unknown data type {:?}", t.trim())));
            continue;
        };
        for op in ops.split(['&', ',']).map(str::trim).filter(|o| !o.is_empty()) {
            match op.parse::<Operation>() {
                Ok(o) => {
                    out.insert(DataPractice::new(ty, o));
                }
                Err(_) => diags.push(bad(format!("unknown operation {op:?}"))),
            }
        }
    }
    Ok((out, diags))
}

struct CodeSide {
    flows: Vec<FlowSummary>,
    practices: BTreeSet<DataPractice>,
    diagnostics: Vec<Diagnostic>,
}

fn analyze_script<T: Scalar>(
    an: &Analyzer<T>,
    file: &str,
    page_id: Option<&str>,
    src: &str,
    layout: Option<&str>,
    out: &mut CodeSide,
) {
    let parsed = match parse_js(src) {
        Ok(p) => p,
        Err(e) => {
            out.diagnostics
                .push(Diagnostic::new(Stage::Parse, e.to_string()).in_file(file));
            return;
        }
    };
    for d in &parsed.diagnostics {
        out.diagnostics.push(
            Diagnostic::new(Stage::Parse, d.message.clone())
                .in_file(file)
                .at(d.line, d.column),
        );
    }
    let skipped: Vec<String> = parsed
        .opaque
        .iter()
        .filter(|(k, _)| k.as_str() != "Error")
        .map(|(k, n)| format!("{k} x{n}"))
        .collect();
    if !skipped.is_empty() {
        out.diagnostics.push(
            Diagnostic::new(
                Stage::Parse,
                format!("unsupported constructs skipped: {}", skipped.join(", ")),
            )
            .in_file(file),
        );
    }
    let chain = build_scope_chain(file, &parsed.ast);
    let ddg = build_ddg_with(&chain, &an.ddg);
    out.diagnostics.extend(ddg.diagnostics.iter().cloned());

    let mut ui = Vec::new();
    if let (Some(page_id), Some(markup)) = (page_id, layout) {
        match parse_layout(markup) {
            Ok(tree) => {
                let layout_file = format!("{page_id}.wxml");
                for w in &tree.warnings {
                    out.diagnostics
                        .push(Diagnostic::new(Stage::Ingest, w.clone()).in_file(layout_file.clone()));
                }
                let (sources, diags) = resolve_ui_sources(page_id, &tree, Some(&chain), &an.lexicons().types);
                ui = sources;
                out.diagnostics.extend(diags);
            }
            Err(e) => out.diagnostics.push(
                Diagnostic::new(Stage::Ingest, e.message.clone())
                    .in_file(format!("{page_id}.wxml"))
                    .at(e.line, e.column),
            ),
        }
    }

    let flows: Vec<TaintFlow> = find_flows(&ddg, &an.tables, &ui);
    out.practices.extend(flows_to_practices(&flows));
    for f in &flows {
        if f.sink.is_none() {
            out.diagnostics.push(
                Diagnostic::new(
                    Stage::Taint,
                    format!("{} ({}) reaches no sink", f.source.name(), f.data_type),
                )
                .in_file(file)
                .at(f.source.line(), 1),
            );
        }
        out.flows.push(FlowSummary {
            file: f.file.clone(),
            data_type: f.data_type.clone(),
            source: f.source.clone(),
            sink: f.sink.clone(),
            path: f.path_names(&ddg),
        });
    }
}

fn code_side<T: Scalar>(an: &Analyzer<T>, pkg: &MiniAppPackage) -> CodeSide {
    let mut out = CodeSide {
        flows: Vec::new(),
        practices: BTreeSet::new(),
        diagnostics: Vec::new(),
    };
    if let Some(src) = &pkg.app_logic {
        analyze_script(an, "app.js", None, src, None, &mut out);
    }
    for page in &pkg.pages {
        match &page.logic_source {
            Some(src) => analyze_script(
                an,
                &page.logic_path(),
                Some(&page.page_id),
                src,
                page.layout_source.as_deref(),
                &mut out,
            ),
            None if page.layout_source.is_some() => out.diagnostics.push(
                Diagnostic::new(Stage::Taint, "layout without logic file; UI sources not resolved")
                    .in_file(page.layout_path()),
            ),
            None => {}
        }
    }
    out
}

/// Analyzes one package. `policy` overrides any policy text found inside
/// the package. Only unreadable inputs are errors; everything else is
/// reported as diagnostics.
pub fn analyze_app<T: Scalar>(
    an: &Analyzer<T>,
    root: &Path,
    policy: Option<&Path>,
) -> Result<AppReport, PipelineError> {
    let pkg = load_package_with(root, &an.lexicons().policy_keywords)?;
    let mut diagnostics = pkg.warnings.clone();

    let code = code_side(an, &pkg);
    diagnostics.extend(code.diagnostics);
    let mut code_practices = code.practices;
    let code_override = root.join(CODE_PRACTICES_FILE);
    if code_override.is_file() {
        let (set, d) = read_practice_file(&code_override, an.lexicons())?;
        code_practices = set;
        diagnostics.extend(d);
    }

    let (text, policy_files) = match policy {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?;
            let name = p
                .file_name()
                .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            (Some(text), vec![name])
        }
        None => (pkg.policy_text.clone(), pkg.policy_files.clone()),
    };
    let mut policy_practices = BTreeSet::new();
    let (mut policy_sentences, mut related_sentences) = (0, 0);
    match &text {
        Some(t) => match an.policy.analyze(t) {
            Ok(a) => {
                policy_sentences = a.sentences.len();
                related_sentences = a.related_count();
                policy_practices = a.practices;
            }
            Err(e) => diagnostics.push(Diagnostic::new(Stage::Policy, e.to_string())),
        },
        None => diagnostics.push(Diagnostic::new(
            Stage::Policy,
            "no privacy policy found; compared as empty",
        )),
    }
    let mut policy_files = policy_files;
    let policy_override = root.join(POLICY_PRACTICES_FILE);
    if policy_override.is_file() {
        let (set, d) = read_practice_file(&policy_override, an.lexicons())?;
        policy_practices = set;
        diagnostics.extend(d);
        policy_files.push(POLICY_PRACTICES_FILE.to_string());
    }

    let mut flows = code.flows;
    flows.sort_by_cached_key(FlowSummary::sort_key);
    flows.dedup();
    diagnostics.sort_by(|a, b| {
        (&a.file, a.line, a.column, a.stage, &a.message).cmp(&(&b.file, b.line, b.column, b.stage, &b.message))
    });
    diagnostics.dedup();

    Ok(AppReport {
        schema_version: SCHEMA_VERSION,
        app_id: pkg.app_id(),
        pages: pkg.pages.iter().map(|p| p.page_id.clone()).collect(),
        policy_files,
        policy_sentences,
        related_sentences,
        consistency: compare(&code_practices, &policy_practices),
        projections: compare_projections(&code_practices, &policy_practices),
        code_practices,
        policy_practices,
        flows,
        diagnostics,
    })
}

/// Outcome for one corpus entry.
#[derive(Debug)]
pub struct CorpusEntry {
    pub app_id: String,
    pub result: Result<AppReport, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppRow {
    pub app_id: String,
    pub pattern: Pattern,
    pub strength: Strength,
    pub code_practices: usize,
    pub policy_practices: usize,
    pub flows: usize,
    pub findings: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailedApp {
    pub app_id: String,
    pub error: String,
}

/// type -> operation -> number of apps.
pub type PracticeMatrix = BTreeMap<String, BTreeMap<Operation, usize>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub schema_version: u32,
    pub apps: usize,
    pub analyzed: usize,
    pub failed: Vec<FailedApp>,
    /// Pattern label -> app count, over practice, type and operation
    /// projections.
    pub patterns: BTreeMap<String, usize>,
    pub type_patterns: BTreeMap<String, usize>,
    pub operation_patterns: BTreeMap<String, usize>,
    pub strengths: BTreeMap<String, usize>,
    pub code_matrix: PracticeMatrix,
    pub policy_matrix: PracticeMatrix,
    pub strong_uninformed: BTreeMap<String, usize>,
    pub strong_redundant: BTreeMap<String, usize>,
    pub weak_uninformed: PracticeMatrix,
    pub weak_redundant: PracticeMatrix,
    pub per_app: Vec<AppRow>,
}

fn zero_patterns() -> BTreeMap<String, usize> {
    Pattern::ALL.iter().map(|p| (p.label().to_string(), 0)).collect()
}

fn count_practices(m: &mut PracticeMatrix, set: &BTreeSet<DataPractice>) {
    for p in set {
        *m.entry(p.data_type.clone())
            .or_default()
            .entry(p.operation)
            .or_default() += 1;
    }
}

impl CorpusSummary {
    pub fn from_entries(entries: &[CorpusEntry]) -> Self {
        let mut s = CorpusSummary {
            schema_version: SCHEMA_VERSION,
            apps: entries.len(),
            analyzed: 0,
            failed: Vec::new(),
            patterns: zero_patterns(),
            type_patterns: zero_patterns(),
            operation_patterns: zero_patterns(),
            strengths: [
                Strength::None,
                Strength::Strong,
                Strength::Weak,
                Strength::StrongAndWeak,
            ]
            .iter()
            .map(|x| (x.label().to_string(), 0))
            .collect(),
            code_matrix: BTreeMap::new(),
            policy_matrix: BTreeMap::new(),
            strong_uninformed: BTreeMap::new(),
            strong_redundant: BTreeMap::new(),
            weak_uninformed: BTreeMap::new(),
            weak_redundant: BTreeMap::new(),
            per_app: Vec::new(),
        };
        for e in entries {
            let r = match &e.result {
                Ok(r) => r,
                Err(msg) => {
                    s.failed.push(FailedApp {
                        app_id: e.app_id.clone(),
                        error: msg.clone(),
                    });
                    continue;
                }
            };
            s.analyzed += 1;
            let c = &r.consistency;
            *s.patterns.entry(c.pattern.label().into()).or_default() += 1;
            *s.type_patterns.entry(r.projections.types.label().into()).or_default() += 1;
            *s.operation_patterns
                .entry(r.projections.operations.label().into())
                .or_default() += 1;
            *s.strengths.entry(c.strength.label().into()).or_default() += 1;
            count_practices(&mut s.code_matrix, &r.code_practices);
            count_practices(&mut s.policy_matrix, &r.policy_practices);
            count_practices(&mut s.weak_uninformed, &c.weak_uninformed);
            count_practices(&mut s.weak_redundant, &c.weak_redundant);
            for t in &c.strong_uninformed {
                *s.strong_uninformed.entry(t.clone()).or_default() += 1;
            }
            for t in &c.strong_redundant {
                *s.strong_redundant.entry(t.clone()).or_default() += 1;
            }
            s.per_app.push(AppRow {
                app_id: r.app_id.clone(),
                pattern: c.pattern,
                strength: c.strength,
                code_practices: r.code_practices.len(),
                policy_practices: r.policy_practices.len(),
                flows: r.flows.len(),
                findings: c.finding_count(),
            });
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Plot-ready tables keyed by file name.
    pub fn csv_tables(&self) -> BTreeMap<&'static str, String> {
        let mut out = BTreeMap::new();
        let table = |header: &[&str], rows: Vec<Vec<String>>| {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).expect("in-memory write");
            for r in rows {
                w.write_record(&r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        };
        let patterns = Pattern::ALL
            .iter()
            .map(|p| {
                let l = p.label();
                vec![
                    l.to_string(),
                    self.patterns[l].to_string(),
                    self.type_patterns[l].to_string(),
                    self.operation_patterns[l].to_string(),
                ]
            })
            .collect();
        out.insert(
            "patterns.csv",
            table(&["pattern", "practices", "types", "operations"], patterns),
        );
        let matrix = |m: &PracticeMatrix| -> Vec<Vec<String>> {
            m.iter()
                .map(|(t, ops)| {
                    let mut row = vec![t.clone()];
                    row.extend(
                        Operation::ALL
                            .iter()
                            .map(|o| ops.get(o).copied().unwrap_or(0).to_string()),
                    );
                    row
                })
                .collect()
        };
        let header = ["data_type", "Collect", "Use", "Send"];
        out.insert("code_matrix.csv", table(&header, matrix(&self.code_matrix)));
        out.insert("policy_matrix.csv", table(&header, matrix(&self.policy_matrix)));
        out.insert("weak_uninformed.csv", table(&header, matrix(&self.weak_uninformed)));
        out.insert("weak_redundant.csv", table(&header, matrix(&self.weak_redundant)));
        let mut strong: BTreeSet<&String> = self.strong_uninformed.keys().collect();
        strong.extend(self.strong_redundant.keys());
        let strong_rows = strong
            .into_iter()
            .map(|t| {
                vec![
                    t.clone(),
                    self.strong_uninformed.get(t).copied().unwrap_or(0).to_string(),
                    self.strong_redundant.get(t).copied().unwrap_or(0).to_string(),
                ]
            })
            .collect();
        out.insert(
            "strong_findings.csv",
            table(&["data_type", "uninformed", "redundant"], strong_rows),
        );
        let apps = self
            .per_app
            .iter()
            .map(|a| {
                vec![
                    a.app_id.clone(),
                    a.pattern.label().to_string(),
                    a.strength.label().to_string(),
                    a.code_practices.to_string(),
                    a.policy_practices.to_string(),
                    a.flows.to_string(),
                    a.findings.to_string(),
                ]
            })
            .collect();
        out.insert(
            "apps.csv",
            table(
                &[
                    "app_id",
                    "pattern",
                    "strength",
                    "code_practices",
                    "policy_practices",
                    "flows",
                    "findings",
                ],
                apps,
            ),
        );
        out
    }
}

/// App directories directly under `dir`, by name, hidden ones skipped.
pub fn corpus_apps(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut apps = Vec::new();
    for e in fs::read_dir(dir)? {
        let e = e?;
        let name = e.file_name();
        if name.to_string_lossy().starts_with('.') || !e.file_type()?.is_dir() {
            continue;
        }
        apps.push(e.path());
    }
    apps.sort();
    Ok(apps)
}

/// Analyzes every app directory under `dir` on `jobs` workers (0 picks the
/// default). Per-app failures are recorded in their entry.
pub fn analyze_corpus<T: Scalar>(
    an: &Analyzer<T>,
    dir: &Path,
    jobs: usize,
) -> io::Result<(CorpusSummary, Vec<CorpusEntry>)> {
    let apps = corpus_apps(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(io::Error::other)?;
    let entries: Vec<CorpusEntry> = pool.install(|| {
        apps.par_iter()
            .map(|p| CorpusEntry {
                app_id: p
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                result: analyze_app(an, p, None).map_err(|e| e.to_string()),
            })
            .collect()
    });
    Ok((CorpusSummary::from_entries(&entries), entries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }

    pub fn render(self, r: &AppReport) -> String {
        match self {
            ReportFormat::Json => r.to_json(),
            ReportFormat::Csv => r.to_csv(),
        }
    }
}

/// Writes `reports/<app>.<ext>`, `summary.json` and the summary CSV tables
/// under `out`. Returns the written paths.
pub fn write_corpus(
    out: &Path,
    summary: &CorpusSummary,
    entries: &[CorpusEntry],
    format: ReportFormat,
) -> io::Result<Vec<PathBuf>> {
    let reports = out.join("reports");
    fs::create_dir_all(&reports)?;
    let mut written = Vec::new();
    for e in entries {
        if let Ok(r) = &e.result {
            let p = reports.join(format!("{}.{}", e.app_id, format.extension()));
            fs::write(&p, format.render(r))?;
            written.push(p);
        }
    }
    let p = out.join("summary.json");
    fs::write(&p, summary.to_json())?;
    written.push(p);
    for (name, body) in summary.csv_tables() {
        let p = out.join(format!("summary_{name}"));
        fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

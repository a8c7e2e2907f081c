//! Source and sink classification, flow search and practice derivation.
//!
//! Table formats (tab separated, `#` starts a comment line):
//!
//! ```text
//! sources.tsv   api_name  category  data_type  async|sync
//! sinks.tsv     api_name  usage|transmission
//! ```

use crate::ddg::DataDependencyGraph;
use crate::diag::{Diagnostic, Stage};
use crate::ingest::{LayoutNode, LayoutTree};
use crate::lexicon::{DataPractice, Operation, TypeLexicon};
use crate::scope::{EntityId, EntityKind, ScopeChain};
use crate::text;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

const BUNDLED_SOURCES: &str = include_str!("../data/dict/sources.tsv");
const BUNDLED_SINKS: &str = include_str!("../data/dict/sinks.tsv");

/// Levels climbed when a component has no text of its own.
pub const MAX_LABEL_CLIMB: usize = 3;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("{file}:{line}: {api} listed twice")]
    Duplicate { file: String, line: usize, api: String },
    #[error("source {api}: data type {data_type:?} is not in the type lexicon")]
    UnknownType { api: String, data_type: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SourceCategory {
    System,
    Storage,
    Network,
    Media,
    Location,
    File,
    Share,
    Device,
    #[serde(rename = "Open Interface")]
    OpenInterface,
    Lifecycle,
}

impl SourceCategory {
    pub const ALL: [SourceCategory; 10] = [
        SourceCategory::System,
        SourceCategory::Storage,
        SourceCategory::Network,
        SourceCategory::Media,
        SourceCategory::Location,
        SourceCategory::File,
        SourceCategory::Share,
        SourceCategory::Device,
        SourceCategory::OpenInterface,
        SourceCategory::Lifecycle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceCategory::System => "System",
            SourceCategory::Storage => "Storage",
            SourceCategory::Network => "Network",
            SourceCategory::Media => "Media",
            SourceCategory::Location => "Location",
            SourceCategory::File => "File",
            SourceCategory::Share => "Share",
            SourceCategory::Device => "Device",
            SourceCategory::OpenInterface => "Open Interface",
            SourceCategory::Lifecycle => "Lifecycle",
        }
    }
}

impl FromStr for SourceCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_lowercase();
        SourceCategory::ALL
            .into_iter()
            .find(|c| c.as_str().replace(' ', "").to_lowercase() == key)
            .ok_or_else(|| format!("unknown source category {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SinkCategory {
    Usage,
    Transmission,
}

impl SinkCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            SinkCategory::Usage => "usage",
            SinkCategory::Transmission => "transmission",
        }
    }

    pub fn operation(self) -> Operation {
        match self {
            SinkCategory::Usage => Operation::Use,
            SinkCategory::Transmission => Operation::Send,
        }
    }
}

impl fmt::Display for SinkCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSpec {
    pub api_name: String,
    pub category: SourceCategory,
    pub data_type: String,
    pub is_async: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SinkSpec {
    pub api_name: String,
    pub category: SinkCategory,
}

/// Source and sink tables, keyed by API name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApiTables {
    pub sources: BTreeMap<String, SourceSpec>,
    pub sinks: BTreeMap<String, SinkSpec>,
}

fn rows(body: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    body.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim_end_matches('\r');
        if l.trim().is_empty() || l.trim_start().starts_with('#') {
            return None;
        }
        Some((i + 1, l.split('\t').map(str::trim).collect()))
    })
}

pub fn parse_sources(body: &str, file: &str) -> Result<BTreeMap<String, SourceSpec>, TableError> {
    let mut out = BTreeMap::new();
    for (line, cols) in rows(body) {
        let fmt_err = |message: String| TableError::Format {
            file: file.to_string(),
            line,
            message,
        };
        let [api, cat, ty, flag] = cols[..] else {
            return Err(fmt_err(format!("expected 4 columns, found {}", cols.len())));
        };
        if api.is_empty() || ty.is_empty() {
            return Err(fmt_err("empty api name or data type".into()));
        }
        let category = cat.parse().map_err(fmt_err)?;
        let is_async = match flag.to_ascii_lowercase().as_str() {
            "async" | "true" | "1" => true,
            "sync" | "false" | "0" => false,
            other => return Err(fmt_err(format!("bad async flag {other:?}"))),
        };
        let spec = SourceSpec {
            api_name: api.to_string(),
            category,
            data_type: ty.to_string(),
            is_async,
        };
        if out.insert(api.to_string(), spec).is_some() {
            return Err(TableError::Duplicate {
                file: file.to_string(),
                line,
                api: api.to_string(),
            });
        }
    }
    Ok(out)
}

pub fn parse_sinks(body: &str, file: &str) -> Result<BTreeMap<String, SinkSpec>, TableError> {
    let mut out = BTreeMap::new();
    for (line, cols) in rows(body) {
        let fmt_err = |message: String| TableError::Format {
            file: file.to_string(),
            line,
            message,
        };
        let [api, cat] = cols[..] else {
            return Err(fmt_err(format!("expected 2 columns, found {}", cols.len())));
        };
        let category = match cat.to_ascii_lowercase().as_str() {
            "usage" => SinkCategory::Usage,
            "transmission" => SinkCategory::Transmission,
            other => return Err(fmt_err(format!("bad sink category {other:?}"))),
        };
        let spec = SinkSpec {
            api_name: api.to_string(),
            category,
        };
        if api.is_empty() {
            return Err(fmt_err("empty api name".into()));
        }
        if out.insert(api.to_string(), spec).is_some() {
            return Err(TableError::Duplicate {
                file: file.to_string(),
                line,
                api: api.to_string(),
            });
        }
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, TableError> {
    fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl ApiTables {
    /// The tables shipped inside the crate.
    pub fn bundled() -> Self {
        ApiTables {
            sources: parse_sources(BUNDLED_SOURCES, "sources.tsv").expect("bundled sources"),
            sinks: parse_sinks(BUNDLED_SINKS, "sinks.tsv").expect("bundled sinks"),
        }
    }

    /// Bundled tables with either side replaced by a file.
    pub fn load(sources: Option<&Path>, sinks: Option<&Path>) -> Result<Self, TableError> {
        let mut t = ApiTables::bundled();
        if let Some(p) = sources {
            t.sources = parse_sources(&read(p)?, &p.display().to_string())?;
        }
        if let Some(p) = sinks {
            t.sinks = parse_sinks(&read(p)?, &p.display().to_string())?;
        }
        Ok(t)
    }

    /// Rewrites every source data type to its secondary category name.
    pub fn resolve_types(mut self, lex: &TypeLexicon) -> Result<Self, TableError> {
        for spec in self.sources.values_mut() {
            let t = lex
                .resolve_type(&spec.data_type)
                .ok_or_else(|| TableError::UnknownType {
                    api: spec.api_name.clone(),
                    data_type: spec.data_type.clone(),
                })?;
            spec.data_type = t.to_string();
        }
        Ok(self)
    }
}

/// Where a UI label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelOrigin {
    OwnText,
    Placeholder,
    /// Subtree text of the ancestor this many levels up.
    Ancestor(usize),
    None,
}

/// What the data type was matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeEvidence {
    Label,
    HandlerName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UiSource {
    pub page_id: String,
    pub tag: String,
    pub line: u32,
    pub column: u32,
    pub event: String,
    pub handler: String,
    #[serde(skip)]
    pub handler_entity: Option<EntityId>,
    /// The handler's first parameter, or the handler when it has none.
    #[serde(skip)]
    pub endpoint: Option<EntityId>,
    pub label_text: String,
    pub label_origin: LabelOrigin,
    pub data_type: Option<String>,
    pub evidence: Option<TypeEvidence>,
}

fn own_label(node: &LayoutNode) -> Option<(String, LabelOrigin)> {
    let own = node.subtree_text();
    if !own.trim().is_empty() {
        return Some((own, LabelOrigin::OwnText));
    }
    node.attr("placeholder")
        .filter(|p| !p.trim().is_empty())
        .map(|p| (p.trim().to_string(), LabelOrigin::Placeholder))
}

fn climb_label(ancestors: &[&LayoutNode]) -> Option<(String, LabelOrigin)> {
    ancestors
        .iter()
        .rev()
        .take(MAX_LABEL_CLIMB)
        .enumerate()
        .find_map(|(i, a)| {
            let t = a.subtree_text();
            (!t.trim().is_empty()).then(|| (t, LabelOrigin::Ancestor(i + 1)))
        })
}

fn handler_entity(chain: &ScopeChain, name: &str) -> Option<EntityId> {
    chain.container_methods.get(name).copied().or_else(|| {
        chain
            .resolve_id(name, chain.root())
            .filter(|&e| chain.entity(e).kind == EntityKind::Function)
    })
}

/// Finds UI-triggered data sources in a page layout. Each bound event on a
/// component yields one entry. The label is the component's own text, else
/// its placeholder, else the first non-empty subtree text among up to
/// [`MAX_LABEL_CLIMB`] ancestors. The data type is matched on the component's
/// own label first, then on the handler name split into words, then on an
/// ancestor label.
pub fn resolve_ui_sources(
    page_id: &str,
    layout: &LayoutTree,
    chain: Option<&ScopeChain>,
    lex: &TypeLexicon,
) -> (Vec<UiSource>, Vec<Diagnostic>) {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    layout.walk(&mut |node, ancestors| {
        let mut seen = BTreeSet::new();
        for (event, handler) in node.bindings() {
            if !seen.insert(handler.clone()) {
                continue;
            }
            let handler_entity = chain.and_then(|c| handler_entity(c, &handler));
            let endpoint = chain.zip(handler_entity).map(|(c, f)| {
                c.entity(f)
                    .node
                    .and_then(|n| c.params.get(&n))
                    .and_then(|ps| ps.first().copied().flatten())
                    .unwrap_or(f)
            });
            if handler_entity.is_none() {
                diags.push(
                    Diagnostic::new(Stage::Taint, format!("unbound handler {handler:?} for {event}"))
                        .in_file(format!("{page_id}.wxml"))
                        .at(node.line, node.column),
                );
            }
            let own = own_label(node);
            let (label_text, label_origin) = own
                .clone()
                .or_else(|| climb_label(ancestors))
                .unwrap_or((String::new(), LabelOrigin::None));
            let by_label = |t: &str| lex.best_match(t).map(|h| (h.secondary, TypeEvidence::Label));
            let matched = own
                .as_ref()
                .and_then(|(t, _)| by_label(t))
                .or_else(|| {
                    lex.best_match(&text::split_identifier(&handler))
                        .map(|h| (h.secondary, TypeEvidence::HandlerName))
                })
                .or_else(|| (own.is_none()).then(|| by_label(&label_text)).flatten());
            let (data_type, evidence) = match matched {
                Some((t, e)) => (Some(t), Some(e)),
                None => (None, None),
            };
            out.push(UiSource {
                page_id: page_id.to_string(),
                tag: node.tag.clone(),
                line: node.line,
                column: node.column,
                event,
                handler,
                handler_entity,
                endpoint,
                label_text,
                label_origin,
                data_type,
                evidence,
            });
        }
    });
    (out, diags)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowSource {
    Api {
        api: String,
        line: u32,
        column: u32,
    },
    Ui {
        handler: String,
        label: String,
        line: u32,
        column: u32,
    },
}

impl FlowSource {
    pub fn name(&self) -> &str {
        match self {
            FlowSource::Api { api, .. } => api,
            FlowSource::Ui { handler, .. } => handler,
        }
    }

    pub fn line(&self) -> u32 {
        match self {
            FlowSource::Api { line, .. } | FlowSource::Ui { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowSink {
    pub api: String,
    pub category: SinkCategory,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaintFlow {
    pub file: String,
    pub source: FlowSource,
    pub data_type: String,
    /// Entity ids from the source endpoint to the sink argument endpoint.
    pub path: Vec<EntityId>,
    pub sink: Option<FlowSink>,
}

impl TaintFlow {
    /// Entity names along the path.
    pub fn path_names(&self, ddg: &DataDependencyGraph) -> Vec<String> {
        self.path.iter().map(|&e| ddg.entity(e).name.clone()).collect()
    }
}

struct Origin {
    endpoint: EntityId,
    data_type: String,
    source: FlowSource,
}

/// Searches every source endpoint for reachable sink endpoints.
///
/// An API call is a source when its name is in the source table. An
/// asynchronous source only counts when its return endpoint has an outgoing
/// edge (a callback or a promise continuation received it). A UI source
/// starts at its handler's first parameter, or at the handler itself when it
/// takes none, and only when a data type was matched.
pub fn find_flows(ddg: &DataDependencyGraph, tables: &ApiTables, ui: &[UiSource]) -> Vec<TaintFlow> {
    let mut origins = Vec::new();
    for call in &ddg.api_calls {
        let Some(spec) = tables.sources.get(&call.api) else {
            continue;
        };
        if spec.is_async && ddg.successors(call.ret).is_empty() {
            continue;
        }
        origins.push(Origin {
            endpoint: call.ret,
            data_type: spec.data_type.clone(),
            source: FlowSource::Api {
                api: call.api.clone(),
                line: call.site.start.line,
                column: call.site.start.column,
            },
        });
    }
    let mut ui_seen = BTreeSet::new();
    for u in ui {
        let (Some(endpoint), Some(t)) = (u.endpoint, &u.data_type) else {
            continue;
        };
        if endpoint >= ddg.entities.len() {
            continue;
        }
        if !ui_seen.insert((endpoint, t.clone())) {
            continue;
        }
        origins.push(Origin {
            endpoint,
            data_type: t.clone(),
            source: FlowSource::Ui {
                handler: u.handler.clone(),
                label: u.label_text.clone(),
                line: u.line,
                column: u.column,
            },
        });
    }

    let sink_ends: BTreeMap<EntityId, FlowSink> = ddg
        .api_calls
        .iter()
        .filter_map(|c| {
            tables.sinks.get(&c.api).map(|s| {
                (
                    c.arg,
                    FlowSink {
                        api: c.api.clone(),
                        category: s.category,
                        line: c.site.start.line,
                        column: c.site.start.column,
                    },
                )
            })
        })
        .collect();

    let mut flows = Vec::new();
    for o in origins {
        let pred = ddg.bfs(o.endpoint);
        let before = flows.len();
        for (&end, sink) in &sink_ends {
            if end == o.endpoint {
                continue;
            }
            if let Some(path) = DataDependencyGraph::path_from(&pred, end) {
                flows.push(TaintFlow {
                    file: ddg.file.clone(),
                    source: o.source.clone(),
                    data_type: o.data_type.clone(),
                    path,
                    sink: Some(sink.clone()),
                });
            }
        }
        if flows.len() == before {
            flows.push(TaintFlow {
                file: ddg.file.clone(),
                source: o.source,
                data_type: o.data_type,
                path: vec![o.endpoint],
                sink: None,
            });
        }
    }
    flows
}

/// Collect for every flow, plus Use or Send by sink category.
pub fn flows_to_practices(flows: &[TaintFlow]) -> BTreeSet<DataPractice> {
    let mut out = BTreeSet::new();
    for f in flows {
        out.insert(DataPractice::new(&f.data_type, Operation::Collect));
        if let Some(s) = &f.sink {
            out.insert(DataPractice::new(&f.data_type, s.category.operation()));
        }
    }
    out
}

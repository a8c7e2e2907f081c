//! Loading an unpacked mini-app directory.

mod layout;

pub use layout::{parse_layout, LayoutNode, LayoutTree, MalformedMarkup};

use crate::diag::{Diagnostic, Stage};
use crate::text;
use serde::Serialize;
use serde_json::{Map, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;
use walkdir::WalkDir;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{0}: not a directory")]
    NotADirectory(PathBuf),
    #[error("{0}: no app.json entry configuration")]
    MissingEntry(PathBuf),
    #[error("{path}: {message}")]
    UnreadableFile { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageUnit {
    pub page_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logic_source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout_source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Map<String, Value>>,
    /// True when found by the directory scan rather than the page list.
    pub orphan: bool,
}

impl PageUnit {
    pub fn logic_path(&self) -> String {
        format!("{}.js", self.page_id)
    }

    pub fn layout_path(&self) -> String {
        format!("{}.wxml", self.page_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiniAppPackage {
    pub root_path: PathBuf,
    pub app_config: Value,
    /// Contents of `app.js`, when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub app_logic: Option<String>,
    pub pages: Vec<PageUnit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_text: Option<String>,
    /// Package-relative paths the policy text was read from.
    pub policy_files: Vec<String>,
    pub warnings: Vec<Diagnostic>,
}

impl MiniAppPackage {
    pub fn app_id(&self) -> String {
        self.root_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.root_path.display().to_string())
    }
}

/// Keywords used when none are configured.
pub const DEFAULT_POLICY_KEYWORDS: &[&str] = &["privacy policy", "privacy", "agreement"];

const POLICY_EXTENSIONS: &[&str] = &["txt", "md", "html", "htm", "wxml"];
const SKIPPED_DIRS: &[&str] = &["node_modules", "miniprogram_npm", ".git"];

fn rel(root: &Path, p: &Path) -> String {
    p.strip_prefix(root)
        .unwrap_or(p)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn read_text(root: &Path, path: &Path, warnings: &mut Vec<Diagnostic>) -> Option<String> {
    match fs::read(path) {
        Ok(bytes) => match String::from_utf8(bytes) {
            Ok(mut s) => {
                if s.starts_with('\u{feff}') {
                    s.remove(0);
                }
                Some(s)
            }
            Err(_) => {
                warnings
                    .push(Diagnostic::new(Stage::Ingest, "unreadable file: not valid UTF-8").in_file(rel(root, path)));
                None
            }
        },
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => {
            warnings.push(Diagnostic::new(Stage::Ingest, format!("unreadable file: {e}")).in_file(rel(root, path)));
            None
        }
    }
}

fn page_list(config: &Value) -> Vec<String> {
    let strings = |v: &Value| -> Vec<String> {
        v.as_array()
            .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default()
    };
    let mut out = strings(&config["pages"]);
    for key in ["subpackages", "subPackages"] {
        for sub in config[key].as_array().into_iter().flatten() {
            let root = sub["root"].as_str().unwrap_or("").trim_matches('/');
            for p in strings(&sub["pages"]) {
                out.push(if root.is_empty() { p } else { format!("{root}/{p}") });
            }
        }
    }
    out.into_iter()
        .map(|p| p.trim_start_matches('/').trim_end_matches(".js").to_string())
        .collect()
}

fn load_page(root: &Path, page_id: &str, orphan: bool, warnings: &mut Vec<Diagnostic>) -> Option<PageUnit> {
    let base = root.join(page_id);
    let with_ext = |e: &str| PathBuf::from(format!("{}.{e}", base.display()));
    let logic_source = read_text(root, &with_ext("js"), warnings);
    let layout_source = read_text(root, &with_ext("wxml"), warnings);
    if logic_source.is_none() && layout_source.is_none() {
        return None;
    }
    let config = read_text(root, &with_ext("json"), warnings).and_then(|s| match serde_json::from_str::<Value>(&s) {
        Ok(Value::Object(m)) => Some(m),
        _ => {
            warnings.push(
                Diagnostic::new(Stage::Ingest, "page configuration is not a JSON object")
                    .in_file(format!("{page_id}.json")),
            );
            None
        }
    });
    Some(PageUnit {
        page_id: page_id.to_string(),
        logic_source,
        layout_source,
        config,
        orphan,
    })
}

fn keyword_forms(keywords: &[String]) -> Vec<String> {
    let mut out = BTreeSet::new();
    for k in keywords {
        let n = text::normalize(k.trim());
        if n.is_empty() {
            continue;
        }
        out.insert(n.replace(' ', ""));
        out.insert(n);
    }
    out.into_iter().collect()
}

fn name_matches(rel_path: &str, forms: &[String]) -> bool {
    let stem = rel_path.rsplit('/').next().unwrap_or(rel_path);
    let stem = stem.rsplit_once('.').map_or(stem, |(s, _)| s);
    let dir = rel_path.rsplit('/').nth(1).unwrap_or("");
    [stem, dir].iter().any(|part| {
        let n = text::normalize(&part.replace(['_', '-', '.'], " "));
        let squeezed = n.replace(' ', "");
        forms
            .iter()
            .any(|f| n.contains(f.as_str()) || squeezed.contains(f.as_str()))
    })
}

fn content_matches(body: &str, forms: &[String]) -> bool {
    let head: String = body.chars().take(400).collect();
    let n = text::normalize(&head);
    forms
        .iter()
        .filter(|f| f.contains(' ') || text::contains_cjk(f))
        .any(|f| n.contains(f.as_str()))
}

fn strip_markup(body: &str) -> String {
    match parse_layout(body) {
        Ok(tree) => tree.text(),
        Err(_) => body.to_string(),
    }
}

/// Loads a package with the default policy keywords.
pub fn load_package(root: &Path) -> Result<MiniAppPackage, IngestError> {
    let kw: Vec<String> = DEFAULT_POLICY_KEYWORDS.iter().map(|s| s.to_string()).collect();
    load_package_with(root, &kw)
}

/// Loads a package. Pages come from the `app.json` page list (including
/// subpackages) in declaration order, then from `.js`/`.wxml` pairs found
/// on disk that the list does not mention. Policy files are text, markdown,
/// HTML or layout files whose name or parent directory matches a keyword;
/// text, markdown and HTML files also match when a multi-word keyword
/// appears near the start of their contents.
pub fn load_package_with(root: &Path, policy_keywords: &[String]) -> Result<MiniAppPackage, IngestError> {
    if !root.is_dir() {
        return Err(IngestError::NotADirectory(root.to_path_buf()));
    }
    let entry = root.join("app.json");
    if !entry.is_file() {
        return Err(IngestError::MissingEntry(root.to_path_buf()));
    }
    let unreadable = |message: String| IngestError::UnreadableFile {
        path: entry.clone(),
        message,
    };
    let bytes = fs::read(&entry).map_err(|e| unreadable(e.to_string()))?;
    let body = String::from_utf8(bytes).map_err(|_| unreadable("not valid UTF-8".into()))?;
    let app_config: Value = serde_json::from_str(body.trim_start_matches('\u{feff}'))
        .map_err(|e| unreadable(format!("invalid JSON: {e}")))?;

    let mut warnings = Vec::new();
    let app_logic = read_text(root, &root.join("app.js"), &mut warnings);
    let mut pages = Vec::new();
    let mut seen = BTreeSet::new();
    for id in page_list(&app_config) {
        if !seen.insert(id.clone()) {
            warnings.push(Diagnostic::new(Stage::Ingest, format!("page {id:?} listed twice")).in_file("app.json"));
            continue;
        }
        match load_page(root, &id, false, &mut warnings) {
            Some(p) => pages.push(p),
            None => warnings.push(
                Diagnostic::new(Stage::Ingest, format!("page {id:?} has no .js or .wxml file")).in_file("app.json"),
            ),
        }
    }

    let mut files: Vec<(String, PathBuf)> = Vec::new();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !SKIPPED_DIRS.contains(&e.file_name().to_string_lossy().as_ref()));
    for e in walker {
        match e {
            Ok(e) if e.file_type().is_file() => files.push((rel(root, e.path()), e.into_path())),
            Ok(_) => {}
            Err(err) => warnings.push(Diagnostic::new(Stage::Ingest, format!("unreadable entry: {err}"))),
        }
    }

    let mut stems: BTreeMap<String, (bool, bool)> = BTreeMap::new();
    for (r, _) in &files {
        if let Some(stem) = r.strip_suffix(".js") {
            stems.entry(stem.to_string()).or_default().0 = true;
        } else if let Some(stem) = r.strip_suffix(".wxml") {
            stems.entry(stem.to_string()).or_default().1 = true;
        }
    }
    for (stem, _) in stems.iter().filter(|(_, (js, wxml))| *js && *wxml) {
        if stem == "app" || seen.contains(stem) {
            continue;
        }
        if let Some(p) = load_page(root, stem, true, &mut warnings) {
            seen.insert(stem.clone());
            pages.push(p);
        }
    }

    let forms = keyword_forms(policy_keywords);
    let mut policy_files = Vec::new();
    let mut texts = Vec::new();
    if !forms.is_empty() {
        for (r, path) in &files {
            let ext = r.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase());
            let Some(ext) = ext.filter(|e| POLICY_EXTENSIONS.contains(&e.as_str())) else {
                continue;
            };
            let by_name = name_matches(r, &forms);
            if !by_name && ext == "wxml" {
                continue;
            }
            let Some(body) = read_text(root, path, &mut warnings) else {
                continue;
            };
            if !by_name && !content_matches(&body, &forms) {
                continue;
            }
            let t = match ext.as_str() {
                "html" | "htm" | "wxml" => strip_markup(&body),
                _ => body,
            };
            if t.trim().is_empty() {
                continue;
            }
            policy_files.push(r.clone());
            texts.push(t.trim().to_string());
        }
    }
    let policy_text = (!texts.is_empty()).then(|| texts.join("\n\n"));

    Ok(MiniAppPackage {
        root_path: root.to_path_buf(),
        app_config,
        app_logic,
        pages,
        policy_text,
        policy_files,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(root: &Path, rel: &str, body: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, body).unwrap();
    }

    #[test]
    fn minimal_package() {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "app.json", r#"{"pages":["pages/index/index"]}"#);
        write(d.path(), "pages/index/index.js", "Page({})");
        write(d.path(), "pages/index/index.wxml", "<view/>");
        let p = load_package(d.path()).unwrap();
        assert_eq!(p.pages.len(), 1);
        assert_eq!(p.pages[0].page_id, "pages/index/index");
        assert!(p.policy_text.is_none());
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn empty_dir_is_missing_entry() {
        let d = tempfile::tempdir().unwrap();
        assert!(matches!(load_package(d.path()), Err(IngestError::MissingEntry(_))));
        assert!(matches!(
            load_package(&d.path().join("nope")),
            Err(IngestError::NotADirectory(_))
        ));
    }

    #[test]
    fn policy_by_file_name() {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "app.json", r#"{"pages":[]}"#);
        write(d.path(), "static/privacy_policy.txt", "We collect your location.");
        write(d.path(), "static/readme.txt", "nothing here");
        let p = load_package(d.path()).unwrap();
        assert_eq!(p.policy_text.as_deref(), Some("We collect your location."));
        assert_eq!(p.policy_files, vec!["static/privacy_policy.txt"]);
    }

    #[test]
    fn policy_by_content_and_layout_page() {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "app.json", r#"{"pages":["pages/privacy/privacy"]}"#);
        write(
            d.path(),
            "pages/privacy/privacy.wxml",
            "<view><text>We send your phone number.</text></view>",
        );
        write(
            d.path(),
            "pages/index/index.wxml",
            "<text>Read our privacy policy</text>",
        );
        write(d.path(), "docs/terms.md", "# Privacy Policy\nWe store your album.");
        let p = load_package(d.path()).unwrap();
        assert_eq!(p.policy_files, vec!["docs/terms.md", "pages/privacy/privacy.wxml"]);
        let t = p.policy_text.unwrap();
        assert!(t.starts_with("# Privacy Policy"));
        assert!(t.ends_with("We send your phone number."));
    }

    #[test]
    fn discovery_order_orphans_and_warnings() {
        let d = tempfile::tempdir().unwrap();
        write(
            d.path(),
            "app.json",
            r#"{"pages":["pages/b/b","pages/a/a","pages/gone/gone","pages/b/b"],
                "subPackages":[{"root":"sub","pages":["x/x"]}]}"#,
        );
        write(d.path(), "pages/b/b.js", "Page({})");
        write(d.path(), "pages/a/a.wxml", "<view/>");
        write(d.path(), "pages/a/a.json", r#"{"navigationBarTitleText":"A"}"#);
        write(d.path(), "sub/x/x.js", "Page({})");
        write(d.path(), "extra/e.js", "Page({})");
        write(d.path(), "extra/e.wxml", "<view/>");
        write(d.path(), "utils/util.js", "module.exports = {}");
        write(d.path(), "app.js", "App({})");
        write(d.path(), "app.wxml", "");
        let p = load_package(d.path()).unwrap();
        let ids: Vec<_> = p.pages.iter().map(|p| p.page_id.as_str()).collect();
        assert_eq!(ids, vec!["pages/b/b", "pages/a/a", "sub/x/x", "extra/e"]);
        assert!(p.pages[3].orphan);
        assert_eq!(p.pages[1].config.as_ref().unwrap()["navigationBarTitleText"], "A");
        assert_eq!(p.app_logic.as_deref(), Some("App({})"));
        assert_eq!(p.warnings.len(), 2);
    }

    #[test]
    fn bad_utf8_page_file_is_reported() {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "app.json", r#"{"pages":["p"]}"#);
        fs::write(d.path().join("p.js"), [0xff, 0xfe, 0x00]).unwrap();
        write(d.path(), "p.wxml", "<view/>");
        let p = load_package(d.path()).unwrap();
        assert!(p.pages[0].logic_source.is_none());
        assert_eq!(p.warnings[0].file.as_deref(), Some("p.js"));
    }

    #[test]
    fn reload_is_identical() {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "app.json", r#"{"pages":["pages/index/index"]}"#);
        write(d.path(), "pages/index/index.js", "Page({})");
        write(d.path(), "agreement.txt", "user agreement");
        let a = serde_json::to_string(&load_package(d.path()).unwrap()).unwrap();
        let b = serde_json::to_string(&load_package(d.path()).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

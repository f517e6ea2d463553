//! State-keyed instructional documents ("slides").
//!
//! Documents live under a content root. The manifest maps a state name to an
//! ordered list of document keys; keys containing `.detail` are only served in
//! detail mode, and skip mode serves just the first regular document.
//! Without a `manifest.json`, the root is scanned: `<State>.md` and
//! `<State>.<anything>.md` belong to `State`, in file-name order with
//! `<State>.md` first.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HelperMode {
    #[default]
    Normal,
    Skip,
    Detail,
}

impl std::str::FromStr for HelperMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" | "" => Ok(Self::Normal),
            "skip" => Ok(Self::Skip),
            "detail" => Ok(Self::Detail),
            other => Err(format!("unknown helper mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelperDoc {
    pub key: String,
    pub content: String,
}

#[derive(Debug, Clone, Default)]
pub struct HelperManifest {
    root: Option<PathBuf>,
    entries: BTreeMap<String, Vec<String>>,
    /// In-memory documents, used when there is no content root.
    inline: BTreeMap<String, String>,
}

fn is_detail(key: &str) -> bool {
    key.contains(".detail")
}

impl HelperManifest {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Manifest over in-memory documents keyed by file name.
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let inline: BTreeMap<String, String> = docs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let entries = Self::group(inline.keys().cloned());
        Self {
            root: None,
            entries,
            inline,
        }
    }

    fn group(keys: impl IntoIterator<Item = String>) -> BTreeMap<String, Vec<String>> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for key in keys {
            if !key.ends_with(".md") || key == "README.md" {
                continue;
            }
            let state = key.split('.').next().unwrap_or_default().to_string();
            if state.is_empty() {
                continue;
            }
            entries.entry(state).or_default().push(key);
        }
        for (state, keys) in entries.iter_mut() {
            let main = format!("{state}.md");
            keys.sort_by_key(|k| (k != &main, k.clone()));
        }
        entries
    }

    /// Loads `root/manifest.json` (`{"State": ["doc.md", ...]}`) if present,
    /// otherwise scans the directory.
    pub fn load(root: &Path) -> std::io::Result<Self> {
        let manifest = root.join("manifest.json");
        let entries = if manifest.is_file() {
            let text = std::fs::read_to_string(&manifest)?;
            serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?
        } else {
            let mut names = Vec::new();
            for e in std::fs::read_dir(root)? {
                let e = e?;
                if e.path().is_file() {
                    names.push(e.file_name().to_string_lossy().to_string());
                }
            }
            names.sort();
            Self::group(names)
        };
        Ok(Self {
            root: Some(root.to_path_buf()),
            entries,
            inline: BTreeMap::new(),
        })
    }

    pub fn keys(&self) -> BTreeSet<String> {
        self.entries.values().flatten().cloned().collect()
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<String>> {
        &self.entries
    }

    /// Keys of missing documents, for diagnostics.
    pub fn missing(&self) -> Vec<String> {
        self.keys().into_iter().filter(|k| self.read(k).is_none()).collect()
    }

    fn read(&self, key: &str) -> Option<String> {
        if let Some(text) = self.inline.get(key) {
            return Some(text.clone());
        }
        let root = self.root.as_ref()?;
        let path = root.join(key);
        // Keys are relative to the content root; refuse to escape it.
        if Path::new(key).components().any(|c| !matches!(c, std::path::Component::Normal(_))) {
            return None;
        }
        std::fs::read_to_string(path).ok()
    }

    /// Document keys for a state, filtered by mode. `extra` (the state's own
    /// `helper_doc`) is listed first when not already present.
    pub fn keys_for(&self, state: &str, extra: Option<&str>, mode: HelperMode) -> Vec<String> {
        let mut keys: Vec<String> = Vec::new();
        if let Some(k) = extra {
            keys.push(k.to_string());
        }
        for k in self.entries.get(state).into_iter().flatten() {
            if !keys.contains(k) {
                keys.push(k.clone());
            }
        }
        match mode {
            HelperMode::Detail => keys,
            HelperMode::Normal => keys.into_iter().filter(|k| !is_detail(k)).collect(),
            HelperMode::Skip => keys.into_iter().filter(|k| !is_detail(k)).take(1).collect(),
        }
    }

    pub fn documents(&self, state: &str, extra: Option<&str>, mode: HelperMode) -> Vec<HelperDoc> {
        self.keys_for(state, extra, mode)
            .into_iter()
            .filter_map(|key| self.read(&key).map(|content| HelperDoc { key, content }))
            .collect()
    }
}

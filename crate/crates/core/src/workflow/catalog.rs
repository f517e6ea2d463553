use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::load::{load_workflow_with, LoadError, LoadOptions, ValidationIssue};
use super::WorkflowDefinition;

/// Finding produced while loading a workflow directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogDiagnostic {
    pub source: String,
    pub severity: Severity,
    pub issues: Vec<ValidationIssue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// Immutable set of validated workflows keyed by id.
#[derive(Debug, Clone, Default)]
pub struct WorkflowCatalog {
    workflows: BTreeMap<String, Arc<WorkflowDefinition>>,
}

impl WorkflowCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, w: WorkflowDefinition) {
        self.workflows.insert(w.id.clone(), Arc::new(w));
    }

    pub fn get(&self, id: &str) -> Option<&Arc<WorkflowDefinition>> {
        self.workflows.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.workflows.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.workflows.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<WorkflowDefinition>> {
        self.workflows.values()
    }

    pub fn len(&self) -> usize {
        self.workflows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workflows.is_empty()
    }

    /// Loads `(source name, document)` pairs. Invalid documents are excluded
    /// and reported; so are documents whose `call_workflow` targets end up
    /// missing from the catalog.
    pub fn from_sources<'a>(
        sources: impl IntoIterator<Item = (String, &'a str)>,
        opts: &LoadOptions,
    ) -> (Self, Vec<CatalogDiagnostic>) {
        let mut diagnostics = Vec::new();
        let mut parsed: Vec<(String, WorkflowDefinition, Vec<ValidationIssue>)> = Vec::new();

        // Call targets are resolved against the catalog afterwards.
        let first = LoadOptions {
            known_workflows: None,
            ..opts.clone()
        };
        for (name, src) in sources {
            match load_workflow_with(src, &first) {
                Ok(l) => parsed.push((name, l.definition, l.warnings)),
                Err(e) => diagnostics.push(error_diag(name, &e)),
            }
        }

        let mut seen = BTreeSet::new();
        parsed.retain(|(name, w, _)| {
            if seen.insert(w.id.clone()) {
                true
            } else {
                diagnostics.push(CatalogDiagnostic {
                    source: name.clone(),
                    severity: Severity::Error,
                    issues: vec![ValidationIssue {
                        path: "id".into(),
                        message: format!("duplicate workflow id `{}`", w.id),
                    }],
                });
                false
            }
        });

        // Drop workflows whose callees are unavailable until nothing changes.
        loop {
            let ids: BTreeSet<String> = parsed.iter().map(|(_, w, _)| w.id.clone()).collect();
            let before = parsed.len();
            parsed.retain(|(name, w, _)| {
                let missing: Vec<&str> = w
                    .called_workflows()
                    .into_iter()
                    .filter(|c| !ids.contains(*c) && !opts.known_workflows.as_ref().is_some_and(|k| k.contains(*c)))
                    .collect();
                if missing.is_empty() {
                    true
                } else {
                    diagnostics.push(CatalogDiagnostic {
                        source: name.clone(),
                        severity: Severity::Error,
                        issues: missing
                            .into_iter()
                            .map(|c| ValidationIssue {
                                path: "call_workflow".into(),
                                message: format!("called workflow `{c}` is not loadable"),
                            })
                            .collect(),
                    });
                    false
                }
            });
            if parsed.len() == before {
                break;
            }
        }

        let mut catalog = Self::new();
        for (name, w, warnings) in parsed {
            if !warnings.is_empty() {
                diagnostics.push(CatalogDiagnostic {
                    source: name,
                    severity: Severity::Warning,
                    issues: warnings,
                });
            }
            catalog.insert(w);
        }
        (catalog, diagnostics)
    }

    /// Loads every `*.json` file directly inside `dir`, sorted by file name.
    pub fn load_dir(dir: &Path, opts: &LoadOptions) -> std::io::Result<(Self, Vec<CatalogDiagnostic>)> {
        let mut files: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut docs = Vec::with_capacity(files.len());
        for f in files {
            docs.push((f.display().to_string(), std::fs::read_to_string(&f)?));
        }
        Ok(Self::from_sources(docs.iter().map(|(n, s)| (n.clone(), s.as_str())), opts))
    }
}

fn error_diag(source: String, e: &LoadError) -> CatalogDiagnostic {
    CatalogDiagnostic {
        source,
        severity: Severity::Error,
        issues: e.issues(),
    }
}

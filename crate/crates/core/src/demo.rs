//! The bundled impeller inspection and repair demo: six workflows, the two
//! virtual GUI apps they drive, helper slides, and replay transcripts.

use crate::exec::VirtualGuiScenario;
use crate::helper::HelperManifest;
use crate::workflow::{CatalogDiagnostic, LoadOptions, WorkflowCatalog};

macro_rules! bundled {
    ($dir:literal: $($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../demo/", $dir, "/", $name)))),*]
    };
}

pub const WORKFLOWS: &[(&str, &str)] = bundled!("workflows":
    "components.json",
    "preview.json",
    "full_scan.json",
    "scan_slicing.json",
    "processing_3d.json",
    "part_program_generator.json",
);

pub const SCENARIOS: &[(&str, &str)] = bundled!("scenarios": "studio.json", "ppg.json");

pub const HELPER_DOCS: &[(&str, &str)] = bundled!("helper":
    "Ready.md",
    "Ready.detail.md",
    "Briefing.md",
    "Briefing.02.md",
    "ScanReview.md",
    "Fused.md",
);

pub const IMPELLER_TRANSCRIPT: &str = include_str!("../../../demo/transcripts/impeller_repair.txt");
pub const COMPONENTS_TRANSCRIPT: &str = include_str!("../../../demo/transcripts/components_linear.txt");

/// Workflow the impeller transcript starts from.
pub const CHAIN_ROOT: &str = "preview";

pub fn scenarios() -> Vec<VirtualGuiScenario> {
    SCENARIOS
        .iter()
        .map(|(name, src)| VirtualGuiScenario::parse(src).unwrap_or_else(|e| panic!("bundled {name}: {e}")))
        .collect()
}

pub fn helper() -> HelperManifest {
    HelperManifest::from_documents(HELPER_DOCS.iter().copied())
}

pub fn catalog(opts: &LoadOptions) -> (WorkflowCatalog, Vec<CatalogDiagnostic>) {
    WorkflowCatalog::from_sources(WORKFLOWS.iter().map(|(n, s)| (format!("demo/workflows/{n}"), *s)), opts)
}

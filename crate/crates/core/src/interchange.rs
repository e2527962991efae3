//! Canonical JSON interchange documents.
//!
//! Keys appear in a fixed order, sets and element lists are sorted, and
//! relations and groups keep declaration order, so exporting the same map
//! always yields the same bytes.

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisReport;
use crate::diagnostic::Diagnostic;
use crate::model::{
    assemble, Category, Draft, EaElement, Group, Phase, Process, ProcessMap, Relation, Spanned,
    SCHEMA_VERSION,
};
use crate::sim::Trace;
use crate::wellformedness::ValidationReport;

pub mod codes {
    pub const MALFORMED: &str = "I-MALFORMED";
    pub const SCHEMA: &str = "I-SCHEMA";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub name: String,
    pub processes: Vec<Process>,
    pub ea_elements: Vec<EaElement>,
    pub categories: Vec<Category>,
    pub phases: Vec<Phase>,
    pub relations: Vec<Relation>,
    pub groups: Vec<Group>,
}

impl From<&ProcessMap> for MapDocument {
    fn from(map: &ProcessMap) -> Self {
        Self {
            name: map.name.clone(),
            processes: map.processes.values().cloned().collect(),
            ea_elements: map.ea_elements.values().cloned().collect(),
            categories: map.categories.values().cloned().collect(),
            phases: map.phases.values().cloned().collect(),
            relations: map.relations.clone(),
            groups: map.groups.clone(),
        }
    }
}

impl MapDocument {
    pub fn into_draft(self, schema_version: String) -> Draft {
        fn bare<T>(items: Vec<T>) -> Vec<Spanned<T>> {
            items.into_iter().map(Spanned::bare).collect()
        }
        Draft {
            name: self.name,
            schema_version: Some(schema_version),
            processes: bare(self.processes),
            ea_elements: bare(self.ea_elements),
            categories: bare(self.categories),
            phases: bare(self.phases),
            relations: bare(self.relations),
            groups: bare(self.groups),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterchangeDocument {
    pub schema_version: String,
    pub map: MapDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Trace>,
}

impl InterchangeDocument {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("documents always serialize");
        bytes.push(b'\n');
        bytes
    }
}

/// Optional report sections to embed next to the map.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sections<'a> {
    pub validation: Option<&'a ValidationReport>,
    pub analysis: Option<&'a AnalysisReport>,
    pub trace: Option<&'a Trace>,
}

pub fn export_interchange(map: &ProcessMap, sections: Sections<'_>) -> Vec<u8> {
    InterchangeDocument {
        schema_version: map.schema_version.clone(),
        map: MapDocument::from(map),
        validation: sections.validation.cloned(),
        analysis: sections.analysis.cloned(),
        trace: sections.trace.cloned(),
    }
    .to_bytes()
}

fn malformed(detail: impl std::fmt::Display) -> Vec<Diagnostic> {
    vec![Diagnostic::error(
        codes::MALFORMED,
        format!("malformed interchange document: {detail}"),
    )]
}

/// Parses a document and checks its schema version, without assembling.
pub fn load_document(bytes: &[u8]) -> Result<InterchangeDocument, Vec<Diagnostic>> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(malformed)?;
    match value.get("schema_version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(serde_json::Value::String(v)) => {
            return Err(vec![Diagnostic::error(
                codes::SCHEMA,
                format!("unsupported schema version \"{v}\", expected \"{SCHEMA_VERSION}\""),
            )])
        }
        _ => return Err(malformed("missing string field `schema_version`")),
    }
    serde_json::from_value(value).map_err(malformed)
}

/// Loads the map of an interchange document, running full assembly.
pub fn load_interchange(bytes: &[u8]) -> Result<ProcessMap, Vec<Diagnostic>> {
    let doc = load_document(bytes)?;
    assemble(doc.map.into_draft(doc.schema_version))
}

//! Modelling toolkit for business process maps: black-box models of an
//! organization's business processes, their links to enterprise
//! architecture elements, and the trigger, flow, decomposition and
//! specialization relations between them.
//!
//! Text in the `.promap` notation is parsed into a [`model::Draft`],
//! assembled into a checked [`model::ProcessMap`], and can then be
//! validated, analyzed, simulated and exported.

pub mod analysis;
pub mod cli;
pub mod diagnostic;
pub mod dot;
pub mod dsl;
mod graph;
pub mod interchange;
pub mod model;
pub mod sim;
pub mod wellformedness;

pub use diagnostic::{Diagnostic, Severity, SourceSpan};
pub use model::{assemble, Draft, Ident, ProcessMap, Relation, RelationKind};

use std::path::Path;

/// Parses and assembles `.promap` text, folding parse errors into
/// diagnostics.
pub fn load_str(file: &str, text: &str) -> Result<ProcessMap, Vec<Diagnostic>> {
    let draft = dsl::parse(file, text)
        .map_err(|errs| errs.iter().map(|e| e.to_diagnostic()).collect::<Vec<_>>())?;
    assemble(draft)
}

/// Reads and assembles a `.promap` file.
pub fn load_path(path: &Path) -> Result<ProcessMap, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![Diagnostic::error("IO", format!("{}: {e}", path.display()))])?;
    load_str(&path.to_string_lossy(), &text)
}

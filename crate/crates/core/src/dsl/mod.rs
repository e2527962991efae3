//! The `.promap` textual notation: lexer, parser and formatter.
//!
//! ```text
//! map "Acme Retail" {
//!   category Support { subcategory LocalSupport }
//!   process Requisition { category Support }
//!   process Purchasing  { category Support }
//!   Requisition -> Purchasing
//! }
//! ```
//!
//! Relations are written `A -> B` (trigger), `A ~> B` (flow),
//! `A contains B` (decomposition) and `A variant-of B` (specialization).

mod format;
mod lexer;
mod parser;

use std::fmt;

use crate::diagnostic::{Diagnostic, Severity, SourceSpan};

pub use format::format;
pub use lexer::{is_keyword, tokenize, Keyword, Token, TokenKind};
pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Duplicate,
}

impl ParseErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ParseErrorKind::Lexical => "P-LEX",
            ParseErrorKind::Syntax => "P-SYNTAX",
            ParseErrorKind::Duplicate => "P-DUP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
    /// Descriptions of the tokens that would have been accepted.
    pub expected: Vec<String>,
}

impl ParseDiagnostic {
    pub(crate) fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            kind: ParseErrorKind::Lexical,
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub(crate) fn syntax(span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            kind: ParseErrorKind::Syntax,
            ..Self::new(span, message)
        }
    }

    pub(crate) fn expecting<I, S>(mut self, expected: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.expected = expected.into_iter().map(Into::into).collect();
        self
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        let mut message = self.message.clone();
        if !self.expected.is_empty() {
            message.push_str(&format!("; expected {}", self.expected.join(", ")));
        }
        Diagnostic::new(Severity::Error, self.kind.code(), message)
            .with_span(Some(self.span.clone()))
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_diagnostic().fmt(f)
    }
}
